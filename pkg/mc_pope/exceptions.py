class McPopeException(Exception):
    pass


class McPopeProgrammingError(McPopeException):
    pass


class McPopeError(McPopeException):
    pass


class DimensionMismatchError(McPopeError):
    pass


class NotPositiveSemiDefiniteError(McPopeError):
    pass


class ScenarioFormatError(McPopeError):
    pass


class InfeasibleError(McPopeError):
    """No candidate (or lattice point) satisfied the constraints."""

    def __init__(self, message: str, submitted: int = 0):
        super().__init__(message)
        self.submitted = submitted


class DegenerateRiskError(McPopeError):
    pass


class LatticeTooLargeError(McPopeError):
    pass


class McPopeUserError(McPopeException, ValueError):
    pass
