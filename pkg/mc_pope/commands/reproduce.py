import argparse
import json
from pathlib import Path

from rich.console import Console
from rich.progress import track
from rich.table import Table

from ..cases import CASES, CaseOptions, CaseReport, run_case, write_comparison_csv
from ..command import BaseCommand, bias_depth_type, positive_int, seed_type
from ..constants import DEFAULT_SEED, EXIT_FAILED_ROWS, EXIT_OK
from ..types import ConfigDict


def render_report(report: CaseReport) -> Table:
    table = Table(title=f"{report.name}: {'pass' if report.passed else 'FAIL'}")
    table.add_column("quantity")
    table.add_column("published", justify="right")
    table.add_column("computed", justify="right")
    table.add_column("abs diff", justify="right")
    table.add_column("tolerance", justify="right")
    table.add_column("pass", justify="center")
    for row in report.rows:
        table.add_row(
            row.quantity,
            f"{row.published_value:.6g}",
            f"{row.computed_value:.6g}",
            f"{row.abs_diff:.3g}",
            f"{row.tolerance:.3g}",
            "[green]yes[/green]" if row.passed else "[red]no[/red]",
        )
    return table


class Command(BaseCommand):
    @classmethod
    def get_help(cls) -> str:
        return """Reruns published experiments and compares against their values."""

    @classmethod
    def add_arguments(cls, parser: argparse.ArgumentParser, config: ConfigDict) -> None:
        parser.add_argument(
            "cases",
            nargs="+",
            choices=[*CASES, "all"],
            metavar="case",
            help=f"one or more of: {', '.join(CASES)}, all",
        )
        parser.add_argument(
            "--seed", type=seed_type, default=config.get("seed", DEFAULT_SEED)
        )
        # Left unset, each case uses the settings its reference values came from.
        parser.add_argument("--workers", type=positive_int)
        parser.add_argument("--jobs", type=positive_int, default=config.get("jobs"))
        parser.add_argument("--base-samples", "-k", type=positive_int)
        parser.add_argument("--bias-depth", "-P", type=bias_depth_type)
        parser.add_argument("--quantile", type=float, help="ru-cvar tail probability")
        parser.add_argument("--scenarios-count", "-J", type=positive_int)
        parser.add_argument(
            "--output", type=Path, help="write the comparison table here as CSV"
        )
        parser.add_argument(
            "--results", type=Path, help="write every optimizer result here as JSON"
        )

    def handle(self) -> int:
        names = list(CASES) if "all" in self.options.cases else self.options.cases
        options = CaseOptions(
            seed=self.options.seed,
            workers=self.options.workers,
            jobs=self.options.jobs,
            base_samples=self.options.base_samples,
            bias_depth=self.options.bias_depth,
            quantile=self.options.quantile,
            scenarios_count=self.options.scenarios_count,
        )

        console = Console()
        if len(names) > 1:
            names = track(names, description="Reproducing cases")
        reports = [run_case(name, options) for name in names]
        for report in reports:
            console.print(render_report(report))

        if self.options.output:
            with open(self.options.output, "w", newline="") as outf:
                write_comparison_csv(
                    [row for report in reports for row in report.rows], outf
                )
        if self.options.results:
            with open(self.options.results, "w") as outf:
                json.dump(
                    {
                        report.name: {
                            label: result.as_dict()
                            for label, result in report.results.items()
                        }
                        for report in reports
                    },
                    outf,
                    indent=2,
                )

        if all(report.passed for report in reports):
            return EXIT_OK
        return EXIT_FAILED_ROWS
