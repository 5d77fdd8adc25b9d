import os
from pathlib import Path
from typing import IO, Any, Optional, Sequence, cast

import numpy as np
import yaml
from appdirs import user_config_dir

from .constants import APP_AUTHOR, APP_NAME, CSV_FLOAT_FORMAT
from .exceptions import McPopeUserError
from .types import ConfigDict, FloatArray


def load_yaml(*args: Any) -> Any:
    return yaml.safe_load(*args)


def load_yaml_mapping(path: Path) -> dict:
    """Reads a YAML document that must be a (possibly empty) mapping."""
    try:
        with open(path, "r") as inf:
            data = load_yaml(inf)
    except yaml.YAMLError as e:
        raise McPopeUserError(f"Could not parse {path}: {e}")

    if data is None:
        return {}
    if not isinstance(data, dict):
        raise McPopeUserError(f"{path} must contain a key/value mapping")
    return data


def get_config_dir() -> Path:
    root_path = Path(user_config_dir(APP_NAME, APP_AUTHOR))
    os.makedirs(root_path, exist_ok=True)

    return root_path


def get_default_config_path() -> Path:
    root_path = get_config_dir()
    return root_path / "config.yaml"


def get_config(path: Optional[Path] = None) -> ConfigDict:
    if path is None:
        path = get_default_config_path()

    if not os.path.isfile(path):
        return {}

    return cast(ConfigDict, load_yaml_mapping(path))


def asset_labels(count: int) -> Sequence[str]:
    return [f"asset_{index + 1}" for index in range(count)]


def write_matrix_csv(
    matrix: FloatArray, outf: IO[str], labels: Optional[Sequence[str]] = None
) -> None:
    """Comma-separated rows at 17 significant digits so values round-trip."""
    matrix = np.atleast_2d(matrix)
    np.savetxt(
        outf,
        matrix,
        fmt=CSV_FLOAT_FORMAT,
        delimiter=",",
        newline="\n",
        header=",".join(labels) if labels else "",
        comments="",
    )
