"""
Result Writers
Versioned CSV and JSON outputs under the run's output directory
"""

import json
from pathlib import Path
from typing import Any, Mapping, Union

import pandas as pd

from ..utils.logger import get_logger

logger = get_logger(__name__)

SCHEMA_NAME = "scad-intervals"
SCHEMA_VERSION = "v1"
FLOAT_FORMAT = "%.6g"


def schema_line(kind: str) -> str:
    return f"# schema={SCHEMA_NAME}/{kind}/{SCHEMA_VERSION}"


class ResultWriter:
    """Write data frames and JSON documents into one output directory"""

    def __init__(self, out_dir: Union[str, Path]):
        """Initialize the writer, creating the output directory"""
        self.out_dir = Path(out_dir)
        self.out_dir.mkdir(parents=True, exist_ok=True)
        logger.debug(f"ResultWriter initialized at {self.out_dir}")

    def path(self, name: str) -> Path:
        return self.out_dir / name

    def write_csv(self, frame: pd.DataFrame, kind: str, name: str) -> Path:
        """
        Write frame as CSV preceded by the schema comment line

        Args:
            frame: rows to write; floats are rounded to 6 significant digits
            kind: schema kind, e.g. "eval" or "table"
            name: file name inside the output directory

        Returns:
            Path of the written file
        """
        path = self.path(name)
        with open(path, "w", newline="", encoding="utf-8") as fh:
            fh.write(schema_line(kind) + "\n")
            frame.to_csv(fh, index=False, float_format=FLOAT_FORMAT)
        logger.info(f"Wrote {len(frame)} rows to {path}")
        return path

    def write_json(self, payload: Union[str, Mapping[str, Any]], name: str) -> Path:
        path = self.path(name)
        text = payload if isinstance(payload, str) else json.dumps(payload, indent=2, sort_keys=True)
        path.write_text(text + ("" if text.endswith("\n") else "\n"), encoding="utf-8")
        logger.info(f"Wrote {path}")
        return path

    def write_text(self, text: str, name: str) -> Path:
        path = self.path(name)
        path.write_text(text, encoding="utf-8")
        return path


def read_schema(path: Union[str, Path]) -> str:
    """Schema tag of a CSV written by ResultWriter, e.g. scad-intervals/eval/v1"""
    with open(path, encoding="utf-8") as fh:
        first = fh.readline().strip()
    if not first.startswith("# schema="):
        raise ValueError(f"{path} has no schema line")
    return first[len("# schema="):]


def read_csv(path: Union[str, Path]) -> pd.DataFrame:
    return pd.read_csv(path, comment="#")
