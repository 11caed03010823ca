"""Output directory of a run. All files are written through one ArtifactStore."""

import csv
import json
import math
from pathlib import Path

import numpy as np
from pydantic import BaseModel

from app.core.errors import ArtifactError
from config.logging_config import get_logger

logger = get_logger(__name__)


def format_value(value) -> str:
    """17 significant digits for floats; everything else as text"""
    if isinstance(value, bool | np.bool_):
        return "true" if value else "false"
    if isinstance(value, int | np.integer):
        return str(int(value))
    if isinstance(value, float | np.floating):
        value = float(value)
        if math.isnan(value):
            return "nan"
        return f"{value:.17g}"
    return str(value)


class ArtifactStore:
    """Single writer for the run's output directory"""

    def __init__(self, root: str | Path):
        self.root = Path(root)
        try:
            self.root.mkdir(parents=True, exist_ok=True)
        except OSError as e:
            raise ArtifactError(f"cannot create output directory {self.root}: {e}") from e
        self._written: set[str] = set()

    def path(self, name: str) -> Path:
        target = self.root / name
        target.parent.mkdir(parents=True, exist_ok=True)
        return target

    def exists(self, name: str) -> bool:
        return (self.root / name).is_file()

    def mark(self, name: str) -> Path:
        """Record a file written by a module-level writer"""
        self._written.add(name)
        return self.root / name

    @property
    def written(self) -> list[str]:
        return sorted(self._written)

    def write_csv(self, name: str, columns, rows, comment: str | None = None) -> Path:
        target = self.path(name)
        try:
            with open(target, "w", newline="") as fh:
                if comment:
                    fh.write(f"# {comment}\n")
                writer = csv.writer(fh, lineterminator="\n")
                writer.writerow(columns)
                for row in rows:
                    writer.writerow([format_value(v) for v in row])
        except OSError as e:
            raise ArtifactError(f"cannot write {target}: {e}") from e
        logger.debug(f"Wrote {target}")
        return self.mark(name)

    def read_csv(self, name: str) -> tuple[list[str], list[list[str]]]:
        """(header, rows); comment lines starting with '#' are skipped"""
        target = self.root / name
        try:
            with open(target, newline="") as fh:
                lines = [line for line in fh if not line.startswith("#")]
        except OSError as e:
            raise ArtifactError(f"cannot read {target}: {e}") from e
        table = list(csv.reader(lines))
        if not table:
            raise ArtifactError(f"{target}: empty file")
        return table[0], table[1:]

    def read_table(self, name: str, columns) -> np.ndarray:
        """Numeric columns by name, one row per record"""
        header, rows = self.read_csv(name)
        try:
            index = [header.index(c) for c in columns]
        except ValueError as e:
            raise ArtifactError(f"{name}: missing column ({e})") from e
        try:
            values = [[float(row[j]) for j in index] for row in rows]
        except (ValueError, IndexError) as e:
            raise ArtifactError(f"{name}: malformed row ({e})") from e
        return np.asarray(values, dtype=float).reshape(-1, len(index))

    def write_text(self, name: str, text: str) -> Path:
        target = self.path(name)
        try:
            target.write_text(text)
        except OSError as e:
            raise ArtifactError(f"cannot write {target}: {e}") from e
        return self.mark(name)

    def write_model(self, name: str, model: BaseModel) -> Path:
        return self.write_text(name, model.model_dump_json(indent=2) + "\n")

    def read_json(self, name: str) -> dict:
        target = self.root / name
        try:
            return json.loads(target.read_text())
        except (OSError, json.JSONDecodeError) as e:
            raise ArtifactError(f"cannot read {target}: {e}") from e
