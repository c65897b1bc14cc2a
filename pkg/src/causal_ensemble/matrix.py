"""Column-typed sample table shared by every stage of the pipeline.

A FeatureMatrix is a fixed block of float64 values plus column metadata
(name and kind). Binary columns hold only 0/1; continuous columns hold
finite floats. Instances are immutable after construction and safe to
share across threads.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

KINDS = ("binary", "continuous")


class MatrixError(ValueError):
    """Raised when column metadata and values disagree."""


class FeatureMatrix:
    def __init__(
        self,
        names: Sequence[str],
        kinds: Sequence[str],
        values: np.ndarray,
        treatment_col: str | None = None,
        outcome_col: str | None = None,
    ):
        names = list(names)
        kinds = list(kinds)
        values = np.asarray(values, dtype=float)
        if values.ndim != 2:
            raise MatrixError(f"values must be 2-d, got shape {values.shape}")
        if values.shape[1] != len(names):
            raise MatrixError(f"{len(names)} names for {values.shape[1]} columns")
        if len(kinds) != len(names):
            raise MatrixError("kinds and names differ in length")
        if len(set(names)) != len(names):
            raise MatrixError("duplicate column names")
        for kind in kinds:
            if kind not in KINDS:
                raise MatrixError(f"unknown column kind {kind!r}")
        if not np.all(np.isfinite(values)):
            raise MatrixError("values contain NaN or infinity")
        for j, (name, kind) in enumerate(zip(names, kinds)):
            if kind == "binary" and not np.all((values[:, j] == 0) | (values[:, j] == 1)):
                raise MatrixError(f"binary column {name!r} has values outside {{0,1}}")
        for role, col in (("treatment", treatment_col), ("outcome", outcome_col)):
            if col is not None:
                if col not in names:
                    raise MatrixError(f"{role} column {col!r} not present")
                if kinds[names.index(col)] != "binary":
                    raise MatrixError(f"{role} column {col!r} must be binary")

        self._names = tuple(names)
        self._kinds = tuple(kinds)
        self._values = values
        self._values.setflags(write=False)
        self._index = {name: j for j, name in enumerate(names)}
        self.treatment_col = treatment_col
        self.outcome_col = outcome_col

    # -- accessors ---------------------------------------------------------

    @property
    def names(self) -> tuple[str, ...]:
        return self._names

    @property
    def kinds(self) -> tuple[str, ...]:
        return self._kinds

    @property
    def values(self) -> np.ndarray:
        return self._values

    @property
    def n_rows(self) -> int:
        return self._values.shape[0]

    @property
    def n_cols(self) -> int:
        return self._values.shape[1]

    def kind_of(self, name: str) -> str:
        return self._kinds[self.col_index(name)]

    def col_index(self, name: str) -> int:
        try:
            return self._index[name]
        except KeyError:
            raise KeyError(f"no column named {name!r}") from None

    def column(self, name: str) -> np.ndarray:
        return self._values[:, self.col_index(name)]

    def columns(self, names: Iterable[str]) -> np.ndarray:
        idx = [self.col_index(n) for n in names]
        return self._values[:, idx]

    def select(self, names: Sequence[str]) -> "FeatureMatrix":
        """New matrix restricted to ``names`` (order preserved)."""
        idx = [self.col_index(n) for n in names]
        keep = set(names)
        return FeatureMatrix(
            names,
            [self._kinds[i] for i in idx],
            self._values[:, idx].copy(),
            treatment_col=self.treatment_col if self.treatment_col in keep else None,
            outcome_col=self.outcome_col if self.outcome_col in keep else None,
        )

    def take_rows(self, rows: Sequence[int] | np.ndarray) -> "FeatureMatrix":
        """New matrix with the given rows (duplicates allowed, for resampling)."""
        return FeatureMatrix(
            self._names,
            self._kinds,
            self._values[np.asarray(rows, dtype=int), :].copy(),
            treatment_col=self.treatment_col,
            outcome_col=self.outcome_col,
        )

    def __eq__(self, other) -> bool:
        if not isinstance(other, FeatureMatrix):
            return NotImplemented
        return (
            self._names == other._names
            and self._kinds == other._kinds
            and self.treatment_col == other.treatment_col
            and self.outcome_col == other.outcome_col
            and np.array_equal(self._values, other._values)
        )

    def __repr__(self) -> str:
        return f"FeatureMatrix({self.n_rows}x{self.n_cols})"

    # -- serialization -----------------------------------------------------

    def to_csv(self, path: str | Path) -> None:
        """Write values to ``path`` and metadata to ``path`` + '.meta.json'."""
        path = Path(path)
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(self._names)
            for row in self._values:
                writer.writerow([_format_cell(v, k) for v, k in zip(row, self._kinds)])
        meta = {
            "columns": list(self._names),
            "kinds": list(self._kinds),
            "treatment_col": self.treatment_col,
            "outcome_col": self.outcome_col,
        }
        with open(metadata_path(path), "w") as fh:
            json.dump(meta, fh, indent=2, sort_keys=True)
            fh.write("\n")

    @classmethod
    def from_csv(cls, path: str | Path) -> "FeatureMatrix":
        path = Path(path)
        with open(metadata_path(path)) as fh:
            meta = json.load(fh)
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader)
            rows = [[float(cell) for cell in row] for row in reader]
        if header != meta["columns"]:
            raise MatrixError("CSV header does not match sidecar metadata")
        values = np.array(rows, dtype=float) if rows else np.empty((0, len(header)))
        return cls(
            meta["columns"],
            meta["kinds"],
            values,
            treatment_col=meta.get("treatment_col"),
            outcome_col=meta.get("outcome_col"),
        )


def metadata_path(csv_path: str | Path) -> Path:
    csv_path = Path(csv_path)
    return csv_path.with_name(csv_path.name + ".meta.json")


def _format_cell(value: float, kind: str) -> str:
    if kind == "binary":
        return str(int(value))
    return repr(float(value))
