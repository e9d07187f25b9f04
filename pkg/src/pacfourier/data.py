"""Datasets: the ±1 container, CSV/JSON ingestion, synthetic generation, splits.

All randomness goes through ``numpy.random.Generator`` seeded with a PCG64
bit generator (``numpy.random.default_rng(seed)``); nothing reads OS entropy.
"""

from __future__ import annotations

import csv
import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .errors import DataError
from .fourier import ProductDistribution, cube_points

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class LabeledDataset:
    """``n`` rows of ±1 features with ±1 labels."""

    features: np.ndarray
    labels: np.ndarray

    def __post_init__(self):
        X = np.asarray(self.features)
        y = np.asarray(self.labels).reshape(-1)
        if X.ndim != 2:
            raise DataError(f"features must be a 2-d matrix, got shape {X.shape}")
        n, d = X.shape
        if n < 1 or d < 1:
            raise DataError(f"need n >= 1 and d >= 1, got n={n}, d={d}")
        if y.shape[0] != n:
            raise DataError(f"{n} feature rows but {y.shape[0]} labels")
        if not np.all((X == 1) | (X == -1)):
            r, c = np.argwhere((X != 1) & (X != -1))[0]
            raise DataError(f"feature value {X[r, c]} is not ±1", row=int(r), column=int(c))
        if not np.all((y == 1) | (y == -1)):
            r = int(np.flatnonzero((y != 1) & (y != -1))[0])
            raise DataError(f"label {y[r]} is not ±1", row=r)
        X = X.astype(np.int8)
        y = y.astype(np.int8)
        X.setflags(write=False)
        y.setflags(write=False)
        object.__setattr__(self, "features", X)
        object.__setattr__(self, "labels", y)

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def d(self) -> int:
        return self.features.shape[1]

    def subset(self, rows: np.ndarray) -> "LabeledDataset":
        return LabeledDataset(self.features[rows], self.labels[rows])

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "d": self.d,
            "features": self.features.tolist(),
            "labels": self.labels.tolist(),
        }

    @classmethod
    def from_dict(cls, obj: Mapping) -> "LabeledDataset":
        return cls(np.asarray(obj["features"]), np.asarray(obj["labels"]))


# ---------------------------------------------------------------- CSV ingestion


@dataclass
class LoadReport:
    path: str
    encoding: str
    header: list[str] | None
    n: int
    d: int
    degenerate_columns: list[int] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)


def _parse_cell(text: str, row: int, col: int) -> int:
    t = text.strip()
    try:
        v = float(t)
    except ValueError:
        raise DataError(f"cannot parse cell {text!r}", row=row, column=col) from None
    if v not in (-1.0, 0.0, 1.0):
        raise DataError(f"cell {text!r} is not one of -1, 0, +1", row=row, column=col)
    return int(v)


def _is_numeric(cell: str) -> bool:
    try:
        float(cell)
    except ValueError:
        return False
    return True


def read_csv(path, mapping: str = "auto") -> tuple[LabeledDataset, LoadReport]:
    """Load a CSV whose last column is the label; returns the dataset and a load report.

    ``mapping`` is ``"pm1"`` (cells are -1/+1), ``"zero_one"`` (0 -> -1,
    1 -> +1) or ``"auto"`` (decide from the cells). A non-numeric first row
    is treated as a header.
    """
    if mapping not in ("auto", "pm1", "zero_one"):
        raise ValueError(f"unknown mapping {mapping!r}")
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"no such dataset: {path}")
    with path.open(newline="") as fh:
        rows = [r for r in csv.reader(fh) if r and any(c.strip() for c in r)]
    if not rows:
        raise DataError(f"{path} is empty")

    header = None
    if not all(_is_numeric(c) for c in rows[0]):
        header = [c.strip() for c in rows[0]]
        rows = rows[1:]
    if not rows:
        raise DataError(f"{path} has a header but no data rows")

    width = len(rows[0])
    if width < 2:
        raise DataError("need at least one feature column and a label column", row=0)
    offset = 1 if header is not None else 0
    values = np.empty((len(rows), width), dtype=np.int8)
    for i, r in enumerate(rows):
        if len(r) != width:
            raise DataError(f"expected {width} cells, found {len(r)}", row=i + offset)
        for j, cell in enumerate(r):
            values[i, j] = _parse_cell(cell, i + offset, j)

    has_zero = bool(np.any(values == 0))
    has_neg = bool(np.any(values == -1))
    if has_zero and has_neg:
        r, c = np.argwhere(values == 0)[0]
        raise DataError("mixed 0/1 and -1/+1 encodings", row=int(r) + offset, column=int(c))
    if mapping == "auto":
        mapping = "zero_one" if has_zero else "pm1"
    if mapping == "pm1" and has_zero:
        r, c = np.argwhere(values == 0)[0]
        raise DataError("cell 0 in a -1/+1 file", row=int(r) + offset, column=int(c))
    if mapping == "zero_one":
        if has_neg:
            r, c = np.argwhere(values == -1)[0]
            raise DataError("cell -1 in a 0/1 file", row=int(r) + offset, column=int(c))
        values = (2 * values - 1).astype(np.int8)

    data = LabeledDataset(values[:, :-1], values[:, -1])
    report = LoadReport(str(path), mapping, header, data.n, data.d)
    for j in range(data.d):
        col = data.features[:, j]
        if np.all(col == col[0]):
            report.degenerate_columns.append(j)
            report.warnings.append(f"feature {j} is constant ({int(col[0]):+d})")
            log.warning("feature %d in %s is constant", j, path)
    return data, report


def load_csv(path, mapping: str = "auto") -> LabeledDataset:
    return read_csv(path, mapping)[0]


def save_csv(data: LabeledDataset, path, encoding: str = "pm1", header: bool = True) -> None:
    if encoding not in ("pm1", "zero_one"):
        raise ValueError(f"unknown encoding {encoding!r}")
    table = np.column_stack([data.features, data.labels]).astype(int)
    if encoding == "zero_one":
        table = (table + 1) // 2
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh)
        if header:
            w.writerow([f"x{j}" for j in range(data.d)] + ["y"])
        w.writerows(table.tolist())


def load_json(path) -> LabeledDataset:
    return LabeledDataset.from_dict(json.loads(Path(path).read_text()))


def save_json(data: LabeledDataset, path) -> None:
    Path(path).write_text(json.dumps(data.to_dict()))


# ------------------------------------------------------------------- synthetic

LABEL_RULES = ("dictator", "parity", "majority", "junta_table", "linear_threshold")


@dataclass(frozen=True)
class SyntheticSpec:
    """Recipe for a seeded synthetic dataset.

    ``subset`` is the relevant feature set for ``dictator`` (first index),
    ``parity``, ``majority`` and ``junta_table``. ``table`` lists the junta's
    ±1 outputs indexed by the local mask over ``subset`` (bit ``i`` set when
    ``x[subset[i]] = +1``). ``linear_threshold`` labels ``sign(w.x - threshold)``.
    """

    d: int
    n: int
    seed: int = 0
    rule: str = "dictator"
    subset: tuple[int, ...] = (0,)
    table: tuple[int, ...] | None = None
    weights: tuple[float, ...] | None = None
    threshold: float = 0.0
    biases: tuple[float, ...] | None = None
    noise: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "subset", tuple(int(j) for j in self.subset))
        if self.table is not None:
            object.__setattr__(self, "table", tuple(int(v) for v in self.table))
        if self.weights is not None:
            object.__setattr__(self, "weights", tuple(float(v) for v in self.weights))
        if self.biases is not None:
            object.__setattr__(self, "biases", tuple(float(v) for v in self.biases))
        self.validate()

    def validate(self) -> None:
        if self.d < 1:
            raise ValueError("d must be at least 1")
        if self.n < 1:
            raise ValueError("n must be at least 1")
        if self.rule not in LABEL_RULES:
            raise ValueError(f"unknown label rule {self.rule!r}; pick one of {LABEL_RULES}")
        if not 0.0 <= self.noise < 0.5:
            raise ValueError(f"noise rate must lie in [0, 0.5), got {self.noise}")
        if len(set(self.subset)) != len(self.subset):
            raise ValueError("subset has repeated indices")
        if len(self.subset) > self.d or any(not 0 <= j < self.d for j in self.subset):
            raise ValueError(f"subset {self.subset} does not fit dimension {self.d}")
        if self.rule in ("dictator", "majority") and not self.subset:
            raise ValueError(f"{self.rule} needs a non-empty subset")
        if self.rule == "junta_table":
            if self.table is None or len(self.table) != 1 << len(self.subset):
                raise ValueError(f"junta table needs {1 << len(self.subset)} entries")
            if any(v not in (-1, 1) for v in self.table):
                raise ValueError("junta table entries must be ±1")
        if self.rule == "linear_threshold":
            if self.weights is None or len(self.weights) != self.d:
                raise ValueError(f"linear threshold needs {self.d} weights")
        if self.biases is not None:
            if len(self.biases) != self.d:
                raise ValueError(f"need {self.d} biases, got {len(self.biases)}")
            if any(not 0.0 < p < 1.0 for p in self.biases):
                raise ValueError("biases must lie strictly between 0 and 1")

    def bias_array(self) -> np.ndarray:
        if self.biases is None:
            return np.full(self.d, 0.5)
        return np.asarray(self.biases, dtype=float)

    def distribution(self) -> ProductDistribution:
        return ProductDistribution(self.bias_array())

    def replace(self, **changes) -> "SyntheticSpec":
        fields = self.to_dict()
        fields.update(changes)
        return SyntheticSpec.from_dict(fields)

    def to_dict(self) -> dict:
        return {
            "d": self.d,
            "n": self.n,
            "seed": self.seed,
            "rule": self.rule,
            "subset": list(self.subset),
            "table": None if self.table is None else list(self.table),
            "weights": None if self.weights is None else list(self.weights),
            "threshold": self.threshold,
            "biases": None if self.biases is None else list(self.biases),
            "noise": self.noise,
        }

    @classmethod
    def from_dict(cls, obj: Mapping) -> "SyntheticSpec":
        known = cls.__dataclass_fields__
        unknown = set(obj) - set(known)
        if unknown:
            raise ValueError(f"unknown synthetic spec fields: {sorted(unknown)}")
        kw = dict(obj)
        for key in ("subset", "table", "weights", "biases"):
            if kw.get(key) is not None:
                kw[key] = tuple(kw[key])
        return cls(**kw)


def _sign(v: np.ndarray) -> np.ndarray:
    return np.where(v >= 0, 1, -1).astype(np.int8)


def clean_labels(spec: SyntheticSpec, X: np.ndarray) -> np.ndarray:
    """Noise-free label of each row of ``X`` under the spec's rule."""
    X = np.asarray(X)
    S = list(spec.subset)
    if spec.rule == "dictator":
        return X[:, S[0]].astype(np.int8)
    if spec.rule == "parity":
        return np.prod(X[:, S], axis=1, dtype=np.int64).astype(np.int8) if S else np.ones(len(X), np.int8)
    if spec.rule == "majority":
        return _sign(X[:, S].sum(axis=1))
    if spec.rule == "junta_table":
        local = ((X[:, S] > 0).astype(np.int64) << np.arange(len(S), dtype=np.int64)).sum(axis=1)
        return np.asarray(spec.table, dtype=np.int8)[local]
    return _sign(X @ np.asarray(spec.weights) - spec.threshold)


def clean_label_table(spec: SyntheticSpec) -> np.ndarray:
    return clean_labels(spec, cube_points(spec.d))


def generate(spec: SyntheticSpec) -> LabeledDataset:
    """Draw ``spec.n`` rows; features first, then label flips, from one seeded stream."""
    rng = np.random.default_rng(spec.seed)
    p = spec.bias_array()
    X = np.where(rng.random((spec.n, spec.d)) < p, 1, -1).astype(np.int8)
    y = clean_labels(spec, X)
    if spec.noise > 0:
        flips = rng.random(spec.n) < spec.noise
        y = np.where(flips, -y, y).astype(np.int8)
    return LabeledDataset(X, y)


def split(data: LabeledDataset, test_fraction: float, seed: int) -> tuple[LabeledDataset, LabeledDataset]:
    """Seeded shuffle, then the first ``ceil(n * test_fraction)`` rows become the test set.

    Both sides are kept non-empty: the test size is clamped to ``[1, n - 1]``.
    """
    if not 0.0 < test_fraction < 1.0:
        raise ValueError(f"test fraction must lie in (0, 1), got {test_fraction}")
    n = data.n
    if n < 2:
        raise DataError(f"cannot split {n} row(s) into two non-empty parts")
    # 10 * 0.3 is 3.0000000000000004 in floating point
    n_test = math.ceil(round(n * test_fraction, 9))
    n_test = min(max(n_test, 1), n - 1)
    perm = np.random.default_rng(seed).permutation(n)
    return data.subset(np.sort(perm[n_test:])), data.subset(np.sort(perm[:n_test]))


def datasets_equal(a: LabeledDataset, b: LabeledDataset) -> bool:
    return np.array_equal(a.features, b.features) and np.array_equal(a.labels, b.labels)


def parse_indices(text: str | Sequence[int]) -> tuple[int, ...]:
    if isinstance(text, str):
        text = text.strip()
        if not text:
            return ()
        return tuple(int(t) for t in text.split(","))
    return tuple(int(t) for t in text)
