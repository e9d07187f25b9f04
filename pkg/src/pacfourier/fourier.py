"""Fourier analysis on the Boolean cube {-1,+1}^d under product distributions.

Feature subsets are plain ``int`` bit-masks: bit ``j`` set means feature ``j``
is in the subset. Cube points are indexed the same way, so point index ``i``
has ``x_j = +1`` exactly when bit ``j`` of ``i`` is set.

Under a product distribution with per-feature mean ``mu_j`` and standard
deviation ``sigma_j`` the parities

    psi_S(x) = prod_{j in S} (x_j - mu_j) / sigma_j

form an orthonormal basis, and ``f_S = E[f(X) psi_S(X)]``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

from .errors import DimensionTooLargeError

FeatureSubset = int

MAX_MASK_DIM = 30
MAX_ENUM_DIM = 22


def subset_from_indices(indices: Iterable[int]) -> FeatureSubset:
    mask = 0
    for j in indices:
        if j < 0:
            raise ValueError(f"negative feature index {j}")
        mask |= 1 << int(j)
    return mask


def subset_indices(mask: FeatureSubset) -> tuple[int, ...]:
    out = []
    j = 0
    while mask:
        if mask & 1:
            out.append(j)
        mask >>= 1
        j += 1
    return tuple(out)


def popcount(mask: FeatureSubset) -> int:
    return bin(mask).count("1")


def is_subset(S: FeatureSubset, J: FeatureSubset) -> bool:
    return S & ~J == 0


def full_subset(d: int) -> FeatureSubset:
    return (1 << d) - 1


def submasks(J: FeatureSubset) -> list[FeatureSubset]:
    """All subsets of ``J`` in ascending mask order."""
    idx = subset_indices(J)
    out = [0]
    for j in idx:
        bit = 1 << j
        out = out + [s | bit for s in out]
    return sorted(out)


def _check_mask_dim(d: int) -> None:
    if d > MAX_MASK_DIM:
        raise DimensionTooLargeError(f"dimension {d} exceeds mask width {MAX_MASK_DIM}")


def _check_enum_dim(d: int) -> None:
    if d > MAX_ENUM_DIM:
        raise DimensionTooLargeError(
            f"dimension {d} exceeds full-enumeration cap {MAX_ENUM_DIM}"
        )


def enumerate_subsets(d: int, k: int) -> list[FeatureSubset]:
    """Every subset of ``range(d)`` with at most ``k`` elements, ascending by mask."""
    _check_mask_dim(d)
    if not 0 <= k <= d:
        raise ValueError(f"need 0 <= k <= d, got k={k}, d={d}")
    masks = [
        subset_from_indices(c)
        for m in range(k + 1)
        for c in itertools.combinations(range(d), m)
    ]
    masks.sort()
    return masks


def count_subsets(d: int, k: int) -> int:
    return sum(math.comb(d, m) for m in range(min(k, d) + 1))


@dataclass(frozen=True)
class FeatureMoments:
    """Per-feature mean and standard deviation."""

    means: np.ndarray
    stds: np.ndarray

    def __post_init__(self):
        means = np.asarray(self.means, dtype=float).reshape(-1)
        stds = np.asarray(self.stds, dtype=float).reshape(-1)
        if means.shape != stds.shape:
            raise ValueError("means and stds must have the same length")
        if np.any(~(stds > 0)):
            bad = int(np.flatnonzero(~(stds > 0))[0])
            raise ValueError(f"feature {bad} has non-positive std {stds[bad]}")
        means.setflags(write=False)
        stds.setflags(write=False)
        object.__setattr__(self, "means", means)
        object.__setattr__(self, "stds", stds)

    @property
    def dim(self) -> int:
        return self.means.shape[0]

    @classmethod
    def from_biases(cls, biases: Sequence[float]) -> "FeatureMoments":
        p = np.asarray(biases, dtype=float)
        mu = 2.0 * p - 1.0
        # sigma^2 = 1 - mu^2 = 4 p (1 - p); the product form avoids cancellation
        return cls(mu, 2.0 * np.sqrt(p * (1.0 - p)))

    @classmethod
    def uniform(cls, d: int) -> "FeatureMoments":
        return cls(np.zeros(d), np.ones(d))

    def standardize(self, X: np.ndarray) -> np.ndarray:
        """Map points to ``(x - mu) / sigma`` column-wise."""
        X = np.asarray(X, dtype=float)
        return (X - self.means) / self.stds

    def to_dict(self) -> dict:
        return {"means": self.means.tolist(), "stds": self.stds.tolist()}

    @classmethod
    def from_dict(cls, obj: Mapping) -> "FeatureMoments":
        return cls(np.asarray(obj["means"]), np.asarray(obj["stds"]))


def cube_points(d: int) -> np.ndarray:
    """All ``2**d`` points of the cube as an int8 matrix; row ``i`` is point index ``i``."""
    _check_enum_dim(d)
    idx = np.arange(1 << d, dtype=np.int64)
    bits = (idx[:, None] >> np.arange(d, dtype=np.int64)) & 1
    return (2 * bits - 1).astype(np.int8)


@dataclass(frozen=True)
class ProductDistribution:
    """Independent ±1 features with ``biases[j] = Pr(X_j = +1)``.

    ``label_channel`` optionally gives ``Pr(Y = +1 | x)``, either as a table
    of length ``2**d`` indexed by point index or as a callable on an
    ``(m, d)`` matrix of points.
    """

    biases: np.ndarray
    label_channel: np.ndarray | Callable[[np.ndarray], np.ndarray] | None = field(
        default=None, compare=False
    )

    def __post_init__(self):
        p = np.asarray(self.biases, dtype=float).reshape(-1)
        if p.size == 0:
            raise ValueError("need at least one feature")
        if np.any(~((p > 0) & (p < 1))):
            raise ValueError("every bias must lie strictly between 0 and 1")
        _check_mask_dim(p.size)
        p.setflags(write=False)
        object.__setattr__(self, "biases", p)
        ch = self.label_channel
        if ch is not None and not callable(ch):
            ch = np.asarray(ch, dtype=float).reshape(-1)
            if ch.size != 1 << p.size:
                raise ValueError(f"label channel needs {1 << p.size} entries, got {ch.size}")
            if np.any((ch < 0) | (ch > 1)):
                raise ValueError("label channel values must lie in [0, 1]")
            ch.setflags(write=False)
            object.__setattr__(self, "label_channel", ch)

    @property
    def dim(self) -> int:
        return self.biases.shape[0]

    @classmethod
    def uniform(cls, d: int) -> "ProductDistribution":
        return cls(np.full(d, 0.5))

    def moments(self) -> FeatureMoments:
        return FeatureMoments.from_biases(self.biases)

    def point_probs(self) -> np.ndarray:
        """Probability of every cube point, indexed by point index."""
        d = self.dim
        _check_enum_dim(d)
        probs = np.ones(1)
        # appending feature j doubles the table with j as the new highest bit
        for j in range(d):
            p = self.biases[j]
            probs = np.concatenate([probs * (1 - p), probs * p])
        return probs

    def channel_table(self) -> np.ndarray | None:
        if self.label_channel is None:
            return None
        if callable(self.label_channel):
            vals = np.asarray(self.label_channel(cube_points(self.dim)), dtype=float)
            if np.any((vals < 0) | (vals > 1)):
                raise ValueError("label channel values must lie in [0, 1]")
            return vals
        return self.label_channel


def parity_eval(moments: FeatureMoments, S: FeatureSubset, x: np.ndarray) -> float | np.ndarray:
    """Evaluate ``psi_S`` at a point ``x`` (shape ``(d,)``) or at rows of ``(n, d)``."""
    x = np.asarray(x, dtype=float)
    idx = list(subset_indices(S))
    if idx and idx[-1] >= moments.dim:
        raise ValueError(f"subset {idx} out of range for dimension {moments.dim}")
    mu = moments.means[idx]
    sd = moments.stds[idx]
    if x.ndim == 1:
        return float(np.prod((x[idx] - mu) / sd))
    return np.prod((x[:, idx] - mu) / sd, axis=1)


def parity_matrix(moments: FeatureMoments, masks: Sequence[FeatureSubset], X: np.ndarray) -> np.ndarray:
    """Columns ``psi_S(X)`` for each mask in ``masks``; shape ``(n, len(masks))``."""
    Z = moments.standardize(np.atleast_2d(X))
    out = np.empty((Z.shape[0], len(masks)))
    for c, S in enumerate(masks):
        idx = list(subset_indices(S))
        out[:, c] = np.prod(Z[:, idx], axis=1) if idx else 1.0
    return out


def _as_table(f: np.ndarray | Callable[[np.ndarray], np.ndarray], d: int) -> np.ndarray:
    if callable(f):
        return np.asarray(f(cube_points(d)), dtype=float)
    table = np.asarray(f, dtype=float).reshape(-1)
    if table.size != 1 << d:
        raise ValueError(f"table needs {1 << d} entries, got {table.size}")
    return table


def exact_coefficient(dist: ProductDistribution, f, S: FeatureSubset) -> float:
    """``f_S = sum_x Pr(x) f(x) psi_S(x)`` by full enumeration."""
    d = dist.dim
    _check_enum_dim(d)
    table = _as_table(f, d)
    psi = parity_eval(dist.moments(), S, cube_points(d))
    return float(np.sum(dist.point_probs() * table * psi))


def all_coefficients(dist: ProductDistribution, f) -> np.ndarray:
    """Every coefficient ``f_S`` at once, indexed by mask.

    Applies the one-dimensional basis change feature by feature, which costs
    ``O(d 2**d)`` instead of ``O(4**d)``.
    """
    d = dist.dim
    _check_enum_dim(d)
    weighted = dist.point_probs() * _as_table(f, d)
    mom = dist.moments()
    t = weighted.reshape((2,) * d)
    for j in range(d):
        axis = d - 1 - j
        lo = np.take(t, 0, axis=axis)
        hi = np.take(t, 1, axis=axis)
        z_lo = (-1.0 - mom.means[j]) / mom.stds[j]
        z_hi = (1.0 - mom.means[j]) / mom.stds[j]
        t = np.stack([lo + hi, z_lo * lo + z_hi * hi], axis=axis)
    return t.reshape(-1)


@dataclass(frozen=True)
class FourierExpansion:
    """Sparse expansion ``sum_S terms[S] * psi_S`` over subsets of ``range(dim)``."""

    dim: int
    terms: Mapping[FeatureSubset, float]
    degree_cap: int | None = None

    def __post_init__(self):
        _check_mask_dim(self.dim)
        limit = 1 << self.dim
        clean = {}
        for S in sorted(self.terms):
            S = int(S)
            if not 0 <= S < limit:
                raise ValueError(f"subset mask {S} out of range for dimension {self.dim}")
            if self.degree_cap is not None and popcount(S) > self.degree_cap:
                raise ValueError(f"subset {subset_indices(S)} exceeds degree cap {self.degree_cap}")
            clean[S] = float(self.terms[S])
        object.__setattr__(self, "terms", clean)

    def __len__(self) -> int:
        return len(self.terms)

    def get(self, S: FeatureSubset) -> float:
        return self.terms.get(S, 0.0)

    def support_features(self) -> FeatureSubset:
        """Union of all subsets carrying a non-zero coefficient."""
        J = 0
        for S, c in self.terms.items():
            if c != 0.0:
                J |= S
        return J

    def to_dict(self) -> dict:
        return {
            "dim": self.dim,
            "terms": [
                {"subset": list(subset_indices(S)), "coef": c} for S, c in self.terms.items()
            ],
        }

    @classmethod
    def from_dict(cls, obj: Mapping) -> "FourierExpansion":
        terms = {subset_from_indices(t["subset"]): float(t["coef"]) for t in obj["terms"]}
        return cls(int(obj["dim"]), terms, obj.get("degree_cap"))

    @classmethod
    def from_dense(cls, coefs: np.ndarray, dim: int, masks: Iterable[FeatureSubset] | None = None):
        if masks is None:
            masks = range(1 << dim)
        return cls(dim, {S: float(coefs[S]) for S in masks})


def project(expansion: FourierExpansion, J: FeatureSubset) -> FourierExpansion:
    """Keep exactly the terms whose subset lies inside ``J``."""
    return FourierExpansion(
        expansion.dim,
        {S: c for S, c in expansion.terms.items() if S & ~J == 0},
        expansion.degree_cap,
    )


def eval_expansion(expansion: FourierExpansion, moments: FeatureMoments, x: np.ndarray):
    """Evaluate the expansion at one point or at each row of a matrix."""
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    X = np.atleast_2d(x)
    if X.shape[1] != expansion.dim or moments.dim != expansion.dim:
        raise ValueError(
            f"dimension mismatch: expansion {expansion.dim}, moments {moments.dim}, points {X.shape[1]}"
        )
    Z = moments.standardize(X)
    out = np.zeros(X.shape[0])
    for S, c in expansion.terms.items():
        if S == 0:
            out += c
        else:
            out += c * np.prod(Z[:, list(subset_indices(S))], axis=1)
    return float(out[0]) if single else out


def norm2_sq(expansion: FourierExpansion) -> float:
    """Squared 2-norm via Parseval."""
    return float(sum(c * c for c in expansion.terms.values()))


def norm1_exact(dist: ProductDistribution, expansion: FourierExpansion) -> float:
    """``E|h(X)|`` by full enumeration of the cube."""
    _check_enum_dim(dist.dim)
    vals = eval_expansion(expansion, dist.moments(), cube_points(dist.dim))
    return float(np.sum(dist.point_probs() * np.abs(vals)))


def expansion_inner(a: FourierExpansion, b: FourierExpansion) -> float:
    """``<a, b>`` computed from coefficients (Plancherel)."""
    return float(sum(c * b.get(S) for S, c in a.terms.items()))


def subtract(a: FourierExpansion, b: FourierExpansion) -> FourierExpansion:
    if a.dim != b.dim:
        raise ValueError("dimension mismatch")
    keys = set(a.terms) | set(b.terms)
    return FourierExpansion(a.dim, {S: a.get(S) - b.get(S) for S in keys})
