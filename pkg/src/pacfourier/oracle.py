"""Exact ground truth for small dimension by enumerating the whole cube.

Labels are either a deterministic ±1 table ``f`` or a channel
``eta(x) = Pr(Y = +1 | x)``; both enter the Fourier machinery through the
conditional mean ``E[Y | x]`` (``f`` or ``2 eta - 1``).
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import Mapping

import numpy as np

from .data import SyntheticSpec, clean_label_table
from .errors import BudgetExceededError, DimensionTooLargeError
from .fourier import (
    MAX_ENUM_DIM,
    FeatureSubset,
    FourierExpansion,
    ProductDistribution,
    all_coefficients,
    count_subsets,
    cube_points,
    enumerate_subsets,
    eval_expansion,
    popcount,
    subset_indices,
    submasks,
)
from .learners import SignPredictor

MAX_POPT_WORK = 2**32
MAX_ERM_K = 4
LITERAL_SCAN_K = 3
TIE_TOL = 1e-12


@dataclass(frozen=True)
class ExactProblem:
    """A product distribution plus either a deterministic table or a label channel."""

    dist: ProductDistribution
    table: np.ndarray | None = None
    channel: np.ndarray | None = None

    def __post_init__(self):
        d = self.dist.dim
        if d > MAX_ENUM_DIM:
            raise DimensionTooLargeError(f"exact problems need d <= {MAX_ENUM_DIM}, got {d}")
        if (self.table is None) == (self.channel is None):
            raise ValueError("give exactly one of a deterministic table or a label channel")
        if self.table is not None:
            t = np.asarray(self.table, dtype=float).reshape(-1)
            if t.size != 1 << d:
                raise ValueError(f"label table needs {1 << d} entries, got {t.size}")
            if not np.all((t == 1) | (t == -1)):
                raise ValueError("deterministic labels must be ±1")
            t.setflags(write=False)
            object.__setattr__(self, "table", t)
        else:
            c = np.asarray(self.channel, dtype=float).reshape(-1)
            if c.size != 1 << d:
                raise ValueError(f"label channel needs {1 << d} entries, got {c.size}")
            if np.any((c < 0) | (c > 1)):
                raise ValueError("channel values must lie in [0, 1]")
            c.setflags(write=False)
            object.__setattr__(self, "channel", c)

    @property
    def dim(self) -> int:
        return self.dist.dim

    @property
    def stochastic(self) -> bool:
        return self.channel is not None

    @cached_property
    def probs(self) -> np.ndarray:
        return self.dist.point_probs()

    @cached_property
    def points(self) -> np.ndarray:
        return cube_points(self.dim)

    @cached_property
    def label_mean(self) -> np.ndarray:
        """``E[Y | x]`` for every cube point."""
        if self.table is not None:
            return self.table
        return 2.0 * self.channel - 1.0

    @cached_property
    def coefficients(self) -> np.ndarray:
        """``E[Y psi_S(X)]`` for every mask ``S``."""
        return all_coefficients(self.dist, self.label_mean)

    def to_dict(self) -> dict:
        kind = "channel" if self.stochastic else "deterministic"
        values = self.channel if self.stochastic else self.table
        return {
            "biases": self.dist.biases.tolist(),
            "label_kind": kind,
            "values": [float(v) if self.stochastic else int(v) for v in values],
        }

    @classmethod
    def from_dict(cls, obj: Mapping) -> "ExactProblem":
        dist = ProductDistribution(np.asarray(obj["biases"], dtype=float))
        kind = obj["label_kind"]
        if kind == "deterministic":
            return cls(dist, table=np.asarray(obj["values"], dtype=float))
        if kind == "channel":
            return cls(dist, channel=np.asarray(obj["values"], dtype=float))
        raise ValueError(f"unknown label kind {kind!r}")

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict()))

    @classmethod
    def load(cls, path) -> "ExactProblem":
        return cls.from_dict(json.loads(Path(path).read_text()))


def problem_from_spec(spec: SyntheticSpec) -> ExactProblem:
    """Exact counterpart of a synthetic spec: clean rule plus symmetric label noise."""
    if spec.d > MAX_ENUM_DIM:
        raise DimensionTooLargeError(f"exact problems need d <= {MAX_ENUM_DIM}, got {spec.d}")
    dist = spec.distribution()
    clean = clean_label_table(spec).astype(float)
    if spec.noise == 0:
        return ExactProblem(dist, table=clean)
    return ExactProblem(dist, channel=np.where(clean > 0, 1.0 - spec.noise, spec.noise))


def random_problem(rng: np.random.Generator, d: int, stochastic: bool, bias_range=(0.1, 0.9)) -> ExactProblem:
    dist = ProductDistribution(rng.uniform(*bias_range, size=d))
    if stochastic:
        return ExactProblem(dist, channel=rng.random(1 << d))
    return ExactProblem(dist, table=rng.choice([-1.0, 1.0], size=1 << d))


# ------------------------------------------------------------------ projections


def exact_projection(problem: ExactProblem, J: FeatureSubset) -> FourierExpansion:
    """Projection of the label onto the features in ``J``: coefficients for every ``S`` inside ``J``."""
    coefs = problem.coefficients
    return FourierExpansion(problem.dim, {S: float(coefs[S]) for S in submasks(J)})


def projection_table(problem: ExactProblem, J: FeatureSubset) -> np.ndarray:
    """The projection onto ``J`` evaluated at every cube point (Fourier route)."""
    return eval_expansion(exact_projection(problem, J), problem.dist.moments(), problem.points)


def _cells(problem: ExactProblem, J: FeatureSubset) -> np.ndarray:
    """Local index of each cube point within the sub-cube of ``J`` (bit i <-> i-th feature of J)."""
    idx = np.arange(1 << problem.dim, dtype=np.int64)
    cell = np.zeros_like(idx)
    for i, j in enumerate(subset_indices(J)):
        cell |= ((idx >> j) & 1) << i
    return cell


def conditional_mean(problem: ExactProblem, J: FeatureSubset) -> np.ndarray:
    """``E[Y | x_J]`` at every cube point, by summing out the other features directly."""
    cell = _cells(problem, J)
    m = 1 << popcount(J)
    mass = np.bincount(cell, weights=problem.probs, minlength=m)
    signed = np.bincount(cell, weights=problem.probs * problem.label_mean, minlength=m)
    return (signed / mass)[cell]


def projection_norm1(problem: ExactProblem, J: FeatureSubset) -> float:
    return float(np.sum(problem.probs * np.abs(projection_table(problem, J))))


def projection_norm2_sq(problem: ExactProblem, J: FeatureSubset) -> float:
    c = problem.coefficients[submasks(J)]
    return float(np.dot(c, c))


# ----------------------------------------------------------------- optimum


@dataclass(frozen=True)
class PoptResult:
    popt: float
    argmax_J: FeatureSubset
    norm1: float


def _check_popt_budget(problem: ExactProblem, k: int) -> None:
    if not 0 <= k <= problem.dim:
        raise ValueError(f"need 0 <= k <= d, got k={k}, d={problem.dim}")
    work = count_subsets(problem.dim, k) * (1 << problem.dim)
    if work > MAX_POPT_WORK:
        raise BudgetExceededError(f"{work} subset-point evaluations exceeds {MAX_POPT_WORK}")


def _best(values: dict[FeatureSubset, float], largest: bool) -> FeatureSubset:
    best = max(values.values()) if largest else min(values.values())
    return min(S for S, v in values.items() if abs(v - best) <= TIE_TOL)


def exact_popt(problem: ExactProblem, k: int) -> PoptResult:
    """Smallest error over ``k``-juntas: ``1/2 - 1/2 max_{|J|<=k} ||projection onto J||_1``."""
    _check_popt_budget(problem, k)
    norms = {J: projection_norm1(problem, J) for J in enumerate_subsets(problem.dim, k)}
    J = _best(norms, largest=True)
    return PoptResult(0.5 - 0.5 * norms[J], J, norms[J])


@dataclass(frozen=True)
class ErmResult:
    error: float
    best_J: FeatureSubset
    best_g: tuple[int, ...]
    literal_error: float | None = None


def _pointwise_erm(problem: ExactProblem, J: FeatureSubset) -> tuple[float, np.ndarray]:
    """Best junta on ``J``: per cell, predict the more likely label."""
    cell = _cells(problem, J)
    m = 1 << popcount(J)
    p_pos = np.bincount(cell, weights=problem.probs * (1 + problem.label_mean) / 2, minlength=m)
    p_neg = np.bincount(cell, weights=problem.probs * (1 - problem.label_mean) / 2, minlength=m)
    g = np.where(p_pos >= p_neg, 1, -1)
    return float(np.sum(np.minimum(p_pos, p_neg))), g


def _literal_erm(problem: ExactProblem, J: FeatureSubset) -> float:
    """Try every Boolean function on the cells of ``J``; error by full enumeration."""
    cell = _cells(problem, J)
    m = 1 << popcount(J)
    tables = np.array(list(itertools.product((-1.0, 1.0), repeat=m)))
    preds = tables[:, cell]
    # Pr(Y != g(x) | x) = (1 - g(x) E[Y|x]) / 2
    errs = (problem.probs * (1.0 - preds * problem.label_mean) / 2.0).sum(axis=1)
    return float(errs.min())


def erm_exhaustive(problem: ExactProblem, k: int, literal: bool | None = None) -> ErmResult:
    """Direct minimisation of the exact error over all juntas on at most ``k`` features.

    The optimal function on a fixed ``J`` is found cell by cell. With
    ``literal`` (default: on when ``k <= 3`` and ``d <= 10``) every one of the
    ``2^(2^|J|)`` tables is also scanned and the two minima must agree.
    """
    if k > MAX_ERM_K:
        raise BudgetExceededError(f"exhaustive junta search is limited to k <= {MAX_ERM_K}")
    _check_popt_budget(problem, k)
    if literal is None:
        literal = k <= LITERAL_SCAN_K and problem.dim <= 10
    if literal and k > LITERAL_SCAN_K:
        raise BudgetExceededError(f"literal table scan is limited to k <= {LITERAL_SCAN_K}")

    errors, tables, literal_errors = {}, {}, {}
    for J in enumerate_subsets(problem.dim, k):
        errors[J], tables[J] = _pointwise_erm(problem, J)
        if literal:
            literal_errors[J] = _literal_erm(problem, J)
    J = _best(errors, largest=False)
    lit = None
    if literal:
        lit = min(literal_errors.values())
        if abs(lit - errors[J]) > 1e-9:
            raise AssertionError(f"literal scan {lit!r} disagrees with pointwise optimum {errors[J]!r}")
    return ErmResult(errors[J], J, tuple(int(v) for v in tables[J]), lit)


@dataclass(frozen=True)
class Sandwich:
    lower: float
    popt: float
    upper: float


def sandwich(problem: ExactProblem, k: int) -> Sandwich:
    """``1/2 (1 - max ||.||_2) <= Popt <= 1/2 (1 - max ||.||_2^2)`` over ``|J| <= k``."""
    _check_popt_budget(problem, k)
    sq = max(projection_norm2_sq(problem, J) for J in enumerate_subsets(problem.dim, k))
    popt = exact_popt(problem, k).popt
    return Sandwich(0.5 * (1.0 - math.sqrt(sq)), popt, 0.5 * (1.0 - sq))


# ------------------------------------------------------------------ errors


def predictor_table(problem: ExactProblem, predictor: SignPredictor) -> np.ndarray:
    if predictor.dim != problem.dim:
        raise ValueError(f"predictor has dimension {predictor.dim}, problem has {problem.dim}")
    return predictor.predict(problem.points).astype(float)


def predictor_features(predictor: SignPredictor) -> FeatureSubset:
    """Features the predictor can depend on (all of them when unknown)."""
    if predictor.kind == "fourier":
        return predictor.expansion.support_features()
    if predictor.kind == "monomial":
        J = 0
        for alpha, c in predictor.polynomial.terms.items():
            if c != 0.0:
                for j, a in enumerate(alpha):
                    if a:
                        J |= 1 << j
        return J
    return (1 << predictor.dim) - 1


def error_of_table(problem: ExactProblem, g: np.ndarray) -> float:
    """``Pr(Y != g(X))`` for a ±1 table ``g``, by enumeration."""
    return float(np.sum(problem.probs * (1.0 - g * problem.label_mean) / 2.0))


@dataclass(frozen=True)
class ExactError:
    error: float
    inner_form: float
    norm_form: float
    J: FeatureSubset

    @property
    def max_discrepancy(self) -> float:
        return max(abs(self.error - self.inner_form), abs(self.error - self.norm_form))


def exact_error(problem: ExactProblem, predictor: SignPredictor, J: FeatureSubset | None = None) -> ExactError:
    """Exact misclassification of ``predictor`` three ways.

    With ``J`` the features the predictor uses and ``P`` the label's
    projection onto ``J``: enumeration, ``1/2 - 1/2 <P, g>`` and
    ``1/4 (||P - g||_2^2 + 1 - ||P||_2^2)``, the last two from coefficients.
    """
    g = predictor_table(problem, predictor)
    if J is None:
        J = predictor_features(predictor)
    g_coefs = all_coefficients(problem.dist, g)
    inside = np.zeros(1 << problem.dim, dtype=bool)
    inside[submasks(J)] = True
    proj = np.where(inside, problem.coefficients, 0.0)
    inner = float(np.dot(proj, g_coefs))
    diff_sq = float(np.sum((proj - g_coefs) ** 2))
    return ExactError(
        error=error_of_table(problem, g),
        inner_form=0.5 - 0.5 * inner,
        norm_form=0.25 * (diff_sq + 1.0 - float(np.dot(proj, proj))),
        J=J,
    )


def exact_error_value(problem: ExactProblem, predictor: SignPredictor) -> float:
    return error_of_table(problem, predictor_table(problem, predictor))


def regret_value(problem: ExactProblem, predictor: SignPredictor, popt: float) -> float:
    """Excess error over ``popt``, clipped at zero against rounding."""
    return max(exact_error_value(problem, predictor) - popt, 0.0)
