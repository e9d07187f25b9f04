"""Empirical Fourier estimates and the sample-size / deviation formulas that go with them."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .data import LabeledDataset
from .errors import DegenerateFeatureError
from .fourier import (
    FeatureMoments,
    FeatureSubset,
    FourierExpansion,
    enumerate_subsets,
    popcount,
    subset_indices,
)

MAX_LOO_SUBSET = 20


def empirical_moments(data: LabeledDataset) -> FeatureMoments:
    """Sample means, with ``sigma_j = sqrt(1 - mu_j^2)`` (exact for ±1 features)."""
    if data.n < 2:
        raise ValueError(f"need at least 2 samples to estimate moments, got {data.n}")
    mu = data.features.mean(axis=0, dtype=float)
    bad = np.flatnonzero(np.abs(mu) >= 1.0)
    if bad.size:
        raise DegenerateFeatureError(int(bad[0]), float(mu[bad[0]]))
    # 1 - mu^2 = (1 - mu)(1 + mu); the factored form keeps precision near |mu| = 1
    return FeatureMoments(mu, np.sqrt((1.0 - mu) * (1.0 + mu)))


def split_for_moments(data: LabeledDataset, fraction: float) -> tuple[LabeledDataset, LabeledDataset]:
    """First ``ceil(n * fraction)`` rows for moments, the rest for coefficients."""
    if not 0.0 < fraction < 1.0:
        raise ValueError(f"moment fraction must lie in (0, 1), got {fraction}")
    m = min(max(math.ceil(data.n * fraction), 2), data.n - 1)
    rows = np.arange(data.n)
    return data.subset(rows[:m]), data.subset(rows[m:])


def _check_moments(data: LabeledDataset, moments: FeatureMoments) -> None:
    if moments.dim != data.d:
        raise ValueError(f"moments have dimension {moments.dim}, data has {data.d}")


def coefficient_table(
    data: LabeledDataset, moments: FeatureMoments, masks: Iterable[FeatureSubset]
) -> dict[FeatureSubset, float]:
    """``a_S = (1/n) sum_i y_i psi_S(x_i)`` for each requested mask."""
    _check_moments(data, moments)
    Z = moments.standardize(data.features)
    y = data.labels.astype(float)
    out = {}
    for S in masks:
        idx = subset_indices(S)
        if not idx:
            out[S] = float(y.mean())
        elif len(idx) == 1:
            out[S] = float(np.dot(y, Z[:, idx[0]]) / data.n)
        else:
            out[S] = float(np.dot(y, np.prod(Z[:, list(idx)], axis=1)) / data.n)
    return out


def empirical_coefficients(data: LabeledDataset, moments: FeatureMoments, k: int) -> FourierExpansion:
    """Empirical coefficients for every subset of size at most ``k``."""
    masks = enumerate_subsets(data.d, k)
    return FourierExpansion(data.d, coefficient_table(data, moments, masks), degree_cap=k)


def _subset_parities(
    features: np.ndarray, moments: FeatureMoments, J: FeatureSubset
) -> tuple[list[FeatureSubset], np.ndarray]:
    """Rows ``psi_S(x_1..x_n)`` for every ``S`` inside ``J``, ordered by ascending mask."""
    masks = [0]
    rows = [np.ones(features.shape[0])]
    for j in subset_indices(J):
        z = (features[:, j] - moments.means[j]) / moments.stds[j]
        masks = masks + [S | (1 << j) for S in masks]
        rows = rows + [r * z for r in rows]
    order = np.argsort(masks, kind="stable")
    return [masks[i] for i in order], np.stack([rows[i] for i in order])


def projection_values(
    data: LabeledDataset,
    moments: FeatureMoments,
    J: FeatureSubset,
    coefficients: dict[FeatureSubset, float] | None = None,
) -> np.ndarray:
    """Plug-in estimate ``f_hat^J(x_i)`` at every sample."""
    _check_subset_size(J)
    masks, rows = _subset_parities(data.features, moments, J)
    coefs = _coefs_for(data, moments, masks, coefficients)
    return coefs @ rows


def loo_projection_values(
    data: LabeledDataset,
    moments: FeatureMoments,
    J: FeatureSubset,
    coefficients: dict[FeatureSubset, float] | None = None,
) -> np.ndarray:
    """Leave-one-out projection estimate at each sample.

    Entry ``i`` is ``n/(n-1) * sum_{S in J} (a_S - y_i psi_S(x_i) / n) psi_S(x_i)``:
    the projection onto ``J`` rebuilt without sample ``i``, evaluated at ``x_i``.
    Computed from the full-sample coefficients in ``O(n 2^|J|)``.
    """
    n = data.n
    if n < 2:
        raise ValueError("leave-one-out needs at least 2 samples")
    _check_subset_size(J)
    masks, rows = _subset_parities(data.features, moments, J)
    coefs = _coefs_for(data, moments, masks, coefficients)
    full = coefs @ rows
    self_term = data.labels * np.einsum("ij,ij->j", rows, rows) / n
    return (n / (n - 1)) * (full - self_term)


def _coefs_for(data, moments, masks, coefficients) -> np.ndarray:
    if coefficients is None:
        coefficients = coefficient_table(data, moments, masks)
    missing = [S for S in masks if S not in coefficients]
    if missing:
        coefficients = {**coefficients, **coefficient_table(data, moments, missing)}
    return np.array([coefficients[S] for S in masks])


def _check_subset_size(J: FeatureSubset) -> None:
    if popcount(J) > MAX_LOO_SUBSET:
        raise ValueError(f"|J| = {popcount(J)} exceeds {MAX_LOO_SUBSET}")


# ------------------------------------------------------------ concentration


def parity_sup_sq(moments: FeatureMoments, k: int) -> float:
    """``c_k = max_{|S|<=k} max_x psi_S(x)^2``.

    Per feature the largest ``psi^2`` is ``(1+|mu|)^2 / sigma^2 =
    (1+|mu|)/(1-|mu|)``, so the maximum takes the ``k`` largest factors.
    Returns ``inf`` when a feature is numerically degenerate.
    """
    if k < 0:
        raise ValueError("k must be non-negative")
    a = np.abs(moments.means)
    if np.any(a >= 1.0 - 1e-12):
        return math.inf
    factors = np.sort((1.0 + a) / (1.0 - a))[::-1]
    return float(np.prod(factors[: min(k, factors.size)]))


def _bound_args(n, d, k, delta, c_k):
    if n < 1:
        raise ValueError(f"need n >= 1, got {n}")
    if not 0.0 < delta < 1.0:
        raise ValueError(f"delta must lie in (0, 1), got {delta}")
    if k < 1:
        raise ValueError(f"the bound needs k >= 1, got {k}")
    if d < 1:
        raise ValueError(f"need d >= 1, got {d}")
    if not c_k >= 1.0:
        raise ValueError(f"c_k must be at least 1, got {c_k}")
    # d^k / (k-1)! counts (an upper bound on) the subsets of size <= k
    return d**k / math.factorial(k - 1)


def coefficient_deviation_bound(n: int, d: int, k: int, delta: float, c_k: float = 1.0) -> float:
    """``eps`` with ``max_{|S|<=k} |a_S - f_S| <= eps`` w.p. at least ``1 - delta``.

    ``eps = sqrt((2 c_k / n) ln(2 d^k / ((k-1)! delta)))``.
    """
    m = _bound_args(n, d, k, delta, c_k)
    return math.sqrt(2.0 * c_k / n * math.log(2.0 * m / delta))


def projection_deviation_bound(n: int, d: int, k: int, delta: float, c_k: float = 1.0) -> float:
    """2-norm version: ``sqrt(2 d^k c_k / ((k-1)! n) ln(2 d^k / ((k-1)! delta)))``."""
    m = _bound_args(n, d, k, delta, c_k)
    return math.sqrt(2.0 * m * c_k / n * math.log(2.0 * m / delta))


def moment_sample_size(epsilon0: float, delta0: float, d: int) -> int:
    """Samples needed so every ``|mu_hat_j - mu_j| <= epsilon0`` w.p. ``1 - delta0``:
    ``ceil((2 / epsilon0^2) ln(2 d / delta0))``."""
    if not 0.0 < epsilon0 < 1.0:
        raise ValueError(f"epsilon0 must lie in (0, 1), got {epsilon0}")
    if not 0.0 < delta0 < 1.0:
        raise ValueError(f"delta0 must lie in (0, 1), got {delta0}")
    if d < 1:
        raise ValueError(f"need d >= 1, got {d}")
    return math.ceil(2.0 / epsilon0**2 * math.log(2.0 * d / delta0))


def score1_sample_size(epsilon: float, delta: float, d: int, k: int, c_k: float = 1.0) -> int:
    """Samples for ``|score1(J) - E score1(J)| <= epsilon`` over all ``|J| = k``
    (martingale-difference bound): ``n - 1 >= 32 4^k c_k^2 / epsilon^2 ln(C(d,k) / (2 delta))``."""
    if not 0.0 < epsilon < 1.0 or not 0.0 < delta < 1.0:
        raise ValueError("epsilon and delta must lie in (0, 1)")
    if not 0 <= k <= d:
        raise ValueError(f"need 0 <= k <= d, got k={k}, d={d}")
    log_term = max(math.log(math.comb(d, k) / (2.0 * delta)), 0.0)
    return math.ceil(32.0 * 4.0**k * c_k**2 / epsilon**2 * log_term) + 1


def score1_bias_bound(n: int, k: int) -> float:
    """``|E score1(J) - ||f^J||_1| <= 2^(k/2) / sqrt(n - 1)`` at known moments."""
    if n < 2:
        raise ValueError("need n >= 2")
    return 2.0 ** (k / 2) / math.sqrt(n - 1)


@dataclass(frozen=True)
class ConcentrationBudget:
    epsilon0: float
    delta0: float
    d: int

    @property
    def n0(self) -> int:
        return moment_sample_size(self.epsilon0, self.delta0, self.d)
