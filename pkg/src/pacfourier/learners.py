"""Sign predictors fitted by least squares.

* ``fit_fourier``: estimate every coefficient of degree <= k and predict with
  the sign of the resulting expansion (the low-degree algorithm, generalised
  to product distributions with estimated moments).
* ``fit_l2_polyreg``: least-squares fit over all monomials of total degree
  <= k, then shift by the threshold with the smallest training error.
* ``fit_generic_basis``: least squares over any finite list of functions.

``sign(0)`` is ``+1`` everywhere. Values within ``SIGN_TOL`` of zero count as
zero, so the convention survives round-off: on full-cube data bodies are
often exactly zero in exact arithmetic and land at +-1e-17 in floating point.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np

from .data import LabeledDataset
from .errors import BasisTooLargeError
from .estimation import empirical_coefficients, empirical_moments, split_for_moments
from .fourier import FeatureMoments, FourierExpansion, eval_expansion, subset_from_indices, submasks

MAX_MONOMIALS = 10**6
MAX_BASIS = 10**5
CLUSTER_TOL = 1e-12
SIGN_TOL = 1e-12


def sign(v):
    """Elementwise sign with ``sign(0) = +1`` (|v| <= SIGN_TOL is zero); returns int8 ±1."""
    return np.where(np.asarray(v) >= -SIGN_TOL, 1, -1).astype(np.int8)


def monomial_count(d: int, k: int) -> int:
    return math.comb(d + k, k)


def monomial_exponents(d: int, k: int) -> list[tuple[int, ...]]:
    """Exponent vectors of total degree <= k, by degree then lexicographically."""
    out = []
    for m in range(k + 1):
        for combo in itertools.combinations_with_replacement(range(d), m):
            alpha = [0] * d
            for j in combo:
                alpha[j] += 1
            out.append(tuple(alpha))
    return out


@dataclass(frozen=True)
class MonomialPolynomial:
    dim: int
    degree: int
    terms: Mapping[tuple[int, ...], float]

    def __post_init__(self):
        clean = {}
        for alpha, c in self.terms.items():
            alpha = tuple(int(a) for a in alpha)
            if len(alpha) != self.dim or min(alpha, default=0) < 0:
                raise ValueError(f"bad exponent vector {alpha} for dimension {self.dim}")
            if sum(alpha) > self.degree:
                raise ValueError(f"monomial {alpha} exceeds degree {self.degree}")
            clean[alpha] = float(c)
        object.__setattr__(self, "terms", clean)

    def __call__(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        out = np.zeros(X.shape[0])
        for alpha, c in self.terms.items():
            out += c * _monomial_column(X, alpha)
        return out

    def to_parities(self, moments: FeatureMoments) -> FourierExpansion:
        """Rewrite in the parity basis of ``moments``, valid on ±1 points.

        On the cube ``x_j^2 = 1``, so a monomial reduces to the product over
        its odd exponents, and ``x_j = mu_j + sigma_j psi_{j}``.
        """
        coefs: dict[int, float] = {}
        for alpha, c in self.terms.items():
            odd = subset_from_indices(j for j, a in enumerate(alpha) if a % 2)
            for T in submasks(odd):
                w = c
                for j in range(self.dim):
                    if odd >> j & 1:
                        w *= moments.stds[j] if T >> j & 1 else moments.means[j]
                coefs[T] = coefs.get(T, 0.0) + w
        return FourierExpansion(self.dim, coefs)

    def to_dict(self) -> dict:
        return {
            "dim": self.dim,
            "degree": self.degree,
            "terms": [{"exponents": list(a), "coef": c} for a, c in self.terms.items()],
        }

    @classmethod
    def from_dict(cls, obj: Mapping) -> "MonomialPolynomial":
        return cls(
            int(obj["dim"]),
            int(obj["degree"]),
            {tuple(t["exponents"]): float(t["coef"]) for t in obj["terms"]},
        )


def _monomial_column(X: np.ndarray, alpha: Sequence[int]) -> np.ndarray:
    col = np.ones(X.shape[0])
    for j, a in enumerate(alpha):
        if a:
            col = col * X[:, j] ** a
    return col


@dataclass(frozen=True)
class SignPredictor:
    """``x -> sign(body(x) - theta)``; the body is a Fourier expansion, a
    monomial polynomial, or a linear combination of user basis functions."""

    kind: str
    dim: int
    theta: float = 0.0
    expansion: FourierExpansion | None = None
    moments: FeatureMoments | None = None
    polynomial: MonomialPolynomial | None = None
    basis_coefs: np.ndarray | None = None
    basis: tuple[Callable[[np.ndarray], np.ndarray], ...] | None = field(default=None, compare=False)
    basis_names: tuple[str, ...] | None = None

    def __post_init__(self):
        if self.kind == "fourier":
            if self.expansion is None or self.moments is None:
                raise ValueError("a fourier predictor needs an expansion and moments")
        elif self.kind == "monomial":
            if self.polynomial is None:
                raise ValueError("a monomial predictor needs a polynomial")
        elif self.kind == "basis":
            if self.basis_coefs is None:
                raise ValueError("a basis predictor needs coefficients")
        else:
            raise ValueError(f"unknown predictor kind {self.kind!r}")

    def body(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if X.shape[1] != self.dim:
            raise ValueError(f"model expects {self.dim} features, got {X.shape[1]}")
        if self.kind == "fourier":
            return eval_expansion(self.expansion, self.moments, X)
        if self.kind == "monomial":
            return self.polynomial(X)
        if self.basis is None:
            raise ValueError("basis functions were not supplied for this predictor")
        return _design(self.basis, X) @ self.basis_coefs

    def predict(self, X: np.ndarray) -> np.ndarray:
        return sign(self.body(X) - self.theta)

    def to_dict(self) -> dict:
        out = {"kind": self.kind, "dim": self.dim, "theta": self.theta}
        if self.kind == "fourier":
            out["expansion"] = self.expansion.to_dict()
            out["degree_cap"] = self.expansion.degree_cap
            out["moments"] = self.moments.to_dict()
        elif self.kind == "monomial":
            out["polynomial"] = self.polynomial.to_dict()
        else:
            out["coefficients"] = [float(c) for c in self.basis_coefs]
            out["basis_names"] = list(self.basis_names) if self.basis_names else None
        return out

    @classmethod
    def from_dict(cls, obj: Mapping, basis=None) -> "SignPredictor":
        kind = obj["kind"]
        kw = {"kind": kind, "dim": int(obj["dim"]), "theta": float(obj["theta"])}
        if kind == "fourier":
            exp = dict(obj["expansion"])
            exp.setdefault("degree_cap", obj.get("degree_cap"))
            kw["expansion"] = FourierExpansion.from_dict(exp)
            kw["moments"] = FeatureMoments.from_dict(obj["moments"])
        elif kind == "monomial":
            kw["polynomial"] = MonomialPolynomial.from_dict(obj["polynomial"])
        else:
            kw["basis_coefs"] = np.asarray(obj["coefficients"], dtype=float)
            names = obj.get("basis_names")
            kw["basis_names"] = tuple(names) if names else None
            kw["basis"] = None if basis is None else tuple(basis)
        return cls(**kw)


# ------------------------------------------------------------------ threshold


def threshold_errors(values: np.ndarray, labels: np.ndarray, thetas: np.ndarray) -> np.ndarray:
    """Number of training mistakes of ``sign(value - theta)`` for each theta."""
    values = np.asarray(values, dtype=float)
    labels = np.asarray(labels)
    pos = np.sort(values[labels > 0])
    neg = np.sort(values[labels < 0])
    thetas = np.asarray(thetas, dtype=float)
    # +1 is predicted iff value - theta >= -SIGN_TOL, matching sign()
    cut = thetas - SIGN_TOL
    missed_pos = np.searchsorted(pos, cut, side="left")
    wrong_neg = neg.size - np.searchsorted(neg, cut, side="left")
    return missed_pos + wrong_neg


def threshold_candidates(values: np.ndarray) -> np.ndarray:
    v = np.sort(np.asarray(values, dtype=float))
    if v.size:
        gaps = np.diff(v)
        breaks = np.flatnonzero(gaps > CLUSTER_TOL * np.maximum(1.0, np.abs(v[1:])))
        mids = (v[breaks] + v[breaks + 1]) / 2.0
    else:
        mids = np.empty(0)
    cands = np.concatenate([[-1.0], np.clip(mids, -1.0, 1.0), [1.0]])
    return np.unique(cands)


def select_threshold(values: Sequence[float], labels: Sequence[int]) -> float:
    """Threshold in [-1, 1] minimising the training error of ``sign(value - theta)``.

    The error is piecewise constant with breakpoints at the values, so the
    candidates -1, 1 and the midpoints between consecutive distinct values
    (clipped to [-1, 1]) reach the minimum. Ties go to the smallest theta.
    """
    values = np.asarray(values, dtype=float).reshape(-1)
    labels = np.asarray(labels).reshape(-1)
    if values.size < 1 or values.size != labels.size:
        raise ValueError("need matching, non-empty values and labels")
    cands = threshold_candidates(values)
    errs = threshold_errors(values, labels, cands)
    return float(cands[int(np.argmin(errs))])


# ------------------------------------------------------------------- learners


def fit_fourier(
    data: LabeledDataset,
    k: int,
    *,
    moments: FeatureMoments | None = None,
    moment_fraction: float | None = None,
    tune_threshold: bool = False,
) -> SignPredictor:
    """Low-degree algorithm under a product distribution.

    Moments are estimated from the data unless given. With
    ``moment_fraction`` a leading share of the rows is reserved for the
    moments and the rest estimates the coefficients. ``tune_threshold``
    replaces the default ``theta = 0`` with ``select_threshold`` on the
    training values.
    """
    if not 0 <= k <= data.d:
        raise ValueError(f"need 0 <= k <= d, got k={k}, d={data.d}")
    coef_data = data
    if moments is None:
        if moment_fraction is not None:
            moment_data, coef_data = split_for_moments(data, moment_fraction)
            moments = empirical_moments(moment_data)
        else:
            moments = empirical_moments(data)
    expansion = empirical_coefficients(coef_data, moments, k)
    theta = 0.0
    if tune_threshold:
        theta = select_threshold(eval_expansion(expansion, moments, data.features), data.labels)
    return SignPredictor("fourier", data.d, theta, expansion=expansion, moments=moments)


def _lstsq(A: np.ndarray, y: np.ndarray) -> np.ndarray:
    # SVD-based solver: minimum-norm solution whenever A is rank deficient
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    return coef


def fit_polynomial(data: LabeledDataset, k: int, max_monomials: int = MAX_MONOMIALS) -> MonomialPolynomial:
    """Least-squares polynomial of total degree <= k (minimum-norm on rank deficiency)."""
    m = monomial_count(data.d, k)
    if m > max_monomials:
        raise BasisTooLargeError(f"{m} monomials of degree <= {k} in {data.d} variables exceeds {max_monomials}")
    exps = monomial_exponents(data.d, k)
    X = data.features.astype(float)
    A = np.column_stack([_monomial_column(X, a) for a in exps])
    coef = _lstsq(A, data.labels.astype(float))
    return MonomialPolynomial(data.d, k, dict(zip(exps, coef)))


def fit_l2_polyreg(data: LabeledDataset, k: int, max_monomials: int = MAX_MONOMIALS) -> SignPredictor:
    poly = fit_polynomial(data, k, max_monomials)
    theta = select_threshold(poly(data.features), data.labels)
    return SignPredictor("monomial", data.d, theta, polynomial=poly)


def _design(basis: Sequence[Callable], X: np.ndarray) -> np.ndarray:
    cols = []
    for e in basis:
        col = np.broadcast_to(np.asarray(e(X), dtype=float), (X.shape[0],))
        cols.append(col)
    return np.column_stack(cols)


def fit_basis_coefficients(data: LabeledDataset, basis: Sequence[Callable], max_basis: int = MAX_BASIS) -> np.ndarray:
    if len(basis) > max_basis:
        raise BasisTooLargeError(f"{len(basis)} basis functions exceeds {max_basis}")
    if not basis:
        raise ValueError("empty basis")
    A = _design(basis, data.features.astype(float))
    return _lstsq(A, data.labels.astype(float))


def fit_generic_basis(
    data: LabeledDataset,
    basis: Sequence[Callable[[np.ndarray], np.ndarray]],
    names: Sequence[str] | None = None,
    max_basis: int = MAX_BASIS,
) -> SignPredictor:
    """Least squares over an arbitrary finite basis; predicts ``sign(h_hat)``."""
    coef = fit_basis_coefficients(data, basis, max_basis)
    return SignPredictor(
        "basis",
        data.d,
        0.0,
        basis_coefs=coef,
        basis=tuple(basis),
        basis_names=None if names is None else tuple(names),
    )


def bound_U(x: float) -> float:
    """``U(x) = x^3 + 1.5 x^2 + 1.25 x``, which turns a 2-norm estimation error
    into extra misclassification probability."""
    if x < 0:
        raise ValueError(f"U is defined for x >= 0, got {x}")
    return x**3 + 1.5 * x**2 + 1.25 * x


def predict(model: SignPredictor, x: np.ndarray):
    x = np.asarray(x)
    out = model.predict(x)
    return int(out[0]) if x.ndim == 1 else out


def misclassification(model: SignPredictor, data: LabeledDataset) -> float:
    return float(np.mean(model.predict(data.features) != data.labels))


def square_loss(values: np.ndarray, labels: np.ndarray) -> float:
    return float(np.mean((np.asarray(labels, dtype=float) - values) ** 2))
