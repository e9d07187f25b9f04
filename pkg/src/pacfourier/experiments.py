"""Seeded sweeps that measure learners against the exact oracle.

Every error reported here is the exact misclassification probability of the
fitted predictor under the generating distribution (enumeration over the
cube), so the only randomness is in the training sample.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np

from .data import LabeledDataset, SyntheticSpec, generate
from .estimation import coefficient_deviation_bound, parity_sup_sq, projection_deviation_bound
from .fourier import subset_from_indices
from .learners import SignPredictor, bound_U, fit_fourier, fit_l2_polyreg
from .oracle import exact_error_value, exact_popt, problem_from_spec
from .selection import select

LEARNERS = ("fourier", "l2reg", "select-score1", "select-score2")


def cell_seed(seed: int, *keys: int) -> int:
    """Independent 63-bit seed for one sweep cell, derived from the master seed."""
    state = np.random.SeedSequence([int(seed), *(int(k) for k in keys)]).generate_state(2, dtype=np.uint32)
    return int(state[0]) << 31 | int(state[1]) >> 1


def fit_learner(data: LabeledDataset, learner: str, k: int) -> SignPredictor:
    if learner == "fourier":
        return fit_fourier(data, k)
    if learner == "l2reg":
        return fit_l2_polyreg(data, k)
    if learner in ("select-score1", "select-score2"):
        return select(data, k, method=learner.split("-")[1], keep_scores=False).predictor
    raise ValueError(f"unknown learner {learner!r}; pick one of {LEARNERS}")


def loglog_fit(ns: Sequence[float], values: Sequence[float]) -> tuple[float, float, float]:
    """Least-squares line through ``(log n, log value)``: slope, intercept, R^2."""
    x = np.log(np.asarray(ns, dtype=float))
    v = np.asarray(values, dtype=float)
    if x.size < 2:
        raise ValueError("need at least two points for a log-log fit")
    if np.any(v <= 0):
        raise ValueError("log-log fit needs strictly positive values")
    y = np.log(v)
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    total = np.sum((y - y.mean()) ** 2)
    r2 = 1.0 - float(np.sum(resid**2) / total) if total > 0 else 1.0
    return float(slope), float(intercept), r2


@dataclass
class SweepPoint:
    n: int
    errors: list[float]
    mean_error: float
    std_error: float
    regret: float
    epsilon: float
    bound: float
    u_bound: float


@dataclass
class Sweep:
    spec: dict
    learner: str
    k: int
    delta: float
    popt: float
    points: list[SweepPoint]
    slope: float | None = None
    intercept: float | None = None
    r2: float | None = None
    notes: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return asdict(self)


def error_sweep(
    spec: SyntheticSpec,
    k: int,
    ns: Sequence[int],
    reps: int,
    seed: int,
    learner: str = "fourier",
    delta: float = 0.05,
    popt_k: int | None = None,
) -> Sweep:
    """Mean exact test error over ``reps`` seeded training sets per sample size.

    ``popt`` is the optimum over ``popt_k``-juntas (default ``k``, capped at
    ``d``). The bound column is ``2 Popt + 2 eps(n)`` with ``eps`` from the
    coefficient deviation bound at the true moments; ``u_bound`` is
    ``Popt + U(eps2(n))`` with the 2-norm deviation bound.
    """
    ns = [int(n) for n in ns]
    if not ns:
        raise ValueError("empty sample-size grid")
    if reps < 1:
        raise ValueError("need at least one replication per sample size")
    problem = problem_from_spec(spec)
    popt = exact_popt(problem, min(popt_k if popt_k is not None else k, spec.d)).popt
    ck = parity_sup_sq(problem.dist.moments(), k)
    points = []
    for i, n in enumerate(ns):
        errs = []
        for r in range(reps):
            data = generate(spec.replace(n=n, seed=cell_seed(seed, i, r)))
            errs.append(exact_error_value(problem, fit_learner(data, learner, k)))
        mean = float(np.mean(errs))
        if k >= 1:
            eps = coefficient_deviation_bound(n, spec.d, k, delta, ck)
            eps2 = projection_deviation_bound(n, spec.d, k, delta, ck)
        else:
            eps = eps2 = math.nan
        points.append(
            SweepPoint(
                n=n,
                errors=errs,
                mean_error=mean,
                std_error=float(np.std(errs, ddof=1)) if reps > 1 else 0.0,
                regret=mean - popt,
                epsilon=eps,
                bound=2 * popt + 2 * eps,
                u_bound=popt + bound_U(eps2) if not math.isnan(eps2) else math.nan,
            )
        )
    sweep = Sweep(spec.to_dict(), learner, k, delta, popt, points)
    regrets = [p.regret for p in points]
    if len(ns) >= 2 and all(r > 0 for r in regrets):
        sweep.slope, sweep.intercept, sweep.r2 = loglog_fit(ns, regrets)
    elif len(ns) >= 2:
        sweep.notes.append("regret is not strictly positive at every n; no log-log fit")
    return sweep


def planted_junta_spec(rng: np.random.Generator, d: int, n: int, size: int, noise: float, seed: int) -> SyntheticSpec:
    """Random junta on ``size`` random coordinates whose table depends on every one of them."""
    subset = tuple(sorted(int(j) for j in rng.choice(d, size=size, replace=False)))
    while True:
        table = rng.choice([-1, 1], size=1 << size)
        # relevant iff flipping bit i changes some entry
        idx = np.arange(1 << size)
        if all(np.any(table != table[idx ^ (1 << i)]) for i in range(size)):
            break
    return SyntheticSpec(d=d, n=n, seed=seed, rule="junta_table", subset=subset, table=tuple(int(v) for v in table), noise=noise)


def planted_mask(spec: SyntheticSpec) -> int:
    return subset_from_indices(spec.subset)
