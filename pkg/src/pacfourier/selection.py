"""Feature-subset scoring and search, with the embedded predictor ``sign[f_hat^J]``."""

from __future__ import annotations

import csv
import itertools
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .data import LabeledDataset
from .errors import BudgetExceededError
from .estimation import coefficient_table, empirical_moments, loo_projection_values, projection_values
from .fourier import (
    FeatureMoments,
    FeatureSubset,
    FourierExpansion,
    enumerate_subsets,
    subset_from_indices,
    subset_indices,
    submasks,
)
from .learners import SignPredictor

MAX_EXHAUSTIVE = 10**6
METHODS = ("score1", "score2")
SEARCHES = ("exhaustive", "greedy")


def score1(
    data: LabeledDataset,
    moments: FeatureMoments,
    J: FeatureSubset,
    coefficients: dict | None = None,
    naive: bool = False,
) -> float:
    """Estimate of ``||f^J||_1``: mean absolute leave-one-out projection value.

    ``naive=True`` uses the plug-in mean ``|f_hat^J(x_i)|`` instead.
    """
    if naive:
        vals = projection_values(data, moments, J, coefficients)
    else:
        vals = loo_projection_values(data, moments, J, coefficients)
    return float(np.mean(np.abs(vals)))


def score2(
    data: LabeledDataset,
    moments: FeatureMoments,
    J: FeatureSubset,
    coefficients: dict | None = None,
) -> float:
    """Estimate of ``||f^J||_2^2``: sum of squared empirical coefficients inside ``J``."""
    masks = submasks(J)
    if coefficients is None or any(S not in coefficients for S in masks):
        coefficients = {**(coefficients or {}), **coefficient_table(data, moments, masks)}
    return float(sum(coefficients[S] ** 2 for S in masks))


@dataclass(frozen=True)
class SelectionReport:
    method: str
    search: str
    k: int
    chosen: FeatureSubset
    score: float
    predictor: SignPredictor
    all_scores: dict[FeatureSubset, float] | None = None

    @property
    def chosen_indices(self) -> tuple[int, ...]:
        return subset_indices(self.chosen)

    def to_dict(self, include_scores: bool = True) -> dict:
        out = {
            "method": self.method,
            "search": self.search,
            "k": self.k,
            "chosen": list(self.chosen_indices),
            "score": self.score,
            "predictor": self.predictor.to_dict(),
        }
        if include_scores and self.all_scores is not None:
            out["all_scores"] = [
                {"subset": list(subset_indices(S)), "score": v} for S, v in sorted(self.all_scores.items())
            ]
        return out

    def write_scores_csv(self, path) -> None:
        if self.all_scores is None:
            raise ValueError("report carries no score table")
        with Path(path).open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["subset", "score"])
            for S, v in sorted(self.all_scores.items()):
                w.writerow([" ".join(map(str, subset_indices(S))), repr(v)])


def _scorer(method: str, data: LabeledDataset, moments: FeatureMoments, coefs: dict, naive: bool):
    if method == "score1":
        return lambda J: score1(data, moments, J, coefs, naive=naive)
    if method == "score2":
        return lambda J: score2(data, moments, J, coefs)
    raise ValueError(f"unknown method {method!r}; pick one of {METHODS}")


def _argmax(scores: dict[FeatureSubset, float]) -> FeatureSubset:
    # smallest mask wins ties
    best = max(scores.values())
    return min(S for S, v in scores.items() if v == best)


def projection_predictor(
    data: LabeledDataset, moments: FeatureMoments, J: FeatureSubset, coefs: dict | None = None
) -> SignPredictor:
    """``sign[f_hat^J]`` with the empirical coefficients of every subset of ``J``."""
    masks = submasks(J)
    if coefs is None or any(S not in coefs for S in masks):
        coefs = coefficient_table(data, moments, masks)
    expansion = FourierExpansion(data.d, {S: coefs[S] for S in masks})
    return SignPredictor("fourier", data.d, 0.0, expansion=expansion, moments=moments)


def select(
    data: LabeledDataset,
    k: int,
    method: str = "score1",
    search: str = "exhaustive",
    *,
    moments: FeatureMoments | None = None,
    naive: bool = False,
    keep_scores: bool = True,
    max_subsets: int = MAX_EXHAUSTIVE,
) -> SelectionReport:
    """Choose ``k`` features by maximising the score, then build ``sign[f_hat^J]``.

    Exhaustive search scores every ``k``-subset; greedy grows the subset one
    feature at a time, ``k`` rounds.
    """
    if method not in METHODS:
        raise ValueError(f"unknown method {method!r}; pick one of {METHODS}")
    if search not in SEARCHES:
        raise ValueError(f"unknown search {search!r}; pick one of {SEARCHES}")
    if not 0 <= k <= data.d:
        raise ValueError(f"need 0 <= k <= d, got k={k}, d={data.d}")
    if search == "exhaustive" and math.comb(data.d, k) > max_subsets:
        raise BudgetExceededError(
            f"exhaustive search over C({data.d},{k}) = {math.comb(data.d, k)} subsets exceeds {max_subsets}"
        )
    if moments is None:
        moments = empirical_moments(data)
    # every subset of a k-subset has size <= k, so one coefficient table serves all scores
    coefs = coefficient_table(data, moments, enumerate_subsets(data.d, k))
    score = _scorer(method, data, moments, coefs, naive)

    scores: dict[FeatureSubset, float] = {}
    if search == "exhaustive":
        for combo in itertools.combinations(range(data.d), k):
            J = subset_from_indices(combo)
            scores[J] = score(J)
        chosen = _argmax(scores)
    else:
        chosen = 0
        scores[0] = score(0)
        for _ in range(k):
            round_scores = {}
            for j in range(data.d):
                if not chosen >> j & 1:
                    round_scores[chosen | 1 << j] = score(chosen | 1 << j)
            scores.update(round_scores)
            chosen = _argmax(round_scores)

    return SelectionReport(
        method=method,
        search=search,
        k=k,
        chosen=chosen,
        score=scores[chosen],
        predictor=projection_predictor(data, moments, chosen, coefs),
        all_scores=scores if keep_scores else None,
    )
