import csv
import itertools
import json

import numpy as np
import pytest

from pacfourier.data import LabeledDataset, SyntheticSpec, generate
from pacfourier.errors import BudgetExceededError
from pacfourier.estimation import coefficient_table, empirical_coefficients, empirical_moments
from pacfourier.fourier import FeatureMoments, cube_points, norm2_sq, project, subset_from_indices
from pacfourier.learners import misclassification
from pacfourier.oracle import exact_error_value, exact_popt, problem_from_spec, projection_norm1, projection_norm2_sq
from pacfourier.selection import score1, score2, select


def test_score1_constant_labels():
    data = generate(SyntheticSpec(d=3, n=50, seed=0))
    data = LabeledDataset(data.features, np.ones(50, dtype=int))
    assert score1(data, empirical_moments(data), 0) == pytest.approx(1.0, abs=1e-12)


def test_score1_independent_labels_near_zero():
    rng = np.random.default_rng(1)
    data = LabeledDataset(rng.choice([-1, 1], size=(10**4, 4)), rng.choice([-1, 1], size=10**4))
    m = empirical_moments(data)
    assert score1(data, m, 0) <= 0.05
    assert score1(data, m, 0b0011) <= 0.05


def test_score1_maj3_full_subset():
    data = generate(SyntheticSpec(d=3, n=10**5, seed=2, rule="majority", subset=(0, 1, 2)))
    assert score1(data, empirical_moments(data), 0b111) == pytest.approx(1.0, abs=0.02)


def test_score1_naive_flag_differs_from_loo():
    data = generate(SyntheticSpec(d=4, n=40, seed=3, noise=0.3))
    m = empirical_moments(data)
    # with few samples the plug-in value is biased upward relative to leave-one-out
    assert score1(data, m, 0b1111, naive=True) > score1(data, m, 0b1111)


def test_score2_examples():
    X = cube_points(3)
    data = LabeledDataset(X, X[:, 0])
    m = empirical_moments(data)
    assert score2(data, m, 0b001) == pytest.approx(1.0, abs=1e-12)
    noisy = generate(SyntheticSpec(d=3, n=101, seed=4, noise=0.3))
    assert score2(noisy, empirical_moments(noisy), 0) == pytest.approx(noisy.labels.mean() ** 2, abs=1e-15)


def test_score2_monotone_exactly():
    data = generate(SyntheticSpec(d=5, n=300, seed=5, noise=0.2, rule="majority", subset=(1, 2, 3)))
    m = empirical_moments(data)
    for J in range(32):
        for j in range(5):
            assert score2(data, m, J) <= score2(data, m, J | 1 << j) + 1e-15


def test_score1_monotone_within_sampling_noise():
    data = generate(SyntheticSpec(d=5, n=10**5, seed=6, noise=0.1, rule="majority", subset=(0, 1, 2)))
    m = empirical_moments(data)
    coefs = coefficient_table(data, m, range(32))
    s = {J: score1(data, m, J, coefs) for J in range(32)}
    worst = max(s[J] - s[J | 1 << j] for J in range(32) for j in range(5))
    assert worst <= 0.015


def test_score2_is_parseval_of_projected_estimate():
    data = generate(SyntheticSpec(d=5, n=500, seed=7, noise=0.1, rule="parity", subset=(0, 3)))
    m = empirical_moments(data)
    full = empirical_coefficients(data, m, 5)
    for J in range(32):
        assert score2(data, m, J) == pytest.approx(norm2_sq(project(full, J)), abs=1e-12)


def test_select_two_junta_exhaustive():
    spec = SyntheticSpec(d=8, n=10**4, seed=8, rule="parity", subset=(0, 1))
    report = select(generate(spec), 2, method="score2")
    assert report.chosen == 0b11 and report.chosen_indices == (0, 1)
    problem = problem_from_spec(spec)
    # oracle: {0,1} is the only 2-subset carrying any projection mass
    exact = {subset_from_indices(c): projection_norm1(problem, subset_from_indices(c)) for c in itertools.combinations(range(8), 2)}
    assert [J for J, v in exact.items() if v > 1e-12] == [0b11]
    assert exact_error_value(problem, report.predictor) <= 0.01
    test = generate(spec.replace(seed=9))
    assert misclassification(report.predictor, test) <= 0.01


@pytest.mark.parametrize("method", ["score1", "score2"])
def test_select_full_set_when_k_equals_d(method):
    data = generate(SyntheticSpec(d=5, n=400, seed=10, noise=0.2))
    for search in ("exhaustive", "greedy"):
        assert select(data, 5, method=method, search=search).chosen == 0b11111


def test_greedy_can_miss_a_parity():
    spec = SyntheticSpec(d=8, n=10**4, seed=11, rule="parity", subset=(0, 1))
    problem = problem_from_spec(spec)
    assert all(projection_norm2_sq(problem, 1 << j) == pytest.approx(0.0, abs=1e-15) for j in range(8))
    data = generate(spec)
    greedy = select(data, 2, method="score2", search="greedy")
    first_round = [greedy.all_scores[1 << j] for j in range(8)]
    # singletons are indistinguishable: every round-one score is at the a_empty^2 noise level
    assert max(first_round) - min(first_round) <= 1e-3
    assert select(data, 2, method="score2").chosen == 0b11


def test_exact_scores_attain_popt():
    rng = np.random.default_rng(12)
    for trial in range(10):
        d, k = 6, int(rng.integers(1, 4))
        spec = SyntheticSpec(
            d=d, n=1, rule="junta_table", subset=(1, 3, 4), table=tuple(rng.choice([-1, 1], size=8)),
            biases=tuple(rng.uniform(0.2, 0.8, size=d)), noise=float(rng.choice([0.0, 0.1])),
        )
        problem = problem_from_spec(spec)
        best = max(projection_norm1(problem, subset_from_indices(c)) for c in itertools.combinations(range(d), k))
        assert 0.5 - 0.5 * best == pytest.approx(exact_popt(problem, k).popt, abs=1e-12)


def test_alg2_norm2_bound_smoke():
    # a small version of the acceptance sweep: score2 selection stays within 2 Popt (1 - Popt) + 0.03
    eta = 0.1
    hits = 0
    for seed in range(5):
        spec = SyntheticSpec(d=8, n=5 * 10**4, seed=seed, rule="majority", subset=(2, 5, 6), noise=eta)
        problem = problem_from_spec(spec)
        popt = exact_popt(problem, 3).popt
        assert popt == pytest.approx(eta, abs=1e-12)
        report = select(generate(spec), 3, method="score2")
        hits += exact_error_value(problem, report.predictor) <= 2 * popt * (1 - popt) + 0.03
    assert hits == 5


def test_budget_exceeded():
    data = generate(SyntheticSpec(d=30, n=20, seed=0))
    with pytest.raises(BudgetExceededError):
        select(data, 10)
    with pytest.raises(ValueError):
        select(data, 2, method="score3")


def test_report_serialization(tmp_path):
    data = generate(SyntheticSpec(d=4, n=200, seed=13, noise=0.1))
    report = select(data, 2)
    obj = json.loads(json.dumps(report.to_dict()))
    assert obj["chosen"] == list(report.chosen_indices)
    assert obj["predictor"]["kind"] == "fourier"
    assert len(obj["all_scores"]) == 6
    report.write_scores_csv(tmp_path / "s.csv")
    rows = list(csv.reader((tmp_path / "s.csv").open()))
    assert rows[0] == ["subset", "score"] and len(rows) == 7
    # the embedded predictor uses the given moments and theta 0
    assert report.predictor.theta == 0.0
    fixed = select(data, 2, moments=FeatureMoments.uniform(4))
    assert np.array_equal(fixed.predictor.moments.means, np.zeros(4))
