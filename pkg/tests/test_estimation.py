import itertools
import math

import numpy as np
import pytest

from pacfourier.data import LabeledDataset, SyntheticSpec, generate
from pacfourier.errors import DegenerateFeatureError
from pacfourier.estimation import (
    ConcentrationBudget,
    coefficient_deviation_bound,
    coefficient_table,
    empirical_coefficients,
    empirical_moments,
    loo_projection_values,
    moment_sample_size,
    parity_sup_sq,
    projection_deviation_bound,
    projection_values,
    score1_bias_bound,
    score1_sample_size,
    split_for_moments,
)
from pacfourier.fourier import FeatureMoments, ProductDistribution, all_coefficients, cube_points, submasks
from pacfourier.oracle import exact_projection, problem_from_spec, projection_norm1


def _data(cols, labels):
    return LabeledDataset(np.array(cols).T, np.array(labels))


def test_empirical_moments_examples():
    data = _data([[1, -1, 1, -1], [1, 1, 1, -1]], [1, 1, 1, 1])
    m = empirical_moments(data)
    assert m.means[0] == 0 and m.stds[0] == 1
    assert m.means[1] == 0.5
    assert m.stds[1] == pytest.approx(math.sqrt(0.75)) and m.stds[1] == pytest.approx(0.8660, abs=1e-4)


def test_degenerate_feature_names_index():
    data = _data([[1, -1, 1, -1], [1, 1, 1, 1]], [1, -1, 1, 1])
    with pytest.raises(DegenerateFeatureError) as err:
        empirical_moments(data)
    assert err.value.index == 1
    assert "feature 1" in str(err.value)


def test_empirical_coefficients_dictator():
    data = generate(SyntheticSpec(d=3, n=400, seed=1, rule="dictator"))
    data = LabeledDataset(np.vstack([data.features, -data.features]), np.concatenate([data.labels, -data.labels]))
    e = empirical_coefficients(data, empirical_moments(data), 1)
    assert e.get(1) == pytest.approx(1.0, abs=1e-12)
    assert e.get(0) == pytest.approx(0.0, abs=1e-12)
    assert e.degree_cap == 1


def test_empirical_coefficients_parity_on_fixed_table():
    X = cube_points(2)
    data = LabeledDataset(X, X[:, 0] * X[:, 1])
    m = empirical_moments(data)
    assert np.all(m.means == 0) and np.all(m.stds == 1)
    e = empirical_coefficients(data, m, 2)
    # (1/4) sum (x0 x1)(x0 x1) = 1
    assert e.get(3) == 1.0
    assert e.get(0) == e.get(1) == e.get(2) == 0.0


def test_coefficients_vanish_for_independent_labels():
    rng = np.random.default_rng(2024)
    X = rng.choice([-1, 1], size=(10**4, 5))
    y = rng.choice([-1, 1], size=10**4)
    data = LabeledDataset(X, y)
    e = empirical_coefficients(data, empirical_moments(data), 2)
    assert max(abs(c) for c in e.terms.values()) <= 0.05


def test_loo_two_samples():
    for y1, y2 in itertools.product((-1, 1), repeat=2):
        data = _data([[1, -1]], [y1, y2])
        vals = loo_projection_values(data, empirical_moments(data), 0)
        assert vals[0] == pytest.approx(y2) and vals[1] == pytest.approx(y1)


def test_loo_constant_labels():
    data = generate(SyntheticSpec(d=4, n=37, seed=3))
    data = LabeledDataset(data.features, np.ones(37, dtype=int))
    vals = loo_projection_values(data, empirical_moments(data), 0)
    assert np.allclose(vals, 1.0, atol=1e-12)


def test_loo_equals_full_when_sample_is_average():
    # every sample contributes exactly the average, so removing it changes nothing
    data = _data([[1, -1, 1, -1]], [1, 1, 1, 1])
    m = empirical_moments(data)
    assert np.allclose(loo_projection_values(data, m, 0), projection_values(data, m, 0))


def test_loo_matches_explicit_refit():
    data = generate(SyntheticSpec(d=5, n=30, seed=8, rule="majority", subset=(0, 1, 2), noise=0.1, biases=(0.4, 0.6, 0.5, 0.7, 0.3)))
    m = empirical_moments(data)
    J = 0b01011
    vals = loo_projection_values(data, m, J)
    masks = submasks(J)
    for i in range(data.n):
        rest = data.subset(np.delete(np.arange(data.n), i))
        coefs = coefficient_table(rest, m, masks)
        z = m.standardize(data.features[i])
        refit = sum(c * np.prod([z[j] for j in range(5) if S >> j & 1]) for S, c in coefs.items())
        assert vals[i] == pytest.approx(refit, abs=1e-12)


def test_deviation_bound_examples():
    eps = coefficient_deviation_bound(10**4, 10, 2, 0.05, 1.0)
    assert eps == pytest.approx(math.sqrt(2 / 1e4 * math.log(200 / 0.05)), rel=1e-12)
    assert eps == pytest.approx(0.0407, abs=5e-5)
    assert coefficient_deviation_bound(2 * 10**4, 10, 2, 0.05) == pytest.approx(eps / math.sqrt(2), rel=1e-12)
    assert coefficient_deviation_bound(10**4, 10, 2, 0.999) < eps
    full = projection_deviation_bound(10**4, 10, 2, 0.05)
    assert full == pytest.approx(math.sqrt(2 * 100 / 1e4 * math.log(200 / 0.05)), rel=1e-12)
    with pytest.raises(ValueError):
        coefficient_deviation_bound(0, 10, 2, 0.05)
    with pytest.raises(ValueError):
        coefficient_deviation_bound(10, 10, 2, 1.0)


def test_moment_sample_size_examples():
    assert moment_sample_size(0.1, 0.05, 20) == math.ceil(200 * math.log(800)) == 1337
    for eps in (0.2, 0.1, 0.03):
        n1 = moment_sample_size(eps, 0.05, 20)
        n2 = moment_sample_size(eps / 2, 0.05, 20)
        assert 4 * n1 - 4 <= n2 <= 4 * n1
    # log term is 1, so the formula gives 2 / (1 - 1e-9)^2 = 2.000000004, whose ceiling is 3
    assert moment_sample_size(1 - 1e-9, 2 / math.e, 1) == 3
    assert ConcentrationBudget(0.1, 0.05, 20).n0 == 1337
    with pytest.raises(ValueError):
        moment_sample_size(1.0, 0.5, 3)


def test_parity_sup_sq_matches_brute_force():
    rng = np.random.default_rng(6)
    p = rng.uniform(0.1, 0.9, size=5)
    m = FeatureMoments.from_biases(p)
    Z = m.standardize(cube_points(5))
    for k in range(6):
        brute = max(
            np.max(np.prod(Z[:, list(S)], axis=1) ** 2) if S else 1.0
            for r in range(k + 1)
            for S in itertools.combinations(range(5), r)
        )
        assert parity_sup_sq(m, k) == pytest.approx(brute, rel=1e-12)
    assert parity_sup_sq(FeatureMoments.uniform(4), 3) == 1.0


def test_score1_concentration_helpers():
    assert score1_bias_bound(101, 2) == pytest.approx(2 / 10)
    n = score1_sample_size(0.1, 0.05, 10, 2)
    assert n == math.ceil(32 * 16 / 0.01 * math.log(45 / 0.1)) + 1


def test_moment_split():
    data = generate(SyntheticSpec(d=3, n=100, seed=0))
    a, b = split_for_moments(data, 0.25)
    assert (a.n, b.n) == (25, 75)


def test_unbiased_at_known_moments():
    spec = SyntheticSpec(d=3, n=200, rule="majority", subset=(0, 1, 2), biases=(0.3, 0.6, 0.8))
    dist = ProductDistribution(spec.biases)
    problem = problem_from_spec(spec)
    exact = problem.coefficients
    moments = dist.moments()
    reps = np.array(
        [
            [c for _, c in sorted(coefficient_table(generate(spec.replace(seed=s)), moments, range(8)).items())]
            for s in range(200)
        ]
    )
    mean = reps.mean(axis=0)
    sd = reps.std(axis=0, ddof=1)
    assert np.all(np.abs(mean - exact) <= 4 * sd / math.sqrt(200) + 1e-12)


def test_loo_consistency_with_exact_norm():
    spec = SyntheticSpec(d=3, n=10**4, rule="majority", subset=(0, 1, 2))
    problem = problem_from_spec(spec)
    J = 0b011
    target = projection_norm1(problem, J)
    assert target == pytest.approx(0.5)
    # The per-seed miss rate is about 2.5% (measured over 1000 seeds). 50 seeds would be too
    # coarse to check a 5% rate, so 200 seeds are used instead.
    reps = 200
    hits = 0
    for s in range(reps):
        data = generate(spec.replace(seed=s))
        est = np.mean(np.abs(loo_projection_values(data, empirical_moments(data), J)))
        hits += abs(est - target) <= 0.03
    assert hits >= 0.95 * reps


def test_deviation_bound_coverage():
    n, d, k, delta = 2000, 3, 3, 0.1
    eps = coefficient_deviation_bound(n, d, k, delta, 1.0)
    spec = SyntheticSpec(d=d, n=n, rule="majority", subset=(0, 1, 2))
    exact = all_coefficients(ProductDistribution.uniform(3), problem_from_spec(spec).label_mean)
    moments = FeatureMoments.uniform(3)
    fails = 0
    for s in range(200):
        coefs = coefficient_table(generate(spec.replace(seed=s)), moments, range(8))
        fails += max(abs(coefs[S] - exact[S]) for S in range(8)) > eps
    assert fails / 200 <= delta


def test_exact_projection_used_by_consistency_check_is_maj3():
    problem = problem_from_spec(SyntheticSpec(d=3, n=1, rule="majority", subset=(0, 1, 2)))
    p = exact_projection(problem, 0b011)
    assert p.get(1) == pytest.approx(0.5) and p.get(2) == pytest.approx(0.5) and p.get(3) == pytest.approx(0.0)
