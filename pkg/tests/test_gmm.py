"""GMM backend tests: closed-form single-component checks, a naive-summation
likelihood oracle, EM monotonicity, MAP limit behavior, and LLR identities.
"""

import numpy as np
import pytest

from tclsv.errors import (
    DataError,
    DimensionMismatch,
    EmptyEnrollment,
    EmptyUtterance,
    TooFewFrames,
)
from tclsv.gmm import (
    VARIANCE_FLOOR_FRACTION,
    GmmModel,
    MapConfig,
    em_step,
    init_gmm,
    log_likelihood,
    log_likelihoods,
    map_adapt,
    responsibilities,
    score_llr,
    train_ubm,
)


def two_cluster_data(n_per=400, seed=0, separation=8.0):
    rng = np.random.default_rng(seed)
    a = rng.normal(0.0, 1.0, (n_per, 2))
    b = rng.normal(separation, 1.0, (n_per, 2))
    return np.vstack([a, b])


def naive_log_likelihood(model: GmmModel, frame: np.ndarray) -> float:
    """Direct summation without log-sum-exp, with explicit per-component loops."""
    total = 0.0
    for k in range(model.num_components):
        dens = 1.0
        for d in range(model.dim):
            var = model.variances[k, d]
            diff = frame[d] - model.means[k, d]
            dens *= np.exp(-0.5 * diff * diff / var) / np.sqrt(2.0 * np.pi * var)
        total += model.weights[k] * dens
    return float(np.log(total))


# --- initialization ---


def test_init_single_component_closed_form():
    rng = np.random.default_rng(1)
    x = rng.standard_normal((200, 3)) * 2.0 + 5.0
    model = init_gmm(x, 1, seed=0)
    np.testing.assert_allclose(model.means[0], x.mean(axis=0), atol=1e-12)
    np.testing.assert_allclose(model.variances[0], x.var(axis=0), atol=1e-12)
    assert model.weights[0] == 1.0


def test_init_deterministic():
    x = two_cluster_data(seed=2)
    a = init_gmm(x, 4, seed=9)
    b = init_gmm(x, 4, seed=9)
    assert np.array_equal(a.means, b.means)
    assert np.array_equal(a.variances, b.variances)


def test_init_recovers_distinct_points():
    points = np.array([[0.0, 0.0], [10.0, 0.0], [0.0, 10.0], [10.0, 10.0]])
    x = np.repeat(points, 25, axis=0) + 0.01 * np.random.default_rng(3).standard_normal((100, 2))
    model = init_gmm(x, 4, seed=1)
    # each center lands on a distinct point after Lloyd convergence
    matched = set()
    for center in model.means:
        k = int(np.argmin(np.sum((points - center) ** 2, axis=1)))
        assert np.linalg.norm(center - points[k]) < 0.1
        matched.add(k)
    assert matched == {0, 1, 2, 3}


def test_init_too_few_frames():
    with pytest.raises(TooFewFrames):
        init_gmm(np.zeros((3, 2)), 4)


# --- likelihoods ---


def test_log_likelihood_standard_normal_at_origin():
    model = GmmModel(weights=np.array([1.0]), means=np.zeros((1, 1)), variances=np.ones((1, 1)))
    assert log_likelihood(model, np.array([0.0])) == pytest.approx(-0.5 * np.log(2 * np.pi), abs=1e-12)


def test_log_likelihood_duplicate_components_collapse():
    mu = np.array([[1.0, -2.0]])
    var = np.array([[0.5, 2.0]])
    single = GmmModel(weights=np.array([1.0]), means=mu, variances=var)
    double = GmmModel(
        weights=np.array([0.5, 0.5]),
        means=np.vstack([mu, mu]),
        variances=np.vstack([var, var]),
    )
    frame = np.array([0.3, 0.4])
    assert log_likelihood(double, frame) == pytest.approx(log_likelihood(single, frame), abs=1e-12)


def test_log_likelihoods_match_naive_sum_oracle():
    rng = np.random.default_rng(4)
    model = GmmModel(
        weights=rng.dirichlet(np.ones(5)),
        means=rng.standard_normal((5, 3)),
        variances=rng.uniform(0.2, 2.0, (5, 3)),
    )
    frames = rng.standard_normal((20, 3))
    got = log_likelihoods(model, frames)
    for t in range(20):
        assert got[t] == pytest.approx(naive_log_likelihood(model, frames[t]), abs=1e-10)


def test_log_likelihood_dimension_mismatch():
    model = GmmModel(weights=np.array([1.0]), means=np.zeros((1, 2)), variances=np.ones((1, 2)))
    with pytest.raises(DimensionMismatch):
        log_likelihoods(model, np.zeros((3, 4)))


def test_responsibilities_rows_sum_to_one():
    rng = np.random.default_rng(5)
    model = GmmModel(
        weights=rng.dirichlet(np.ones(4)),
        means=rng.standard_normal((4, 2)) * 3,
        variances=rng.uniform(0.5, 1.5, (4, 2)),
    )
    resp = responsibilities(model, rng.standard_normal((50, 2)))
    np.testing.assert_allclose(resp.sum(axis=1), 1.0, atol=1e-9)
    assert np.all(resp >= 0)


# --- EM ---


def test_em_step_single_component_closed_form():
    rng = np.random.default_rng(6)
    x = rng.standard_normal((300, 2)) * 1.5 + 2.0
    start = GmmModel(
        weights=np.array([1.0]), means=np.zeros((1, 2)), variances=np.ones((1, 2))
    )
    updated, _ = em_step(start, x)
    np.testing.assert_allclose(updated.means[0], x.mean(axis=0), atol=1e-10)
    np.testing.assert_allclose(updated.variances[0], x.var(axis=0), atol=1e-10)
    assert updated.weights[0] == pytest.approx(1.0, abs=1e-12)


def test_em_trace_non_decreasing():
    x = two_cluster_data(seed=7)
    _, trace = train_ubm(x, 2, em_iterations=12, seed=0)
    assert len(trace) == 13
    trace = np.asarray(trace)
    slack = 1e-6 * np.abs(trace[:-1])
    assert np.all(np.diff(trace) >= -slack)


def test_em_moves_parameters_toward_cluster_statistics():
    x = two_cluster_data(n_per=500, seed=8)
    model, _ = train_ubm(x, 2, em_iterations=15, seed=1)
    order = np.argsort(model.means[:, 0])
    lo, hi = model.means[order[0]], model.means[order[1]]
    # cluster sigma is 1.0: means land within 0.1 sigma of the cluster means
    assert np.linalg.norm(lo - x[:500].mean(axis=0)) < 0.1
    assert np.linalg.norm(hi - x[500:].mean(axis=0)) < 0.1
    np.testing.assert_allclose(model.weights, [0.5, 0.5], atol=0.02)


def test_train_ubm_zero_iterations_returns_init():
    x = two_cluster_data(seed=9)
    init = init_gmm(x, 3, seed=4)
    model, trace = train_ubm(x, 3, em_iterations=0, seed=4)
    assert np.array_equal(model.means, init.means)
    assert np.array_equal(model.variances, init.variances)
    assert len(trace) == 1


def test_em_applies_variance_floor():
    rng = np.random.default_rng(10)
    x = rng.standard_normal((200, 2))
    x[:, 1] *= 40.0  # large global variance in dim 1 makes the floor visible
    x[:100, 1] = 0.0  # half the data collapses in dim 1
    model = init_gmm(x, 2, seed=0)
    updated, _ = em_step(model, x)
    floor = VARIANCE_FLOOR_FRACTION * x.var(axis=0)
    assert np.all(updated.variances >= floor - 1e-12)


def test_em_step_rejects_empty_data():
    model = GmmModel(weights=np.array([1.0]), means=np.zeros((1, 2)), variances=np.ones((1, 2)))
    with pytest.raises(DataError):
        em_step(model, np.zeros((0, 2)))


# --- MAP adaptation ---


def test_map_infinite_relevance_keeps_means():
    x = two_cluster_data(seed=11)
    ubm, _ = train_ubm(x, 2, em_iterations=5, seed=0)
    adapted = map_adapt(ubm, x[:100] + 3.0, MapConfig(relevance_factor=1e12, iterations=3))
    assert np.max(np.abs(adapted.means - ubm.means)) <= 1e-9


def test_map_single_component_equal_occupancy_is_midpoint():
    rng = np.random.default_rng(12)
    x = rng.standard_normal((64, 3)) + 4.0
    ubm = GmmModel(
        weights=np.array([1.0]), means=np.zeros((1, 3)), variances=np.ones((1, 3))
    )
    # single component: n = 64 frames; r = n gives alpha exactly 1/2
    adapted = map_adapt(ubm, x, MapConfig(relevance_factor=64.0, iterations=1))
    expected = 0.5 * x.mean(axis=0) + 0.5 * ubm.means[0]
    np.testing.assert_allclose(adapted.means[0], expected, atol=1e-12)


def test_map_abundant_data_approaches_enrollment_mean():
    rng = np.random.default_rng(13)
    x = rng.normal(5.0, 1.0, (5000, 1))
    ubm = GmmModel(
        weights=np.array([1.0]), means=np.zeros((1, 1)), variances=np.ones((1, 1))
    )
    adapted = map_adapt(ubm, x, MapConfig(relevance_factor=10.0, iterations=3))
    assert abs(adapted.means[0, 0] - x.mean()) / abs(x.mean()) < 0.01


def test_map_preserves_weights_and_variances_exactly():
    x = two_cluster_data(seed=14)
    ubm, _ = train_ubm(x, 4, em_iterations=5, seed=2)
    adapted = map_adapt(ubm, x[:50], MapConfig())
    assert np.array_equal(adapted.weights, ubm.weights)
    assert np.array_equal(adapted.variances, ubm.variances)
    assert not np.array_equal(adapted.means, ubm.means)


def test_map_empty_enrollment():
    ubm = GmmModel(weights=np.array([1.0]), means=np.zeros((1, 2)), variances=np.ones((1, 2)))
    with pytest.raises(EmptyEnrollment):
        map_adapt(ubm, np.zeros((0, 2)), MapConfig())


def test_map_config_validation():
    with pytest.raises(DataError):
        MapConfig(relevance_factor=0.0)
    with pytest.raises(DataError):
        MapConfig(iterations=0)


# --- LLR scoring ---


def test_llr_identical_models_is_exactly_zero():
    x = two_cluster_data(seed=15)
    ubm, _ = train_ubm(x, 2, em_iterations=3, seed=0)
    assert score_llr(ubm, ubm, x[:37]) == 0.0


def test_llr_single_frame_is_plain_difference():
    x = two_cluster_data(seed=16)
    ubm, _ = train_ubm(x, 2, em_iterations=3, seed=0)
    target = map_adapt(ubm, x[:200], MapConfig())
    frame = x[7:8]
    expected = log_likelihood(target, frame[0]) - log_likelihood(ubm, frame[0])
    assert score_llr(target, ubm, frame) == pytest.approx(expected, abs=1e-12)


def test_llr_invariant_under_duplication_and_permutation():
    rng = np.random.default_rng(17)
    x = two_cluster_data(seed=18)
    ubm, _ = train_ubm(x, 2, em_iterations=3, seed=0)
    target = map_adapt(ubm, x[:200], MapConfig())
    utt = x[300:340]
    base = score_llr(target, ubm, utt)
    assert score_llr(target, ubm, np.vstack([utt, utt])) == pytest.approx(base, abs=1e-12)
    perm = rng.permutation(len(utt))
    assert score_llr(target, ubm, utt[perm]) == pytest.approx(base, abs=1e-12)


def test_llr_empty_utterance():
    ubm = GmmModel(weights=np.array([1.0]), means=np.zeros((1, 2)), variances=np.ones((1, 2)))
    with pytest.raises(EmptyUtterance):
        score_llr(ubm, ubm, np.zeros((0, 2)))


def test_all_likelihoods_finite_with_floored_variances():
    rng = np.random.default_rng(19)
    model = GmmModel(
        weights=rng.dirichlet(np.ones(3)),
        means=rng.standard_normal((3, 4)) * 100.0,
        variances=np.full((3, 4), 1e-12),
    )
    values = log_likelihoods(model, rng.standard_normal((10, 4)) * 100.0)
    assert np.all(np.isfinite(values))
