import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from coarse2fine.errors import EmptyStream
from coarse2fine.estimation import (
    Estimate,
    EstimatorKind,
    Method,
    Uncertainty,
    all_kinds,
    fused_variance,
    run_estimator,
    score_sigma,
    update,
)
from coarse2fine.geometry import PlanarPose, wrap_angle
from coarse2fine.sensor import Observation
from oracles import inverse_variance_mean

BATCH = EstimatorKind(Method.BATCH, Uncertainty.PRIOR)
FILTER = EstimatorKind(Method.FILTERING, Uncertainty.PRIOR)
FIRST = EstimatorKind(Method.FIRST_IMAGE)
SERVO = EstimatorKind(Method.VISUAL_SERVOING)
BEST = EstimatorKind(Method.BEST_IMAGE, Uncertainty.PREDICTED)


def obs(x, s, t=0, y=None, yaw=None):
    y = x if y is None else y
    yaw = 0.01 * x if yaw is None else yaw
    return Observation(PlanarPose(x, y, yaw), [s, s, s], 0.3, t)


def stream(values, sigmas):
    return [Observation(PlanarPose(*v), s, 0.3, i) for i, (v, s) in enumerate(zip(values, sigmas))]


def random_stream(rng, n):
    values = np.column_stack([rng.normal(0, 0.01, n), rng.normal(0, 0.01, n), rng.normal(0.3, 0.05, n)])
    sigmas = rng.uniform(0.001, 0.02, (n, 3))
    return values, sigmas


class TestKinds:
    def test_ten_combinations(self):
        kinds = all_kinds()
        assert len(kinds) == 10
        assert len({k.label for k in kinds}) == 10

    def test_labels_round_trip(self):
        for k in all_kinds():
            assert EstimatorKind.parse(k.label) == k

    @pytest.mark.parametrize("method,unc", [
        (Method.FIRST_IMAGE, Uncertainty.PRIOR),
        (Method.VISUAL_SERVOING, Uncertainty.DROPOUT),
        (Method.BEST_IMAGE, Uncertainty.PRIOR),
        (Method.BATCH, None),
        (Method.FILTERING, None),
    ])
    def test_invalid_combinations(self, method, unc):
        with pytest.raises(ValueError):
            EstimatorKind(method, unc)

    def test_unknown_label(self):
        with pytest.raises(ValueError):
            EstimatorKind.parse("Kalman(Prior)")

    def test_unknown_score(self):
        with pytest.raises(ValueError):
            EstimatorKind(Method.BEST_IMAGE, Uncertainty.DROPOUT, "median")


class TestExamples:
    def test_equal_sigma_batch_is_mean(self):
        out = run_estimator([obs(1.0, 1.0), obs(3.0, 1.0)], BATCH)
        assert out[-1].value.x == pytest.approx(2.0, abs=1e-15)

    def test_weighted_batch(self):
        out = run_estimator([obs(1.0, 1.0), obs(4.0, 2.0)], BATCH)
        assert out[-1].value.x == pytest.approx(1.6, abs=1e-15)
        assert inverse_variance_mean([1.0, 4.0], [1.0, 2.0]) == pytest.approx(1.6, abs=1e-15)

    def test_filtering_hand_example(self):
        prior = np.array([1.0, 1.0, 1.0])
        out = run_estimator([obs(1.0, 5.0), obs(4.0, 2.0)], FILTER, prior)
        assert out[0].value.x == 1.0
        np.testing.assert_array_equal(out[0].sigma, prior)
        assert out[1].value.x == pytest.approx(1.6, abs=1e-15)
        assert out[1].sigma[0] ** 2 == pytest.approx(0.8, abs=1e-15)

    def test_fused_variance(self):
        np.testing.assert_allclose(fused_variance([[1.0] * 3, [2.0] * 3]), [0.8] * 3, atol=1e-15)
        np.testing.assert_allclose(fused_variance([[0.3] * 3]), [0.09] * 3, atol=1e-15)
        np.testing.assert_allclose(fused_variance([[0.5] * 3] * 8), [0.25 / 8] * 3, atol=1e-15)

    def test_single_observation_all_kinds(self):
        o = obs(0.2, 0.01)
        for k in all_kinds():
            out = run_estimator([o], k, np.array([0.01] * 3))
            assert out[0].value == o.predicted

    def test_empty_stream(self):
        with pytest.raises(EmptyStream):
            run_estimator([], BATCH)

    def test_filtering_needs_prior(self):
        with pytest.raises(ValueError):
            run_estimator([obs(1.0, 1.0)], FILTER)


class TestSimpleMethods:
    def test_first_image_fixed(self):
        out = run_estimator([obs(1.0, 1.0), obs(2.0, 0.1), obs(3.0, 0.5)], FIRST)
        assert all(e.value.x == 1.0 for e in out)

    def test_servoing_tracks_current(self):
        s = [obs(1.0, 1.0), obs(2.0, 0.1), obs(3.0, 0.5)]
        out = run_estimator(s, SERVO)
        assert [e.value for e in out] == [o.predicted for o in s]

    def test_best_image_minimum_score(self):
        out = run_estimator([obs(1.0, 1.0), obs(2.0, 0.1), obs(3.0, 0.5), obs(4.0, 0.1)], BEST)
        assert [e.value.x for e in out] == [1.0, 2.0, 2.0, 2.0]  # tie keeps the earliest

    def test_best_image_scores(self):
        s = np.array([0.002, 0.004, 0.5])
        assert score_sigma(s) == pytest.approx(0.003)
        assert score_sigma(s, "trace") == pytest.approx(0.002**2 + 0.004**2 + 0.25)
        assert score_sigma(s, "yaw") == 0.5
        a = Observation(PlanarPose(1, 0, 0), [0.001, 0.001, 0.9], 0.3)
        b = Observation(PlanarPose(2, 0, 0), [0.002, 0.002, 0.01], 0.3)
        pos = run_estimator([a, b], EstimatorKind(Method.BEST_IMAGE, Uncertainty.DROPOUT))
        yaw = run_estimator([a, b], EstimatorKind(Method.BEST_IMAGE, Uncertainty.DROPOUT, "yaw"))
        assert pos[-1].value.x == 1.0 and yaw[-1].value.x == 2.0


class TestFusion:
    def test_constant_sigma_running_mean(self):
        rng = np.random.default_rng(0)
        values, _ = random_stream(rng, 200)
        s = stream(values, np.full((200, 3), 0.01))
        b = run_estimator(s, BATCH)
        f = run_estimator(s, FILTER, np.array([0.01] * 3))
        for k in range(200):
            mean = values[: k + 1].mean(axis=0)
            np.testing.assert_allclose(b[k].value.as_array(), mean, atol=1e-12, rtol=0)
            np.testing.assert_allclose(f[k].value.as_array(), mean, atol=1e-12, rtol=0)

    def test_filtering_equals_prior_augmented_batch(self):
        rng = np.random.default_rng(1)
        for _ in range(100):
            n = int(rng.integers(1, 60))
            values, sigmas = random_stream(rng, n)
            prior = rng.uniform(0.001, 0.02, 3)
            f = run_estimator(stream(values, sigmas), FILTER, prior)
            aug_sigmas = sigmas.copy()
            aug_sigmas[0] = prior
            for k in range(n):
                expected = inverse_variance_mean(values[: k + 1], aug_sigmas[: k + 1])
                np.testing.assert_allclose(f[k].value.as_array(), expected, atol=1e-9, rtol=0)
                np.testing.assert_allclose(f[k].sigma**2, fused_variance(aug_sigmas[: k + 1]),
                                           rtol=1e-12)

    def test_batch_matches_oracle(self):
        rng = np.random.default_rng(2)
        values, sigmas = random_stream(rng, 80)
        out = run_estimator(stream(values, sigmas), BATCH)
        for k in range(80):
            expected = inverse_variance_mean(values[: k + 1], sigmas[: k + 1])
            np.testing.assert_allclose(out[k].value.as_array(), expected, atol=1e-12, rtol=0)

    def test_permutation_invariance(self):
        rng = np.random.default_rng(3)
        values, sigmas = random_stream(rng, 50)
        base = run_estimator(stream(values, sigmas), BATCH)[-1].value.as_array()
        for _ in range(20):
            perm = rng.permutation(50)
            got = run_estimator(stream(values[perm], sigmas[perm]), BATCH)[-1].value.as_array()
            np.testing.assert_allclose(got, base, atol=1e-12, rtol=0)

    def test_causality(self):
        rng = np.random.default_rng(4)
        values, sigmas = random_stream(rng, 30)
        s = stream(values, sigmas)
        prior = np.array([0.01] * 3)
        for kind in all_kinds():
            full = run_estimator(s, kind, prior)
            for k in (1, 7, 29):
                part = run_estimator(s[:k], kind, prior)
                assert part[-1].value == full[k - 1].value
                np.testing.assert_array_equal(part[-1].sigma, full[k - 1].sigma)

    @given(st.lists(st.floats(1e-4, 1.0), min_size=2, max_size=40))
    def test_filter_variance_strictly_decreasing(self, sig):
        s = [obs(0.0, x, i) for i, x in enumerate(sig)]
        out = run_estimator(s, FILTER, np.array([0.5] * 3))
        for a, b in zip(out, out[1:]):
            assert np.all(b.sigma < a.sigma)

    def test_yaw_fused_across_wrap(self):
        a = Observation(PlanarPose(0, 0, math.pi - 0.01), [1, 1, 0.1], 0.3)
        b = Observation(PlanarPose(0, 0, -math.pi + 0.01), [1, 1, 0.1], 0.3)
        out = run_estimator([a, b], BATCH)
        assert abs(wrap_angle(out[-1].value.yaw - math.pi)) < 1e-12

    def test_estimate_is_plain_value(self):
        e = update(None, obs(1.0, 0.1), BATCH)
        assert isinstance(e, Estimate)
        e2 = update(e, obs(2.0, 0.1), BATCH)
        assert e.n_observations == 1 and e2.n_observations == 2
        assert e.value.x == 1.0
