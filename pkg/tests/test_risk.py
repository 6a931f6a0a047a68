"""Risk measure tests: worked examples, coherence, survival weighting."""

import math

import numpy as np
import pytest

from covloss import (
    LossVector,
    RiskReport,
    WeightedSample,
    batch_statistics,
    cecl,
    economic_capital,
    empirical_var,
    expected_shortfall,
    survival_weights,
    value_at_risk,
)


class TestWeightedSample:
    def test_uniform_constructor(self):
        s = WeightedSample.uniform([3.0, 1.0, 2.0])
        assert s.weights.sum() == pytest.approx(1.0, abs=1e-15)

    @pytest.mark.parametrize(
        "values, weights, fragment",
        [
            ([1.0], [0.5], "sum to"),
            ([1.0, 2.0], [1.5, -0.5], "nonnegative"),
            ([1.0, float("inf")], [0.5, 0.5], "finite"),
            ([1.0, float("nan")], [0.5, 0.5], "finite"),
            ([], [], "empty"),
            ([1.0, 2.0], [1.0], "equal-length"),
        ],
    )
    def test_rejects(self, values, weights, fragment):
        with pytest.raises(ValueError, match=fragment):
            WeightedSample(values=np.asarray(values, dtype=float),
                           weights=np.asarray(weights, dtype=float))


class TestWorkedExamples:
    def test_uniform_1_to_100(self):
        # 95% of the mass sits at or below 95, so the right-continuous
        # quantile is the next value up, and the top five values average 98.
        s = WeightedSample.uniform(np.arange(1.0, 101.0))
        assert abs(empirical_var(s, 0.95) - 96.0) <= 1e-12
        assert abs(expected_shortfall(s, 0.95) - 98.0) <= 1e-12

    def test_two_point_with_atom_straddling_level(self):
        # The 0.5% tail lies strictly inside the atom at 100.
        s = WeightedSample(values=np.array([0.0, 100.0]),
                           weights=np.array([0.99, 0.01]))
        assert abs(empirical_var(s, 0.995) - 100.0) <= 1e-12
        assert abs(expected_shortfall(s, 0.995) - 100.0) <= 1e-12

    def test_tie_merging_with_exact_dyadic_weights(self):
        s = WeightedSample.uniform(np.array([1.0, 1.0, 1.0, 2.0]))
        # P(X <= 1) = 0.75 exceeds 0.7, so VaR sits at the atom
        assert empirical_var(s, 0.7) == 1.0
        # at level 0.75 the atom's mass is exhausted exactly: next value
        assert empirical_var(s, 0.75) == 2.0

    def test_alpha_range_enforced(self):
        s = WeightedSample.uniform(np.arange(6.0))
        for alpha in (0.5, 1.0, 0.2):
            with pytest.raises(ValueError, match="alpha"):
                empirical_var(s, alpha)
            with pytest.raises(ValueError, match="alpha"):
                expected_shortfall(s, alpha)


class TestExpectedShortfallProperties:
    def test_equals_tail_mean_without_atom_at_var(self):
        rng = np.random.default_rng(17)
        values = np.sort(rng.standard_normal(200))
        s = WeightedSample.uniform(values)
        es = expected_shortfall(s, 0.95)
        assert es == pytest.approx(values[-10:].mean(), rel=1e-12)

    def test_never_below_var(self):
        rng = np.random.default_rng(18)
        for trial in range(5):
            s = WeightedSample.uniform(rng.exponential(size=50))
            for alpha in (0.6, 0.9, 0.99):
                assert expected_shortfall(s, alpha) >= empirical_var(s, alpha)

    def test_subadditive(self):
        rng = np.random.default_rng(19)
        x = rng.standard_normal(1000)
        y = rng.lognormal(size=1000)
        lhs = expected_shortfall(WeightedSample.uniform(x + y), 0.95)
        rhs = expected_shortfall(WeightedSample.uniform(x), 0.95) + expected_shortfall(
            WeightedSample.uniform(y), 0.95
        )
        assert lhs <= rhs + 1e-12

    def test_positive_homogeneity_and_translation(self):
        rng = np.random.default_rng(20)
        x = rng.standard_normal(500)
        es = expected_shortfall(WeightedSample.uniform(x), 0.9)
        assert expected_shortfall(WeightedSample.uniform(3.0 * x), 0.9) == pytest.approx(
            3.0 * es, rel=1e-12
        )
        assert expected_shortfall(WeightedSample.uniform(x + 7.0), 0.9) == pytest.approx(
            es + 7.0, rel=1e-12
        )

    def test_monotone(self):
        rng = np.random.default_rng(21)
        x = rng.standard_normal(500)
        y = x + np.abs(rng.standard_normal(500))
        assert expected_shortfall(WeightedSample.uniform(x), 0.9) <= expected_shortfall(
            WeightedSample.uniform(y), 0.9
        )


class TestSurvivalWeights:
    def test_normalized_weights(self):
        w = survival_weights(np.array([-1.0, 0.5, 2.0]), b0=1.0, gamma=0.1)
        np.testing.assert_array_equal(w, [0.5, 0.5, 0.0])

    def test_theoretical_weights(self):
        w = survival_weights(np.array([-1.0, 0.5, 2.0]), b0=1.0, gamma=0.1, normalize=False)
        np.testing.assert_allclose(w[:2], 1.0 / (0.9 * 3.0), rtol=1e-15)
        assert w[2] == 0.0
        # total mass is the sample survival rate over the model one
        assert w.sum() == pytest.approx((2.0 / 3.0) / 0.9, rel=1e-12)

    def test_all_defaulted_rejected(self):
        with pytest.raises(ValueError, match="every path defaulted"):
            survival_weights(np.array([5.0, 6.0]), b0=1.0, gamma=0.1)

    def test_gamma_range(self):
        with pytest.raises(ValueError, match="gamma"):
            survival_weights(np.zeros(3), b0=1.0, gamma=1.0)

    def test_vector_input_only(self):
        with pytest.raises(ValueError, match="vector"):
            survival_weights(np.zeros((2, 2)), b0=1.0, gamma=0.1)


class TestCecl:
    def test_weighted_mean(self):
        loss = np.array([0.0, 10.0, 4.0])
        w = np.array([0.25, 0.5, 0.25])
        assert cecl(loss, w) == pytest.approx(6.0, rel=1e-15)

    def test_accepts_loss_vector(self):
        lv = LossVector(total=np.array([2.0, 4.0]))
        assert cecl(lv, np.array([0.5, 0.5])) == 3.0

    def test_shape_mismatch(self):
        with pytest.raises(ValueError, match="equal-length"):
            cecl(np.zeros(3), np.zeros(2))

    def test_normalized_weights_give_survivor_mean(self):
        rng = np.random.default_rng(23)
        loss = np.abs(rng.standard_normal(100))
        x0 = rng.standard_normal(100)
        w = survival_weights(x0, b0=0.5, gamma=0.2)
        alive = x0 < 0.5
        assert cecl(loss, w) == pytest.approx(loss[alive].mean(), rel=1e-12)


class TestUnderSurvivalMeasure:
    def test_raw_and_normalized_weights_agree(self):
        # economic_capital renormalizes internally, so the two weight
        # conventions give the same tail number.
        rng = np.random.default_rng(24)
        loss = np.abs(rng.standard_normal(2000)) * 10.0
        x0 = rng.standard_normal(2000)
        w_norm = survival_weights(x0, b0=1.0, gamma=0.15)
        w_raw = survival_weights(x0, b0=1.0, gamma=0.15, normalize=False)
        assert economic_capital(loss, w_raw, 0.99) == pytest.approx(
            economic_capital(loss, w_norm, 0.99), rel=1e-12
        )
        assert value_at_risk(loss, w_raw, 0.99) == value_at_risk(loss, w_norm, 0.99)

    def test_zero_mass_rejected(self):
        with pytest.raises(ValueError, match="positive total mass"):
            economic_capital(np.ones(3), np.zeros(3))

    def test_ec_dominates_var(self):
        rng = np.random.default_rng(25)
        loss = rng.exponential(size=5000)
        w = np.full(5000, 1.0 / 5000)
        assert economic_capital(loss, w, 0.9975) >= value_at_risk(loss, w, 0.9975)


class TestBatchStatistics:
    def test_three_batches(self):
        mean, se = batch_statistics([1.0, 2.0, 3.0])
        assert mean == 2.0
        assert se == pytest.approx(1.0 / math.sqrt(3.0), rel=1e-15)

    def test_constant_batches_have_zero_stderr(self):
        mean, se = batch_statistics([5.0, 5.0, 5.0, 5.0])
        assert mean == 5.0 and se == 0.0

    def test_needs_two(self):
        with pytest.raises(ValueError, match="at least two"):
            batch_statistics([1.0])


class TestRiskReport:
    def _kwargs(self, **over):
        base = dict(
            cecl=1.0, ec=10.0, var_alpha=8.0,
            cecl_batch_mean=1.0, cecl_stderr=0.1,
            ec_batch_mean=10.0, ec_stderr=0.5,
            var_batch_mean=8.0, var_stderr=0.4,
            alpha=0.9975, n_paths=1000, n_batches=10,
        )
        base.update(over)
        return base

    def test_valid(self):
        r = RiskReport(**self._kwargs())
        assert r.ec >= r.var_alpha

    def test_degenerate_all_zero(self):
        RiskReport(**self._kwargs(cecl=0.0, ec=0.0, var_alpha=0.0,
                                  cecl_batch_mean=0.0, ec_batch_mean=0.0,
                                  var_batch_mean=0.0))

    def test_ec_below_var_rejected(self):
        with pytest.raises(ValueError, match="below var_alpha"):
            RiskReport(**self._kwargs(ec=7.0))

    def test_ec_below_cecl_rejected_when_tail_positive(self):
        with pytest.raises(ValueError, match="below cecl"):
            RiskReport(**self._kwargs(cecl=20.0))
