"""Estimation pipeline: moments matching, ML refinement, form selection."""

import math

import numpy as np
import pytest

from map2fit import (
    CanonicalForm,
    CanonicalMap2,
    EstimationConfig,
    InvalidModel,
    MomentSummary,
    canonical_to_matrices,
    delta_tau,
    empirical_kl,
    empirical_moments,
    fit,
    ml_fit_form,
    ml_fit_redundant,
    moment,
    moments_match_start,
    redundant_to_matrices,
    simulate,
    theoretical_moments,
)
from map2fit.estimate import fit_target_moments
from map2fit.simulate import InterarrivalSample

from conftest import EXAMPLE1
from oracles import dense_search_delta

FAST = EstimationConfig(multistart_count=20, max_iterations=2000, seed=0)


def poisson_target() -> MomentSummary:
    return MomentSummary(mu1=1.0, mu2=2.0, mu3=6.0, rho1=0.0)


class TestDeltaTau:
    def test_zero_at_own_moments(self, example1):
        target = theoretical_moments(example1)
        val = delta_tau(EXAMPLE1.params(), CanonicalForm.ONE, target)
        assert val == pytest.approx(0.0, abs=1e-12)

    def test_penalty_limit(self):
        # matched rho1, mismatched moments: the tau factor controls the rest
        target = MomentSummary(mu1=2.0, mu2=9.0, mu3=60.0, rho1=0.0)
        params = (-1.0, 0.0, -1.0, 1.0)  # unit-rate Poisson, rho1 = 0
        small = delta_tau(params, CanonicalForm.ONE, target, tau=1e-12)
        large = delta_tau(params, CanonicalForm.ONE, target, tau=1.0)
        assert small == pytest.approx(0.0, abs=1e-9)
        assert large > 0.01

    def test_infeasible_rejected(self):
        target = poisson_target()
        with pytest.raises(InvalidModel):
            delta_tau((-1.0, 2.0, -1.0, 0.5), CanonicalForm.ONE, target)

    def test_weights_relative_moment_errors(self):
        target = MomentSummary(mu1=1.0, mu2=2.0, mu3=6.0, rho1=0.0)
        params = (-2.0, 0.0, -2.0, 2.0)  # Poisson rate 2: all moments halved+
        val = delta_tau(params, CanonicalForm.ONE, target, tau=1.0)
        expected = (0.5 - 1) ** 2 / 1 + (0.5 - 2) ** 2 / 4 + (0.75 - 6) ** 2 / 36
        assert val == pytest.approx(expected, rel=1e-9)


class TestMomentsMatchStart:
    def test_recovers_bursty_model_from_theoretical_moments(self, example1):
        target = theoretical_moments(example1)
        cfg = EstimationConfig(multistart_count=100, seed=3)
        start = moments_match_start(target, CanonicalForm.ONE, cfg)
        got = theoretical_moments(canonical_to_matrices(start))
        for a, b in zip(got.as_tuple(), target.as_tuple()):
            assert a == pytest.approx(b, rel=2e-3, abs=2e-3)

    def test_poisson_target_beats_dense_search(self):
        target = poisson_target()
        cfg = EstimationConfig(multistart_count=30, seed=4)
        start = moments_match_start(target, CanonicalForm.ONE, cfg)
        ours = delta_tau(start.params(), CanonicalForm.ONE, target)

        def objective(params):
            try:
                return delta_tau(params, CanonicalForm.ONE, target)
            except InvalidModel:
                return math.inf

        oracle_val, _ = dense_search_delta(objective, np.random.default_rng(5))
        assert ours <= oracle_val
        assert ours <= 1e-6

    def test_multistart_monotone(self, example1):
        sample = simulate(example1, 400, seed=6)
        target = empirical_moments(sample.times)
        few = moments_match_start(
            target, CanonicalForm.ONE, EstimationConfig(multistart_count=1, seed=7)
        )
        many = moments_match_start(
            target, CanonicalForm.ONE, EstimationConfig(multistart_count=25, seed=7)
        )
        d_few = delta_tau(few.params(), CanonicalForm.ONE, target)
        d_many = delta_tau(many.params(), CanonicalForm.ONE, target)
        assert d_many <= d_few + 1e-12

    def test_deterministic(self):
        target = poisson_target()
        cfg = EstimationConfig(multistart_count=10, seed=8)
        assert moments_match_start(target, CanonicalForm.TWO, cfg) == \
            moments_match_start(target, CanonicalForm.TWO, cfg)


class TestMlFitForm:
    def test_improves_on_start(self, example1):
        sample = simulate(example1, 1000, seed=9)
        target = empirical_moments(sample.times)
        start = moments_match_start(target, CanonicalForm.ONE, FAST)
        res = ml_fit_form(sample, CanonicalForm.ONE, start, FAST)
        assert res.loglik.value > res.start_loglik.value
        assert res.converged

    def test_poisson_start_already_optimal(self, poisson1):
        sample = simulate(poisson1, 500, seed=10)
        # ML from the true generating model: never worse, and any in-sample
        # gain is the small overfit a 4-parameter family can buy
        start = CanonicalMap2(CanonicalForm.ONE, -1.0, 0.0, -1.0, 1.0)
        res = ml_fit_form(sample, CanonicalForm.ONE, start, FAST)
        assert res.loglik.value >= res.start_loglik.value
        assert res.loglik.value - res.start_loglik.value < 8.0
        assert res.converged

    def test_wrong_form_rejected(self, example1):
        sample = simulate(example1, 100, seed=11)
        start = CanonicalMap2(CanonicalForm.ONE, -1.0, 0.0, -1.0, 1.0)
        with pytest.raises(InvalidModel):
            ml_fit_form(sample, CanonicalForm.TWO, start, FAST)

    def test_kl_shrinks_toward_truth(self, example1):
        # the refined model should be closer to the generator than the start
        sample = simulate(example1, 1000, seed=12)
        target = empirical_moments(sample.times)
        start = moments_match_start(target, CanonicalForm.ONE, FAST)
        res = ml_fit_form(sample, CanonicalForm.ONE, start, FAST)
        kl_start = empirical_kl(
            example1, canonical_to_matrices(start), n=500, runs=20, seed=13
        )
        kl_fit = empirical_kl(
            example1, canonical_to_matrices(res.model), n=500, runs=20, seed=13
        )
        assert kl_fit.value < kl_start.value


class TestFit:
    def test_bursty_sample_selects_form_one(self, example1):
        sample = simulate(example1, 1000, seed=14)
        res = fit(sample, FAST)
        assert res.form_selected is CanonicalForm.ONE
        assert res.loglik.value > res.start_loglik.value

    def test_negative_correlation_selects_form_two(self):
        # gamma = -(1 - 0.2)(1 - 0.2) = -0.64, strongly negative rho1
        model = CanonicalMap2(CanonicalForm.TWO, -10.0, 2.0, -0.2, 0.04)
        pair = canonical_to_matrices(model)
        sample = simulate(pair, 1000, seed=15)
        assert empirical_moments(sample.times).rho1 < -0.05
        res = fit(sample, FAST)
        assert res.form_selected is CanonicalForm.TWO

    def test_minimal_sample(self):
        res = fit(InterarrivalSample(np.array([1.0, 3.0])), FAST)
        assert res.moments.mu1 > 0
        assert math.isfinite(res.loglik.value)

    def test_constant_sample_fallback(self):
        res = fit(InterarrivalSample(np.array([2.0, 2.0, 2.0])), FAST)
        assert res.diagnostics["target_fallback"]
        assert math.isfinite(res.loglik.value)

    def test_deterministic(self, example1):
        sample = simulate(example1, 300, seed=16)
        a = fit(sample, FAST)
        b = fit(sample, FAST)
        assert a.model == b.model
        assert a.loglik.value == b.loglik.value

    def test_scale_equivariance(self, example1):
        # fitting t and t/c must give models exactly c apart; c a power of
        # two makes the float arithmetic commute exactly with the scaling
        sample = simulate(example1, 400, seed=17)
        quarter = InterarrivalSample(sample.times / 4.0)
        a = fit(sample, FAST)
        b = fit(quarter, FAST)
        pa = np.array(a.model.params())
        pb = np.array(b.model.params())
        np.testing.assert_allclose(pb, 4.0 * pa, rtol=1e-6)
        assert a.form_selected == b.form_selected

    def test_target_fallback_flag_absent_normally(self, example1):
        sample = simulate(example1, 200, seed=18)
        res = fit(sample, FAST)
        assert not res.diagnostics["target_fallback"]


class TestRedundantFit:
    def test_poisson_recovery_up_to_identifiability(self, poisson1):
        sample = simulate(poisson1, 800, seed=19)
        res = ml_fit_redundant(sample, FAST)
        # parameters are not identified; the law is, so check the moments
        assert res.moments.mu1 == pytest.approx(1.0, rel=0.1)
        assert abs(res.moments.rho1) < 0.05

    def test_improves_on_start(self, example1):
        sample = simulate(example1, 600, seed=20)
        res = ml_fit_redundant(sample, FAST)
        assert res.loglik.value >= res.start_loglik.value
        assert res.form_selected is None

    def test_deterministic(self, example1):
        sample = simulate(example1, 300, seed=21)
        a = ml_fit_redundant(sample, FAST)
        b = ml_fit_redundant(sample, FAST)
        assert a.model == b.model

    def test_matches_canonical_likelihood_when_it_works(self, example1):
        # on an easy sample both representations should find comparable
        # optima (the redundant one can only do as well or worse)
        sample = simulate(example1, 500, seed=22)
        can = fit(sample, FAST)
        red = ml_fit_redundant(sample, FAST)
        assert red.loglik.value <= can.loglik.value + 0.5


class TestFitTargetMoments:
    def test_normal_path(self, example1):
        sample = simulate(example1, 100, seed=23)
        target, fallback = fit_target_moments(sample)
        assert not fallback

    def test_constant_sample_exponential_fallback(self):
        target, fallback = fit_target_moments(
            InterarrivalSample(np.array([5.0, 5.0]))
        )
        assert fallback
        assert target.mu1 == 5.0
        assert target.mu2 == 50.0
        assert target.rho1 == 0.0


def test_config_validation():
    with pytest.raises(ValueError):
        EstimationConfig(tau=0.0)
    with pytest.raises(ValueError):
        EstimationConfig(multistart_count=0)
    with pytest.raises(ValueError):
        EstimationConfig(rate_bounds=(-1.0, 1.0))
    with pytest.raises(ValueError):
        EstimationConfig(jump_bounds=(5.0, 1.0))
