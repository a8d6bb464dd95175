"""Representations, conversions, moments, autocorrelation, form classification."""

import numpy as np
import pytest

from map2fit import (
    CanonicalForm,
    CanonicalMap2,
    DegenerateVariance,
    EmptySample,
    InvalidModel,
    Matrix2,
    NonpositiveEntry,
    RateMatrixPair,
    RedundantMap2,
    ReducibleChain,
    autocorrelation,
    canonical_to_matrices,
    classify_form,
    embedded_chain,
    empirical_moments,
    gamma,
    matrices_to_redundant,
    moment,
    redundant_to_matrices,
    simulate,
    stationary_phi,
    stationary_pi,
    theoretical_moments,
)
from map2fit.models import canonical_entries, redundant_entries, stats_kernel

from conftest import EXAMPLE1, EXAMPLE1_MOMENTS, EXAMPLE3, EXAMPLE3_MOMENTS, pair_to_arrays
from oracles import numpy_moments


def random_pair(rng, form=None) -> RateMatrixPair:
    from map2fit import random_canonical

    return canonical_to_matrices(random_canonical(None, form=form, rng=rng))


class TestCanonicalToMatrices:
    def test_bursty_model(self, example1):
        assert example1.d0 == Matrix2(-20.0, 6.0, 0.0, -0.5)
        d1 = example1.d1
        assert (d1.a11, d1.a12) == (14.0, 0.0)
        assert d1.a21 == 0.0426
        assert d1.a22 == pytest.approx(0.4574, abs=1e-12)

    def test_poisson_degenerate(self):
        pair = canonical_to_matrices(CanonicalMap2(CanonicalForm.ONE, -1, 0, -1, 1))
        assert pair.d1 == Matrix2(1.0, 0.0, 1.0, 0.0)

    def test_form_two_boundary(self):
        pair = canonical_to_matrices(CanonicalMap2(CanonicalForm.TWO, -1, 1, -1, 0))
        assert pair.d1 == Matrix2(0.0, 0.0, 1.0, 0.0)

    def test_invariants_enforced(self):
        with pytest.raises(InvalidModel):
            CanonicalMap2(CanonicalForm.ONE, x=0.0, y=1.0, u=-1.0, v=0.5)
        with pytest.raises(InvalidModel):
            CanonicalMap2(CanonicalForm.ONE, x=-1.0, y=2.0, u=-1.0, v=0.5)
        with pytest.raises(InvalidModel):
            CanonicalMap2(CanonicalForm.ONE, x=-1.0, y=-0.1, u=-1.0, v=0.5)

    def test_round_trip_parameters(self):
        rng = np.random.default_rng(21)
        from map2fit import random_canonical

        for _ in range(200):
            model = random_canonical(None, rng=rng)
            pair = canonical_to_matrices(model)
            assert pair.d0.a11 == model.x
            assert pair.d0.a12 == model.y
            assert pair.d0.a22 == model.u
            if model.form is CanonicalForm.ONE:
                assert pair.d1.a21 == model.v
            else:
                assert pair.d1.a22 == model.v


class TestRedundantToMatrices:
    def test_poisson(self):
        pair = redundant_to_matrices(RedundantMap2(1, 1, 0, 1, 0, 0))
        assert pair.d0 == Matrix2(-1.0, 0.0, 0.0, -1.0)
        assert pair.d1 == Matrix2(1.0, 0.0, 0.0, 1.0)

    def test_reproduces_bursty_model(self, example1):
        pair = redundant_to_matrices(
            RedundantMap2(20.0, 0.5, p120=0.3, p111=0.7, p210=0.0, p211=0.0852)
        )
        a0, a1 = pair_to_arrays(pair)
        b0, b1 = pair_to_arrays(example1)
        np.testing.assert_allclose(a0, b0, rtol=1e-15)
        np.testing.assert_allclose(a1, b1, rtol=1e-12, atol=1e-15)

    def test_branch_sum_rejected(self):
        with pytest.raises(InvalidModel):
            RedundantMap2(1, 1, p120=0.5, p111=0.7, p210=0, p211=0)

    def test_matrices_round_trip(self):
        rng = np.random.default_rng(22)
        from map2fit import random_redundant

        for _ in range(100):
            model = random_redundant(None, rng=rng)
            back = matrices_to_redundant(redundant_to_matrices(model))
            np.testing.assert_allclose(back.params(), model.params(), rtol=1e-12)


class TestEmbeddedChain:
    def test_bursty_model(self, example1):
        p = embedded_chain(example1)
        expected = np.array([[0.72556, 0.27444], [0.0852, 0.9148]])
        np.testing.assert_allclose(
            [[p.a11, p.a12], [p.a21, p.a22]], expected, atol=1e-12
        )

    def test_poisson(self, poisson1):
        p = embedded_chain(poisson1)
        assert (p.a11, p.a12, p.a21, p.a22) == (1.0, 0.0, 1.0, 0.0)

    def test_row_stochastic_for_random_models(self):
        rng = np.random.default_rng(23)
        for _ in range(300):
            p = embedded_chain(random_pair(rng))
            assert p.a11 + p.a12 == pytest.approx(1.0, abs=1e-9)
            assert p.a21 + p.a22 == pytest.approx(1.0, abs=1e-9)
            assert min(p.a11, p.a12, p.a21, p.a22) >= 0.0


class TestStationaryDistributions:
    def test_phi_bursty(self, example1):
        phi = stationary_phi(example1)
        assert phi.v1 == pytest.approx(0.23690, abs=5e-6)
        assert phi.v2 == pytest.approx(0.76310, abs=5e-6)

    def test_phi_poisson_absorbing(self, poisson1):
        phi = stationary_phi(poisson1)
        assert (phi.v1, phi.v2) == (1.0, 0.0)

    def test_phi_symmetric(self):
        pair = RateMatrixPair(Matrix2(-1, 0, 0, -1), Matrix2(0, 1, 1, 0))
        phi = stationary_phi(pair)
        assert (phi.v1, phi.v2) == (0.5, 0.5)

    def test_pi_closed_form(self, example1):
        pi = stationary_pi(example1)
        d = np.array([[-20 + 14, 6], [0.0426, -0.5 + 0.4574]])
        np.testing.assert_allclose(
            np.array([pi.v1, pi.v2]) @ d, [0.0, 0.0], atol=1e-9
        )

    def test_pi_symmetric_offdiagonals(self):
        pair = RateMatrixPair(Matrix2(-2, 1, 1, -2), Matrix2(0.5, 0.5, 0.5, 0.5))
        pi = stationary_pi(pair)
        assert pi.v1 == pytest.approx(0.5, abs=1e-12)

    def test_pi_reducible(self):
        pair = RateMatrixPair(Matrix2(-1, 0, 0, -1), Matrix2(1, 0, 0, 1))
        with pytest.raises(ReducibleChain):
            stationary_pi(pair)


class TestMoments:
    def test_bursty_reference_values(self, example1):
        rho1, mu1, mu2, mu3 = EXAMPLE1_MOMENTS
        assert moment(example1, 1) == pytest.approx(mu1, abs=5e-5)
        assert moment(example1, 2) == pytest.approx(mu2, abs=5e-5)
        assert moment(example1, 3) == pytest.approx(mu3, abs=5e-5)

    def test_poisson_factorials(self, poisson1):
        for n in range(1, 6):
            expected = float(np.prod(np.arange(1, n + 1)))
            assert moment(poisson1, n) == pytest.approx(expected, rel=1e-12)

    def test_high_variance_reference_values(self, example3):
        _, mu1, mu2, mu3 = EXAMPLE3_MOMENTS
        assert moment(example3, 1) == pytest.approx(mu1, rel=1e-3)
        assert moment(example3, 2) == pytest.approx(mu2, rel=1e-3)
        assert moment(example3, 3) == pytest.approx(mu3, rel=1e-3)

    def test_against_numpy_oracle(self):
        rng = np.random.default_rng(24)
        for _ in range(200):
            pair = random_pair(rng)
            d0, d1 = pair_to_arrays(pair)
            _, mus, _ = numpy_moments(d0, d1)
            for n in (1, 2, 3):
                assert moment(pair, n) == pytest.approx(mus[n], rel=1e-9)

    def test_positive_variance(self):
        rng = np.random.default_rng(25)
        for _ in range(300):
            pair = random_pair(rng)
            assert moment(pair, 2) > moment(pair, 1) ** 2


class TestGammaAndAutocorrelation:
    def test_bursty_gamma(self, example1):
        assert gamma(example1) == pytest.approx(0.64036, abs=1e-10)

    def test_poisson_gamma_zero(self, poisson1):
        assert gamma(poisson1) == pytest.approx(0.0, abs=1e-15)

    def test_periodic_flagged(self):
        pair = RateMatrixPair(Matrix2(-1, 0, 0, -1), Matrix2(0, 1, 1, 0))
        from map2fit.errors import DegenerateChainWarning

        with pytest.warns(DegenerateChainWarning):
            g = gamma(pair)
        assert g == pytest.approx(-1.0, abs=1e-12)

    def test_bursty_lag1(self, example1):
        assert autocorrelation(example1, 1) == pytest.approx(0.0864, abs=5e-5)

    def test_lag2_is_gamma_times_lag1(self, example1):
        rho1 = autocorrelation(example1, 1)
        assert autocorrelation(example1, 2) == pytest.approx(
            gamma(example1) * rho1, rel=1e-12
        )

    def test_gamma_zero_means_no_correlation(self, poisson1):
        for k in (1, 2, 5):
            assert autocorrelation(poisson1, k) == 0.0

    def test_geometric_sign_pattern_and_decay(self):
        # rho_k = gamma^{k-1} rho_1 exactly: gamma drives the sign pattern
        # and the geometric decay (the prefactor can flip the overall sign
        # when the marginal CV^2 < 1, so sign(rho_k) != sign(gamma^k) alone)
        rng = np.random.default_rng(26)
        for _ in range(200):
            pair = random_pair(rng)
            g = gamma(pair)
            rhos = [autocorrelation(pair, k) for k in range(1, 6)]
            for k in range(2, 6):
                assert rhos[k - 1] == pytest.approx(
                    g ** (k - 1) * rhos[0], rel=1e-10, abs=1e-15
                )
            mags = [abs(r) for r in rhos]
            assert all(a >= b - 1e-15 for a, b in zip(mags, mags[1:]))

    def test_prefactor_bounded(self):
        rng = np.random.default_rng(27)
        for _ in range(300):
            pair = random_pair(rng)
            mu1, mu2 = moment(pair, 1), moment(pair, 2)
            prefactor = (mu2 / 2 - mu1**2) / (mu2 - mu1**2)
            assert abs(prefactor) <= 1.0


class TestClassifyForm:
    def test_bursty_is_form_one(self, example1):
        assert classify_form(example1) is CanonicalForm.ONE

    def test_poisson_boundary_is_form_two(self, poisson1):
        assert classify_form(poisson1) is CanonicalForm.TWO

    def test_high_variance_is_form_one(self, example3):
        # its lag-1 autocorrelation is positive, so gamma must be too
        assert autocorrelation(example3, 1) > 0
        assert classify_form(example3) is CanonicalForm.ONE

    def test_form_matches_construction(self):
        # every form-ONE tuple has gamma >= 0, every form-TWO gamma <= 0:
        # gamma = +-(1 - y/|x|)(1 - v/|u|)
        rng = np.random.default_rng(28)
        for _ in range(400):
            pair = random_pair(rng, form=CanonicalForm.ONE)
            assert gamma(pair) >= -1e-15
            pair = random_pair(rng, form=CanonicalForm.TWO)
            assert gamma(pair) <= 1e-15


class TestEmpiricalMoments:
    def test_two_point_sample(self):
        s = empirical_moments([1.0, 3.0])
        assert (s.mu1, s.mu2, s.mu3) == (2.0, 5.0, 14.0)
        assert s.rho1 == pytest.approx(-0.5)

    def test_constant_sample_degenerate(self):
        with pytest.raises(DegenerateVariance):
            empirical_moments([2.0, 2.0, 2.0, 2.0])

    def test_too_short(self):
        with pytest.raises(EmptySample):
            empirical_moments([1.0])

    def test_nonpositive(self):
        with pytest.raises(NonpositiveEntry):
            empirical_moments([1.0, -2.0, 3.0])

    def test_monte_carlo_consistency(self, example1):
        sample = simulate(example1, 100_000, seed=123)
        s = empirical_moments(sample.times)
        t = sample.times
        se1 = t.std(ddof=1) / np.sqrt(t.size)
        se2 = (t**2).std(ddof=1) / np.sqrt(t.size)
        assert abs(s.mu1 - EXAMPLE1_MOMENTS[1]) < 4 * se1
        assert abs(s.mu2 - EXAMPLE1_MOMENTS[2]) < 4 * se2
        assert abs(s.rho1 - EXAMPLE1_MOMENTS[0]) < 0.02


class TestValidation:
    def test_rate_pair_rejects_positive_diagonal(self):
        with pytest.raises(InvalidModel):
            RateMatrixPair(Matrix2(1.0, 0, 0, -1), Matrix2(0, 0, 0, 1))

    def test_rate_pair_rejects_bad_row_sums(self):
        with pytest.raises(InvalidModel):
            RateMatrixPair(Matrix2(-1, 0, 0, -1), Matrix2(0.5, 0, 0, 1))

    def test_rate_pair_rejects_negative_d1(self):
        with pytest.raises(InvalidModel):
            RateMatrixPair(Matrix2(-1, 0.5, 0, -1), Matrix2(0.6, -0.1, 0, 1))


def test_stats_kernel_matches_public_operations():
    rng = np.random.default_rng(29)
    from map2fit import random_canonical, random_redundant

    for _ in range(200):
        model = random_canonical(None, rng=rng)
        pair = canonical_to_matrices(model)
        stats = stats_kernel(canonical_entries(model.form, *model.params()))
        summary = theoretical_moments(pair)
        assert stats[0] == pytest.approx(summary.rho1, rel=1e-12, abs=1e-12)
        assert stats[1] == pytest.approx(summary.mu1, rel=1e-12)
        assert stats[2] == pytest.approx(summary.mu2, rel=1e-12)
        assert stats[3] == pytest.approx(summary.mu3, rel=1e-12)
        assert stats[4] == pytest.approx(gamma(pair), rel=1e-12, abs=1e-12)

    for _ in range(100):
        model = random_redundant(None, rng=rng)
        pair = redundant_to_matrices(model)
        stats = stats_kernel(redundant_entries(*model.params()))
        summary = theoretical_moments(pair)
        assert stats[1] == pytest.approx(summary.mu1, rel=1e-12)
        assert stats[3] == pytest.approx(summary.mu3, rel=1e-12)
