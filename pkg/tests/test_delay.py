"""Delay laws, reach/first-arrival probabilities and the binomial tail."""

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate

from twoprop.delay import (
    DelayDistribution,
    ProtocolParams,
    QuadratureConfig,
    QuadratureError,
    UniformDelay,
    cdf,
    is_peaked,
    m_threshold,
    p_first,
    pdf,
    q_reach,
    restricted_l2,
)
from twoprop.validation import DomainError

import oracles

TOL = 1e-12
QUAD_TOL = 1e-7

P = ProtocolParams()
FAST = DelayDistribution(2.0, 2.0)
SLOW = DelayDistribution(2.0, 0.2)

shapes = st.floats(0.8, 4.0)
rates = st.floats(0.2, 8.0)
deltas = st.floats(0.0, 4.0)


class TestDelayDistribution:
    def test_mean_is_shape_over_rate(self):
        assert FAST.mean == 1.0
        assert DelayDistribution(1.5, 5).mean == pytest.approx(0.3, abs=TOL)

    def test_from_mean_and_scaled(self):
        d = DelayDistribution.from_mean(0.16, shape=1.5)
        assert d.rate == pytest.approx(1.5 / 0.16)
        s = FAST.scaled(10)
        assert s.shape == FAST.shape and s.rate == pytest.approx(0.2)
        assert s.mean == pytest.approx(10.0)

    @pytest.mark.parametrize("shape,rate", [(0, 1), (-1, 1), (1, 0), (1, math.inf), (1, math.nan)])
    def test_rejects_bad_parameters(self, shape, rate):
        with pytest.raises(DomainError):
            DelayDistribution(shape, rate)

    def test_pdf_examples(self):
        assert pdf(FAST, -1.0) == 0.0
        assert pdf(DelayDistribution(1, 1), 0.0) == 1.0
        assert pdf(FAST, 1.0) == pytest.approx(4 * math.exp(-2), rel=1e-14)

    def test_cdf_examples(self):
        assert cdf(FAST, 0.0) == 0.0
        assert cdf(FAST, -3.0) == 0.0
        assert cdf(FAST, 4.0) == pytest.approx(1 - 9 * math.exp(-8), rel=1e-14)
        assert cdf(DelayDistribution(1.5, 5), 1e6) == 1.0

    def test_cdf_integer_shape_closed_form_agrees_with_quadrature(self):
        numeric, _ = integrate.quad(lambda x: oracles.gamma_pdf(2, 2, x), 0, 4, epsabs=1e-14)
        assert numeric == pytest.approx(1 - 9 * math.exp(-8), rel=1e-12)

    @settings(max_examples=40, deadline=None)
    @given(shapes, rates, st.floats(0.0, 20.0))
    def test_matches_scipy_reference(self, a, lam, x):
        d = DelayDistribution(a, lam)
        assert d.cdf(x) == pytest.approx(oracles.gamma_cdf(a, lam, x), rel=1e-10, abs=1e-300)
        assert d.pdf(x) == pytest.approx(oracles.gamma_pdf(a, lam, x), rel=1e-10, abs=1e-300)

    def test_pdf_is_central_difference_of_cdf(self):
        rng = np.random.default_rng(11)
        h = 1e-5
        for _ in range(50):
            d = DelayDistribution(rng.uniform(1.2, 4), rng.uniform(0.3, 6))
            x = rng.uniform(0.05, 8)
            deriv = (d.cdf(x + h) - d.cdf(x - h)) / (2 * h)
            assert deriv == pytest.approx(d.pdf(x), abs=1e-5)

    def test_pdf_integrates_to_one(self):
        for d in (FAST, SLOW, DelayDistribution(1.5, 0.35)):
            total, _ = integrate.quad(d.pdf, 0, np.inf)
            assert total == pytest.approx(1.0, abs=1e-9)

    def test_vectorised_matches_scalar(self):
        xs = np.linspace(-1, 6, 29)
        assert np.allclose(FAST.cdf(xs), [FAST._cdf1(x) for x in xs], rtol=0, atol=TOL)
        assert np.allclose(FAST.pdf(xs), [FAST._pdf1(x) for x in xs], rtol=0, atol=TOL)

    def test_sample_mean(self):
        draws = FAST.sample(np.random.default_rng(0), 200_000)
        assert draws.mean() == pytest.approx(1.0, abs=5 * math.sqrt(0.5 / 200_000))


class TestProtocolParams:
    def test_defaults_are_experiment_preset(self):
        assert (P.n_attestors, P.threshold, P.tau1) == (12, 9, 4.0)

    def test_ethereum_threshold(self):
        e = ProtocolParams.ethereum()
        assert (e.n_attestors, e.threshold) == (127, 85)
        assert (e.slot_len, e.attest_deadline, e.aggregate_deadline) == (12, 4, 8)

    @pytest.mark.parametrize("kwargs", [
        {"threshold": 13},
        {"threshold": 0},
        {"n_attestors": 0},
        {"attest_deadline": 8.0},
        {"aggregate_deadline": 12.0},
        {"n_attestors": 12.5},
    ])
    def test_rejects_invalid(self, kwargs):
        with pytest.raises(DomainError):
            ProtocolParams(**kwargs)


class TestQReach:
    def test_zero_at_deadline(self):
        assert q_reach(FAST, 4.0, P) == 0.0

    def test_fast_block_at_zero_delay(self):
        # 1 - 9 e^-8 for Gamma(2, 2) over [0, 4]
        assert q_reach(FAST, 0.0, P) == pytest.approx(0.9969808363488774, rel=1e-14)

    def test_is_cdf_of_remaining_window(self):
        rng = np.random.default_rng(5)
        for delta in rng.uniform(0, 4, 10):
            assert q_reach(SLOW, delta, P) == cdf(SLOW, 4.0 - delta)

    @pytest.mark.parametrize("bad", [-0.1, 4.1, math.nan])
    def test_out_of_range(self, bad):
        with pytest.raises(DomainError):
            q_reach(FAST, bad, P)

    @pytest.mark.parametrize("dist", [FAST, SLOW, DelayDistribution(1.5, 0.35), UniformDelay(3.0)])
    def test_non_increasing_on_grid(self, dist):
        grid = np.linspace(0, 4, 81)
        q = [q_reach(dist, d, P) for d in grid]
        assert all(b <= a for a, b in zip(q, q[1:]))
        if isinstance(dist, DelayDistribution):
            assert all(b < a for a, b in zip(q, q[1:]))


class TestPFirst:
    def test_identical_laws_equal_delays_split_evenly(self):
        for delta in (0.0, 0.7, 2.3):
            q = q_reach(FAST, delta, P)
            assert p_first(FAST, FAST, delta, delta, P) == pytest.approx(q * q / 2, abs=QUAD_TOL)

    def test_zero_when_block_i_is_late(self):
        assert p_first(FAST, SLOW, 4.0, 0.0, P) == 0.0
        assert p_first(FAST, SLOW, 0.0, 4.0, P) == 0.0

    def test_reference_pair_sums_to_product(self):
        a = p_first(FAST, SLOW, 0.0, 0.0, P)
        b = p_first(SLOW, FAST, 0.0, 0.0, P)
        product = q_reach(FAST, 0.0, P) * q_reach(SLOW, 0.0, P)
        assert a + b == pytest.approx(product, abs=1e-8)

    @pytest.mark.parametrize("di,dj", [(0.0, 0.0), (0.5, 1.2), (2.3, 0.0), (0.0, 3.9), (3.0, 2.95)])
    def test_matches_joint_density_double_integral(self, di, dj):
        got = p_first(FAST, SLOW, di, dj, P)
        ref = oracles.p_first_2d(FAST, SLOW, di, dj, 4.0)
        assert got == pytest.approx(ref, abs=1e-8)

    def test_bounded_by_product(self):
        for di, dj in [(0, 0), (1, 2), (2.5, 0.5)]:
            p = p_first(SLOW, FAST, di, dj, P)
            assert 0.0 <= p <= q_reach(SLOW, di, P) * q_reach(FAST, dj, P) + QUAD_TOL

    def test_complementary_identity_random_configurations(self):
        rng = np.random.default_rng(2024)
        for _ in range(100):
            di_ = DelayDistribution(rng.uniform(1, 4), rng.uniform(0.2, 8))
            dj_ = DelayDistribution(rng.uniform(1, 4), rng.uniform(0.2, 8))
            a, b = rng.uniform(0, 4, 2)
            total = p_first(di_, dj_, a, b, P) + p_first(dj_, di_, b, a, P)
            assert total == pytest.approx(q_reach(di_, a, P) * q_reach(dj_, b, P), abs=QUAD_TOL)

    @pytest.mark.parametrize("pair", [(FAST, SLOW), (SLOW, FAST), (FAST, FAST)])
    def test_non_increasing_in_own_delay(self, pair):
        di_, dj_ = pair
        grid = np.linspace(0, 4, 81)
        for dj in (0.0, 1.0, 2.5):
            p = [p_first(di_, dj_, d, dj, P) for d in grid]
            assert all(b <= a + QUAD_TOL for a, b in zip(p, p[1:]))

    def test_uniform_law_closed_form(self):
        # uniform [0, 4] for both, equal delay 0: P[X < Y] = 1/2
        u = UniformDelay(4.0)
        assert p_first(u, u, 0.0, 0.0, P) == pytest.approx(0.5, abs=QUAD_TOL)

    def test_non_convergence_is_reported(self):
        strict = QuadratureConfig(abs_tol=1e-300, rel_tol=1e-300, max_subdivisions=1)
        with pytest.raises(QuadratureError) as info:
            p_first(DelayDistribution(0.5, 3.0), SLOW, 0.0, 1.0, P, strict)
        assert info.value.error_estimate > 0
        assert isinstance(info.value, ArithmeticError)


class TestMThreshold:
    def test_edges(self):
        assert m_threshold(1.0, 12, 9) == 1.0
        assert m_threshold(0.0, 12, 9) == 0.0
        assert m_threshold(0.0, 127, 1) == 0.0

    def test_reference_four_terms(self):
        assert m_threshold(0.9, 12, 9) == pytest.approx(oracles.binomial_tail(0.9, 12, 9), rel=1e-13)

    @pytest.mark.parametrize("n", [1, 2, 3, 4, 5, 6])
    def test_matches_exhaustive_enumeration(self, n):
        for K in range(1, n + 1):
            for q in (0.0, 0.13, 0.5, 0.77, 1.0):
                ref = oracles.binomial_tail_enumerated(q, n, K)
                assert m_threshold(q, n, K) == pytest.approx(ref, abs=TOL)

    def test_large_committee_is_finite_and_exact(self):
        for q in (1e-9, 0.3, 0.67, 0.9, 1 - 1e-9):
            got = m_threshold(q, 127, 85)
            ref = float(sum(math.comb(127, k) * __import__("fractions").Fraction(q) ** k
                            * (1 - __import__("fractions").Fraction(q)) ** (127 - k)
                            for k in range(85, 128)))
            assert math.isfinite(got)
            assert got == pytest.approx(ref, rel=1e-10, abs=1e-300)

    @settings(max_examples=60, deadline=None)
    @given(st.floats(0, 1), st.floats(0, 1), st.integers(1, 40), st.data())
    def test_monotone_in_q_and_k(self, q1, q2, n, data):
        K = data.draw(st.integers(1, n))
        lo, hi = sorted((q1, q2))
        assert m_threshold(lo, n, K) <= m_threshold(hi, n, K) + TOL
        if K < n:
            assert m_threshold(q1, n, K + 1) <= m_threshold(q1, n, K) + TOL
        assert m_threshold(q1, n, 1) >= m_threshold(q1, n, n) - TOL

    def test_vectorised(self):
        qs = np.array([[0.1, 0.5], [0.9, 1.0]])
        out = m_threshold(qs, 12, 9)
        assert out.shape == (2, 2)
        assert out[1, 0] == pytest.approx(m_threshold(0.9, 12, 9), abs=TOL)

    @pytest.mark.parametrize("args", [(1.2, 12, 9), (-0.1, 12, 9), (0.5, 12, 13), (0.5, 12, 0)])
    def test_rejects_invalid(self, args):
        with pytest.raises(DomainError):
            m_threshold(*args)


class TestRestrictedL2:
    def test_uniform_density(self):
        u = UniformDelay(4.0)
        assert restricted_l2(u, 0.0, 4.0) == pytest.approx(0.5, abs=1e-10)
        assert is_peaked(u, 4.0)

    def test_empty_interval(self):
        assert restricted_l2(FAST, 1.3, 1.3) == 0.0

    def test_gamma_against_quadrature(self):
        ref, _ = integrate.quad(lambda x: oracles.gamma_pdf(2, 2, x) ** 2, 0, 4, epsabs=1e-14)
        assert restricted_l2(FAST, 0.0, 4.0) == pytest.approx(math.sqrt(ref), rel=1e-9)
        assert is_peaked(FAST, 4.0)

    def test_wide_law_is_not_peaked(self):
        assert not is_peaked(SLOW, 4.0)

    def test_rejects_reversed_interval(self):
        with pytest.raises(DomainError):
            restricted_l2(FAST, 2.0, 1.0)
