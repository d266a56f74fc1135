"""Tail-distribution math: densities, likelihood, gradients, projection.

The gradient is validated against central finite differences of the NLL,
which is the authoritative oracle here (step 1e-6 * max(1, |param|)).
"""

from __future__ import annotations

import math

import numpy as np
import pytest
from scipy import integrate

from vuenet import gpd
from vuenet.gpd import (
    GpdParams,
    ParameterError,
    SingularGradientError,
    SupportError,
    UnboundedMeanError,
    mean_excess,
    nll,
    nll_grad,
    pdf,
    project,
    survival,
)


def fd_grad(params: GpdParams, q: float) -> np.ndarray:
    """Central finite differences of the single-sample NLL."""
    out = []
    for i, val in enumerate((params.sigma, params.xi)):
        h = 1e-6 * max(1.0, abs(val))
        lo = [params.sigma, params.xi]
        hi = [params.sigma, params.xi]
        lo[i] -= h
        hi[i] += h
        f_lo = nll(GpdParams(*lo), [q])
        f_hi = nll(GpdParams(*hi), [q])
        out.append((f_hi - f_lo) / (2.0 * h))
    return np.array(out)


class TestPdf:
    def test_exponential_at_origin(self):
        assert pdf(GpdParams(1.0, 0.0), 0.0) == pytest.approx(1.0, abs=1e-12)

    def test_heavy_tail_at_origin(self):
        assert pdf(GpdParams(2.0, 0.5), 0.0) == pytest.approx(0.5, abs=1e-12)

    def test_heavy_tail_interior(self):
        # (1 + 0.5*2/1)^(-1-2) = 2^-3
        assert pdf(GpdParams(1.0, 0.5), 2.0) == pytest.approx(0.125, rel=1e-12)

    def test_out_of_support_negative(self):
        with pytest.raises(SupportError):
            pdf(GpdParams(1.0, 0.5), -0.1)

    def test_out_of_support_bounded_tail(self):
        # xi < 0 bounds the support at -sigma/xi = 2
        with pytest.raises(SupportError):
            pdf(GpdParams(1.0, -0.5), 2.5)

    def test_bad_scale_rejected(self):
        with pytest.raises(ParameterError):
            GpdParams(0.0, 0.1)
        with pytest.raises(ParameterError):
            GpdParams(-1.0, 0.1)

    def test_integrates_to_one(self):
        rng = np.random.default_rng(7)
        for _ in range(12):
            sigma = float(rng.uniform(0.2, 20.0))
            xi = float(rng.uniform(-0.4, 0.9))
            params = GpdParams(sigma, xi)
            upper = min(gpd.support_upper(params), np.inf)
            total, _ = integrate.quad(
                lambda m: pdf(params, m), 0.0, upper, limit=200
            )
            assert total == pytest.approx(1.0, abs=1e-4)

    def test_limit_branch_continuity(self):
        # seam between the general form and the xi->0 series stays tiny
        eps = gpd.XI_LIMIT_SWITCH
        for sigma in (0.5, 1.0, 2.0, 50.0):
            for ratio in (0.0, 0.5, 1.0, 2.0, 2.5):
                m = ratio * sigma
                for xi_side in (eps, -eps):
                    general = pdf(GpdParams(sigma, xi_side * 1.0000001), m)
                    limit = pdf(GpdParams(sigma, xi_side * 0.9999999), m)
                    assert abs(general - limit) < 1e-8


class TestNll:
    def test_zero_sample_exponential(self):
        assert nll(GpdParams(1.0, 0.0), [0.0]) == pytest.approx(0.0, abs=1e-12)

    def test_exponential_mean(self):
        assert nll(GpdParams(1.0, 0.0), [1.0, 3.0]) == pytest.approx(2.0, rel=1e-12)

    def test_heavy_tail_single(self):
        assert nll(GpdParams(1.0, 0.5), [2.0]) == pytest.approx(3.0 * math.log(2.0), rel=1e-12)

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            nll(GpdParams(1.0, 0.0), [])

    def test_out_of_support(self):
        with pytest.raises(SupportError):
            nll(GpdParams(1.0, -0.5), [1.0, 3.0])

    def test_limit_branch_continuity(self):
        eps = gpd.XI_LIMIT_SWITCH
        for sigma in (0.5, 1.0, 2.0, 50.0):
            for ratio in (0.0, 0.5, 1.0, 2.0, 2.5):
                general = nll(GpdParams(sigma, eps * 1.0000001), [ratio * sigma])
                limit = nll(GpdParams(sigma, eps * 0.9999999), [ratio * sigma])
                assert abs(general - limit) < 1e-8


class TestGradient:
    def test_sigma_component_at_origin(self):
        # d/dsigma [ln sigma + q/sigma] at q=0 is 1/sigma
        g = nll_grad(GpdParams(1.0, 0.0), 0.0)
        assert g[0] == pytest.approx(1.0, rel=1e-12)
        assert g[1] == pytest.approx(0.0, abs=1e-12)

    def test_matches_finite_differences_on_grid(self):
        rng = np.random.default_rng(11)
        sigmas = np.linspace(0.1, 100.0, 20)
        xis = np.linspace(-0.4, 0.9, 20)
        for sigma in sigmas:
            for xi in xis:
                params = GpdParams(float(sigma), float(xi))
                upper = gpd.support_upper(params)
                hi = min(upper * 0.9, 5.0 * sigma)
                qs = rng.uniform(1e-3 * sigma, hi, size=10)
                for q in qs:
                    got = nll_grad(params, float(q))
                    want = fd_grad(params, float(q))
                    denom = np.maximum(np.abs(want), 1e-8)
                    assert np.max(np.abs(got - want) / denom) < 1e-5

    def test_boundary_sample_singular(self):
        with pytest.raises(SingularGradientError):
            nll_grad(GpdParams(1.0, -0.5), 2.0)

    def test_vectorized_matches_scalar(self):
        params = GpdParams(3.0, 0.25)
        qs = np.array([0.1, 1.0, 7.5])
        many = gpd._grad_many(params.sigma, params.xi, qs)
        for i, q in enumerate(qs):
            np.testing.assert_allclose(many[i], nll_grad(params, float(q)), rtol=1e-13)


class TestMeanExcess:
    def test_exponential(self):
        assert mean_excess(GpdParams(2.0, 0.0)) == pytest.approx(2.0)

    def test_heavy(self):
        assert mean_excess(GpdParams(2.0, 0.5)) == pytest.approx(4.0)

    def test_unbounded(self):
        with pytest.raises(UnboundedMeanError):
            mean_excess(GpdParams(2.0, 1.0))

    def test_monotone_in_xi(self):
        values = [mean_excess(GpdParams(1.0, xi)) for xi in np.linspace(-0.9, 0.9, 19)]
        assert all(b > a for a, b in zip(values, values[1:]))


class TestProject:
    def test_feasible_point_unchanged(self):
        p = project((2.0, 0.3))
        assert (p.sigma, p.xi) == (2.0, 0.3)

    def test_scale_clamped(self):
        p = project((-1.0, 0.0))
        assert p.sigma == pytest.approx(gpd.SIGMA_MIN)

    def test_shape_clamped(self):
        p = project((1.0, 2.0))
        assert p.xi == pytest.approx(gpd.XI_MAX)

    def test_support_violation_raises_shape(self):
        p = project((1.0, -2.0), samples=[1.0])
        assert p.xi == pytest.approx(-1.0 + gpd.SUPPORT_MARGIN, abs=1e-15)
        # the sample is feasible afterwards
        assert 1.0 + p.xi * 1.0 / p.sigma > 0.0

    def test_idempotent(self):
        rng = np.random.default_rng(3)
        for _ in range(200):
            cand = (float(rng.normal(0.0, 10.0)), float(rng.normal(0.0, 3.0)))
            samples = rng.uniform(0.0, 5.0, size=rng.integers(0, 4))
            once = project(cand, samples)
            twice = project((once.sigma, once.xi), samples)
            assert (once.sigma, once.xi) == (twice.sigma, twice.xi)


class TestSampling:
    def test_sample_within_support_and_fits(self):
        rng = np.random.default_rng(5)
        params = GpdParams(50.0, 0.3)
        draws = gpd.sample(params, 20000, rng)
        assert float(draws.min()) >= 0.0
        # empirical mean close to sigma/(1-xi)
        assert float(draws.mean()) == pytest.approx(mean_excess(params), rel=0.05)

    def test_survival_monotone(self):
        params = GpdParams(2.0, -0.3)
        ms = np.linspace(0.0, 10.0, 50)
        s = survival(params, ms)
        assert s[0] == pytest.approx(1.0)
        assert np.all(np.diff(s) <= 1e-12)
        assert s[-1] == 0.0
