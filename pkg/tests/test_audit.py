"""Tests for the region formulas and the resolvent growth probe.

The region membership functions are exact inequality evaluations and
are tested against hand-computed boundary points, monotonicity on a
grid, and the asymptotic consistency between the finite-N family and
the limiting slope.  The growth probe is tested against the classical
spectral-theorem bound in the upper half plane (an independent oracle)
and against the expected |lambda|^{-1} power on the real axis.
"""

import math

import numpy as np
import pytest

from abscatter import audit
from abscatter.geometry import SolenoidConfig
from abscatter.specfn import LogLambda


def single_solenoid(alpha=0.3):
    return SolenoidConfig(positions=np.zeros((1, 2)),
                          fluxes=np.array([alpha]), R0=1.05, R1=2.0)


def pair_config(d=2.0):
    half = d / 2.0
    return SolenoidConfig(positions=np.array([[half, 0.0], [-half, 0.0]]),
                          fluxes=np.array([0.5, 0.5]), R0=1.05, R1=2.0)


class TestRegionSpec:
    def test_validation(self):
        with pytest.raises(ValueError):
            audit.RegionSpec(N=0, C_delta=1.0, T_prime=10.0)
        with pytest.raises(ValueError):
            audit.RegionSpec(N=3, C_delta=0.0, T_prime=10.0)
        with pytest.raises(ValueError):
            audit.RegionSpec(N=3, C_delta=1.0, T_prime=-1.0)

    def test_hand_computed_boundary(self):
        # N=3, C_delta=1, T'=10, |lambda| = e^5: depth (2*5 + 0)/10 = 1
        spec = audit.RegionSpec(N=3, C_delta=1.0, T_prime=10.0)
        x = math.exp(5.0)
        assert audit.region_bound(spec, x) == pytest.approx(1.0)
        assert audit.region_membership(spec, LogLambda.from_complex(
            complex(x, -0.5)))
        # boundary excluded: |lambda| = e^5 exactly, Im = -1 exactly
        on_boundary = LogLambda(math.exp(5.0), -math.asin(math.exp(-5.0)))
        assert abs(on_boundary.to_complex().imag + 1.0) < 1e-12
        assert not audit.region_membership(spec, on_boundary)
        assert not audit.region_membership(spec, LogLambda.from_complex(
            complex(x, -1.5)))
        # shifting C_delta moves the boundary by log(C_delta)/T'
        spec2 = audit.RegionSpec(N=3, C_delta=math.e, T_prime=10.0)
        assert audit.region_bound(spec2, x) == pytest.approx(1.1)
        assert audit.region_membership(spec2, LogLambda.from_complex(
            complex(x, -1.0)))
        # ten hand-evaluated cases across N, C_delta, T'
        cases = [
            (1, 2.0, 5.0, math.e, 0.1, True),
            (1, 2.0, 5.0, math.e, -0.2, False),
            (2, 1.0, 4.0, math.exp(2.0), -0.45, True),
            (2, 1.0, 4.0, math.exp(2.0), -0.55, False),
            (4, 0.5, 6.0, math.exp(3.0), -1.0, True),
            (4, 0.5, 6.0, math.exp(3.0), -1.5, False),
            (5, 1.0, 20.0, math.exp(10.0), -1.99, True),
            (5, 1.0, 20.0, math.exp(10.0), -2.01, False),
            (3, 10.0, 8.0, math.exp(4.0), -1.2, True),
            (3, 10.0, 8.0, math.exp(4.0), -1.3, False),
        ]
        for n, c, t, x, im, expect in cases:
            spec = audit.RegionSpec(N=n, C_delta=c, T_prime=t)
            lam = LogLambda.from_complex(complex(x, im))
            assert audit.region_membership(spec, lam) is expect

    def test_real_axis_membership(self):
        # any positive depth contains the real axis
        for spec in (audit.RegionSpec(N=2, C_delta=1.0, T_prime=7.0),
                     audit.RegionSpec(N=1, C_delta=1.5, T_prime=3.0)):
            for x in (2.0, 10.0, 1e4):
                assert audit.region_membership(
                    spec, LogLambda.from_complex(complex(x, 0.0)))

    def test_requires_modulus_above_one(self):
        spec = audit.RegionSpec(N=2, C_delta=1.0, T_prime=5.0)
        with pytest.raises(ValueError):
            audit.region_membership(spec, LogLambda.from_complex(0.5 + 0j))

    def test_monotone_in_n_and_c_delta(self):
        rng = np.random.default_rng(0)
        xs = np.exp(rng.uniform(0.5, 8.0, 60))
        ims = rng.uniform(-3.0, 0.0, 60)
        for n, c in ((1, 1.0), (2, 1.0), (2, 3.0), (4, 3.0)):
            lo = audit.RegionSpec(N=n, C_delta=c, T_prime=9.0)
            hi_n = audit.RegionSpec(N=n + 1, C_delta=c, T_prime=9.0)
            hi_c = audit.RegionSpec(N=n, C_delta=2.0 * c, T_prime=9.0)
            for x, im in zip(xs, ims):
                lam = LogLambda.from_complex(complex(x, im))
                if audit.region_membership(lo, lam):
                    assert audit.region_membership(hi_n, lam)
                    assert audit.region_membership(hi_c, lam)

    def test_limit_consistency_with_asymptotic_region(self):
        # the finite-N family built from the configuration thresholds
        # approaches slope 1/(2 d_max); membership agrees with the
        # asymptotic test within the epsilon slack at 20 large points
        cfg = pair_config(d=2.0)
        eps = 0.05
        spec = audit.RegionSpec.from_config(N=400, C_delta=1.0, config=cfg)
        slope_n = (spec.N - 1) / spec.T_prime
        assert abs(slope_n - 0.25) < 0.005
        rng = np.random.default_rng(1)
        logs = rng.uniform(10.0, 14.0, 20)
        for lx in logs:
            x = math.exp(lx)
            inside = complex(x, -(0.25 - eps) * lx * 0.999)
            outside = complex(x, -(0.25 + eps) * lx * 1.001)
            for z, expect in ((inside, True), (outside, False)):
                lam = LogLambda.from_complex(z)
                assert audit.limit_region_membership(cfg, lam, eps) \
                    is expect
                assert audit.region_membership(spec, lam) is expect

    def test_limit_region_validation(self):
        cfg = pair_config()
        with pytest.raises(ValueError):
            audit.limit_region_membership(
                cfg, LogLambda.from_complex(100.0 + 0j), epsilon=0.3)
        with pytest.raises(ValueError):
            audit.limit_region_membership(
                cfg, LogLambda.from_complex(0.5 + 0j), epsilon=0.05)


class TestGrowthProbe:
    def test_rejects_multi_solenoid_config(self):
        with pytest.raises(ValueError):
            audit.cutoff_resolvent_norm(pair_config(),
                                        LogLambda.from_complex(10 + 1j))

    def test_upper_half_plane_classical_bound(self):
        # spectral theorem: ||R(lambda)|| = 1/dist(lambda^2, [0, inf));
        # the cutoff norm must sit below it but within a factor 2 here
        cfg = single_solenoid()
        for x in (10.0, 20.0):
            lam = LogLambda.from_complex(complex(x, 1.0))
            nrm = audit.cutoff_resolvent_norm(cfg, lam, n_r=300)
            dist = abs((complex(x, 1.0) ** 2).imag)
            assert nrm <= 1.0 / dist * 1.02
            assert nrm >= 0.5 / dist

    def test_real_axis_power(self):
        fit = audit.resolvent_growth_probe(single_solenoid(), a=0.0,
                                           samples=8, n_r=300)
        assert abs(fit.power - (-1.0)) < 0.2
        assert fit.r_squared > 0.95
        assert math.isnan(fit.t_fit)

    def test_fixed_im_line_shape(self):
        # along Im lambda = -0.5 the factor e^{T |Im|} is constant, so
        # the norm should still fall off like |lambda|^{-1}
        cfg = single_solenoid()
        res = np.geomspace(8.0, 40.0, 6)
        norms = [audit.cutoff_resolvent_norm(
            cfg, LogLambda.from_complex(complex(x, -0.5)), n_r=300)
            for x in res]
        x = np.log(res)
        y = np.log(norms)
        slope, intercept = np.polyfit(x, y, 1)
        resid = y - (slope * x + intercept)
        r2 = 1 - np.sum(resid ** 2) / np.sum((y - y.mean()) ** 2)
        assert abs(slope - (-1.0)) < 0.25
        assert r2 > 0.95

    def test_log_line_reports_positive_t_fit(self):
        fit = audit.resolvent_growth_probe(single_solenoid(), a=0.1,
                                           samples=8, n_r=300)
        assert fit.r_squared > 0.95
        assert np.isfinite(fit.t_fit)
        # deeper lines grow relative to the real axis: T_fit > 0
        assert fit.t_fit > 0.0

    def test_probe_argument_validation(self):
        with pytest.raises(ValueError):
            audit.resolvent_growth_probe(single_solenoid(), samples=2)
        with pytest.raises(ValueError):
            audit.resolvent_growth_probe(single_solenoid(), a=-0.1)
