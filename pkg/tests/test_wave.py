"""Tests for the piecewise sine-propagator kernel and decay measurements."""

import math

import numpy as np
import pytest
from scipy import special as sp

from abscatter.wave import (
    BoundaryBandError,
    classify_regime,
    local_decay_fit,
    mode_sum_sine_kernel,
    sine_kernel_mode,
)

PI = math.pi


def regularized_lambda_integral(nu, t, r1, r2,
                                eps_list=(0.32, 0.16, 0.08, 0.04, 0.02)):
    """Independent oracle: int_0^inf e^{-eps L} sin(tL) J_nu(L r1) J_nu(L r2) dL,
    Richardson-extrapolated in eps by Neville's scheme."""
    vals = []
    for eps in eps_list:
        lam_max = 40.0 / eps
        npan = max(200, int(lam_max * (t + r1 + r2) * 3) // 8)
        edges = np.linspace(0, lam_max, npan + 1)
        x, w = np.polynomial.legendre.leggauss(8)
        mid = 0.5 * (edges[1:] + edges[:-1])
        half = 0.5 * np.diff(edges)
        lam = (mid[:, None] + half[:, None] * x[None, :]).ravel()
        ww = (half[:, None] * w[None, :]).ravel()
        g = np.exp(-eps * lam) * np.sin(t * lam) * sp.jv(nu, lam * r1) * sp.jv(nu, lam * r2)
        vals.append(float(g @ ww))
    e = np.array(eps_list)
    tab = np.array(vals)
    for k in range(1, len(e)):
        tab = np.array([
            (e[i] * tab[i + 1] - e[i + k] * tab[i]) / (e[i] - e[i + k])
            for i in range(len(e) - k)
        ])
    return float(tab[0])


class TestRegimes:
    def test_classification(self):
        assert classify_regime(0.5, 1.0, 2.0) == 1
        assert classify_regime(1.5, 1.0, 2.0) == 2
        assert classify_regime(3.5, 1.0, 2.0) == 3

    def test_boundary_band_rejected(self):
        with pytest.raises(BoundaryBandError):
            classify_regime(1.0, 1.0, 2.0)
        with pytest.raises(BoundaryBandError):
            classify_regime(3.0 + 1e-12, 1.0, 2.0)

    def test_finite_propagation_speed_random(self):
        rng = np.random.default_rng(42)
        for _ in range(1000):
            r1, r2 = rng.uniform(0.1, 3.0, 2)
            lo = abs(r1 - r2)
            if lo < 1e-3:
                continue
            t = rng.uniform(0, lo * 0.999)
            nu = rng.uniform(0, 5)
            assert sine_kernel_mode(nu, t, r1, r2) == 0.0

    def test_pre_boundary_zero_mode_sum(self):
        res = mode_sum_sine_kernel(0.4, 1.0, 2.0, 0.3, alpha=0.5)
        assert res.value == 0 and res.tail_bound == 0 and res.regime == 1


class TestSharpHuygens:
    def test_half_integer_modes_vanish_post_wavefront(self):
        for nu in (0.5, 1.5, 2.5, 7.5):
            assert sine_kernel_mode(nu, 5.0, 1.0, 1.0) == 0.0

    def test_alpha_half_full_kernel_vanishes(self):
        res = mode_sum_sine_kernel(5.0, 1.0, 1.2, 0.8, alpha=0.5)
        assert res.value == 0.0
        assert res.tail_bound == 0.0


class TestValues:
    def test_regularized_integral_oracle_regime3(self):
        # alpha = 0.3, mode 0, t = 2.5, r1 = r2 = 1
        got = sine_kernel_mode(0.3, 2.5, 1.0, 1.0)
        want = regularized_lambda_integral(0.3, 2.5, 1.0, 1.0)
        assert abs(got - want) < 1e-4

    def test_regularized_integral_oracle_regime2(self):
        got = sine_kernel_mode(0.7, 1.7, 1.0, 1.0)
        want = regularized_lambda_integral(0.7, 1.7, 1.0, 1.0)
        assert abs(got - want) < 1e-4

    def test_free_mode_zero_against_angular_coefficient(self):
        # nu = 0 equals the angular average of the free 2-D kernel
        # (1/2pi)(t^2 - |z-z'|^2)^{-1/2}; independent quadrature with the
        # angle substitution th = b1 - u^2 where applicable
        from scipy.integrate import quad
        for t, r1, r2 in [(1.5, 1.0, 1.0), (3.0, 1.0, 1.0), (2.0, 0.7, 1.4)]:
            if t < r1 + r2:
                b1 = math.acos((r1 ** 2 + r2 ** 2 - t * t) / (2 * r1 * r2))
            else:
                b1 = PI
            # coefficient = (1/pi) int_0^{b1} (t^2 - d^2(th))^{-1/2} dth with the
            # inverse-sqrt endpoint (only present for t < r1+r2) removed
            def f(u):
                th = b1 - u * u
                d2 = r1 ** 2 + r2 ** 2 - 2 * r1 * r2 * math.cos(th)
                return 2 * u / math.sqrt(t * t - d2)
            if t < r1 + r2:
                val = quad(f, 1e-8, math.sqrt(b1), limit=400)[0] / PI
            else:
                val = quad(lambda th: 1.0 / math.sqrt(
                    t * t - r1 ** 2 - r2 ** 2 + 2 * r1 * r2 * math.cos(th)),
                    0, PI, limit=400)[0] / PI
            got = sine_kernel_mode(0.0, t, r1, r2)
            assert got == pytest.approx(val, rel=1e-6, abs=1e-8)

    def test_wavefront_limit_value(self):
        # t -> |r1-r2| from above: the mode value jumps to 1/(2 sqrt(r1 r2))
        r1, r2 = 1.0, 2.0
        v = sine_kernel_mode(0.4, 1.0 + 1e-6, r1, r2)
        assert v == pytest.approx(1.0 / (2 * math.sqrt(r1 * r2)), rel=2e-2)


class TestModeSum:
    def test_hermitian_symmetry(self):
        # self-adjointness: swapping the two points conjugates the kernel
        a = mode_sum_sine_kernel(2.7, 0.8, 1.1, 0.6, alpha=0.3)
        b = mode_sum_sine_kernel(2.7, 1.1, 0.8, -0.6, alpha=0.3)
        assert abs(a.value - np.conj(b.value)) < 1e-10

    def test_theta_periodicity_exact(self):
        a = mode_sum_sine_kernel(2.7, 0.8, 1.1, 0.6, alpha=0.3)
        b = mode_sum_sine_kernel(2.7, 0.8, 1.1, 0.6 + 2 * PI, alpha=0.3)
        assert abs(a.value - b.value) < 1e-12

    def test_tail_bound_dominates_truncation(self):
        lo = mode_sum_sine_kernel(2.7, 0.8, 1.1, 0.6, alpha=0.3, mode_cut=8)
        hi = mode_sum_sine_kernel(2.7, 0.8, 1.1, 0.6, alpha=0.3, mode_cut=20)
        assert abs(lo.value - hi.value) <= lo.tail_bound + 1e-15

    def test_small_grid_against_oracle(self):
        # 2x2x2 regime-3 corner of the acceptance grid
        for t in (2.6, 3.4):
            for r1 in (0.5, 1.1):
                for r2 in (0.5, 1.1):
                    got = sine_kernel_mode(0.3, t, r1, r2)
                    want = regularized_lambda_integral(0.3, t, r1, r2)
                    assert abs(got - want) < 1e-4


class TestDerivatives:
    @pytest.mark.parametrize("nu", [0.3, 0.7, 1.3])
    def test_first_derivative_fd_oracle(self, nu):
        t0, h = 3.0, 1e-5
        fd = (sine_kernel_mode(nu, t0 + h, 1, 1) - sine_kernel_mode(nu, t0 - h, 1, 1)) / (2 * h)
        an = sine_kernel_mode(nu, t0, 1, 1, deriv=1)
        assert an == pytest.approx(fd, rel=1e-6, abs=1e-10)

    def test_second_derivative_fd_oracle(self):
        t0, h = 3.0, 1e-4
        f = lambda t: sine_kernel_mode(0.3, t, 1, 1)
        fd = (f(t0 + h) - 2 * f(t0) + f(t0 - h)) / h ** 2
        an = sine_kernel_mode(0.3, t0, 1, 1, deriv=2)
        assert an == pytest.approx(fd, rel=1e-5)

    def test_regime2_derivative_rejected(self):
        with pytest.raises(ValueError):
            sine_kernel_mode(0.3, 1.5, 1.0, 1.0, deriv=1)


class TestDecayFit:
    def test_sharp_exponent_j0(self):
        # post-wavefront kernel decays like t^{-2 nu0 - 1 - j}: the
        # wavefront-distance prefactor contributes the extra power of t
        fit = local_decay_fit(0.3, 1.0, 0, np.geomspace(10, 1000, 9))
        assert fit.slope == pytest.approx(-2 * 0.3 - 1.0, abs=0.05)
        assert fit.r_squared > 0.999

    def test_sharp_exponent_j1_adds_one(self):
        f0 = local_decay_fit(0.3, 1.0, 0, np.geomspace(10, 1000, 9))
        f1 = local_decay_fit(0.3, 1.0, 1, np.geomspace(10, 1000, 9))
        assert f1.slope - f0.slope == pytest.approx(-1.0, abs=0.1)

    def test_alpha_quarter(self):
        fit = local_decay_fit(0.25, 1.0, 0, np.geomspace(10, 1000, 9))
        assert fit.slope == pytest.approx(-2 * 0.25 - 1.0, abs=0.05)

    def test_degenerate_half_flux_rejected(self):
        with pytest.raises(ValueError, match="degenerate"):
            local_decay_fit(0.5, 1.0, 0, np.geomspace(10, 100, 5))

    def test_grid_must_be_post_wavefront(self):
        with pytest.raises(ValueError):
            local_decay_fit(0.3, 1.0, 0, np.geomspace(1.0, 100, 5))
