"""Tests for the continued Bessel evaluations and the Legendre-Q integral."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from abscatter import specfn
from abscatter.specfn import LogLambda, bessel_j, bessel_k, hankel1, wronskian_check

PI = math.pi


class TestLogLambda:
    def test_projection(self):
        lam = LogLambda(2.0, 0.3)
        assert lam.to_complex() == pytest.approx(2.0 * np.exp(0.3j))

    def test_sheet_index(self):
        assert LogLambda(1.0, 0.0).sheet == 0
        assert LogLambda(1.0, PI).sheet == 0
        assert LogLambda(1.0, PI + 0.01).sheet == 1
        assert LogLambda(1.0, -PI).sheet == -1
        assert LogLambda(1.0, 4 * PI).sheet == 2

    def test_rejects_nonpositive_modulus(self):
        with pytest.raises(ValueError):
            LogLambda(0.0, 1.0)

    def test_roundtrip_from_complex(self):
        w = 1.5 * np.exp(2.0j)
        lam = LogLambda.from_complex(w, sheet=-1)
        assert lam.modulus == pytest.approx(1.5)
        assert lam.arg == pytest.approx(2.0 - 2 * PI)
        assert lam.to_complex() == pytest.approx(w)

    def test_scaled_keeps_arg(self):
        lam = LogLambda(2.0, -5.0).scaled(3.0)
        assert lam.modulus == pytest.approx(6.0)
        assert lam.arg == -5.0


class TestHalfIntegerClosedForms:
    """J and H1 at nu = 1/2, 3/2, 5/2 against the elementary expressions."""

    @staticmethod
    def _closed_j(nu, z):
        pref = np.sqrt(2.0 / (PI * z))
        if nu == 0.5:
            return pref * np.sin(z)
        if nu == 1.5:
            return pref * (np.sin(z) / z - np.cos(z))
        if nu == 2.5:
            return pref * ((3 / z ** 2 - 1) * np.sin(z) - 3 * np.cos(z) / z)
        raise ValueError(nu)

    @staticmethod
    def _closed_h1(nu, z):
        pref = np.sqrt(2.0 / (PI * z)) * np.exp(1j * z)
        if nu == 0.5:
            return -1j * pref
        if nu == 1.5:
            return -pref * (1 + 1j / z)
        if nu == 2.5:
            return 1j * pref * (1 + 3j / z - 3 / z ** 2)
        raise ValueError(nu)

    @pytest.mark.parametrize("nu", [0.5, 1.5, 2.5])
    @pytest.mark.parametrize("z", [0.7, 2.0, np.pi / 2, 1.0 + 0.8j, 5.0 - 2.0j])
    def test_agreement(self, nu, z):
        z = complex(z)
        assert abs(bessel_j(nu, z) - self._closed_j(nu, z)) <= 1e-10 * max(1, abs(self._closed_j(nu, z)))
        assert abs(hankel1(nu, z) - self._closed_h1(nu, z)) <= 1e-10 * max(1, abs(self._closed_h1(nu, z)))

    def test_spot_value_two_over_pi(self):
        # J_{1/2}(pi/2) = sqrt(2/(pi*pi/2)) * sin(pi/2) = 2/pi; same modulus for H1
        assert bessel_j(0.5, PI / 2 + 0j) == pytest.approx(2 / PI, abs=1e-12)
        assert hankel1(0.5, PI / 2 + 0j) == pytest.approx(-2j / PI * np.exp(1j * PI / 2), abs=1e-12)


class TestPrincipalBranch:
    def test_j0_at_origin_limit(self):
        assert bessel_j(0.0, 1e-12 + 0j) == pytest.approx(1.0, abs=1e-10)

    def test_modified_bessel_relation(self):
        # H1_nu(i tau) = (2/(i pi)) e^{-i nu pi/2} K_nu(tau)
        nu, tau = 0.3, 1.0
        lhs = hankel1(nu, LogLambda(tau, PI / 2))
        rhs = (2 / (1j * PI)) * np.exp(-1j * nu * PI / 2) * bessel_k(nu, tau)
        assert abs(lhs - rhs) < 1e-10

    def test_large_order_asymptotic(self):
        # H1_nu(z) ~ -i sqrt(2/(pi nu)) (e z / (2 nu))^{-nu}
        # leading order only: the first dropped corrections are the Stirling
        # term 1/(12 nu) and the series term (z/2)^2/(nu-1), about 4e-3 here
        nu, z = 80.0, 1.0
        asym = -1j * math.sqrt(2 / (PI * nu)) * (math.e * z / (2 * nu)) ** (-nu)
        assert abs(hankel1(nu, complex(z)) / asym - 1) < 5e-3

    @given(
        re=st.floats(0.2, 8.0),
        im=st.floats(0.01, 3.0),
        nu=st.floats(0.0, 12.0),
    )
    @settings(max_examples=60, deadline=None)
    def test_conjugation_symmetry(self, re, im, nu):
        z = complex(re, im)
        a = bessel_j(nu, np.conj(z))
        b = np.conj(bessel_j(nu, z))
        assert abs(a - b) <= 1e-12 * max(1.0, abs(b))


class TestContinuation:
    def test_sheet_consistency(self):
        # direct value at arg 0.1 vs continuation from arg 0.1 - 2 pi, undone
        # by the m = -2 connection formula for H1
        nu, mod = 1.3, 2.0
        direct = hankel1(nu, LogLambda(mod, 0.1))
        deep = hankel1(nu, LogLambda(mod, 0.1 - 2 * PI))
        # invert H1(z e^{-2 pi i}) = c1 H1(z) + c2 H2(z) using H2 = 2J - H1
        s = math.sin(nu * PI)
        c1 = math.sin(3 * nu * PI) / s
        c2 = -np.exp(-1j * nu * PI) * math.sin(-2 * nu * PI) / s
        h2 = 2 * bessel_j(nu, LogLambda(mod, 0.1)) - direct
        assert abs(deep - (c1 * direct + c2 * h2)) < 1e-8

    def test_j_continuation_factor(self):
        nu, mod = 0.7, 3.0
        base = bessel_j(nu, LogLambda(mod, 0.2))
        lifted = bessel_j(nu, LogLambda(mod, 0.2 + 2 * PI))
        assert abs(lifted - base * np.exp(2j * PI * nu)) < 1e-10 * abs(base)

    def test_integer_order_continuation_is_trivial_for_j(self):
        base = bessel_j(3.0, LogLambda(2.0, 0.4))
        lifted = bessel_j(3.0, LogLambda(2.0, 0.4 + 2 * PI))
        assert abs(lifted - base) < 1e-12

    def test_wronskian_on_negative_imaginary_axis(self):
        # arg = -pi/2 reaches the lower rim used by the resonance search
        assert wronskian_check(5.7, LogLambda(1.0, -PI / 2), 1.0) < 1e-9


class TestWronskian:
    def test_spot_values(self):
        assert wronskian_check(0.3, LogLambda.from_complex(2 + 0.5j), 1.7) < 1e-10
        assert wronskian_check(0.0, LogLambda(1.0, 0.0), 1.0) < 1e-12

    def test_grid(self):
        # the acceptance grid: 10 orders x 10 lambda (modulus and unwound arg
        # swept together) x 10 radii
        nus = np.linspace(0.0, 20.0, 10)
        mods = np.linspace(0.5, 50.0, 10)
        args = np.linspace(-3 * PI / 2, PI / 2, 10)
        rs = np.linspace(0.1, 10.0, 10)
        worst = 0.0
        for nu in nus:
            for mod, arg in zip(mods, args):
                lam = LogLambda(mod, arg)
                for r in rs:
                    worst = max(worst, wronskian_check(float(nu), lam, float(r)))
        assert worst < 1e-9

    def test_rejects_nonpositive_radius(self):
        with pytest.raises(ValueError):
            wronskian_check(0.5, LogLambda(1.0, 0.0), 0.0)


class TestLegendreQ:
    def test_q0_closed_form(self):
        # Q_0(x) = (1/2) log((x+1)/(x-1)) at x = cosh 1
        x = math.cosh(1.0)
        expected = 0.5 * math.log((x + 1) / (x - 1))
        got = specfn.legendre_q_minus_half(0.5, 1.0)
        assert got == pytest.approx(expected, rel=1e-8)

    def test_dense_trapezoid_oracle(self):
        nu, eta = 1.5, 0.5
        u = np.linspace(0.0, math.sqrt(60.0 / nu), 10 ** 6)
        s = eta + u ** 2
        # 2 cosh(s) - 2 cosh(eta) = 4 sinh((s+eta)/2) sinh(u^2/2): exact
        # rewrite that survives u -> 0 in floating point
        d = 4 * np.sinh((s + eta) / 2) * np.sinh(u ** 2 / 2)
        integrand = np.empty_like(u)
        integrand[1:] = 2 * u[1:] / np.sqrt(d[1:]) * np.exp(-s[1:] * nu)
        integrand[0] = 2 / math.sqrt(2 * math.sinh(eta)) * math.exp(-eta * nu)
        oracle = np.trapezoid(integrand, u)
        assert specfn.legendre_q_minus_half(nu, eta) == pytest.approx(oracle, abs=1e-7)

    def test_monotone_decay_in_eta(self):
        vals = [specfn.legendre_q_minus_half(0.8, eta) for eta in (0.5, 1.0, 2.0, 5.0, 10.0)]
        assert all(a > b > 0 for a, b in zip(vals, vals[1:]))
        assert vals[-1] < 1e-3

    def test_divergence_errors(self):
        with pytest.raises(ValueError):
            specfn.legendre_q_minus_half(0.0, 1.0)
        with pytest.raises(ValueError):
            specfn.legendre_q_minus_half(0.5, 0.0)


class TestErrorPaths:
    def test_negative_order_rejected(self):
        with pytest.raises(ValueError):
            bessel_j(-0.5, 1.0 + 0j)

    def test_mixed_phase_array_rejected(self):
        with pytest.raises(ValueError):
            bessel_j(0.5, np.array([1 + 1j, 1 - 1j]))

    def test_overflow_flagged(self):
        with pytest.raises(specfn.EvaluationOverflow):
            hankel1(0.5, LogLambda(3000.0, -PI / 2))
