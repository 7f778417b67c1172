r"""Bessel-family special functions on the logarithmic cover of the punctured plane.

Evaluates J_nu, H^(1)_nu (and the modified functions I_nu, K_nu) for real
order nu >= 0 and complex argument whose phase is tracked *continuously*,
i.e. the argument lives on the Riemann surface of log z rather than on the
principal branch.  Phases outside (-pi/2, pi/2] are reduced to the principal
zone with the standard analytic-continuation connection formulas

.. math::
    J_\nu(z e^{m\pi i}) = e^{m\nu\pi i} J_\nu(z)

    H^{(1)}_\nu(z e^{m\pi i}) =
        -\frac{\sin((m-1)\nu\pi)}{\sin(\nu\pi)} H^{(1)}_\nu(z)
        - e^{-\nu\pi i}\frac{\sin(m\nu\pi)}{\sin(\nu\pi)} H^{(2)}_\nu(z)

(DLMF 10.11), with the integer-order limit of the sine ratios handled
explicitly.  Derivatives are always taken through the three-term recurrence,
never by differencing, so Wronskian residuals isolate evaluation error.

All functions are pure; safe for concurrent use.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate
from scipy import special as _sp

__all__ = [
    "LogLambda",
    "EvaluationOverflow",
    "bessel_j",
    "hankel1",
    "bessel_i",
    "bessel_k",
    "bessel_j_dz",
    "hankel1_dz",
    "wronskian_check",
    "legendre_q_minus_half",
]

_PI = math.pi


class EvaluationOverflow(ArithmeticError):
    """Result exceeds representable magnitude (deep sheet / extreme order).

    Signals the caller that a scaled evaluation strategy is required; no
    scaled variants are exposed here.
    """


@dataclass(frozen=True)
class LogLambda:
    """A point on the logarithmic cover of C \\ {0}.

    ``modulus`` is |lambda| > 0 and ``arg`` the *unwound* argument in
    radians; two points are the same iff both fields match.  The projection
    to C is ``modulus * exp(1j * arg)``.
    """

    modulus: float
    arg: float

    def __post_init__(self):
        if not self.modulus > 0.0:
            raise ValueError(f"modulus must be positive, got {self.modulus}")

    def to_complex(self) -> complex:
        return self.modulus * complex(math.cos(self.arg), math.sin(self.arg))

    @property
    def sheet(self) -> int:
        """Index of the 2*pi sheet containing ``arg`` (0 for (-pi, pi])."""
        return math.ceil((self.arg - _PI) / (2 * _PI))

    def scaled(self, r: float) -> "LogLambda":
        """The point lambda * r for r > 0 (same unwound argument)."""
        if not r > 0.0:
            raise ValueError("scale factor must be positive")
        return LogLambda(self.modulus * r, self.arg)

    @staticmethod
    def from_complex(w: complex, sheet: int = 0) -> "LogLambda":
        w = complex(w)
        if w == 0:
            raise ValueError("0 does not lift to the logarithmic cover")
        return LogLambda(abs(w), np.angle(w) + 2 * _PI * sheet)


def _split_phase(arg: float) -> tuple[float, int]:
    """Write arg = theta_p + m*pi with theta_p in (-pi/2, pi/2]."""
    m = math.floor(arg / _PI + 0.5)
    theta = arg - m * _PI
    if theta <= -_PI / 2:  # boundary tie from floor
        m -= 1
        theta = arg - m * _PI
    return theta, m


def _sin_ratio(k: int, nu: float) -> float:
    """sin(k*nu*pi)/sin(nu*pi), with the integer-order limit k*(-1)^((k-1)n)."""
    n = round(nu)
    if abs(nu - n) < 1e-9:
        return k * (-1.0) ** ((k - 1) * n)
    return math.sin(k * nu * _PI) / math.sin(nu * _PI)


def _as_modulus_arg(z) -> tuple[np.ndarray, float, bool]:
    """Normalize input to (modulus array, unwound scalar arg, scalar flag)."""
    if isinstance(z, LogLambda):
        return np.asarray(z.modulus, dtype=float), z.arg, True
    zarr = np.asarray(z, dtype=complex)
    scalar = zarr.ndim == 0
    mod = np.abs(zarr)
    if np.any(mod == 0):
        raise ValueError("argument must be nonzero")
    args = np.angle(zarr)
    a0 = float(args.flat[0])
    if not np.allclose(args, a0, atol=1e-13):
        raise ValueError(
            "array arguments must share a common phase; pass moduli with a "
            "single LogLambda-style phase instead"
        )
    return mod, a0, scalar


def _check_finite(val: np.ndarray):
    if not np.all(np.isfinite(val)):
        raise EvaluationOverflow(
            "special-function value not representable (overflow or total "
            "precision loss); reduce order/sheet depth or rescale"
        )


def _j_principal(nu: float, zp: np.ndarray) -> np.ndarray:
    return _sp.jv(nu, zp)


def bessel_j(nu: float, z, arg: float | None = None):
    """J_nu at a point of the logarithmic cover.

    ``z`` may be a complex scalar/array (principal phase), a LogLambda, or an
    array of moduli combined with an explicit unwound ``arg``.
    """
    if nu < 0:
        raise ValueError("order must be >= 0")
    if arg is not None:
        mod = np.asarray(z, dtype=float)
        scalar = mod.ndim == 0
    else:
        mod, arg, scalar = _as_modulus_arg(z)
    theta, m = _split_phase(arg)
    zp = mod * np.exp(1j * theta)
    val = _j_principal(nu, zp)
    if m != 0:
        val = val * np.exp(1j * m * nu * _PI)
    val = np.asarray(val, dtype=complex)
    _check_finite(val)
    return complex(val[()]) if scalar else val


def hankel1(nu: float, z, arg: float | None = None):
    """H^(1)_nu at a point of the logarithmic cover (phase tracked as in bessel_j)."""
    if nu < 0:
        raise ValueError("order must be >= 0")
    if arg is not None:
        mod = np.asarray(z, dtype=float)
        scalar = mod.ndim == 0
    else:
        mod, arg, scalar = _as_modulus_arg(z)
    theta, m = _split_phase(arg)
    zp = mod * np.exp(1j * theta)
    if m == 0:
        val = _sp.hankel1(nu, zp)
    else:
        c1 = -_sin_ratio(m - 1, nu)
        c2 = -np.exp(-1j * nu * _PI) * _sin_ratio(m, nu)
        val = c1 * _sp.hankel1(nu, zp) + c2 * _sp.hankel2(nu, zp)
    val = np.asarray(val, dtype=complex)
    _check_finite(val)
    return complex(val[()]) if scalar else val


def bessel_i(nu: float, z):
    """Modified Bessel I_nu, principal branch (oracle helper)."""
    val = np.asarray(_sp.iv(nu, np.asarray(z, dtype=complex)), dtype=complex)
    _check_finite(val)
    return complex(val[()]) if val.ndim == 0 else val


def bessel_k(nu: float, z):
    """Modified Bessel K_nu, principal branch (oracle helper)."""
    val = np.asarray(_sp.kv(nu, np.asarray(z, dtype=complex)), dtype=complex)
    _check_finite(val)
    return complex(val[()]) if val.ndim == 0 else val


def bessel_j_dz(nu: float, z, arg: float | None = None):
    """dJ_nu/dz via the recurrence (J_{nu-1} - J_{nu+1})/2.

    For nu < 1 the nu-1 term has negative order; the continuation factor
    e^{m(nu-1)pi i} applies verbatim there.
    """
    if arg is None:
        mod, arg, scalar = _as_modulus_arg(z)
    else:
        mod = np.asarray(z, dtype=float)
        scalar = mod.ndim == 0
    theta, m = _split_phase(arg)
    zp = mod * np.exp(1j * theta)
    lo = _sp.jv(nu - 1, zp)
    hi = _sp.jv(nu + 1, zp)
    if m != 0:
        lo = lo * np.exp(1j * m * (nu - 1) * _PI)
        hi = hi * np.exp(1j * m * (nu + 1) * _PI)
    val = np.asarray(0.5 * (lo - hi), dtype=complex)
    _check_finite(val)
    return complex(val[()]) if scalar else val


def _hankel1_order(nu: float, zp: np.ndarray, m: int) -> np.ndarray:
    """Continued H^(1) of (possibly negative) real order at principal zp."""
    if nu >= 0:
        if m == 0:
            return _sp.hankel1(nu, zp)
        c1 = -_sin_ratio(m - 1, nu)
        c2 = -np.exp(-1j * nu * _PI) * _sin_ratio(m, nu)
        return c1 * _sp.hankel1(nu, zp) + c2 * _sp.hankel2(nu, zp)
    # H^(1)_{-nu}(z) = e^{nu pi i} H^(1)_nu(z), valid on every sheet
    return np.exp(-1j * nu * _PI) * _hankel1_order(-nu, zp, m)


def hankel1_dz(nu: float, z, arg: float | None = None):
    """dH^(1)_nu/dz via the recurrence (H_{nu-1} - H_{nu+1})/2."""
    if arg is None:
        mod, arg, scalar = _as_modulus_arg(z)
    else:
        mod = np.asarray(z, dtype=float)
        scalar = mod.ndim == 0
    theta, m = _split_phase(arg)
    zp = mod * np.exp(1j * theta)
    val = 0.5 * (_hankel1_order(nu - 1, zp, m) - _hankel1_order(nu + 1, zp, m))
    val = np.asarray(val, dtype=complex)
    _check_finite(val)
    return complex(val[()]) if scalar else val


def wronskian_check(nu: float, lam: LogLambda, r: float) -> float:
    """Residual of J_nu(lam r) d_r H1_nu(lam r) - d_r J_nu(lam r) H1_nu(lam r) = 2i/(pi r).

    Derivatives in r come from the order recurrence times lam; the exact
    Wronskian 2i/(pi r) holds on every sheet, so the residual measures pure
    evaluation error.  The two products can reach e^{2 |Im(lam r)|} on deep
    sheets while their difference stays O(1/r): the returned residual is
    scaled by max(1, |product terms|), i.e. absolute in the benign regime
    and relative where the cancellation itself is the accuracy limit.  Points
    whose intermediates overflow double precision are recomputed in mpmath.
    """
    if not r > 0:
        raise ValueError("r must be positive")
    zr = lam.scaled(r)
    lam_c = lam.to_complex()
    try:
        j = bessel_j(nu, zr)
        h = hankel1(nu, zr)
        dj = lam_c * bessel_j_dz(nu, zr)
        dh = lam_c * hankel1_dz(nu, zr)
    except EvaluationOverflow:
        return _wronskian_check_mp(nu, lam, r)
    t1 = j * dh
    t2 = dj * h
    target = 2j / (_PI * r)
    return abs(t1 - t2 - target) / max(1.0, abs(t1), abs(t2))


def _wronskian_check_mp(nu: float, lam: LogLambda, r: float) -> float:
    """High-precision fallback for deep-sheet points that overflow doubles."""
    import mpmath as mp

    with mp.workdps(60 + int(0.9 * lam.modulus * r)):
        theta, m = _split_phase(lam.arg)
        zp = mp.mpf(lam.modulus * r) * mp.exp(1j * mp.mpf(theta))
        lam_mp = mp.mpf(lam.modulus) * mp.exp(1j * mp.mpf(lam.arg))
        nu_mp = mp.mpf(nu)
        jfac = mp.exp(1j * m * nu_mp * mp.pi)

        def sin_ratio(k, order):
            n = round(float(order))
            if abs(float(order) - n) < 1e-9:
                return mp.mpf(k * (-1) ** ((k - 1) * n))
            return mp.sin(k * order * mp.pi) / mp.sin(order * mp.pi)

        def jc(order, fac_order):
            return mp.besselj(order, zp) * mp.exp(1j * m * fac_order * mp.pi)

        def h1c(order):
            h1p = mp.hankel1(order, zp)
            if m == 0:
                return h1p
            return (-sin_ratio(m - 1, order) * h1p
                    - mp.exp(-1j * order * mp.pi) * sin_ratio(m, order) * mp.hankel2(order, zp))

        j = jc(nu_mp, nu_mp)
        dj = lam_mp * (jc(nu_mp - 1, nu_mp - 1) - jc(nu_mp + 1, nu_mp + 1)) / 2
        h = h1c(nu_mp)
        dh = lam_mp * (h1c(nu_mp - 1) - h1c(nu_mp + 1)) / 2
        t1 = j * dh
        t2 = dj * h
        target = 2j / (mp.pi * mp.mpf(r))
        res = abs(t1 - t2 - target) / max(mp.mpf(1), abs(t1), abs(t2))
        return float(res)


def legendre_q_minus_half(nu: float, eta: float) -> float:
    r"""The Legendre-Q integral \int_eta^inf (2 cosh s - 2 cosh eta)^{-1/2} e^{-s nu} ds.

    Equals Q_{nu-1/2}(cosh eta).  The endpoint inverse-square-root singularity
    is removed by s = eta + u**2 before adaptive quadrature; relative target
    1e-10 (bounded below by quad's ability on the transformed integrand).
    """
    if nu <= 0:
        raise ValueError("integral diverges for nu <= 0")
    if eta <= 0:
        raise ValueError("integral diverges at eta = 0 (Q at argument 1)")

    def integrand(u: float) -> float:
        s = eta + u * u
        d = 2.0 * math.cosh(s) - 2.0 * math.cosh(eta)
        if d <= 0.0:  # u == 0, use the limit 2/sqrt(2 sinh eta)
            return 2.0 / math.sqrt(2.0 * math.sinh(eta)) * math.exp(-s * nu)
        return 2.0 * u / math.sqrt(d) * math.exp(-s * nu)

    # e^{-nu u^2} tail: cut where the integrand is below 1e-18 relative
    u_max = math.sqrt(max(50.0 / nu, 50.0))
    val, _err = integrate.quad(integrand, 0.0, u_max, limit=200, epsabs=0.0, epsrel=1e-11)
    return val
