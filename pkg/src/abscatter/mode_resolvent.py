r"""Exact resolvent of a single flux-carrying point, mode by mode.

For total flux ``beta`` concentrated at a center ``c`` the operator
separates in polar coordinates around ``c``: on the angular mode
``e^{i j theta}`` the radial part is

.. math::
    u'' + \frac{1}{r}u' - \frac{\nu_j^2}{r^2}u + \lambda^2 u = f,
    \qquad \nu_j = |j + \beta|,

and the outgoing Green kernel is

.. math::
    G_j(\lambda; r_1, r_2) = \frac{\pi}{2i}
        J_{\nu_j}(\lambda r_<)\, H^{(1)}_{\nu_j}(\lambda r_>).

``SIGN_CONVENTION`` records that this kernel inverts the *shifted* radial
operator above, i.e. it is the kernel of -(P - lambda^2)^{-1} per mode.

The module also provides the gauge phase f with P_0 = e^{-if} P e^{if}
matching the multi-solenoid operator outside the solenoid ball, and the
cutoff pairing <R_0(lambda) F, G> computed by angular mode summation with a
quantitative tail bound.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import cumulative_trapezoid

from .geometry import SolenoidConfig
from .specfn import LogLambda, bessel_j, hankel1

__all__ = [
    "SIGN_CONVENTION",
    "RadialFunction",
    "PolarFunction",
    "PairingResult",
    "gauge_phase",
    "mode_kernel",
    "mode_resolvent_apply",
    "cutoff_pairing",
    "solenoid_kernel",
    "tail_constant",
]

# G_j is the kernel of -(P - lambda^2)^{-1}; multiply by this constant to
# pass to the resolvent (P - lambda^2)^{-1} itself.
SIGN_CONVENTION = -1

_PI = math.pi
_PATH_CLEARANCE = 1e-8


@dataclass(frozen=True)
class RadialFunction:
    """Complex samples on a strictly increasing radial grid.

    The function is understood as zero outside [r[0], r[-1]]; the support
    radius is r[-1].
    """

    r: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "r", np.asarray(self.r, float))
        object.__setattr__(self, "values", np.asarray(self.values, complex))
        if self.r.ndim != 1 or self.values.shape != self.r.shape:
            raise ValueError("r and values must be matching 1-D arrays")
        if not np.all(np.diff(self.r) > 0) or self.r[0] <= 0:
            raise ValueError("r must be strictly increasing and positive")

    @property
    def support_radius(self) -> float:
        return float(self.r[-1])


@dataclass(frozen=True)
class PolarFunction:
    """Samples on a polar grid r x theta around ``center``.

    ``theta`` is the implicit uniform grid 2*pi*k/n_theta, k = 0..n_theta-1,
    so angular Fourier coefficients come from a plain FFT.  ``values`` has
    shape (len(r), n_theta).
    """

    center: np.ndarray
    r: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "center", np.asarray(self.center, float))
        object.__setattr__(self, "r", np.asarray(self.r, float))
        object.__setattr__(self, "values", np.asarray(self.values, complex))
        if self.values.shape[0] != len(self.r):
            raise ValueError("values must have shape (len(r), n_theta)")
        if not np.all(np.diff(self.r) > 0) or self.r[0] <= 0:
            raise ValueError("r must be strictly increasing and positive")

    @property
    def n_theta(self) -> int:
        return self.values.shape[1]

    @property
    def theta(self) -> np.ndarray:
        return 2 * _PI * np.arange(self.n_theta) / self.n_theta

    def points(self) -> np.ndarray:
        """Plane coordinates of the grid, shape (len(r), n_theta, 2)."""
        th = self.theta
        return self.center + self.r[:, None, None] * np.stack(
            [np.cos(th), np.sin(th)], axis=-1
        )

    def modes(self) -> np.ndarray:
        """f_j(r) with F = sum_j f_j(r) e^{i j theta}; shape (len(r), n_theta).

        Column k holds the mode index given by fft frequency ordering
        (0, 1, ..., -1); use np.fft.fftfreq(n_theta, 1/n_theta) for labels.
        """
        return np.fft.fft(self.values, axis=1) / self.n_theta


@dataclass(frozen=True)
class PairingResult:
    value: complex
    tail_bound: float
    mode_cut: int


def _segment_angle_sweep(a: np.ndarray, b: np.ndarray, p: np.ndarray) -> np.ndarray:
    """Continuous change of the angle around p along the straight segment a->b.

    Exact for any segment not through p: a chord never sweeps more than pi.
    a, b may carry leading batch dimensions; p is a single 2-vector.
    """
    u = a - p
    v = b - p
    cross = u[..., 0] * v[..., 1] - u[..., 1] * v[..., 0]
    dot = (u * v).sum(axis=-1)
    return np.arctan2(cross, dot)


def _path_nodes(z: np.ndarray, R0: float, n_arc: int = 8) -> np.ndarray:
    """Nodes of the integration path anchor -> z, shape (..., n_arc+2, 2).

    The path follows the circle of radius 2*R0 from angle 0 to the angle of
    z (as n_arc chords; each chord stays outside radius 2*R0*cos(pi/(2n_arc))
    > R0), then runs radially out or in to z.  The whole path therefore
    keeps a distance > R0 - max|s_i| from every solenoid.
    """
    phi = np.arctan2(z[..., 1], z[..., 0])
    t = np.linspace(0.0, 1.0, n_arc + 1)
    ang = phi[..., None] * t
    arc = 2 * R0 * np.stack([np.cos(ang), np.sin(ang)], axis=-1)
    return np.concatenate([arc, z[..., None, :]], axis=-2)


def gauge_phase(config: SolenoidConfig, z) -> np.ndarray | float:
    """The phase f with P_0 = e^{-if} P_beta e^{if} outside the solenoid ball.

    f(z) is the line integral of (A - A_beta) along a path from the anchor
    (2*R0, 0) to z that stays outside the disc of radius R0, where A is the
    full multi-solenoid potential and A_beta the single-flux potential at
    the flux center.  Each potential is -flux * grad(angle), so the
    integral reduces to exact angle sweeps per path segment.

    Requires |z| > R0.  Accepts a single 2-vector or an (..., 2) array.
    """
    z_arr = np.asarray(z, float)
    scalar = z_arr.ndim == 1
    zb = np.atleast_2d(z_arr)
    if np.any(np.linalg.norm(zb, axis=-1) <= config.R0):
        raise ValueError("gauge_phase is defined only outside the disc of radius R0")
    fs = config.flux_summary()
    nodes = _path_nodes(zb, config.R0)
    a, b = nodes[..., :-1, :], nodes[..., 1:, :]
    out = np.zeros(zb.shape[:-1])
    for s, alpha in zip(config.positions, config.fluxes):
        _check_clearance(a, b, s)
        out -= alpha * _segment_angle_sweep(a, b, s).sum(axis=-1)
    if fs.beta != 0.0:
        _check_clearance(a, b, fs.center)
        out += fs.beta * _segment_angle_sweep(a, b, fs.center).sum(axis=-1)
    return float(out[0]) if scalar else out.reshape(z_arr.shape[:-1])


def _check_clearance(a: np.ndarray, b: np.ndarray, p: np.ndarray):
    """Error out if any segment a->b passes within the clearance of p."""
    d = b - a
    L2 = (d ** 2).sum(axis=-1)
    t = np.clip(((p - a) * d).sum(axis=-1) / np.where(L2 > 0, L2, 1.0), 0.0, 1.0)
    near = a + t[..., None] * d
    dist2 = ((near - p) ** 2).sum(axis=-1)
    if np.any(dist2 < _PATH_CLEARANCE ** 2):
        raise ValueError("integration path passes through a flux point; reroute required")


def _gauge_phase_extended(config: SolenoidConfig, pts: np.ndarray) -> np.ndarray:
    """gauge_phase with radial projection onto |z| slightly above R0 inside.

    The canonical phase only exists outside the solenoid ball; sampled
    functions may nonetheless carry (zero-weight or cutoff-suppressed)
    nodes inside.  Those are assigned the value at the radial projection,
    which keeps the factor e^{if} smooth across the R0 circle.
    """
    pts = np.asarray(pts, float)
    rad = np.linalg.norm(pts, axis=-1)
    floor_r = config.R0 * (1 + 1e-9)
    scale = np.where(rad < floor_r, floor_r / np.where(rad > 0, rad, 1.0), 1.0)
    proj = pts * scale[..., None]
    # points at the exact center have no radial projection; nudge along +x
    proj[rad == 0] = np.array([floor_r, 0.0])
    return gauge_phase(config, proj)


def mode_kernel(j: int, beta: float, lam: LogLambda, r1, r2):
    """G_j(lambda; r1, r2) = (pi/2i) J_nu(lambda r<) H1_nu(lambda r>), nu = |j+beta|.

    Symmetric in (r1, r2) by construction; r1, r2 may be arrays of equal
    shape.  This is the kernel of -(P - lambda^2)^{-1} on mode j (see
    SIGN_CONVENTION).
    """
    nu = abs(j + beta)
    r_lo = np.minimum(r1, r2)
    r_hi = np.maximum(r1, r2)
    jj = bessel_j(nu, lam.modulus * np.asarray(r_lo, float), arg=lam.arg)
    hh = hankel1(nu, lam.modulus * np.asarray(r_hi, float), arg=lam.arg)
    return (_PI / 2j) * jj * hh


def mode_resolvent_apply(j: int, beta: float, lam: LogLambda,
                         f: RadialFunction) -> RadialFunction:
    """u = integral of G_j(lambda; r, r~) f(r~) r~ dr~ on f's grid.

    Split at the kink r~ = r, each side integrated by the composite
    trapezoid rule on the sample grid (the grid always contains the split
    point, so the rule sees smooth integrands and converges at O(h^2)).
    """
    nu = abs(j + beta)
    r = f.r
    jr = bessel_j(nu, lam.modulus * r, arg=lam.arg)
    hr = hankel1(nu, lam.modulus * r, arg=lam.arg)
    inner = cumulative_trapezoid(jr * f.values * r, r, initial=0.0)
    outer = cumulative_trapezoid(hr * f.values * r, r, initial=0.0)
    u = (_PI / 2j) * (hr * inner + jr * (outer[-1] - outer))
    return RadialFunction(r, u)


def tail_constant(R1: float) -> float:
    """Hilbert-Schmidt bound constant for a single mode pairing.

    In the large-order regime |J_nu(z)H1_nu(w)| <= (1/(pi nu))(|z|/|w|)^nu,
    so |G_j| <= 1/(2 nu) on r, r~ <= R1 and the induced bilinear-form bound
    is pi R1^2 / (2 nu) per mode in the normalization used here; a factor 2
    covers the pre-asymptotic slack.
    """
    return _PI * R1 ** 2


def _mode_norms(modes: np.ndarray, r: np.ndarray) -> np.ndarray:
    """L2 norms sqrt(2 pi integral |f_j|^2 r dr) per mode column."""
    return np.sqrt(2 * _PI * np.trapezoid(np.abs(modes) ** 2 * r[:, None], r, axis=0))


def cutoff_pairing(config: SolenoidConfig, lam: LogLambda, f: PolarFunction,
                   g: PolarFunction, mode_cut: int) -> PairingResult:
    """<R_0(lambda) F, G> by angular mode summation around the flux center.

    F, G must be sampled on the same polar grid centered at the flux
    center.  Gauge factors e^{if} are applied to both so the result is the
    pairing for the gauge-transformed operator P_0 that matches the true
    multi-solenoid operator outside the solenoid ball.  Kernels carry the
    sign of mode_kernel (see SIGN_CONVENTION).

    Returns the partial sum over |j| <= mode_cut together with the tail
    bound sum_{|j| > mode_cut} C(R1) nu_j^{-1} ||f_j|| ||g_j|| over the
    modes resolvable on the grid (higher modes carry no sampled content).
    """
    if mode_cut < 1:
        raise ValueError("mode_cut must be >= 1")
    fs = config.flux_summary()
    if not (np.allclose(f.center, fs.center) and np.allclose(g.center, fs.center)):
        raise ValueError("sampled functions must be centered at the flux center")
    if f.r.shape != g.r.shape or not np.allclose(f.r, g.r) or f.n_theta != g.n_theta:
        raise ValueError("f and g must share one polar grid")
    beta = fs.beta
    lam_abs = lam.modulus
    R1 = config.R1
    nu_next = min(abs(mode_cut + 1 + beta), abs(-(mode_cut + 1) + beta))
    if nu_next <= math.e * lam_abs * R1 / 2:
        raise ValueError(
            f"mode_cut {mode_cut} below the asymptotic regime "
            f"(need nu > e|lambda|R1/2 = {math.e * lam_abs * R1 / 2:.2f}); raise it"
        )

    pts = f.points()
    phase = np.exp(1j * _gauge_phase_extended(config, pts))
    fg = PolarFunction(f.center, f.r, f.values * phase)
    gg = PolarFunction(g.center, g.r, g.values * phase)
    fmodes = fg.modes()
    gmodes = gg.modes()
    labels = np.fft.fftfreq(f.n_theta, 1.0 / f.n_theta).astype(int)
    col = {int(j): k for k, j in enumerate(labels)}

    r = f.r
    value = 0.0 + 0.0j
    for j in range(-mode_cut, mode_cut + 1):
        if j not in col:
            continue
        fj = fmodes[:, col[j]]
        gj = gmodes[:, col[j]]
        uj = mode_resolvent_apply(j, beta, lam, RadialFunction(r, fj))
        value += 2 * _PI * np.trapezoid(uj.values * np.conj(gj) * r, r)

    c_tail = tail_constant(R1)
    fnorm = _mode_norms(fmodes, r)
    gnorm = _mode_norms(gmodes, r)
    tail = 0.0
    for k, j in enumerate(labels):
        if abs(j) <= mode_cut:
            continue
        nu = abs(j + beta)
        tail += c_tail / nu * fnorm[k] * gnorm[k]
    return PairingResult(complex(value), float(tail), mode_cut)


def solenoid_kernel(beta: float, lam: LogLambda, z, zp, center=(0.0, 0.0),
                    mode_cut: int | None = None):
    """Kernel of the single-flux resolvent in plane coordinates.

    For integer beta the angular sum telescopes to the closed form

        G(z, z') = -(i/4) e^{-i beta (theta - theta')} H1_0(lambda |z-z'|),

    otherwise the angular modes are summed up to |j| <= mode_cut.  z, zp
    broadcast as (..., 2) arrays; sign as in mode_kernel.
    """
    z = np.asarray(z, float)
    zp = np.asarray(zp, float)
    c = np.asarray(center, float)
    dz = z - c
    dzp = zp - c
    r1 = np.linalg.norm(dz, axis=-1)
    r2 = np.linalg.norm(dzp, axis=-1)
    th1 = np.arctan2(dz[..., 1], dz[..., 0])
    th2 = np.arctan2(dzp[..., 1], dzp[..., 0])
    if abs(beta - round(beta)) < 1e-12:
        b = int(round(beta))
        sep = np.linalg.norm(z - zp, axis=-1)
        h0 = hankel1(0.0, lam.modulus * sep, arg=lam.arg)
        return -0.25j * np.exp(-1j * b * (th1 - th2)) * h0
    if mode_cut is None:
        raise ValueError("mode_cut required for non-integer flux")
    total = np.zeros(np.broadcast_shapes(r1.shape, r2.shape), complex)
    for j in range(-mode_cut, mode_cut + 1):
        gj = mode_kernel(j, beta, lam, r1, r2)
        total = total + gj * np.exp(1j * j * (th1 - th2)) / (2 * _PI)
    return total
