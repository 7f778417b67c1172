r"""Local smoothing for a single flux point via exact spectral evolution.

Each angular mode j of the one-solenoid Hamiltonian diagonalizes in the
Hankel transform of order nu = |j + alpha|: a state is a spectral profile
u~(lambda) on a quadrature grid, the Schrodinger flow is the unitary
multiplier e^{-i t lambda^2}, and the weighted norm

.. math::
    \|\chi u\|_{1/2}^2 = \|\chi u\|_{L^2}^2
        + \int_0^\infty \lambda\,|\widehat{\chi u}(\lambda)|^2
          \,\lambda\,d\lambda

is evaluated by transforming to real space, applying the radial cutoff chi
at ``chi_radius``, and re-expanding in the same Hankel mode.

Because the cutoff and both transforms are linear, the squared norm is a
fixed symmetric quadratic form v* C v in the evolved spectral profile
v = e^{-i t lambda^2} u~, and its time integral over [0, T] is computed in
closed form: the entries pick up the factor
(1 - e^{-iT(lam_i^2 - lam_k^2)}) / (i (lam_i^2 - lam_k^2)).

A discrete spectral grid is only faithful up to its recurrence horizon
t_safe ~ pi / max(dE): beyond it the discretized packet aliases back into
the cutoff region (a quasi-revival with no continuum counterpart).  Two
measures keep the quotient honest on [0, T] with T past the horizon:

* ``band_limited_state`` places quadrature panels uniformly in energy
  across the band, so the horizon depends only on the panel count, not on
  the band location; and
* the closed-form integral is taken over [0, min(T, t_safe)] and the
  remainder is bounded by (T - t_safe) times the measured integrand near
  t_safe, where the continuum integrand has already decayed
  superalgebraically (the data are band-limited away from zero frequency,
  so the cutoff region contains no stationary frequency at late times).
  The bound is added to the result and reported separately.

Only the single-solenoid flow is treated: it is the regime with an exact
spectral evolver, so every measured quotient is free of evolution error.
The smoothing constant itself is measured, never asserted.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy import special as sp

__all__ = [
    "ModeState",
    "ReExpansionError",
    "SmoothingResult",
    "band_limited_state",
    "evolve",
    "half_domain_norm",
    "smoothing_quotient",
    "spectral_grid",
]

_GAUSS_PANEL = 16
_BAND_PANEL = 8
_REEXPANSION_TOL = 1e-6


class ReExpansionError(RuntimeError):
    """Cutoff re-expansion lost more mass than the tolerance allows."""


def _composite_gauss(a, b, n_points, panel=_GAUSS_PANEL):
    """Composite Gauss-Legendre nodes and weights on (a, b)."""
    n_panels = max(1, int(math.ceil(n_points / panel)))
    x, w = np.polynomial.legendre.leggauss(panel)
    edges = np.linspace(a, b, n_panels + 1)
    return _gauss_on_edges(edges, x, w)


def _gauss_on_edges(edges, x, w):
    mid = 0.5 * (edges[1:] + edges[:-1])
    half = 0.5 * np.diff(edges)
    nodes = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    weights = (half[:, None] * w[None, :]).ravel()
    return nodes, weights


def spectral_grid(lam_max, n_points=2048):
    """Quadrature grid on (0, lam_max] shared by all modes of one state."""
    if lam_max <= 0:
        raise ValueError("lam_max must be positive")
    return _composite_gauss(0.0, float(lam_max), n_points)


@dataclass(frozen=True)
class ModeState:
    """Single angular mode in its Hankel-diagonal representation.

    Parameters
    ----------
    j : int
        Angular mode index.
    nu : float
        Bessel order |j + alpha|.
    lam : ndarray
        Quadrature nodes on (0, lam_max].
    lam_weights : ndarray
        Quadrature weights matching ``lam``.
    profile : ndarray
        Spectral coefficients u~(lambda) on the nodes.
    """

    j: int
    nu: float
    lam: np.ndarray
    lam_weights: np.ndarray
    profile: np.ndarray

    def norm_sq(self):
        """Discrete L^2 norm squared, int |u~|^2 lambda dlambda."""
        return float(np.sum(self.lam_weights * self.lam
                            * np.abs(self.profile) ** 2))


def band_limited_state(j, alpha, lam_lo, lam_hi, seed=None, n_points=2048):
    """Random state supported on the spectral band [lam_lo, lam_hi].

    The grid reaches four times the band limit (headroom for cutoff
    re-expansion) and places its quadrature panels uniformly in energy
    lambda^2 across the band, so the evolution horizon of the discretized
    flow scales with the panel count alone.  The profile is a smooth
    random bump on the band, normalized to unit L^2 norm.
    """
    if not 0 < lam_lo < lam_hi:
        raise ValueError("need 0 < lam_lo < lam_hi")
    n_low = max(64, min(256, n_points // 8))
    n_high = max(128, min(512, n_points // 4))
    n_band = max(256, n_points - n_low - n_high)
    x16, w16 = np.polynomial.legendre.leggauss(_GAUSS_PANEL)
    x8, w8 = np.polynomial.legendre.leggauss(_BAND_PANEL)
    lam_a, w_a = _gauss_on_edges(
        np.linspace(0.0, lam_lo, n_low // _GAUSS_PANEL + 1), x16, w16)
    e_edges = np.linspace(lam_lo ** 2, lam_hi ** 2,
                          n_band // _BAND_PANEL + 1)
    lam_b, w_b = _gauss_on_edges(np.sqrt(e_edges), x8, w8)
    lam_c, w_c = _gauss_on_edges(
        np.linspace(lam_hi, 4.0 * lam_hi, n_high // _GAUSS_PANEL + 1),
        x16, w16)
    lam = np.concatenate([lam_a, lam_b, lam_c])
    w = np.concatenate([w_a, w_b, w_c])

    rng = np.random.default_rng(seed)
    t = (2.0 * lam - (lam_lo + lam_hi)) / (lam_hi - lam_lo)
    envelope = np.where(np.abs(t) < 1.0,
                        np.exp(-1.0 / np.maximum(1.0 - t * t, 1e-300)), 0.0)
    n_waves = 4
    phases = rng.uniform(0, 2 * np.pi, n_waves)
    amps = rng.standard_normal(n_waves) + 1j * rng.standard_normal(n_waves)
    wiggle = sum(a * np.exp(1j * (k + 1) * np.pi * t + 1j * p)
                 for k, (a, p) in enumerate(zip(amps, phases)))
    profile = envelope * wiggle
    state = ModeState(j=int(j), nu=abs(j + alpha), lam=lam, lam_weights=w,
                      profile=profile)
    scale = math.sqrt(state.norm_sq())
    if scale == 0:
        raise ValueError("empty band")
    return replace(state, profile=profile / scale)


def evolve(state, t):
    """Apply the Schrodinger flow for time t: multiply by e^{-i t lambda^2}."""
    return replace(state, profile=state.profile
                   * np.exp(-1j * t * state.lam ** 2))


def _smooth_transition(x):
    """C-infinity monotone step: 0 for x<=0, 1 for x>=1."""
    x = np.clip(np.asarray(x, dtype=float), 0.0, 1.0)
    with np.errstate(divide="ignore", over="ignore"):
        f = np.where(x > 0, np.exp(-1.0 / np.maximum(x, 1e-300)), 0.0)
        g = np.where(x < 1, np.exp(-1.0 / np.maximum(1.0 - x, 1e-300)), 0.0)
    return f / (f + g)


def _chi(r, chi_radius):
    """Radial cutoff: 1 on [0, chi_radius], smooth C-inf drop to 0 at 2 chi_radius."""
    return _smooth_transition((2.0 * chi_radius - r) / chi_radius)


def _support_slice(state):
    """Contiguous index range carrying the nonzero part of the profile."""
    idx = np.flatnonzero(np.abs(state.profile) > 0)
    if idx.size == 0:
        return None
    return slice(int(idx[0]), int(idx[-1]) + 1)


_piece_cache = {}


def _pieces(nu, chi_radius, lam_sub, wl_sub):
    """Transform matrices for one (order, cutoff, support grid) combination.

    Returns (r, wr, fwd, lam_out, wl_out, j_out) where ``fwd`` maps a
    spectral profile on the support grid to chi * u on the radial grid and
    ``j_out`` holds J_nu(lam_out_i r_k) for the re-expansion.
    """
    key = (float(nu), float(chi_radius), lam_sub.tobytes())
    hit = _piece_cache.get(key)
    if hit is not None:
        return hit
    lam_sup = float(lam_sub[-1])
    r_max = 2.0 * chi_radius
    lam_out_max = 3.0 * lam_sup + 30.0 / chi_radius
    n_out = max(512, int(2.0 * lam_out_max * r_max))
    n_r = max(512, int(2.0 * (lam_sup + lam_out_max) * r_max))
    r, wr = _composite_gauss(0.0, r_max, n_r)
    fwd = (_chi(r, chi_radius)[:, None]
           * sp.jv(nu, np.outer(r, lam_sub))
           * (wl_sub * lam_sub)[None, :])
    lam_out, wl_out = _composite_gauss(0.0, lam_out_max, n_out)
    j_out = sp.jv(nu, np.outer(lam_out, r))
    out = (r, wr, fwd, lam_out, wl_out, j_out)
    if len(_piece_cache) > 2:
        _piece_cache.clear()
    _piece_cache[key] = out
    return out


_form_cache = {}


def _quadratic_form(nu, chi_radius, lam_sub, wl_sub):
    """Symmetric C with ||chi u||_{1/2}^2 = v* C v on the support grid."""
    key = (float(nu), float(chi_radius), lam_sub.tobytes())
    hit = _form_cache.get(key)
    if hit is not None:
        return hit
    r, wr, fwd, lam_out, wl_out, j_out = _pieces(nu, chi_radius,
                                                 lam_sub, wl_sub)
    a = np.sqrt(wr * r)[:, None] * fwd
    form = a.T @ a
    b = ((np.sqrt(wl_out) * lam_out)[:, None] * (j_out * (wr * r)[None, :]))
    h = b @ fwd
    form = form + h.T @ h
    if len(_form_cache) > 2:
        _form_cache.clear()
    _form_cache[key] = form
    return form


def half_domain_norm(state, chi_radius):
    """Norm of the cutoff state in the half-power domain.

    Returns sqrt(||chi u||^2 + int lambda |(chi u)^|^2 lambda dlambda),
    with the re-expansion done in the state's own Hankel mode.  Raises
    ``ReExpansionError`` when the re-expanded L^2 mass disagrees with the
    real-space value by more than a 1e-6 relative tolerance.
    """
    if chi_radius <= 0:
        raise ValueError("chi_radius must be positive")
    sl = _support_slice(state)
    if sl is None:
        return 0.0
    lam_sub, wl_sub = state.lam[sl], state.lam_weights[sl]
    r, wr, fwd, lam_out, wl_out, j_out = _pieces(state.nu, chi_radius,
                                                 lam_sub, wl_sub)
    cu = fwd @ state.profile[sl]
    hat = j_out @ (wr * r * cu)
    l2_spectral = float(np.sum(wl_out * lam_out * np.abs(hat) ** 2))
    l2_real = float(np.sum(wr * r * np.abs(cu) ** 2))
    scale = max(l2_real, state.norm_sq())
    if scale > 0 and abs(l2_spectral - l2_real) > _REEXPANSION_TOL * scale:
        raise ReExpansionError(
            "cutoff re-expansion mismatch %.3e; raise the quadrature budget"
            % (abs(l2_spectral - l2_real) / scale))
    half_power = float(np.sum(wl_out * lam_out ** 2 * np.abs(hat) ** 2))
    return math.sqrt(l2_real + half_power)


@dataclass(frozen=True)
class SmoothingResult:
    """Time-integrated smoothing quotients and their validity data.

    ``quotient_norm`` is int_0^T ||chi u|| dt / ||u0||; ``quotient_sq``
    is int_0^T ||chi u||^2 dt / ||u0||^2 (the scale-consistent variant).
    ``t_resolved`` is the part of [0, T] integrated within the grid's
    recurrence horizon; ``tail_sq`` is the bound added to quotient_sq for
    the remaining (T - t_resolved), zero when T is fully resolved.
    """

    quotient_norm: float
    quotient_sq: float
    t_resolved: float
    tail_sq: float


def _norm_sq_at(c, u, lam2, t):
    v = u * np.exp(-1j * t * lam2)
    return float(np.real(np.conj(v) @ (c @ v)))


def smoothing_quotient(u0, T, chi_radius, time_steps=64):
    """Time-integrated local smoothing quotient on [0, T].

    Parameters
    ----------
    u0 : ModeState or sequence of ModeState
        Initial data, one entry per retained angular mode.
    T : float
        Final time; the integral runs over [0, T].
    chi_radius : float
        Cutoff radius passed to ``half_domain_norm``.
    time_steps : int
        Trapezoid steps for the unsquared variant over the resolved
        window.  The squared variant is integrated in closed form and
        does not use them.

    Returns
    -------
    SmoothingResult
    """
    if isinstance(u0, ModeState):
        u0 = [u0]
    norm0_sq = sum(s.norm_sq() for s in u0)
    if norm0_sq <= 0:
        raise ValueError("initial data must have positive norm")
    if T < 0:
        raise ValueError("T must be nonnegative")
    if T == 0:
        return SmoothingResult(0.0, 0.0, 0.0, 0.0)

    int_sq = 0.0
    int_norm = 0.0
    tail_sq_total = 0.0
    t_resolved_min = T
    for s in u0:
        half_domain_norm(s, chi_radius)  # runs the re-expansion check
        sl = _support_slice(s)
        if sl is None:
            continue
        lam_sub, wl_sub = s.lam[sl], s.lam_weights[sl]
        u = s.profile[sl]
        c = _quadratic_form(s.nu, chi_radius, lam_sub, wl_sub)
        lam2 = lam_sub ** 2
        t_safe = math.pi / float(np.max(np.diff(lam2)))
        t_eff = min(T, t_safe)
        t_resolved_min = min(t_resolved_min, t_eff)

        # closed-form time integral of v(t)* C v(t) over [0, t_eff]
        m = lam2.size
        for k0 in range(0, m, 512):
            blk = slice(k0, min(k0 + 512, m))
            d = lam2[None, :] - lam2[blk, None]
            phase = t_eff * d
            mask = np.abs(phase) < 1e-8
            d_safe = np.where(mask, 1.0, d)
            e_t = np.where(mask, t_eff * (1.0 - 0.5j * phase),
                           (1.0 - np.exp(-1j * phase)) / (1j * d_safe))
            a = (np.conj(u[blk])[:, None] * u[None, :]) * c[blk, :]
            int_sq += float(np.real(np.sum(a * e_t)))

        eps = 0.0
        if T > t_eff:
            # continuum integrand has decayed superalgebraically by
            # t_safe; bound the unresolved remainder by its measured
            # size near the horizon
            eps = max(_norm_sq_at(c, u, lam2, t)
                      for t in np.linspace(0.75 * t_eff, t_eff, 8))
            tail_sq_total += eps * (T - t_eff)

        times = np.linspace(0.0, t_eff, time_steps + 1)
        h = times[1] - times[0]
        for k, t in enumerate(times):
            w = 0.5 * h if k in (0, time_steps) else h
            int_norm += w * math.sqrt(max(_norm_sq_at(c, u, lam2, t), 0.0))
        if T > t_eff:
            int_norm += math.sqrt(eps) * (T - t_eff)

    int_sq += tail_sq_total
    return SmoothingResult(int_norm / math.sqrt(norm0_sq),
                           int_sq / norm0_sq,
                           t_resolved_min, tail_sq_total / norm0_sq)
