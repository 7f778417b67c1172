"""Numerical audit of resolvent-growth and resonance-region estimates.

Two kinds of checks live here.  ``RegionSpec`` and ``region_membership``
evaluate the logarithmic resonance-free region |Im lambda| <
((N - 1) log|lambda| + log C_delta) / T'_N exactly, together with its
N -> infinity limit, which recovers the slope 1 / (2 d_max) of the
asymptotic region (``limit_region_membership``).  These are pure
inequality evaluations.

``resolvent_growth_probe`` estimates the cutoff resolvent norm
||chi R(lambda) chi|| for a single centered solenoid along a line
Im lambda = -a log Re lambda and fits the growth shape
C |lambda|^p e^{T |Im lambda|}.  The norm is exact per angular mode (the
mode decomposition is orthogonal in L^2(r dr)), and each mode norm comes
from power iteration on the separable kernel J_nu(lambda r_<)
H^(1)_nu(lambda r_>), which supports O(n) matvecs by cumulative sums.
The fitted power and exponential coefficient are reported, never
asserted: the constants in the underlying estimate are existential.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .geometry import SolenoidConfig, d_max
from .specfn import LogLambda, bessel_j, hankel1, EvaluationOverflow

__all__ = [
    "RegionSpec",
    "region_bound",
    "region_membership",
    "limit_region_membership",
    "GrowthFit",
    "PowerIterationError",
    "cutoff_resolvent_norm",
    "resolvent_growth_probe",
]

_PI = math.pi


# ----------------------------------------------------------------------
# logarithmic region formulas
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class RegionSpec:
    """Parameters of the logarithmic resonance-free region.

    The region is |Im lambda| < ((N - 1) log|lambda| + log C_delta) /
    T_prime.  ``T_prime`` is the enlarged propagation threshold of the
    N-diffraction argument (see geometry.t_prime).
    """

    N: int
    C_delta: float
    T_prime: float

    def __post_init__(self):
        if self.N < 1:
            raise ValueError("N must be a positive integer")
        if not self.C_delta > 0.0:
            raise ValueError("C_delta must be positive")
        if not self.T_prime > 0.0:
            raise ValueError("T_prime must be positive")

    @classmethod
    def from_config(cls, N: int, C_delta: float,
                    config: SolenoidConfig) -> "RegionSpec":
        """Region of derivative-gain order N for this configuration.

        Each diffraction gains half a derivative, so the order-N gain
        requires 2N guaranteed diffractions; T_prime is the enlarged
        threshold at that diffraction count.  With this pairing the
        region depth tends to log|lambda| / (2 d_max) as N grows,
        matching the asymptotic slope of limit_region_membership.
        """
        from .geometry import t_prime
        return cls(N=N, C_delta=float(C_delta),
                   T_prime=t_prime(2 * N, config))


def region_bound(spec: RegionSpec, lam_abs: float) -> float:
    """The depth ((N - 1) log|lambda| + log C_delta) / T_prime."""
    if not lam_abs > 1.0:
        raise ValueError("the region formula requires |lambda| > 1")
    return ((spec.N - 1) * math.log(lam_abs)
            + math.log(spec.C_delta)) / spec.T_prime


def region_membership(spec: RegionSpec, lam: LogLambda) -> bool:
    """True iff |Im lambda| < ((N-1) log|lambda| + log C_delta)/T_prime."""
    z = lam.to_complex()
    return abs(z.imag) < region_bound(spec, abs(z))


def limit_region_membership(config: SolenoidConfig, lam: LogLambda,
                            epsilon: float) -> bool:
    """The asymptotic region Im lambda > -(1/(2 d_max) - eps) log|lambda|.

    This is the N -> infinity shape of the RegionSpec family: with
    T_prime(N) ~ N d_max the depth tends to log|lambda| / d_max per
    diffraction pair, and the sharp slope is 1 / (2 d_max) up to the
    slack epsilon.
    """
    dm, _ = d_max(config)
    slope = 1.0 / (2.0 * dm)
    if not 0.0 < epsilon < slope:
        raise ValueError("epsilon must lie in (0, 1/(2 d_max))")
    z = lam.to_complex()
    if not abs(z) > 1.0:
        raise ValueError("the region formula requires |lambda| > 1")
    return z.imag > -(slope - epsilon) * math.log(abs(z))


# ----------------------------------------------------------------------
# cutoff resolvent growth probe
# ----------------------------------------------------------------------

class PowerIterationError(RuntimeError):
    """Power iteration failed to settle within the iteration budget."""


def _smooth_cutoff(r: np.ndarray, a: float, b: float) -> np.ndarray:
    """C^infinity cutoff, 1 on r <= a, 0 on r >= b."""
    s = np.clip((r - a) / (b - a), 0.0, 1.0)
    inner = np.exp(-1.0 / np.maximum(s, 1e-300))
    outer = np.exp(-1.0 / np.maximum(1.0 - s, 1e-300))
    return outer / (inner + outer)


def _mode_norm(nu: float, lam: complex, r: np.ndarray, sqw_chi: np.ndarray,
               n_iter: int, tol: float, seed: int) -> float:
    """Largest singular value of the weighted mode-kernel operator.

    The kernel (pi/2i) J_nu(lambda r_<) H_nu(lambda r_>) is separable
    across the diagonal, so a matvec costs O(n) via cumulative sums of
    the two factors.  The matrix is complex symmetric after the
    symmetric sqrt(r dr) weighting, so the adjoint matvec is the
    conjugated forward matvec.
    """
    try:
        jv = np.asarray(bessel_j(nu, lam * r))
        hv = np.asarray(hankel1(nu, lam * r))
    except EvaluationOverflow:
        return 0.0
    scale = np.max(np.abs(jv * hv))
    if not np.isfinite(scale) or scale == 0.0:
        return 0.0
    ja = sqw_chi * jv
    ha = sqw_chi * hv

    def matvec(f):
        # sum_{k <= i} + sum_{k > i}, diagonal counted in the first part
        cj = np.cumsum(ja * f)
        ch = np.cumsum((ha * f)[::-1])[::-1]
        out = ha * cj + ja * (ch - ha * f)
        return (_PI / 2j) * out

    rng = np.random.default_rng(seed)
    v = rng.standard_normal(r.size) + 1j * rng.standard_normal(r.size)
    v /= np.linalg.norm(v)
    est = 0.0
    for _ in range(n_iter):
        u = matvec(v)
        nu_norm = np.linalg.norm(u)
        if nu_norm == 0.0:
            return 0.0
        v_new = np.conj(matvec(np.conj(u)))
        new_est = math.sqrt(float(np.linalg.norm(v_new)))
        v = v_new / np.linalg.norm(v_new)
        if est > 0.0 and abs(new_est - est) <= tol * new_est:
            return new_est
        est = new_est
    raise PowerIterationError(
        "mode norm power iteration did not settle to %g in %d iterations"
        % (tol, n_iter))


def cutoff_resolvent_norm(config: SolenoidConfig, lam: LogLambda,
                          n_r: int = 400, n_iter: int = 50,
                          tol: float = 1e-6, seed: int = 0) -> float:
    """||chi R(lambda) chi|| for a single centered solenoid.

    chi is a fixed smooth radial cutoff, 1 on r <= R0 and 0 at R1.  The
    angular modes decouple, so the norm is the max of the per-mode
    radial operator norms; modes are swept outward until their
    contribution falls below 1e-8 of the running maximum (the kernels
    decay factorially in the order once nu exceeds |lambda| R1).
    """
    if config.n != 1 or np.any(config.positions != 0.0):
        raise ValueError(
            "the growth probe needs a single solenoid at the origin")
    alpha = float(config.fluxes[0])
    lamc = lam.to_complex()
    dr = config.R1 / n_r
    r = (np.arange(n_r) + 0.5) * dr
    chi = _smooth_cutoff(r, config.R0, config.R1)
    sqw_chi = chi * np.sqrt(r * dr)

    best = 0.0
    for direction in (0, 1):
        stale = 0
        j = -1 if direction else 0
        while True:
            nu = abs(j + alpha)
            val = _mode_norm(nu, lamc, r, sqw_chi, n_iter, tol,
                             seed + abs(j))
            best = max(best, val)
            if nu > abs(lamc) * config.R1 and val < 1e-8 * best:
                stale += 1
                if stale >= 3:
                    break
            else:
                stale = 0
            j = j + (-1 if direction else 1)
    return best


@dataclass(frozen=True)
class GrowthFit:
    """Fitted growth shape of the cutoff resolvent along a log line.

    The samples sit on Im lambda = -a log Re lambda.  ``power`` is the
    least-squares slope of log norm against log|lambda|; on that line
    the model C |lambda|^{j-1} e^{T |Im lambda|} predicts slope (j - 1)
    + T a, so ``t_fit`` = (power - (j - 1)) / a recovers the
    exponential coefficient (NaN on the real axis a = 0, where T does
    not enter).  Fitted values are descriptive, not asserted bounds.
    """

    re: np.ndarray
    im: np.ndarray
    norm_est: np.ndarray
    a: float
    j: int
    power: float
    t_fit: float
    r_squared: float


def resolvent_growth_probe(config: SolenoidConfig, a: float = 0.0,
                           j: int = 0, re_range: tuple = (8.0, 40.0),
                           samples: int = 10, n_r: int = 400,
                           n_iter: int = 50, tol: float = 1e-6,
                           seed: int = 0) -> GrowthFit:
    """Sample ||chi R chi|| along Im lambda = -a log Re lambda and fit.

    Returns the fitted |lambda| power, the implied exponential
    coefficient for the given derivative index j, and the R^2 of the
    log-log fit.
    """
    if samples < 3:
        raise ValueError("need at least 3 samples for a fit")
    if a < 0.0:
        raise ValueError("a must be >= 0 (lines at or below the real axis)")
    re = np.geomspace(re_range[0], re_range[1], samples)
    im = -a * np.log(re)
    norms = np.empty(samples)
    for k in range(samples):
        lam = LogLambda.from_complex(complex(re[k], im[k]))
        norms[k] = cutoff_resolvent_norm(config, lam, n_r=n_r,
                                         n_iter=n_iter, tol=tol, seed=seed)
    x = np.log(np.hypot(re, im))
    y = np.log(norms)
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    ss_tot = float(np.sum((y - np.mean(y)) ** 2))
    r2 = 1.0 - float(np.sum(resid ** 2)) / ss_tot if ss_tot > 0 else 1.0
    t_fit = (slope - (j - 1)) / a if a > 0 else float("nan")
    return GrowthFit(re=re, im=im, norm_est=norms, a=float(a), j=int(j),
                     power=float(slope), t_fit=float(t_fit),
                     r_squared=float(r2))
