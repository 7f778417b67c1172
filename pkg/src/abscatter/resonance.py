r"""Resonances as zeros of a Fredholm determinant on the logarithmic cover.

The resolvent of the multi-solenoid Hamiltonian P_alpha satisfies

    (P_alpha - lambda^2) Q(lambda, lambda0) = I + K(lambda, lambda0),

    K = -[P_0, chi0] R_0(lambda) (1 - chi1)
        + [P_alpha, chi2] R_alpha(lambda0) chi1
        + (lambda0^2 - lambda^2) chi2 R_alpha(lambda0) chi1,

with nested radial cutoffs chi0, chi1, chi2 (chi_j chi_{j+1} = chi_j), a
fixed reference point lambda0 = e^{i pi/4} mu on the first sheet, and
P_0 = e^{-if} P_beta e^{if} the one-center comparison operator.  Zeros of
det(I + K(lambda)) flag candidate resonances; K continues in lambda
through the single-center resolvent R_0 evaluated on the logarithmic
cover, so the determinant is defined below the real axis and beyond.

Numerically the determinant is evaluated in a structured factorization
rather than on a dense grid.  Conjugating K by the diagonal phase e^{if}
replaces P_0 by the one-center operator P_beta (beta the total flux) and
leaves the commutator coefficients radial, so in angular-mode
coordinates on a polar tensor grid:

* The lambda term becomes [P_beta, chi0] G_beta(lambda) (1 - chi1); the
  commutator rows (supp chi0') lie strictly inside the (1 - chi1)
  columns, so each mode kernel J_nu(lambda r_<) H1_nu(lambda r_>)
  factorizes into an exact rank-one pair per retained mode.
* The lambda0 blocks split as R_alpha(lambda0) = R_beta(lambda0) + D
  after conjugation.  The one-center part carries the diagonal kernel
  singularity, but it is exact per angular mode: chi2 R_beta chi1
  reduces (through chi1 chi2 = chi1) to a diagonal perturbation of the
  tridiagonal radial operator, so its determinant factor is a ratio of
  tridiagonal continuants, and the chi2-commutator part is again
  rank-one per mode by support disjointness.
* The two-center correction D has a smooth kernel (the log singularities
  of the two resolvents cancel) confined to an O(mu R1) angular band, so
  it is genuinely low rank: it is sampled by the gauge-link
  finite-difference solver on a smooth Chebyshev x Fourier source basis
  and compressed once by an SVD.

det(I + K) then equals a product of per-mode scalars times a rank x rank
bordered determinant, a sub-second evaluation per lambda, which is what
makes argument-principle scans over O(10^3) points affordable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numpy.polynomial.chebyshev import chebval
from scipy import sparse
from scipy.linalg import solve_banded
from scipy.sparse import linalg as sparse_linalg

from .geometry import SolenoidConfig, d_max as _config_d_max, \
    validate as _validate_config
from .mode_resolvent import _gauge_phase_extended, _segment_angle_sweep
from .specfn import EvaluationOverflow, LogLambda, bessel_j, bessel_j_dz, \
    hankel1, hankel1_dz

__all__ = [
    "CutoffFamily",
    "DetResult",
    "FredholmSystem",
    "GaugeLinkSolver",
    "RegionReport",
    "ResonanceHit",
    "StringBand",
    "WindingError",
    "build_K",
    "build_system",
    "default_family",
    "fredholm_det",
    "operator_norm_estimate",
    "predicted_string",
    "region_check",
    "resonance_scan",
    "solve_R_alpha_at_lambda0",
]

_PI = math.pi


# ----------------------------------------------------------------------
# cutoff family
# ----------------------------------------------------------------------

def _step7(x):
    """Order-7 polynomial smoothstep: 0 at x<=0, 1 at x>=1, C^3."""
    x = np.clip(x, 0.0, 1.0)
    return x ** 4 * (35.0 - 84.0 * x + 70.0 * x ** 2 - 20.0 * x ** 3)


def _step7_d1(x):
    x = np.asarray(x, float)
    inside = (x > 0) & (x < 1)
    xc = np.clip(x, 0.0, 1.0)
    return np.where(inside, 140.0 * xc ** 3 * (1.0 - xc) ** 3, 0.0)


def _step7_d2(x):
    x = np.asarray(x, float)
    inside = (x > 0) & (x < 1)
    xc = np.clip(x, 0.0, 1.0)
    return np.where(inside,
                    420.0 * xc ** 2 * (1.0 - xc) ** 2 * (1.0 - 2.0 * xc),
                    0.0)


@dataclass(frozen=True)
class CutoffFamily:
    """Four nested radial cutoffs chi0..chi3 built from order-7 smoothsteps.

    ``transitions[i] = (a_i, b_i)``: chi_i is 1 on r <= a_i and 0 on
    r >= b_i.  Nesting chi_i = chi_i chi_{i+1} requires b_i <= a_{i+1};
    every a_i must exceed R0 and every b_i stay below R1.
    """

    transitions: tuple
    R0: float
    R1: float

    def __post_init__(self):
        if len(self.transitions) != 4:
            raise ValueError("need exactly four transition annuli")
        prev_b = self.R0
        for a, b in self.transitions:
            if not (prev_b < a < b <= self.R1):
                raise ValueError(
                    "transitions must be disjoint, increasing, above R0 "
                    "and within R1")
            prev_b = b

    def chi(self, i, r):
        a, b = self.transitions[i]
        return _step7((b - np.asarray(r, float)) / (b - a))

    def chi_d1(self, i, r):
        a, b = self.transitions[i]
        return -_step7_d1((b - np.asarray(r, float)) / (b - a)) / (b - a)

    def chi_d2(self, i, r):
        a, b = self.transitions[i]
        return _step7_d2((b - np.asarray(r, float)) / (b - a)) / (b - a) ** 2


def default_family(R0=1.05, R1=2.0):
    """Evenly spread nested transitions between R0 and R1."""
    return CutoffFamily(
        transitions=((R0 + 0.05, R0 + 0.20),
                     (R0 + 0.35, R0 + 0.50),
                     (R0 + 0.65, R0 + 0.80),
                     (R0 + 0.85, R1 - 0.02)),
        R0=R0, R1=R1)


# ----------------------------------------------------------------------
# gauge-link finite differences for R_alpha(lambda0)
# ----------------------------------------------------------------------

class GaugeLinkSolver:
    """Sparse discretization of P_alpha - lambda0^2 on a truncated disc.

    Plaquette-offset uniform grid (no node or edge meets a solenoid); the
    vector potential enters only through exact per-edge circulation
    phases, so the singular field is never sampled.  Nodes closer than
    0.55 h to a solenoid are removed with zero trace (the Friedrichs
    condition); the outer circle r = R_dom carries a homogeneous
    Dirichlet condition, admissible because Im lambda0 > 0 makes the true
    solution decay like e^{-Im lambda0 (r - R1)}.
    """

    def __init__(self, config, mu, h=0.04, r_dom=None, trunc_tol=1e-8):
        if mu < 5.0:
            raise ValueError("mu below the mu_min = 5 floor")
        self.config = config
        self.lambda0 = LogLambda(float(mu), _PI / 4)
        lam0c = self.lambda0.to_complex()
        im = lam0c.imag
        need = config.R1 + math.log(1.0 / trunc_tol) / im
        self.r_dom = float(r_dom) if r_dom is not None else need
        if math.exp(-im * (self.r_dom - config.R1)) > trunc_tol * 1.0001:
            raise ValueError(
                "boundary truncation error above tolerance; enlarge r_dom")
        self.h = float(h)

        n_side = int(math.ceil(self.r_dom / h))
        ax = (np.arange(-n_side, n_side) + 0.5) * h
        xg, yg = np.meshgrid(ax, ax, indexing="ij")
        rad2 = xg ** 2 + yg ** 2
        keep = rad2 < self.r_dom ** 2
        # integer flux parts are a pure lattice gauge transform (every
        # plaquette phase is a multiple of 2 pi); only fractional fluxes
        # make the solenoid point singular and need the zero-trace hole
        eff = config.fluxes - np.round(config.fluxes)
        for s, alpha in zip(config.positions, eff):
            if alpha == 0.0:
                continue
            keep &= (xg - s[0]) ** 2 + (yg - s[1]) ** 2 > (0.55 * h) ** 2
        self._keep = keep
        self.index = -np.ones(keep.shape, dtype=np.int64)
        self.index[keep] = np.arange(keep.sum())
        self.n_nodes = int(keep.sum())
        self.xg, self.yg = xg, yg
        self._ax = ax

        rows, cols, vals = [], [], []
        diag = np.full(self.n_nodes, 4.0 / h ** 2 - lam0c ** 2,
                       dtype=complex)
        for axis in (0, 1):
            src = keep & np.roll(keep, -1, axis=axis)
            src[(-1 if axis == 0 else slice(None)),
                (-1 if axis == 1 else slice(None))] = False
            i_from = self.index[src]
            i_to = self.index[np.roll(src, 1, axis=axis)]
            a_pts = np.stack([xg[src], yg[src]], axis=-1)
            b_pts = a_pts.copy()
            b_pts[:, axis] += h
            phi = np.zeros(len(a_pts))
            for s, alpha in zip(config.positions, config.fluxes):
                if alpha == 0.0:
                    continue
                phi += alpha * _segment_angle_sweep(
                    a_pts, b_pts, np.asarray(s, float))
            if not np.all(np.isfinite(phi)):
                raise ValueError(
                    "a solenoid lies exactly on a grid edge; perturb h")
            link = np.exp(1j * phi) / h ** 2
            rows.extend([i_from, i_to])
            cols.extend([i_to, i_from])
            vals.extend([-link, -np.conj(link)])
        mat = sparse.coo_matrix(
            (np.concatenate(vals),
             (np.concatenate(rows), np.concatenate(cols))),
            shape=(self.n_nodes, self.n_nodes)).tocsc()
        mat += sparse.diags(diag).tocsc()
        self._lu = sparse_linalg.splu(mat)

    # -- node-field helpers -------------------------------------------
    def _locate(self, points):
        pts = np.asarray(points, float).reshape(-1, 2)
        fx = (pts[:, 0] - self._ax[0]) / self.h
        fy = (pts[:, 1] - self._ax[0]) / self.h
        ix = np.floor(fx).astype(np.int64)
        iy = np.floor(fy).astype(np.int64)
        tx = fx - ix
        ty = fy - iy
        return ix, iy, tx, ty

    def spread(self, points, weights):
        """Bilinear transfer of point masses onto the grid (density units)."""
        ix, iy, tx, ty = self._locate(points)
        out = np.zeros(self.n_nodes, dtype=complex)
        w = np.asarray(weights, dtype=complex).ravel()
        for dx_, wx in ((0, 1 - tx), (1, tx)):
            for dy_, wy in ((0, 1 - ty), (1, ty)):
                idx = self.index[ix + dx_, iy + dy_]
                good = idx >= 0
                np.add.at(out, idx[good], (w * wx * wy)[good])
        return out / self.h ** 2

    def sample(self, points, u, grad=False):
        """Bilinear samples of a node field (and optionally its gradient)."""
        ix, iy, tx, ty = self._locate(points)
        full = np.zeros(self.index.shape, dtype=complex)
        full[self._keep] = u
        vals = 0.0
        for dx_, wx in ((0, 1 - tx), (1, tx)):
            for dy_, wy in ((0, 1 - ty), (1, ty)):
                vals = vals + full[ix + dx_, iy + dy_] * wx * wy
        if not grad:
            return vals
        gx = np.gradient(full, self.h, axis=0)
        gy = np.gradient(full, self.h, axis=1)
        vx = vy = 0.0
        for dx_, wx in ((0, 1 - tx), (1, tx)):
            for dy_, wy in ((0, 1 - ty), (1, ty)):
                vx = vx + gx[ix + dx_, iy + dy_] * wx * wy
                vy = vy + gy[ix + dx_, iy + dy_] * wx * wy
        return vals, vx, vy

    def solve(self, rhs, adjoint=False):
        return self._lu.solve(np.asarray(rhs, complex),
                              trans="H" if adjoint else "N")

    def kernel_columns(self, sources, targets, adjoint=False):
        """Resolvent kernel columns G(targets, source_j), one solve each."""
        src = np.asarray(sources, float).reshape(-1, 2)
        out = np.empty((len(np.asarray(targets).reshape(-1, 2)), len(src)),
                       dtype=complex)
        for j, s in enumerate(src):
            rhs = self.spread(s[None, :], np.ones(1))
            out[:, j] = self.sample(targets, self.solve(rhs, adjoint))
        return out


def solve_R_alpha_at_lambda0(config, mu, points, weights=None, h=0.04,
                             r_dom=None):
    """Dense action matrix of R_alpha(lambda0) on samples at ``points``.

    ``(M g)_i = sum_j G(z_i, z_j) w_j g_j`` with quadrature weights
    ``weights`` (defaults to equal weights h^2, matching a uniform source
    grid).  lambda0 = e^{i pi/4} mu.
    """
    solver = GaugeLinkSolver(config, mu, h=h, r_dom=r_dom)
    pts = np.asarray(points, float).reshape(-1, 2)
    w = np.full(len(pts), h * h) if weights is None \
        else np.asarray(weights, float)
    return solver.kernel_columns(pts, pts) * w[None, :]


# ----------------------------------------------------------------------
# Fredholm system
# ----------------------------------------------------------------------

@dataclass
class FredholmSystem:
    """Cached discretization of K(lambda, lambda0) for one configuration.

    The operator is stored in angular-mode coordinates on a polar tensor
    grid (uniform radial midpoints, equispaced angles).  Per angular slot
    q the lambda0-fixed one-center block chi2 R_beta(lambda0) chi1 is a
    tridiagonal radial solve, the one-center commutator block is a
    rank-one pair (a2, b2), and the lambda term contributes rank-one
    pairs (a1(lambda), b1(lambda)).  The two-center correction
    D = e^{if} R_alpha(lambda0) e^{-if} - R_beta(lambda0) is held as an
    SVD-compressed low-rank factor (u_c, u_chi, v_hat) confined to a
    small angular band.
    """

    config: SolenoidConfig
    family: CutoffFamily
    lambda0: LogLambda
    beta: float
    r: np.ndarray              # (n_r,) radial midpoints on (0, R1]
    dr: float
    r_ext: np.ndarray          # (n_ext,) same spacing, out to r_dom
    n_theta: int
    m_max: int
    rows0: np.ndarray          # radial indices of supp chi0'
    cols1: np.ndarray          # radial indices of supp (1 - chi1)
    rows2: np.ndarray          # radial indices of supp chi2'
    i1: np.ndarray             # radial indices of supp chi1
    chi0_d1: np.ndarray
    chi0_d2: np.ndarray
    one_m_chi1: np.ndarray
    chi1: np.ndarray
    chi2: np.ndarray
    chi1_ext: np.ndarray
    chi2_ext: np.ndarray
    tri_lower: np.ndarray      # (n_ext - 1,) nu-independent off-diagonals
    tri_upper: np.ndarray
    main_all: np.ndarray       # (n_theta, n_ext) diagonal incl. nu_q^2/r^2
    logdet_a: complex          # sum over slots of log det A_q
    modes2: np.ndarray         # true modes kept in the chi2-commutator term
    a2: np.ndarray             # (n2, len(rows2)) scaled row factors
    b2: np.ndarray             # (n2, n_r) scaled column factors (weighted)
    rank: int
    band_out: np.ndarray       # fft slots where the D factor has output
    band_in: np.ndarray        # fft slots where the D factor has input
    u_c: np.ndarray            # (nb_out, len(rows2), rank)  [P, chi2] D-range
    u_chi: np.ndarray          # (nb_out, n_r, rank)          chi2 * D-range
    v_hat: np.ndarray          # (rank, nb_in, len(i1)) dual input rows
    svd_values: np.ndarray     # kept singular values (diagnostics)
    h_solver: float
    angular_band: int
    radial_degree: int

    @property
    def modes(self):
        return np.arange(-self.m_max, self.m_max + 1)

    def slot_nu(self, q):
        """Order nu of the principal mode of fft slot q."""
        m = q if q < self.n_theta // 2 else q - self.n_theta
        return abs(m + self.beta)


def _principal_mode(q, n_theta):
    return q if q < n_theta // 2 else q - n_theta


def _tridiag_logdet(main, lower, upper):
    """log det of tridiagonal matrices, vectorized over leading axes.

    ``main`` has shape (..., n); ``lower``/``upper`` shape (n-1,).  LU
    continuant recurrence without pivoting; the complex spectral shift
    -lambda0^2 keeps the pivots away from zero for the matrices used
    here.
    """
    offd = lower * upper
    d = main[..., 0].astype(complex)
    acc = np.log(d)
    for k in range(1, main.shape[-1]):
        d = main[..., k] - offd[k - 1] / d
        acc = acc + np.log(d)
    return acc


def _tridiag_solve(main, lower, upper, rhs):
    """Solve the tridiagonal system for one slot (partial pivoting)."""
    n = main.size
    ab = np.zeros((3, n), dtype=complex)
    ab[0, 1:] = upper
    ab[1] = main
    ab[2, :-1] = lower
    return solve_banded((1, 1), ab, rhs)


def _radial_grid(R1, n_r):
    dr = R1 / n_r
    return (np.arange(n_r) + 0.5) * dr, dr


def build_system(config, mu=5.0, family=None, n_r=192, n_theta=1024,
                 h_solver=0.04, angular_band=None, radial_degree=None,
                 svd_tol=1e-2, max_rank=None, m_max=900):
    """Assemble and cache the lambda-independent parts of K(lambda, lambda0).

    The one-center (total-flux) resolvent at lambda0 is exact per angular
    mode and realized by tridiagonal radial solves; only the two-center
    correction D = e^{if} R_alpha(lambda0) e^{-if} - R_beta(lambda0) uses
    the 2-D gauge-link solver.  D's kernel is smooth on the 1/mu scale
    (the diagonal singularities of the two resolvents cancel), so it is
    sampled on a smooth Chebyshev x Fourier source basis on supp chi1 --
    ``radial_degree`` polynomials times angular modes |m| <=
    ``angular_band`` -- and compressed by an SVD truncated at
    ``svd_tol`` relative to the top singular value.  The truncation
    threshold should sit at the O(h^2) discretization floor of the
    gauge-link solver; pushing it lower only retains grid noise.
    """
    _validate_config(config)
    family = default_family(config.R0, config.R1) if family is None \
        else family
    beta = float(np.sum(config.fluxes))
    lambda0 = LogLambda(float(mu), _PI / 4)
    lam0c = lambda0.to_complex()

    r, dr = _radial_grid(config.R1, n_r)
    solver = GaugeLinkSolver(config, mu, h=h_solver)
    n_ext = int(math.ceil(solver.r_dom / dr))
    r_ext = (np.arange(n_ext) + 0.5) * dr

    chi0 = family.chi(0, r)
    chi0_d1 = family.chi_d1(0, r)
    chi0_d2 = family.chi_d2(0, r)
    chi1 = family.chi(1, r)
    chi2 = family.chi(2, r)
    chi2_d1 = family.chi_d1(2, r)
    chi2_d2 = family.chi_d2(2, r)
    rows0 = np.nonzero(chi0_d1 != 0.0)[0]
    cols1 = np.nonzero(chi1 < 1.0)[0]
    rows2 = np.nonzero(chi2_d1 != 0.0)[0]
    i1 = np.nonzero(chi1 > 0.0)[0]
    chi1_ext = family.chi(1, r_ext)
    chi2_ext = family.chi(2, r_ext)

    # tridiagonal -Delta_nu - lambda0^2 in flux (conservation) form: the
    # half-node radii make the matrix exact for the r = 0 regularity
    # condition and diag(r)-symmetric
    rp = r_ext + dr / 2.0
    rm = r_ext - dr / 2.0
    tri_lower = -rm[1:] / (r_ext[1:] * dr * dr)
    tri_upper = -rp[:-1] / (r_ext[:-1] * dr * dr)
    main_base = (rp + rm) / (r_ext * dr * dr) - lam0c ** 2
    qs = np.arange(n_theta)
    m_princ = np.where(qs < n_theta // 2, qs, qs - n_theta)
    nu_all = np.abs(m_princ + beta)
    main_all = main_base[None, :] + (nu_all[:, None] ** 2) / r_ext[None, :] ** 2
    logdet_a = complex(np.sum(_tridiag_logdet(main_all, tri_lower,
                                              tri_upper)))

    # chi2-commutator factors at lambda0: a2 = -[P_beta, chi2] applied to
    # the outgoing radial solution, b2 = regular solution on supp chi1
    # (quadrature folded in).  The J H product decays like
    # (sup chi1 / inf supp chi2')^nu, so the sweep stops at e^{-36}
    # relative, or at the double-precision range of the factors --
    # whichever comes first (the skipped tail is a det factor 1 + O(e^-21)
    # at mu = 5).
    e1 = chi2_d1[rows2]
    e2 = chi2_d2[rows2]
    r2g = r[rows2]
    a2_list, b2_list, m2_list = [], [], []
    ref = None
    for direction in (0, 1):
        m = -1 if direction else 0
        while True:
            nu = abs(m + beta)
            try:
                hh = hankel1(nu, mu * r2g, arg=lambda0.arg)
                hhp = hankel1_dz(nu, mu * r2g, arg=lambda0.arg)
                jj = bessel_j(nu, mu * r, arg=lambda0.arg)
            except EvaluationOverflow:
                break
            a_vec = -(_PI / 2j) * (-(e2 + e1 / r2g) * hh
                                   - 2.0 * e1 * lam0c * hhp)
            b_vec = jj * chi1 * r * dr
            sa = np.max(np.abs(a_vec))
            amp = sa * np.max(np.abs(b_vec))
            if not np.isfinite(amp) or amp == 0.0:
                break
            if ref is None:
                ref = amp
            if amp < 1e-16 * ref:
                break
            # normalize the pair (max |a| = 1): a rank-one factorization
            # is only defined up to a scalar, and the balanced form keeps
            # the Sherman-Morrison capacitance entries within range
            a2_list.append(a_vec / sa)
            b2_list.append(b_vec * sa)
            m2_list.append(m)
            m = m + (-1 if direction else 1)
    order = np.argsort(m2_list)
    modes2 = np.asarray(m2_list)[order]
    a2 = np.asarray(a2_list)[order]
    b2 = np.asarray(b2_list)[order]

    # --- two-center correction D on the smooth source basis ---
    if angular_band is None:
        angular_band = int(math.ceil(2.5 * mu)) + 15
    r1b = family.transitions[1][1]
    if radial_degree is None:
        radial_degree = int(math.ceil(0.5 * mu * r1b)) + 12
    angular_band = min(angular_band, n_theta // 2 - 2)
    band_pad = 8
    m_out = min(angular_band + band_pad, n_theta // 2 - 1)
    band_out = np.arange(-m_out, m_out + 1) % n_theta
    band_in = np.arange(-angular_band, angular_band + 1) % n_theta

    theta = 2.0 * _PI * np.arange(n_theta) / n_theta
    rr, tt = np.meshgrid(r, theta, indexing="ij")
    pts = np.stack([rr * np.cos(tt), rr * np.sin(tt)], axis=-1).reshape(-1, 2)
    w2d = dr * r * (2.0 * _PI / n_theta)
    f_phase = _gauge_phase_extended(config, pts)
    e_minus = np.exp(-1j * f_phase)
    e_plus = np.exp(1j * f_phase)
    cos_t = np.cos(tt).ravel()
    sin_t = np.sin(tt).ravel()
    # radial derivative of the conjugated solution needs (A_alpha -
    # A_beta) . rhat = grad f . rhat on supp chi2'
    df_r = np.zeros(pts.shape[0])
    for s, al in zip(config.positions, config.fluxes):
        dx = pts[:, 0] - s[0]
        dy = pts[:, 1] - s[1]
        rho2 = dx * dx + dy * dy
        df_r += al * (-dy * cos_t + dx * sin_t) / rho2
    rad2 = np.einsum("ij,ij->i", pts, pts)
    df_r -= beta * (-pts[:, 1] * cos_t + pts[:, 0] * sin_t) / rad2

    # source basis chi1 * T_i(x) * e^{im theta}, x affine on supp chi1
    x_full = 2.0 * r / r1b - 1.0
    tcheb = np.zeros((radial_degree, n_r))
    for i in range(radial_degree):
        tcheb[i] = chebval(np.clip(x_full, -1.0, 1.0),
                           [0.0] * i + [1.0])
    phi = chi1[None, :] * tcheb                      # (n_rad, n_r)

    n_b = (2 * angular_band + 1) * radial_degree
    nb_out = band_out.size
    sqw_mode = np.sqrt(2.0 * _PI * r * dr)
    y_band = np.empty((nb_out * n_r, n_b), dtype=complex)
    uc_all = np.empty((nb_out * rows2.size, n_b), dtype=complex)
    com0 = -(chi2_d2[rows2] + chi2_d1[rows2] / r[rows2])
    com1 = -2.0 * chi2_d1[rows2]
    slot_of = {int(q): k for k, q in enumerate(band_out)}
    col = 0
    for m in range(-angular_band, angular_band + 1):
        ang = np.exp(1j * m * theta)
        nu = abs(m + beta)
        q = m % n_theta
        a_main = main_base + nu * nu / r_ext ** 2
        for i in range(radial_degree):
            dens = (phi[i][:, None] * ang[None, :]).reshape(-1)
            c = dens * np.repeat(w2d, n_theta)
            u = solver.solve(solver.spread(pts, e_minus * c))
            vals, gx, gy = solver.sample(pts, u, grad=True)
            col_fd = e_plus * vals
            dcol_fd = e_plus * (gx * cos_t + gy * sin_t
                                + 1j * df_r * vals)
            rhs = np.zeros(n_ext, dtype=complex)
            rhs[:n_r] = phi[i]
            u_md = _tridiag_solve(a_main, tri_lower, tri_upper, rhs)
            du_md = np.gradient(u_md, dr)
            col_md = (u_md[:n_r, None] * ang[None, :]).reshape(-1)
            dcol_md = (du_md[:n_r, None] * ang[None, :]).reshape(-1)
            diff = (col_fd - col_md).reshape(n_r, n_theta)
            ddiff = (dcol_fd - dcol_md).reshape(n_r, n_theta)
            d_hat = np.fft.fft(diff, axis=1) / n_theta
            dd_hat = np.fft.fft(ddiff, axis=1) / n_theta
            y_band[:, col] = (d_hat[:, band_out]
                              * sqw_mode[:, None]).T.ravel()
            uc_all[:, col] = (com0[:, None] * d_hat[rows2][:, band_out]
                              + com1[:, None]
                              * dd_hat[rows2][:, band_out]).T.ravel()
            col += 1

    u_svd, s_svd, vh_svd = np.linalg.svd(y_band, full_matrices=False)
    keep = s_svd >= svd_tol * s_svd[0]
    if max_rank is not None:
        keep &= np.arange(s_svd.size) < max_rank
    rank = int(np.count_nonzero(keep))
    if rank == 0:
        rank = 1
        keep = np.arange(s_svd.size) < 1
    q_hat = (u_svd[:, keep].reshape(nb_out, n_r, rank)
             / sqw_mode[None, :, None])
    combine = vh_svd[keep].conj().T / s_svd[keep][None, :]
    u_c = (uc_all @ combine).reshape(nb_out, rows2.size, rank)
    u_chi = chi2[None, :, None] * q_hat

    # dual input rows: orthogonal projection of the source density onto
    # the chi1 T_i span under the r dr measure, per input mode
    gram = (phi * (r * dr)[None, :]) @ phi.T
    proj = np.linalg.solve(gram, phi * (chi1 * r * dr)[None, :])  # (n_rad, n_r)
    sv = s_svd[keep][:, None] * vh_svd[keep]          # (rank, n_b)
    sv = sv.reshape(rank, 2 * angular_band + 1, radial_degree)
    v_hat = np.einsum("kmi,ij->kmj", sv, proj[:, i1])

    return FredholmSystem(
        config=config, family=family, lambda0=lambda0, beta=beta,
        r=r, dr=dr, r_ext=r_ext, n_theta=n_theta, m_max=int(m_max),
        rows0=rows0, cols1=cols1, rows2=rows2, i1=i1,
        chi0_d1=chi0_d1, chi0_d2=chi0_d2, one_m_chi1=1.0 - chi1,
        chi1=chi1, chi2=chi2, chi1_ext=chi1_ext, chi2_ext=chi2_ext,
        tri_lower=tri_lower, tri_upper=tri_upper, main_all=main_all,
        logdet_a=logdet_a, modes2=modes2, a2=a2, b2=b2,
        rank=rank, band_out=band_out, band_in=band_in,
        u_c=u_c, u_chi=u_chi, v_hat=v_hat,
        svd_values=s_svd[keep].copy(), h_solver=h_solver,
        angular_band=int(angular_band), radial_degree=int(radial_degree))


def _debye_growth(nu, x):
    """log |H^(1)_nu(x)| growth exponent nu (ln((1+s)/t) - s), t = x/nu < 1.

    Zero in the oscillatory regime nu <= x.  The same number bounds
    -log |J_nu(x)| from below, up to O(log nu) terms.
    """
    nu = np.asarray(nu, float)
    with np.errstate(divide="ignore", invalid="ignore"):
        t = np.where(nu > 0, x / np.maximum(nu, 1e-300), np.inf)
        s = np.sqrt(np.maximum(1.0 - t ** 2, 0.0))
        out = nu * (np.log((1.0 + s) / np.where(t > 0, t, 1.0)) - s)
    return np.where((nu > x) & (nu > 0), out, 0.0)


def _mode_set(system, lam, decay_target=36.0, overflow_guard=600.0):
    """Angular modes retained in the lambda term at this lambda.

    A mode is dropped once the Debye estimate of its row-column product
    J_nu(lambda b0) H_nu(lambda a1) has decayed below e^{-decay_target},
    or once either factor would leave the double-precision range
    (overflow_guard); lam's imaginary part widens the guard margin.
    """
    modes = system.modes
    nu = np.abs(modes + system.beta)
    b0 = system.family.transitions[0][1]
    a1 = system.family.transitions[1][0]
    scale = abs(lam.to_complex())
    g_in = _debye_growth(nu, scale * b0)     # -log|J| estimate at rows
    g_out = _debye_growth(nu, scale * a1)    # +log|H| estimate at cols
    slack = abs(lam.to_complex().imag) * system.family.R1
    keep = ((g_in - g_out < decay_target)
            & (g_out + slack < overflow_guard)
            & (g_in + slack < overflow_guard + 80.0))
    return modes[keep]


def _mode_factors(system, lam, modes):
    """Rank-one radial factors (a1_m, b1_m) of the lambda term.

    a1_m lives on supp chi0' (the rows), b1_m on supp (1 - chi1) with the
    radial quadrature weight folded in; in mode coordinates the
    lambda-dependent term of the conjugated K is the per-mode rank-one
    operator a1_m <b1_m, .>.
    """
    r = system.r
    rows, cols = system.rows0, system.cols1
    r_in, r_out = r[rows], r[cols]
    d1 = system.chi0_d1[rows]
    d2 = system.chi0_d2[rows]
    omc1 = system.one_m_chi1[cols]
    w_out = system.dr * r_out
    alpha = np.empty((modes.size, r_in.size), dtype=complex)
    beta = np.empty((modes.size, r_out.size), dtype=complex)
    lamc = lam.to_complex()
    for i, m in enumerate(modes):
        nu = abs(m + system.beta)
        jj = bessel_j(nu, lam.modulus * r_in, arg=lam.arg)
        jjp = bessel_j_dz(nu, lam.modulus * r_in, arg=lam.arg)
        hh = hankel1(nu, lam.modulus * r_out, arg=lam.arg)
        alpha[i] = (_PI / 2j) * (-(d2 + d1 / r_in) * jj
                                 - 2.0 * d1 * lamc * jjp)
        beta[i] = hh * omc1 * w_out
    return alpha, beta


def _slot_pairs(system, lam):
    """Rank-one pairs of the per-slot blocks, keyed by fft slot.

    Returns {slot: (A_list, B_list, needs_solve_list)} where each pair
    (a, b) is embedded on the full radial grid with quadrature folded
    into b.  ``needs_solve`` marks pairs whose a overlaps supp chi1 (the
    lambda-term rows; the chi2-commutator rows lie outside supp chi1 and
    pass through (I + sc B)^{-1} unchanged).
    """
    n_r = system.r.size
    slots = {}

    def push(m, a_full, b_full, needs_solve):
        q = int(m % system.n_theta)
        entry = slots.setdefault(q, ([], [], []))
        entry[0].append(a_full)
        entry[1].append(b_full)
        entry[2].append(needs_solve)

    modes_l = _mode_set(system, lam)
    alpha, beta = _mode_factors(system, lam, modes_l)
    for i, m in enumerate(modes_l):
        sa = np.max(np.abs(alpha[i]))
        if sa == 0.0:
            continue
        a_full = np.zeros(n_r, dtype=complex)
        a_full[system.rows0] = alpha[i] / sa
        b_full = np.zeros(n_r, dtype=complex)
        b_full[system.cols1] = beta[i] * sa
        push(m, a_full, b_full, True)
    for i, m in enumerate(system.modes2):
        a_full = np.zeros(n_r, dtype=complex)
        a_full[system.rows2] = system.a2[i]
        push(m, a_full, system.b2[i].astype(complex), False)
    return slots


def _slot_solve(system, q, sc, rhs_ext):
    """(A_q + sc chi1)^{-1} rhs on the extended radial grid."""
    main = system.main_all[q] + sc * system.chi1_ext
    return _tridiag_solve(main, system.tri_lower, system.tri_upper, rhs_ext)


def _det_pieces(system, lam):
    """log det(I + K(lambda)) from the three structured layers.

    Layer 1: the one-center lambda0 block over every angular slot,
    det(A_q + sc chi1)/det(A_q) by tridiagonal continuants (chi1 chi2 =
    chi1 turns chi2 R_beta chi1 into a diagonal perturbation of the
    radial operator).  Layer 2: per-slot rank-one corrections (lambda
    term and chi2 commutator) through a Sherman-Morrison capacitance.
    Layer 3: the rank x rank coupling of the two-center correction D.
    """
    lamc = lam.to_complex()
    sc = system.lambda0.to_complex() ** 2 - lamc ** 2
    n_ext = system.r_ext.size
    n_r = system.r.size

    main_pert = system.main_all + sc * system.chi1_ext[None, :]
    logdet = complex(np.sum(_tridiag_logdet(
        main_pert, system.tri_lower, system.tri_upper))) - system.logdet_a

    slots = _slot_pairs(system, lam)
    # per-slot Sherman-Morrison data reused by the D coupling
    sm_data = {}
    for q, (a_list, b_list, solve_list) in slots.items():
        s = len(a_list)
        ys = np.empty((s, n_r), dtype=complex)
        for j, (a_full, needs) in enumerate(zip(a_list, solve_list)):
            if needs:
                rhs = np.zeros(n_ext, dtype=complex)
                rhs[:n_r] = system.chi1 * a_full
                ya = _slot_solve(system, q, sc, rhs)
                ys[j] = a_full - sc * system.chi2 * ya[:n_r]
            else:
                ys[j] = a_full
        bs = np.asarray(b_list)
        cap = np.eye(s, dtype=complex) + bs @ ys.T
        sign, ld = np.linalg.slogdet(cap)
        logdet += ld + np.log(sign)
        sm_data[q] = (ys, bs, cap)

    # D coupling over the slots where both factors live
    rank = system.rank
    xd = np.eye(rank, dtype=complex)
    out_index = {int(q): k for k, q in enumerate(system.band_out)}
    for k_in, q in enumerate(system.band_in):
        q = int(q)
        k_out = out_index.get(q)
        if k_out is None:
            continue
        u_m = np.zeros((n_r, rank), dtype=complex)
        u_m[system.rows2] = system.u_c[k_out]
        u_m += sc * system.u_chi[k_out]
        rhs = np.zeros((n_ext, rank), dtype=complex)
        rhs[:n_r] = system.chi1[:, None] * u_m
        yu = u_m - sc * system.chi2[:, None] \
            * _slot_solve(system, q, sc, rhs)[:n_r]
        sm = sm_data.get(q)
        if sm is not None:
            ys, bs, cap = sm
            yu = yu - ys.T @ np.linalg.solve(cap, bs @ yu)
        xd += system.v_hat[:, k_in, :] @ yu[system.i1]
    sign, ld = np.linalg.slogdet(xd)
    logdet += ld + np.log(sign)
    return logdet


@dataclass(frozen=True)
class DetResult:
    """Value and log-magnitude of det(I + K(lambda))."""

    value: complex
    log_abs: float
    log_arg: float


def fredholm_det(system, lam):
    """det(I + K(lambda, lambda0)) from the structured factorization.

    ``value`` clips the log-magnitude to the representable range, so
    over scan windows where |det| leaves [1e-304, 1e304] only the pair
    (``log_abs``, ``log_arg``) is meaningful.
    """
    logdet = _det_pieces(system, lam)
    value = np.exp(complex(np.clip(logdet.real, -700.0, 700.0),
                           logdet.imag))
    return DetResult(value=complex(value), log_abs=float(logdet.real),
                     log_arg=float(logdet.imag))


def _apply_B_slot(system, q, u_hat_q, sc=None):
    """chi2 R_beta(lambda0) chi1 applied to one slot's coefficients."""
    n_r = system.r.size
    rhs = np.zeros(system.r_ext.size, dtype=complex)
    rhs[:n_r] = system.chi1 * u_hat_q
    main = system.main_all[q]
    sol = _tridiag_solve(main, system.tri_lower, system.tri_upper, rhs)
    return system.chi2 * sol[:n_r]


def apply_K(system, lam, u_nodes):
    """Apply the conjugated K(lambda) to samples on the polar grid.

    ``u_nodes`` has shape (n_r, n_theta).  Cost is one FFT pair plus one
    tridiagonal solve per angular slot, so this also backs the
    operator-norm estimate.
    """
    u_nodes = np.asarray(u_nodes, dtype=complex)
    n_t = system.n_theta
    u_hat = np.fft.fft(u_nodes, axis=1) / n_t
    out_hat = np.zeros_like(u_hat)
    sc = system.lambda0.to_complex() ** 2 - lam.to_complex() ** 2

    if sc != 0:
        for q in range(n_t):
            out_hat[:, q] = sc * _apply_B_slot(system, q, u_hat[:, q])

    slots = _slot_pairs(system, lam)
    for q, (a_list, b_list, _) in slots.items():
        acc = out_hat[:, q]
        for a_full, b_full in zip(a_list, b_list):
            acc += a_full * (b_full @ u_hat[:, q])

    out_index = {int(q): k for k, q in enumerate(system.band_out)}
    coef = np.zeros(system.rank, dtype=complex)
    for k_in, q in enumerate(system.band_in):
        coef += system.v_hat[:, k_in, :] @ u_hat[system.i1, int(q)]
    for q, k_out in out_index.items():
        out_hat[system.rows2, q] += system.u_c[k_out] @ coef
        out_hat[:, q] += sc * (system.u_chi[k_out] @ coef)
    return np.fft.ifft(out_hat, axis=1) * n_t


def _apply_K_adjoint(system, lam, g_nodes):
    """Plain-l2 adjoint of apply_K on grid samples.

    The fft/ifft sandwich of apply_K is self-adjoint as used there, so
    the adjoint applies the conjugate-transposed slot blocks inside the
    same transform pair.  A_q is diag(r)-symmetric, so the adjoint solve
    is a conjugated solve with the radius similarity.
    """
    g_nodes = np.asarray(g_nodes, dtype=complex)
    n_t = system.n_theta
    n_r = system.r.size
    g_hat = np.fft.fft(g_nodes, axis=1) / n_t
    out_hat = np.zeros_like(g_hat)
    sc = system.lambda0.to_complex() ** 2 - lam.to_complex() ** 2

    r_ext = system.r_ext
    if sc != 0:
        for q in range(n_t):
            # (chi2 A^{-1} chi1)^H = chi1 A^{-H} chi2 with
            # A^{-H} x = conj(diag(r) A^{-1} diag(1/r) conj(x))
            rhs = np.zeros(r_ext.size, dtype=complex)
            rhs[:n_r] = np.conj(system.chi2 * g_hat[:, q]) / system.r
            sol = _tridiag_solve(system.main_all[q], system.tri_lower,
                                 system.tri_upper, rhs)
            out_hat[:, q] = np.conj(sc) * system.chi1 \
                * np.conj(sol[:n_r] * r_ext[:n_r])

    slots = _slot_pairs(system, lam)
    for q, (a_list, b_list, _) in slots.items():
        acc = out_hat[:, q]
        for a_full, b_full in zip(a_list, b_list):
            acc += np.conj(b_full) * (np.conj(a_full) @ g_hat[:, q])

    out_index = {int(q): k for k, q in enumerate(system.band_out)}
    coef = np.zeros(system.rank, dtype=complex)
    for q, k_out in out_index.items():
        coef += np.conj(system.u_c[k_out]).T @ g_hat[system.rows2, int(q)]
        coef += np.conj(sc) * (np.conj(system.u_chi[k_out]).T
                               @ g_hat[:, int(q)])
    for k_in, q in enumerate(system.band_in):
        out_hat[system.i1, int(q)] += np.conj(system.v_hat[:, k_in, :]).T \
            @ coef
    return np.fft.ifft(out_hat, axis=1) * n_t


def build_K(system, lam):
    """Dense matrix of the conjugated K(lambda) on the polar node grid.

    Meant for small validation systems only: the result is
    (n_r n_theta)^2.  Assembled slot by slot from the same structured
    pieces the determinant uses.
    """
    n_r = system.r.size
    n_t = system.n_theta
    n_ext = system.r_ext.size
    sc = system.lambda0.to_complex() ** 2 - lam.to_complex() ** 2
    slots = _slot_pairs(system, lam)
    out_index = {int(q): k for k, q in enumerate(system.band_out)}
    in_index = {int(q): k for k, q in enumerate(system.band_in)}
    k_hat = np.zeros((n_t, n_r, n_r), dtype=complex)
    for q in range(n_t):
        blk = k_hat[q]
        if sc != 0:
            rhs = np.zeros((n_ext, n_r), dtype=complex)
            rhs[:n_r] = np.diag(system.chi1.astype(complex))
            sol = _tridiag_solve(system.main_all[q], system.tri_lower,
                                 system.tri_upper, rhs)
            blk += sc * system.chi2[:, None] * sol[:n_r]
        if q in slots:
            a_list, b_list, _ = slots[q]
            for a_full, b_full in zip(a_list, b_list):
                blk += np.outer(a_full, b_full)
    # expand mode blocks to the node grid: K = W^H blockdiag(K_hat) W/n
    theta = 2.0 * _PI * np.arange(n_t) / n_t
    phase = np.exp(1j * np.outer(np.arange(n_t), theta))
    k_mat = np.einsum("qab,qi,qj->aibj", k_hat, phase,
                      np.conj(phase)) / n_t
    k_mat = k_mat.reshape(n_r * n_t, n_r * n_t)
    # two-center coupling: a rank-sized factor that crosses slots
    u_node = np.zeros((n_r, n_t, system.rank), dtype=complex)
    for q, k_out in out_index.items():
        u_m = np.zeros((n_r, system.rank), dtype=complex)
        u_m[system.rows2] = system.u_c[k_out]
        u_m += sc * system.u_chi[k_out]
        u_node += u_m[:, None, :] * phase[q][None, :, None]
    v_node = np.zeros((system.rank, n_r, n_t), dtype=complex)
    for k_in, q in enumerate(system.band_in):
        v_m = np.zeros((system.rank, n_r), dtype=complex)
        v_m[:, system.i1] = system.v_hat[:, k_in, :]
        v_node += v_m[:, :, None] * np.conj(phase[int(q)])[None, None, :]
    k_mat += u_node.reshape(n_r * n_t, -1) \
        @ v_node.reshape(-1, n_r * n_t) / n_t
    return k_mat


# ----------------------------------------------------------------------
# scanning
# ----------------------------------------------------------------------

class WindingError(RuntimeError):
    """A cell boundary could not be phase-resolved within the budget."""


@dataclass(frozen=True)
class ResonanceHit:
    """One polished determinant zero.

    ``residual`` is |det| at the polished point divided by the median
    |det| over the enclosing cell boundary; the raw determinant scale
    grows like exp(c |lambda|^2) through the (lambda0^2 - lambda^2)
    block, so only this relative size is meaningful.
    """

    lam: LogLambda
    det_value_at_polish: complex
    winding_cell: tuple
    condition_estimate: float
    residual: float


def _edge_winding(logdet_at, z0, z1, samples, budget=512):
    """Accumulated det phase along the segment z0 -> z1."""
    n = samples
    while True:
        zs = z0 + (z1 - z0) * np.linspace(0.0, 1.0, n + 1)
        args = np.array([logdet_at(z).imag for z in zs])
        steps = np.angle(np.exp(1j * np.diff(args)))
        if np.max(np.abs(steps)) < _PI / 2:
            return float(np.sum(steps))
        if n >= budget:
            raise WindingError(
                "edge %s -> %s not phase-resolved at %d samples"
                % (z0, z1, n))
        n *= 2


def resonance_scan(system, window, cells, samples_per_edge=64,
                   polish_tol_factor=1e-8, max_newton=40):
    """Argument-principle scan of det(I + K) over a rectangular window.

    ``window`` is (re0, re1, im0, im1); ``cells`` an (nx, ny) pair with
    nx * ny >= 16.  Cells with nonzero winding are polished by Newton
    iteration on the determinant (finite-difference derivative).
    """
    re0, re1, im0, im1 = map(float, window)
    nx, ny = cells
    if nx * ny < 16:
        raise ValueError("cell count must be at least 4x4")
    cache = {}

    def logdet_at(z):
        key = (round(z.real, 12), round(z.imag, 12))
        hit = cache.get(key)
        if hit is None:
            res = fredholm_det(system, LogLambda.from_complex(z))
            hit = complex(res.log_abs, res.log_arg)
            cache[key] = hit
        return hit

    xs = np.linspace(re0, re1, nx + 1)
    ys = np.linspace(im0, im1, ny + 1)
    # horizontal edges [i, j]: xs[i] -> xs[i+1] at ys[j]; vertical [i, j]
    h_edges = {}
    v_edges = {}
    for j in range(ny + 1):
        for i in range(nx):
            h_edges[i, j] = _edge_winding(
                logdet_at, complex(xs[i], ys[j]),
                complex(xs[i + 1], ys[j]), samples_per_edge)
    for j in range(ny):
        for i in range(nx + 1):
            v_edges[i, j] = _edge_winding(
                logdet_at, complex(xs[i], ys[j]),
                complex(xs[i], ys[j + 1]), samples_per_edge)

    hits = []
    for i in range(nx):
        for j in range(ny):
            total = (h_edges[i, j] + v_edges[i + 1, j]
                     - h_edges[i, j + 1] - v_edges[i, j])
            winding = int(round(total / (2.0 * _PI)))
            if winding == 0:
                continue
            cell = (xs[i], xs[i + 1], ys[j], ys[j + 1])
            # |det| varies like exp(c |lambda|^2) across the window and
            # can leave the representable range outright, so the polish
            # tolerance is set against the local boundary log-median and
            # all arithmetic stays in log form until locally rescaled
            local = [v.real for (kr, ki), v in cache.items()
                     if xs[i] - 1e-9 <= kr <= xs[i + 1] + 1e-9
                     and ys[j] - 1e-9 <= ki <= ys[j + 1] + 1e-9]
            scale_log = float(np.median(local))
            z = complex(0.5 * (xs[i] + xs[i + 1]),
                        0.5 * (ys[j] + ys[j + 1]))
            step = 1e-4 * max(xs[i + 1] - xs[i], ys[j + 1] - ys[j])
            cond = math.inf
            for _ in range(max_newton):
                l0 = logdet_at(z)
                if l0.real - scale_log < math.log(polish_tol_factor):
                    break
                lp = logdet_at(z + step)
                lm = logdet_at(z - step)
                ref = max(l0.real, lp.real, lm.real)
                d0 = np.exp(l0 - ref)
                dp = (np.exp(lp - ref) - np.exp(lm - ref)) / (2 * step)
                if dp == 0:
                    break
                cond = abs(d0 / dp)
                z = z - d0 / dp
            l_fin = logdet_at(z)
            hits.append(ResonanceHit(
                lam=LogLambda.from_complex(z),
                det_value_at_polish=np.exp(complex(
                    np.clip(l_fin.real, -700.0, 700.0), l_fin.imag)),
                winding_cell=cell,
                condition_estimate=cond,
                residual=float(np.exp(np.clip(
                    l_fin.real - scale_log, -700.0, 700.0)))))
    hits.sort(key=lambda h: h.lam.modulus)
    # a zero near a shared edge can be polished from both adjacent
    # cells; keep the better-converged copy
    merge_tol = 1e-3 * max(re1 - re0, im0 - im1, im1 - im0)
    unique = []
    for h in hits:
        z = h.lam.to_complex()
        for k, other in enumerate(unique):
            if abs(other.lam.to_complex() - z) < merge_tol:
                if h.residual < other.residual:
                    unique[k] = h
                break
        else:
            unique.append(h)
    return unique


def operator_norm_estimate(system, lam, n_iter=40, seed=1):
    """Quadrature-weighted L^2 operator norm of K(lambda), by power iteration.

    Iterates v <- K^H K v in the inner product weighted by the polar
    quadrature measure r dr dtheta, so the estimate approximates the
    continuum L^2(R^2) -> L^2(R^2) norm of the discretized kernel.
    """
    w = np.broadcast_to(
        (system.dr * system.r)[:, None] * (2.0 * _PI / system.n_theta),
        (system.r.size, system.n_theta))
    rng = np.random.default_rng(seed)
    v = (rng.standard_normal(w.shape) + 1j * rng.standard_normal(w.shape))
    v /= math.sqrt(float(np.sum(w * np.abs(v) ** 2)))
    est = 0.0
    for _ in range(n_iter):
        ku = apply_K(system, lam, v)
        est = math.sqrt(float(np.sum(w * np.abs(ku) ** 2)))
        # adjoint in the weighted inner product: w^{-1} K^H (w ku)
        back = _apply_K_adjoint(system, lam, w * ku)
        v = back / w
        nv = math.sqrt(float(np.sum(w * np.abs(v) ** 2)))
        if nv == 0:
            return 0.0
        v /= nv
    return float(est)



# ----------------------------------------------------------------------
# string predictor and region check
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class StringBand:
    """Predicted Im lambda band for a solenoid-pair resonance string."""

    center: float
    half_width: float
    pair: tuple


def predicted_string(config, pair, re_lambda, epsilon=0.05, c_off=0.5,
                     m_floor=10.0):
    """Predicted Im lambda band of the (i, j) pair string at Re lambda.

    Center -log(re_lambda) / (2 d_ij), half-width
    epsilon log(re_lambda) + c_off; the additive constant of the true
    string is not pinned down by theory and c_off absorbs it.
    """
    if re_lambda <= m_floor:
        raise ValueError("re_lambda must exceed the large-|lambda| floor")
    i, j = pair
    d = float(np.linalg.norm(config.positions[i] - config.positions[j]))
    log_l = math.log(re_lambda)
    return StringBand(center=-log_l / (2.0 * d),
                      half_width=epsilon * log_l + c_off,
                      pair=(i, j))


@dataclass(frozen=True)
class RegionReport:
    """Outcome of checking scan hits against the resonance-free region."""

    flagged: tuple
    slope: float
    intercept: float
    n_fit: int


def region_check(hits, config, epsilon=0.05, m_floor=10.0):
    """Flag hits inside the proven resonance-free region; fit the string.

    A hit with Re lambda > m_floor violating
    Im lambda <= -(1/(2 d_max) - epsilon) log|lambda| lies where no
    resonance can be and is returned in ``flagged``.  The slope of
    Im lambda against log Re lambda over the unflagged hits estimates the
    string exponent (target -1/(2 d_max)).
    """
    d_max, _ = _config_d_max(config)
    flagged = []
    xs, ys = [], []
    for h in hits:
        z = h.lam.to_complex()
        if z.real > m_floor:
            bound = -(1.0 / (2.0 * d_max) - epsilon) * math.log(abs(z))
            if z.imag > bound:
                flagged.append(h)
                continue
        if z.real > m_floor:
            xs.append(math.log(z.real))
            ys.append(z.imag)
    if len(xs) >= 2:
        slope, intercept = np.polyfit(xs, ys, 1)
    else:
        slope, intercept = math.nan, math.nan
    return RegionReport(flagged=tuple(flagged), slope=float(slope),
                        intercept=float(intercept), n_fit=len(xs))
