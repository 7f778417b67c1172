"""Solenoid configurations, standing hypotheses, and diffractive geodesics.

A configuration is a finite set of flux-carrying points inside a disc of
radius ``R0``, together with a larger cutoff-support radius ``R1``.  This
module validates the standing hypotheses (non-integer fluxes, no three
points collinear, containment), computes the geometric constants that enter
the trapping thresholds, and enumerates polygonal paths bouncing between
the flux points.

Wave singularities travel along straight lines except at the flux points,
where they re-radiate; a polygonal path with vertices in the point set is
*geometric* when it passes straight through a vertex without deflection and
*strictly diffractive* otherwise.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "SolenoidConfig",
    "FluxSummary",
    "DiffractiveGeodesic",
    "GeodesicBudgetError",
    "validate",
    "d_max",
    "t_threshold",
    "t_prime",
    "enumerate_geodesics",
    "min_diffraction_count",
    "geodesics_to_csv",
]

FLUX_TOL = 1e-9        # distance of a flux from the nearest integer
COLLINEAR_TOL = 1e-9   # triangle area relative to squared diameter
DEFAULT_PATH_CAP = 10**6


class GeodesicBudgetError(RuntimeError):
    """Path enumeration exceeded the combinatorial budget."""


@dataclass(frozen=True)
class SolenoidConfig:
    """Positions and fluxes of the solenoids plus the radii R0 < R1.

    ``positions`` is an (n, 2) array (length units), ``fluxes`` the matching
    per-solenoid fluxes.  All positions must lie strictly inside the disc of
    radius ``R0``; ``R1 > R0`` bounds the support of every spatial cutoff.
    """

    positions: np.ndarray
    fluxes: np.ndarray
    R0: float
    R1: float

    def __post_init__(self):
        object.__setattr__(self, "positions", np.atleast_2d(np.asarray(self.positions, float)))
        object.__setattr__(self, "fluxes", np.atleast_1d(np.asarray(self.fluxes, float)))
        if self.positions.shape != (len(self.fluxes), 2):
            raise ValueError("positions must be (n, 2) matching n fluxes")

    @property
    def n(self) -> int:
        return len(self.fluxes)

    @property
    def total_flux(self) -> float:
        return float(self.fluxes.sum())

    def flux_summary(self) -> "FluxSummary":
        beta = self.total_flux
        if beta != 0.0:
            center = (self.fluxes[:, None] * self.positions).sum(axis=0) / beta
        else:
            center = np.zeros(2)
        return FluxSummary(beta=beta, center=center)

    @staticmethod
    def from_json(path_or_str) -> "SolenoidConfig":
        """Load ``{"solenoids":[{"x":..,"y":..,"alpha":..}],"R0":..,"R1":..}``."""
        if isinstance(path_or_str, str) and path_or_str.lstrip().startswith("{"):
            data = json.loads(path_or_str)
        else:
            with open(path_or_str) as fh:
                data = json.load(fh)
        sol = data["solenoids"]
        pos = np.array([[s["x"], s["y"]] for s in sol], float)
        flux = np.array([s["alpha"] for s in sol], float)
        return SolenoidConfig(pos, flux, float(data["R0"]), float(data["R1"]))

    def to_json(self) -> str:
        return json.dumps(
            {
                "solenoids": [
                    {"x": float(x), "y": float(y), "alpha": float(a)}
                    for (x, y), a in zip(self.positions, self.fluxes)
                ],
                "R0": self.R0,
                "R1": self.R1,
            },
            indent=2,
        )


@dataclass(frozen=True)
class FluxSummary:
    """Total flux, its weighted center, and the minimal fractional order."""

    beta: float
    center: np.ndarray

    @staticmethod
    def nu0(alpha: float) -> float:
        """min over integers n of |n + alpha| (in [0, 1/2])."""
        return abs(alpha - round(alpha))


@dataclass(frozen=True)
class DiffractiveGeodesic:
    """Polygonal path start -> s_{v1} -> ... -> s_{vk} -> end.

    ``kind`` is "geometric" when the path continues straight through at
    least one vertex (within the collinearity tolerance), otherwise
    "strictly-diffractive".
    """

    start: tuple[float, float]
    vertices: tuple[int, ...]
    end: tuple[float, float]
    length: float
    kind: str

    def points(self, config: SolenoidConfig) -> np.ndarray:
        return np.vstack([self.start, config.positions[list(self.vertices)], self.end])


def _polyline_length(pts: np.ndarray) -> float:
    return float(np.sqrt(((pts[1:] - pts[:-1]) ** 2).sum(axis=1)).sum())


def _classify(pts: np.ndarray, tol: float) -> str:
    """geometric iff some interior vertex has equal incoming/outgoing direction."""
    for k in range(1, len(pts) - 1):
        a = pts[k] - pts[k - 1]
        b = pts[k + 1] - pts[k]
        cross = a[0] * b[1] - a[1] * b[0]
        dot = a @ b
        scale = np.linalg.norm(a) * np.linalg.norm(b)
        if scale == 0.0:
            continue
        if abs(cross) <= tol * scale and dot > 0:
            return "geometric"
    return "strictly-diffractive"


def validate(config: SolenoidConfig, flux_tol: float = FLUX_TOL,
             collinear_tol: float = COLLINEAR_TOL) -> list[str]:
    """Check the standing hypotheses; returns a list of violations (empty = ok)."""
    violations: list[str] = []
    for i, a in enumerate(config.fluxes):
        if abs(a - round(a)) <= flux_tol:
            violations.append(f"flux index {i}: alpha={a} is integer (within {flux_tol})")
    radii = np.linalg.norm(config.positions, axis=1)
    for i, r in enumerate(radii):
        if r >= config.R0:
            violations.append(f"position index {i}: |s|={r} is not strictly inside R0={config.R0}")
    if not config.R0 < config.R1:
        violations.append(f"R0={config.R0} must be < R1={config.R1}")
    n = config.n
    if n >= 3:
        scale2 = max(_pairwise_sq(config.positions).max(), 1e-300)
        for i in range(n):
            for j in range(i + 1, n):
                for k in range(j + 1, n):
                    a, b, c = config.positions[[i, j, k]]
                    area2 = abs((b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]))
                    if area2 <= collinear_tol * scale2:
                        violations.append(f"collinear triple ({i},{j},{k})")
    return violations


def _pairwise_sq(pos: np.ndarray) -> np.ndarray:
    d = pos[:, None, :] - pos[None, :, :]
    return (d ** 2).sum(axis=-1)


def d_max(config: SolenoidConfig) -> tuple[float, tuple[int, int]]:
    """Maximum pairwise distance and the achieving pair of indices."""
    if config.n < 2:
        raise ValueError("d_max requires at least two solenoids")
    sq = _pairwise_sq(config.positions)
    i, j = np.unravel_index(np.argmax(sq), sq.shape)
    if i > j:
        i, j = j, i
    return float(math.sqrt(sq[i, j])), (int(i), int(j))


def t_threshold(N: int, config: SolenoidConfig) -> float:
    """Propagation time (N+1) d_max + 4 R1 + 1 after which N diffractions are guaranteed."""
    if N < 0:
        raise ValueError("N must be >= 0")
    dm, _ = d_max(config)
    return (N + 1) * dm + 4.0 * config.R1 + 1.0


def t_prime(N: int, config: SolenoidConfig) -> float:
    """t_threshold(N) + R0 + 3 R1 (the enlarged threshold in the region formula)."""
    return t_threshold(N, config) + config.R0 + 3.0 * config.R1


def min_diffraction_count(config: SolenoidConfig, T: float) -> int:
    """Largest N with t_threshold(N) < T: guaranteed diffraction count at length T.

    Returns 0 when T does not clear the base threshold t_threshold(0).
    """
    if T <= 0:
        raise ValueError("T must be positive")
    dm, _ = d_max(config)
    base = dm + 4.0 * config.R1 + 1.0  # t_threshold(0)
    if T <= base:
        return 0
    # strict inequality t_N < T
    N = int(math.floor((T - 4.0 * config.R1 - 1.0) / dm - 1.0))
    while t_threshold(N, config) >= T:
        N -= 1
    while t_threshold(N + 1, config) < T:
        N += 1
    return max(N, 0)


def enumerate_geodesics(config: SolenoidConfig, start, end, max_length: float,
                        max_vertices: int, path_cap: int = DEFAULT_PATH_CAP,
                        collinear_tol: float = COLLINEAR_TOL) -> list[DiffractiveGeodesic]:
    """All polygonal paths start -> (vertices in S, no immediate repeats) -> end
    with at most ``max_vertices`` vertices and total length <= ``max_length``.

    Depth-first with length pruning; raises GeodesicBudgetError past
    ``path_cap`` candidate extensions.  Paths need at least one vertex: the
    plain segment start -> end is not a diffractive geodesic.
    """
    start = np.asarray(start, float)
    end = np.asarray(end, float)
    pos = config.positions
    if any(np.allclose(start, p) for p in pos) or any(np.allclose(end, p) for p in pos):
        raise ValueError("start/end must not be solenoid positions")
    out: list[DiffractiveGeodesic] = []
    budget = [0]

    def dfs(prefix: list[int], length_so_far: float):
        budget[0] += 1
        if budget[0] > path_cap:
            raise GeodesicBudgetError(f"more than {path_cap} candidate paths")
        last_pt = pos[prefix[-1]] if prefix else start
        if prefix:
            tail = float(np.linalg.norm(end - last_pt))
            total = length_so_far + tail
            if total <= max_length:
                pts = np.vstack([start[None], pos[prefix], end[None]])
                out.append(DiffractiveGeodesic(
                    start=(float(start[0]), float(start[1])),
                    vertices=tuple(prefix),
                    end=(float(end[0]), float(end[1])),
                    length=_polyline_length(pts),
                    kind=_classify(pts, collinear_tol),
                ))
        if len(prefix) >= max_vertices:
            return
        for v in range(config.n):
            if prefix and v == prefix[-1]:
                continue
            step = float(np.linalg.norm(pos[v] - last_pt))
            new_len = length_so_far + step
            # shortest possible completion is the straight tail to end
            if new_len + float(np.linalg.norm(end - pos[v])) > max_length:
                continue
            dfs(prefix + [v], new_len)

    if max_vertices >= 1 and config.n >= 1:
        dfs([], 0.0)
    out.sort(key=lambda g: (g.length, g.vertices))
    return out


def geodesics_to_csv(geodesics: list[DiffractiveGeodesic]) -> str:
    """CSV with columns vertices,length,kind (vertex list as dash-joined indices)."""
    lines = ["vertices,length,kind"]
    for g in geodesics:
        vtx = "-".join(str(v) for v in g.vertices)
        lines.append(f"{vtx},{g.length:.17g},{g.kind}")
    return "\n".join(lines) + "\n"
