"""Regularity checks on concrete configurations.

Infiltration squares are scanned on a grid refined twice in each direction,
so an even side ``r`` (in cells) has its concentric half-square on the
refined lattice as well.  The substrate is padded below the box and void
above the ceiling, the way the unbounded half-plane would look.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

import numpy as np
from numba import njit

from .core import S, V, Configuration

DEFAULT_EPS = 0.01
DEFAULT_JUMP_THRESHOLD = 4
DEFAULT_SLOPE_CAP = 8


@dataclass(frozen=True)
class Violation:
    center: tuple[float, float]
    r: int
    phases: str  # "V" or "AB"
    fraction: float


def dyadic_radii(cfg: Configuration) -> list[int]:
    """Even radii 2, 4, 8, ... up to the smaller grid dimension."""
    out, r = [], 2
    while r <= min(cfg.spec.nx, cfg.spec.ny):
        out.append(r)
        r *= 2
    return out


def _box_sums(prefix: np.ndarray, side: int, xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
    x1, y1 = xs[:, None], ys[None, :]
    x2, y2 = x1 + side, y1 + side
    return prefix[x2, y2] - prefix[x1, y2] - prefix[x2, y1] + prefix[x1, y1]


def _prefix(mask: np.ndarray) -> np.ndarray:
    p = np.zeros((mask.shape[0] + 1, mask.shape[1] + 1), dtype=np.int64)
    p[1:, 1:] = mask.cumsum(axis=0).cumsum(axis=1)
    return p


def infiltration_check(cfg: Configuration, eps: float = DEFAULT_EPS, radii=None) -> list[Violation]:
    """Squares where a phase set is sparse in ``Q_r`` but still present in ``Q_{r/2}``.

    Squares have cell corners as lower-left corners, wrap periodically in x
    and may overhang the substrate (void version) or the ceiling (both).
    The film version only uses squares that stay above the substrate.
    """
    if eps < 0:
        raise ValueError("eps must be non-negative")
    if radii is None:
        radii = dyadic_radii(cfg)
    spec = cfg.spec
    out: list[Violation] = []
    if eps == 0:
        return out
    cell = spec.cell
    for r in radii:
        if r <= 0 or r % 2:
            raise ValueError(f"radius {r} must be a positive even number of cells")
        pad = 2 * r  # refined units
        fine = np.repeat(np.repeat(cfg.grid, 2, axis=0), 2, axis=1)
        col = np.concatenate(
            [np.full((fine.shape[0], pad), S, np.int8), fine, np.full((fine.shape[0], pad), V, np.int8)],
            axis=1,
        )
        col = np.concatenate([col, col[:pad]], axis=0)  # periodic wrap
        n_x = 2 * spec.nx
        xs = np.arange(0, n_x, 2)
        ys = np.arange(0, col.shape[1] - 2 * r + 1, 2)
        full_area = (2 * r) ** 2
        for phases, mask, y_min in (("V", col == V, 0), ("AB", (col != V) & (col != S), pad)):
            prefix = _prefix(mask)
            ys_ok = ys[ys >= y_min]
            big = _box_sums(prefix, 2 * r, xs, ys_ok)
            small = _box_sums(prefix, r, xs + r // 2, ys_ok + r // 2)
            hit = (big < eps * full_area) & (small > 0)
            for ix, iy in zip(*np.nonzero(hit)):
                cx = float((xs[ix] + r) % n_x) / 2 * cell
                cy = float(ys_ok[iy] + r - pad) / 2 * cell
                out.append(Violation((cx, cy), int(r), phases, float(big[ix, iy]) / full_area))
    return out


# --- interior ball -----------------------------------------------------------

_N_DIRECTIONS = 33  # odd: includes straight down
_SUB = 4  # samples per cell edge


def profile_vertices(heights: np.ndarray) -> list[tuple[int, int]]:
    """Corner points ``(x, y)`` of the profile in cell units; x is the left column's right edge."""
    nx = heights.shape[0]
    verts = []
    for i in range(nx):
        left, right = int(heights[i - 1]), int(heights[i])
        if left != right:
            verts.append((i, left))
            verts.append((i, right))
    return verts


@njit(cache=True)
def _disc_inside(heights, vx, vy, nux, nuy, r, sub):
    # disc centre relative to the vertex; scan sample columns it covers
    cx = nux * r
    cy = nuy * r
    nx = heights.shape[0]
    step = 1.0 / sub
    k_lo = int(np.floor((cx - r) * sub - 0.5)) - 1
    k_hi = int(np.ceil((cx + r) * sub - 0.5)) + 1
    for k in range(k_lo, k_hi + 1):
        px = (k + 0.5) * step
        dx = px - cx
        s2 = r * r - dx * dx
        if s2 <= 0.0:
            continue
        s = np.sqrt(s2)
        col = (vx + int(np.floor(px))) % nx
        h = heights[col] - vy  # profile height relative to vertex
        # lowest sample strictly inside the disc and at or above the profile
        lo = max(cy - s, h)
        m = np.floor(lo * sub - 0.5) + 1.0
        y = (m + 0.5) * step
        if y < cy + s:
            return False
    return True


@njit(cache=True)
def _vertex_radius(heights, vx, vy, nus, cap, sub, iters):
    best = 0.0
    for d in range(nus.shape[0]):
        nux, nuy = nus[d, 0], nus[d, 1]
        if _disc_inside(heights, vx, vy, nux, nuy, cap, sub):
            return cap
        # only search directions that can beat the current best
        if best > 0.0 and not _disc_inside(heights, vx, vy, nux, nuy, best, sub):
            continue
        lo, hi = best, cap
        for _ in range(iters):
            mid = 0.5 * (lo + hi)
            if _disc_inside(heights, vx, vy, nux, nuy, mid, sub):
                lo = mid
            else:
                hi = mid
        best = lo
    return best


def _directions(n: int) -> np.ndarray:
    half = n // 2
    theta = np.pi / 2 * np.arange(half + 1) / half  # 0 .. 90 deg away from straight down
    right = np.stack([np.sin(theta), -np.cos(theta)], axis=1)
    left = right[1:] * np.array([-1.0, 1.0])
    return np.concatenate([right, left])


def interior_ball_radius(cfg: Configuration, iters: int = 40) -> float:
    """Smallest, over profile corners, of the largest tangent disc inside ``{y < h(x)}``.

    Discs ``B_r(z + r nu)`` with ``nu`` in the lower half circle; containment
    is tested on sample points at the centres of quarter-cells.  Capped at L.
    """
    if not np.any(cfg.heights):
        raise ValueError("interior ball radius needs a non-empty film")
    heights = np.asarray(cfg.heights, dtype=np.int64)
    cap = float(cfg.spec.nx)
    nus = _directions(_N_DIRECTIONS)
    radius = cap
    for vx, vy in profile_vertices(heights):
        radius = min(radius, _vertex_radius(heights, vx, vy, nus, cap, _SUB, iters))
    return radius * cfg.spec.cell


# --- profile structure ---------------------------------------------------------


@dataclass(frozen=True)
class ProfileReport:
    jump_columns: list[int]
    lipschitz_estimate: float
    singular_columns: list[int]
    touches_ceiling: bool


def profile_report(
    cfg: Configuration,
    jump_threshold: int = DEFAULT_JUMP_THRESHOLD,
    slope_cap: int = DEFAULT_SLOPE_CAP,
) -> ProfileReport:
    """Jumps and slopes between neighbours; pair ``i`` is columns ``(i, i+1)``, wrapping."""
    if jump_threshold < 2:
        raise ValueError("jump_threshold must be at least 2")
    h = cfg.heights.astype(np.int64)
    diff = np.abs(np.roll(h, -1) - h)
    jumps = diff >= jump_threshold
    rest = diff[~jumps]
    lip = float(rest.max()) if rest.size else 0.0
    steep = (~jumps) & (diff >= slope_cap)
    return ProfileReport(
        jump_columns=[int(i) for i in np.flatnonzero(jumps)],
        lipschitz_estimate=lip,
        singular_columns=[int(i) for i in np.flatnonzero(jumps | steep)],
        touches_ceiling=bool(np.any(h == cfg.spec.ny)),
    )


# --- combined report ---------------------------------------------------------


@dataclass
class DiagnosticsReport:
    eps: float
    radii: list[int]
    infiltration_violations: list[Violation]
    jump_columns: list[int]
    lipschitz_estimate: float
    interior_ball_radius: float | None
    touches_ceiling: bool
    singular_columns: list[int] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.infiltration_violations

    def to_text(self) -> str:
        def fmt(xs):
            return " ".join(str(x) for x in xs) if xs else "-"

        ball = "n/a" if self.interior_ball_radius is None else repr(self.interior_ball_radius)
        lines = [
            "[infiltration]",
            f"eps = {self.eps!r}",
            f"radii = {fmt(self.radii)}",
            f"violations = {len(self.infiltration_violations)}",
            "[profile]",
            f"jump_columns = {fmt(self.jump_columns)}",
            f"singular_columns = {fmt(self.singular_columns)}",
            f"lipschitz_estimate = {self.lipschitz_estimate!r}",
            f"touches_ceiling = {str(self.touches_ceiling).lower()}",
            "[interior_ball]",
            f"radius = {ball}",
        ]
        return "\n".join(lines) + "\n"

    def violations_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["center_x", "center_y", "r_cells", "phases", "fraction"])
        for v in self.infiltration_violations:
            w.writerow([repr(v.center[0]), repr(v.center[1]), v.r, v.phases, repr(v.fraction)])
        return buf.getvalue()


def diagnose(
    cfg: Configuration,
    eps: float = DEFAULT_EPS,
    radii=None,
    jump_threshold: int = DEFAULT_JUMP_THRESHOLD,
    slope_cap: int = DEFAULT_SLOPE_CAP,
) -> DiagnosticsReport:
    radii = dyadic_radii(cfg) if radii is None else list(radii)
    prof = profile_report(cfg, jump_threshold, slope_cap)
    ball = interior_ball_radius(cfg) if np.any(cfg.heights) else None
    return DiagnosticsReport(
        eps=eps,
        radii=radii,
        infiltration_violations=infiltration_check(cfg, eps, radii),
        jump_columns=prof.jump_columns,
        lipschitz_estimate=prof.lipschitz_estimate,
        interior_ball_radius=ball,
        touches_ceiling=prof.touches_ceiling,
        singular_columns=prof.singular_columns,
    )
