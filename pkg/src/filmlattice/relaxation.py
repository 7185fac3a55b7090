"""Lattice wetting constructions that realize the relaxed interface coefficients.

On the grid a single row of cells is already a wetting layer, so for
full-width layers the original-tension energy of the wetted configuration
equals the relaxed energy of the target exactly.  Each operator has a
``*_phase`` / ``*_layers`` helper deciding, from the tensions, whether wetting
pays off and with which phase; a ``None`` answer means the coefficient is
already minimal and the operator is a no-op.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import A, B, V, Configuration
from .energy import SurfaceTensions, relaxed_tensions, surface_energy


class InfeasibleTarget(ValueError):
    pass


@dataclass(frozen=True)
class WettingReport:
    before_G: float
    after_G: float
    predicted_drop: float
    affected_length: float

    @property
    def measured_drop(self) -> float:
        return self.before_G - self.after_G


def _pair_cost(st: SurfaceTensions, p: int, q: int) -> float:
    if p == q:
        return 0.0
    key = frozenset((p, q))
    return {
        frozenset((A, V)): st.sigma_A,
        frozenset((B, V)): st.sigma_B,
        frozenset((A, B)): st.sigma_AB,
    }[key]


def _substrate_cost(st: SurfaceTensions, p: int) -> float:
    return {A: st.sigma_AS, B: st.sigma_BS, V: st.sigma_S}[p]


# --- case dispatch ---------------------------------------------------------


def substrate_wetting_phase(st: SurfaceTensions) -> int | None:
    """Phase of the layer to slide under the other phase, if that lowers the substrate cost."""
    if st.sigma_AS + st.sigma_AB < st.sigma_BS:
        return A
    if st.sigma_BS + st.sigma_AB < st.sigma_AS:
        return B
    return None


def graph_wetting_phase(st: SurfaceTensions) -> int | None:
    if st.sigma_A + st.sigma_AB < st.sigma_B:
        return A
    if st.sigma_B + st.sigma_AB < st.sigma_A:
        return B
    return None


def exposed_wetting_layers(st: SurfaceTensions) -> tuple[int, int] | None:
    """(lower, upper) phases covering bare substrate, or None if bare substrate is cheapest.

    ``lower == upper`` means a single layer.
    """
    rt = relaxed_tensions(st)
    via_a = st.sigma_AS + rt.sigma_A
    via_b = st.sigma_BS + rt.sigma_B
    if st.sigma_S <= min(via_a, via_b):
        return None
    if via_a <= via_b:
        return (A, A) if rt.sigma_A == st.sigma_A else (A, B)
    return (B, B) if rt.sigma_B == st.sigma_B else (B, A)


def substrate_gap(st: SurfaceTensions, phase: int) -> float:
    other = B if phase == A else A
    return _substrate_cost(st, other) - _substrate_cost(st, phase) - st.sigma_AB


def graph_gap(st: SurfaceTensions, phase: int) -> float:
    other = B if phase == A else A
    return _pair_cost(st, other, V) - _pair_cost(st, phase, V) - st.sigma_AB


def exposed_gap(st: SurfaceTensions, lower: int, upper: int) -> float:
    layered = _substrate_cost(st, lower) + _pair_cost(st, lower, upper) + _pair_cost(st, upper, V)
    return st.sigma_S - layered


# --- operators -------------------------------------------------------------


def wet_substrate(cfg: Configuration, thickness_cells: int, phase: int = A) -> Configuration:
    """Relabel the bottom ``thickness_cells`` rows of every film column to ``phase``."""
    h = cfg.heights
    film = h > 0
    if not film.any():
        raise ValueError("no film columns to wet")
    if not 1 <= thickness_cells < int(h[film].min()):
        raise ValueError(
            f"thickness {thickness_cells} must lie in [1, {int(h[film].min())}) (shortest film column)"
        )
    grid = cfg.render()
    grid[film, :thickness_cells] = phase
    return Configuration(cfg.spec, grid)


def wet_graph(cfg: Configuration, thickness_cells: int, phase: int = A) -> Configuration:
    """Put ``thickness_cells`` cells of ``phase`` on top of every film column."""
    if thickness_cells == 0:
        return cfg
    if thickness_cells < 0:
        raise ValueError("thickness must be non-negative")
    h = cfg.heights
    if int(h.max()) + thickness_cells > cfg.spec.ny:
        raise ValueError("wetting layer would cross the ceiling")
    grid = cfg.render()
    for i in np.flatnonzero(h > 0):
        grid[i, h[i] : h[i] + thickness_cells] = phase
    return Configuration(cfg.spec, grid)


def wet_exposed_substrate(
    cfg: Configuration, t1: int, t2: int, lower: int = A, upper: int = B
) -> Configuration:
    """Cover bare-substrate columns: rows ``[0, t1)`` get ``lower``, ``[t1, t2)`` get ``upper``."""
    if not 0 <= t1 < t2 <= cfg.spec.ny:
        raise ValueError(f"need 0 <= t1 < t2 <= {cfg.spec.ny}, got t1={t1}, t2={t2}")
    exposed = cfg.heights == 0
    if not exposed.any():
        raise ValueError("no exposed substrate columns")
    grid = cfg.render()
    grid[exposed, :t1] = lower
    grid[exposed, t1:t2] = upper
    return Configuration(cfg.spec, grid)


def _top_faces(cfg: Configuration, phase: int) -> int:
    h = cfg.heights
    cols = np.flatnonzero((h > 0) & (h < cfg.spec.ny))
    return int(np.count_nonzero(cfg.grid[cols, h[cols] - 1] == phase))


def _report(before: Configuration, after: Configuration, st, gap, affected) -> WettingReport:
    return WettingReport(
        before_G=surface_energy(before, st),
        after_G=surface_energy(after, st),
        predicted_drop=gap * affected,
        affected_length=affected,
    )


def substrate_wetting(cfg, st, thickness_cells):
    """Apply the substrate layer the tensions call for; returns (configuration, report)."""
    phase = substrate_wetting_phase(st)
    if phase is None:
        return cfg, _report(cfg, cfg, st, 0.0, 0.0)
    other = B if phase == A else A
    affected = int(np.count_nonzero(cfg.grid[:, 0] == other)) * cfg.spec.cell
    out = wet_substrate(cfg, thickness_cells, phase)
    return out, _report(cfg, out, st, substrate_gap(st, phase), affected)


def graph_wetting(cfg, st, thickness_cells):
    phase = graph_wetting_phase(st)
    if phase is None or thickness_cells == 0:
        return cfg, _report(cfg, cfg, st, 0.0, 0.0)
    other = B if phase == A else A
    affected = _top_faces(cfg, other) * cfg.spec.cell
    out = wet_graph(cfg, thickness_cells, phase)
    return out, _report(cfg, out, st, graph_gap(st, phase), affected)


def exposed_substrate_wetting(cfg, st, thickness_cells):
    """Cover bare substrate with one layer, or a double layer of total thickness 2*t."""
    layers = exposed_wetting_layers(st)
    if layers is None or not (cfg.heights == 0).any():
        return cfg, _report(cfg, cfg, st, 0.0, 0.0)
    lower, upper = layers
    affected = int(np.count_nonzero(cfg.heights == 0)) * cfg.spec.cell
    if lower == upper:
        out = wet_exposed_substrate(cfg, 0, thickness_cells, lower, upper)
    else:
        out = wet_exposed_substrate(cfg, thickness_cells, 2 * thickness_cells, lower, upper)
    return out, _report(cfg, out, st, exposed_gap(st, lower, upper), affected)


def restore_mass(cfg: Configuration, bigM: float, smallm: float) -> Configuration:
    """Vertical rescaling to film area ``bigM``, then relabeling to A-area ``smallm``.

    Heights become the largest-remainder rounding of ``(bigM / area) * h``
    with labels resampled so the vertical order of phases is kept; surplus
    A (or B) cells are then converted in column-major, bottom-up order.
    """
    spec = cfg.spec
    if not 0 < smallm < bigM:
        raise InfeasibleTarget(f"need 0 < m < M, got m={smallm!r}, M={bigM!r}")
    try:
        f_target = spec.cells_for_area(bigM)
        a_target = spec.cells_for_area(smallm)
    except ValueError as exc:
        raise InfeasibleTarget(str(exc)) from None
    if f_target > spec.nx * spec.ny:
        raise InfeasibleTarget("film area exceeds the domain below the ceiling")
    h = cfg.heights.astype(np.int64)
    total = int(h.sum())
    if total == 0:
        raise InfeasibleTarget("cannot rescale an empty film")

    ideal = h * (f_target / total)
    new_h = np.minimum(np.floor(ideal).astype(np.int64), spec.ny)
    short = f_target - int(new_h.sum())
    frac = ideal - np.floor(ideal)
    # largest remainder first, lowest column index on ties
    for i in sorted(np.flatnonzero(h > 0), key=lambda k: (-frac[k], k)):
        if short == 0:
            break
        if new_h[i] < spec.ny:
            new_h[i] += 1
            short -= 1
    for i in range(spec.nx):
        while short > 0 and new_h[i] < spec.ny:
            new_h[i] += 1
            short -= 1

    grid = np.zeros_like(cfg.grid)
    for i in range(spec.nx):
        if h[i] > 0:
            rows = ((2 * np.arange(new_h[i]) + 1) * h[i]) // (2 * new_h[i])
            grid[i, : new_h[i]] = cfg.grid[i, rows]
        else:
            grid[i, : new_h[i]] = A

    excess = int(np.count_nonzero(grid == A)) - a_target
    src, dst = (A, B) if excess > 0 else (B, A)
    remaining = abs(excess)
    for i in range(spec.nx):
        for j in range(new_h[i]):
            if remaining == 0:
                break
            if grid[i, j] == src:
                grid[i, j] = dst
                remaining -= 1
    return Configuration(spec, grid)


def recovery_gap(cfg: Configuration, st: SurfaceTensions, thicknesses) -> list[tuple[int, float]]:
    """Original-tension energy of the wetted configuration minus the relaxed energy of ``cfg``.

    Thickness 0 applies no wetting.  Each operator runs at the requested
    thickness, clipped to what its precondition allows on ``cfg``.
    """
    if not st.relax_ok:
        from .energy import HypothesisViolated

        raise HypothesisViolated("relaxed tensions need sigma_AB <= sigma_A + sigma_B")
    target = surface_energy(cfg, st, use_relaxed=True)
    rows = []
    for t in thicknesses:
        wetted = wetted_configuration(cfg, st, int(t))
        rows.append((int(t), surface_energy(wetted, st) - target))
    return rows


def wetted_configuration(cfg: Configuration, st: SurfaceTensions, thickness: int) -> Configuration:
    """Substrate layer, then graph layer, then cover of bare substrate."""
    if thickness < 0:
        raise ValueError("thickness must be non-negative")
    out = cfg
    if thickness == 0:
        return out
    ny = cfg.spec.ny
    h = cfg.heights
    film = h > 0
    if film.any():
        t_sub = min(thickness, int(h[film].min()) - 1)
        if t_sub >= 1:
            out, _ = substrate_wetting(out, st, t_sub)
        t_graph = min(thickness, ny - int(h.max()))
        if t_graph >= 1:
            out, _ = graph_wetting(out, st, t_graph)
    if (~film).any():
        layers = exposed_wetting_layers(st)
        if layers is not None:
            t_exp = min(thickness, ny if layers[0] == layers[1] else ny // 2)
            if t_exp >= 1:
                out, _ = exposed_substrate_wetting(out, st, t_exp)
    return out


def gap_csv(rows) -> str:
    return "thickness,gap\n" + "".join(f"{t},{g!r}\n" for t, g in rows)
