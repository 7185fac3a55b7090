"""Exhaustive enumeration of admissible configurations on tiny grids.

The enumeration walks column states ``(h, labels)`` depth-first.  Surface
energy splits into per-column terms and lateral terms between neighbouring
columns, the nonlocal term into column-pair blocks of the Green's function, so
each node costs O(nx).  Ties are broken by the lexicographically smallest
text serialization.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit

from ..core import A, B, V, Configuration, GridSpec, dumps
from ..energy import coefficients, cost_table
from ..potential import greens_function
from .annealing import Objective

MAX_STATES = 10**7
_TIE_TOL = 1e-10
_MAX_TIES = 100_000


class InstanceTooLarge(ValueError):
    pass


@dataclass(frozen=True)
class BruteForceResult:
    best: Configuration
    energy: float
    n_states: int
    n_ties: int


def column_states(ny: int) -> np.ndarray:
    """All column label vectors, ``(2**(ny+1) - 1, ny)`` int8, ordered by height then bits."""
    states = []
    for h in range(ny + 1):
        for bits in range(2**h):
            col = np.zeros(ny, dtype=np.int8)
            for j in range(h):
                col[j] = B if (bits >> j) & 1 else A
            states.append(col)
    return np.array(states)


def count_states(spec: GridSpec, masses: tuple[int, int] | None = None) -> int:
    """Number of admissible configurations, optionally with exactly ``(n_A, n_B)`` cells."""
    if masses is None:
        return (2 ** (spec.ny + 1) - 1) ** spec.nx
    n_a, n_b = masses
    # polynomial in (a, b): column generating function sum_h sum_k C(h, k) a^k b^(h-k)
    from math import comb

    col = np.zeros((spec.ny + 1, spec.ny + 1), dtype=object)
    for h in range(spec.ny + 1):
        for k in range(h + 1):
            col[k, h - k] += comb(h, k)
    poly = np.zeros((n_a + 1, n_b + 1), dtype=object)
    poly[0, 0] = 1
    for _ in range(spec.nx):
        nxt = np.zeros_like(poly)
        for a in range(n_a + 1):
            for b in range(n_b + 1):
                if poly[a, b]:
                    for ka in range(min(spec.ny, n_a - a) + 1):
                        for kb in range(min(spec.ny - ka, n_b - b) + 1):
                            if col[ka, kb]:
                                nxt[a + ka, b + kb] += poly[a, b] * col[ka, kb]
        poly = nxt
    return int(poly[n_a, n_b])


@njit(cache=True)
def _enumerate(nx, self_cost, pair, colpair, use_nl, nl_scale, col_a, col_f,
               constrained, m_cells, f_cells, pen_on, lam_da, ny,
               collect, threshold, out):
    n_states = self_cost.shape[0]
    chosen = np.full(nx, -1, np.int64)
    e_part = np.zeros(nx + 1)
    a_part = np.zeros(nx + 1, np.int64)
    f_part = np.zeros(nx + 1, np.int64)
    best = np.inf
    n_out = 0
    leaves = 0
    d = 0
    while d >= 0:
        chosen[d] += 1
        s = chosen[d]
        if s >= n_states:
            chosen[d] = -1
            d -= 1
            continue
        a = a_part[d] + col_a[s]
        f = f_part[d] + col_f[s]
        if constrained:
            if a > m_cells or f - a > f_cells - m_cells:
                continue
            if f_cells - f > (nx - d - 1) * ny:
                continue
        e = e_part[d] + self_cost[s]
        if d > 0:
            e += pair[chosen[d - 1], s]
        if d == nx - 1:
            e += pair[s, chosen[0]]
        if use_nl:
            q = colpair[0, s, s]
            for k in range(d):
                q += 2.0 * colpair[d - k, s, chosen[k]]
            e += nl_scale * q
        if d < nx - 1:
            e_part[d + 1] = e
            a_part[d + 1] = a
            f_part[d + 1] = f
            d += 1
            continue
        if constrained and (a != m_cells or f != f_cells):
            continue
        if pen_on:
            e += lam_da * (abs(a - m_cells) + abs(f - f_cells))
        leaves += 1
        if collect:
            if e <= threshold and n_out < out.shape[0]:
                out[n_out, :] = chosen
                n_out += 1
        elif e < best:
            best = e
    return best, n_out, leaves


class Enumerator:
    """Tabulated column energies for one grid and one set of tensions."""

    def __init__(self, spec: GridSpec, st, use_relaxed: bool = False, max_states: int = MAX_STATES):
        total = count_states(spec)
        self.spec = spec
        self.st = st
        self.use_relaxed = use_relaxed
        self.max_states = max_states
        self.total_states = total
        ny = spec.ny
        costs = cost_table(coefficients(st, use_relaxed)) * spec.cell
        self.states = column_states(ny)
        labels = self.states.astype(np.int64)
        self.col_a = (labels == A).sum(axis=1).astype(np.int64)
        self.col_f = (labels != V).sum(axis=1).astype(np.int64)
        self_cost = costs[labels[:, 0], 3].copy()
        for j in range(ny - 1):
            self_cost += costs[labels[:, j], labels[:, j + 1]]
        self.self_cost = self_cost
        self._labels = labels
        self._costs = costs
        self._pair = None
        self._colpair = None

    def _tables(self):
        if self._pair is None:
            labels, costs = self._labels, self._costs
            n = labels.shape[0]
            pair = np.zeros((n, n))
            for j in range(self.spec.ny):
                pair += costs[labels[:, j][:, None], labels[:, j][None, :]]
            self._pair = pair
            if self.st.gamma > 0:
                g = greens_function(self.spec.nx, self.spec.ny).g
                u = np.array([0.0, 1.0, -1.0])[labels]
                self._colpair = np.einsum("sj,djk,tk->dst", u, g, u)
            else:
                self._colpair = np.zeros((1, 1, 1))
        return self._pair, self._colpair

    def minimize(self, obj: Objective) -> BruteForceResult:
        spec = self.spec
        if obj.st != self.st or obj.use_relaxed != self.use_relaxed:
            raise ValueError("objective tensions differ from the tabulated ones")
        constrained = obj.mode == "constrained"
        m_cells = spec.cells_for_area(obj.smallm) if constrained else 0
        f_cells = spec.cells_for_area(obj.bigM) if constrained else 0
        if constrained:
            n_states = count_states(spec, (m_cells, f_cells - m_cells))
        else:
            n_states = self.total_states
        if n_states > self.max_states:
            raise InstanceTooLarge(f"{n_states} admissible states exceed the cap {self.max_states}")
        pair, colpair = self._tables()
        if obj.penalized:
            lam_da = obj.penalty_weight(spec.cell) * spec.cell_area
            m_val, f_val = obj.smallm / spec.cell_area, obj.bigM / spec.cell_area
        else:
            lam_da, m_val, f_val = 0.0, float(m_cells), float(f_cells)
        use_nl = self.st.gamma > 0
        nl_scale = self.st.gamma * spec.cell_area**2
        args = (spec.nx, self.self_cost, pair, colpair, use_nl, nl_scale, self.col_a, self.col_f,
                constrained, m_val, f_val, obj.penalized, lam_da, spec.ny)
        dummy = np.zeros((1, spec.nx), np.int64)
        best, _, leaves = _enumerate(*args, False, 0.0, dummy)
        if not np.isfinite(best):
            raise ValueError("no admissible configuration satisfies the constraints")
        out = np.zeros((_MAX_TIES, spec.nx), np.int64)
        threshold = best + _TIE_TOL * (1.0 + abs(best))
        _, n_out, _ = _enumerate(*args, True, threshold, out)
        candidates = [self._config(row) for row in out[:n_out]]
        best_cfg = min(candidates, key=dumps)
        return BruteForceResult(best_cfg, float(best), int(leaves), int(n_out))

    def _config(self, row) -> Configuration:
        return Configuration(self.spec, self.states[row], _validated=True)


def brute_force(spec: GridSpec, obj: Objective, max_states: int = MAX_STATES) -> BruteForceResult:
    """Exact minimizer by exhaustive enumeration; refuses instances above ``max_states``."""
    if obj.mode == "constrained":
        m_cells = spec.cells_for_area(obj.smallm)
        f_cells = spec.cells_for_area(obj.bigM)
        n = count_states(spec, (m_cells, f_cells - m_cells))
    else:
        n = count_states(spec)
    if n > max_states:
        raise InstanceTooLarge(f"{n} admissible states exceed the cap {max_states}")
    return Enumerator(spec, obj.st, obj.use_relaxed, max_states).minimize(obj)
