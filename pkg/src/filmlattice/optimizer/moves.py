"""Subgraph-preserving local moves.

Every move is described by a kind and integer parameters (column indices are
periodic).  ``rescale`` is the lattice counterpart of a vertical stretch with a
triangular horizontal cut-off: inside a window of half-width ``r`` centred at
``i0`` each column gains ``trunc(sigma * (1 - |d| / r))`` cells and its label
sequence is resampled so that the vertical order of phases is kept.
``transfer`` moves the top cell of one column onto another and, together with
``swap``, spans the mass-preserving moves.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..core import A, B, Configuration
from . import _kernels as K

KINDS = ("grow", "shrink", "relabel", "swap", "rescale", "transfer")
KIND_CODES = {name: code for code, name in enumerate(KINDS)}
# weights over (grow, shrink, relabel, swap, rescale)
DEFAULT_WEIGHTS = (0.25, 0.25, 0.3, 0.15, 0.05)


class IllegalMove(ValueError):
    pass


class NoLegalMove(RuntimeError):
    """The state is frozen: no move kind with positive weight is applicable."""


@dataclass(frozen=True)
class Move:
    kind: str
    params: tuple[int, ...] = ()

    @classmethod
    def null(cls) -> "Move":
        return cls("rescale", (0, 1, 0))

    def code(self) -> tuple[int, np.ndarray]:
        p = np.zeros(4, dtype=np.int64)
        p[: len(self.params)] = self.params
        return KIND_CODES[self.kind], p


def _wrap(cfg: Configuration, move: Move) -> Move:
    nx = cfg.spec.nx
    p = list(move.params)
    if move.kind in ("grow", "shrink", "relabel", "rescale"):
        p[0] %= nx
    elif move.kind == "swap":
        p[0] %= nx
        p[2] %= nx
    elif move.kind == "transfer":
        p[0] %= nx
        p[1] %= nx
    return Move(move.kind, tuple(int(x) for x in p))


def check_legal(cfg: Configuration, move: Move) -> Move:
    """Validate ``move`` against ``cfg``; returns it with indices wrapped."""
    if move.kind not in KIND_CODES:
        raise IllegalMove(f"unknown move kind {move.kind!r}")
    arity = {"grow": 2, "shrink": 1, "relabel": 2, "swap": 4, "rescale": 3, "transfer": 2}
    if len(move.params) != arity[move.kind]:
        raise IllegalMove(f"{move.kind} takes {arity[move.kind]} parameters")
    move = _wrap(cfg, move)
    h, ny, g = cfg.heights, cfg.spec.ny, cfg.grid
    p = move.params
    kind = move.kind
    if kind == "grow":
        if h[p[0]] >= ny:
            raise IllegalMove(f"column {p[0]} already reaches the ceiling")
        if p[1] not in (A, B):
            raise IllegalMove("grown phase must be A or B")
    elif kind == "shrink":
        if h[p[0]] == 0:
            raise IllegalMove(f"column {p[0]} is empty")
    elif kind == "relabel":
        if not 0 <= p[1] < h[p[0]]:
            raise IllegalMove(f"cell ({p[0]}, {p[1]}) is not a film cell")
    elif kind == "swap":
        if not (0 <= p[1] < ny and 0 <= p[3] < ny):
            raise IllegalMove("swap row out of range")
        if g[p[0], p[1]] != A or g[p[2], p[3]] != B:
            raise IllegalMove("swap needs an A cell and a B cell")
    elif kind == "rescale":
        if not 1 <= p[1] <= (cfg.spec.nx + 1) // 2:
            raise IllegalMove("rescale half-width out of range")
        if abs(p[2]) > ny:
            raise IllegalMove("rescale amplitude exceeds the ceiling")
    elif kind == "transfer":
        if p[0] == p[1]:
            raise IllegalMove("transfer needs two distinct columns")
        if h[p[0]] == 0 or h[p[1]] >= ny:
            raise IllegalMove("transfer needs a non-empty donor and a receiver below the ceiling")
    return move


class _Buffers:
    def __init__(self, nx: int, ny: int):
        cap = nx * ny + 2
        self.ch_i = np.empty(cap, np.int64)
        self.ch_j = np.empty(cap, np.int64)
        self.ch_old = np.empty(cap, np.int8)
        self.ch_new = np.empty(cap, np.int8)
        self.hc_col = np.empty(nx + 2, np.int64)
        self.hc_old = np.empty(nx + 2, np.int64)
        self.hc_new = np.empty(nx + 2, np.int64)
        self.mark = np.zeros((nx, ny), np.int8)


def apply_move(cfg: Configuration, move: Move) -> Configuration:
    move = check_legal(cfg, move)
    kind, params = move.code()
    grid = np.array(cfg.grid)
    heights = np.array(cfg.heights)
    buf = _Buffers(cfg.spec.nx, cfg.spec.ny)
    n, nh = K.build_changes(grid, heights, kind, params, buf.ch_i, buf.ch_j, buf.ch_old,
                            buf.ch_new, buf.hc_col, buf.hc_new)
    K.apply_changes(grid, heights, buf.ch_i, buf.ch_j, buf.ch_new, n, buf.hc_col, buf.hc_new, nh)
    # full validation: moves must never leave the admissible class
    return Configuration(cfg.spec, grid)


def propose(
    cfg: Configuration,
    rng: np.random.Generator,
    weights=DEFAULT_WEIGHTS,
    constrained: bool = False,
) -> Move:
    """Sample a move kind by ``weights``, then its parameters uniformly over legal instances.

    In constrained mode only mass-preserving moves are drawn: ``swap`` with
    the swap weight and ``transfer`` with the grow + shrink weight.
    """
    w = np.asarray(weights, dtype=float)
    params = np.zeros(4, dtype=np.int64)
    grid = np.array(cfg.grid)
    heights = np.array(cfg.heights)
    kind = K.propose(grid, heights, cfg.count(A), cfg.count(B), w, constrained, rng, params)
    if kind < 0:
        raise NoLegalMove("no legal move with positive weight")
    arity = (2, 1, 2, 4, 3, 2)[kind]
    return Move(KINDS[kind], tuple(int(x) for x in params[:arity]))


def local_delta(cfg: Configuration, move: Move, st, use_relaxed=False, penalty=None) -> float:
    from ..energy import coefficients, cost_table
    from ..potential import greens_function, marker

    move = check_legal(cfg, move)
    spec = cfg.spec
    kind, params = move.code()
    costs = cost_table(coefficients(st, use_relaxed)) * spec.cell
    use_nl = st.gamma > 0
    if use_nl:
        green = greens_function(spec.nx, spec.ny)
        g, pot = green.g, green.apply(marker(cfg))
    else:
        g, pot = np.zeros((1, 1, 1)), np.zeros((1, 1))
    if penalty is not None:
        lam, big_m, small_m = penalty
        pen = (True, lam * spec.cell_area, small_m / spec.cell_area, big_m / spec.cell_area)
    else:
        pen = (False, 0.0, 0.0, 0.0)
    grid = np.array(cfg.grid)
    heights = np.array(cfg.heights)
    buf = _Buffers(spec.nx, spec.ny)
    n_a = cfg.count(A)
    delta, *_ = K.move_delta(
        grid, heights, costs, kind, params, use_nl, st.gamma * spec.cell_area**2, g, pot,
        pen[0], pen[1], n_a, n_a + cfg.count(B), pen[2], pen[3],
        buf.ch_i, buf.ch_j, buf.ch_old, buf.ch_new, buf.hc_col, buf.hc_old, buf.hc_new, buf.mark)
    return float(delta)
