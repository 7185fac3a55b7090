"""Simulated annealing over subgraph-preserving moves."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from ..core import A, B, Configuration
from ..energy import SurfaceTensions, coefficients, cost_table, face_counts, mass_penalty, total_energy
from ..potential import NonConvergence, greens_function, marker
from . import _kernels as K
from .moves import DEFAULT_WEIGHTS, NoLegalMove

logger = logging.getLogger(__name__)

MODES = ("constrained", "penalized")


class InfeasibleStart(ValueError):
    pass


class AnnealError(RuntimeError):
    def __init__(self, step: int, message: str):
        self.step = step
        super().__init__(f"step {step}: {message}")


@dataclass(frozen=True)
class Objective:
    """What to minimize: total energy under hard masses, or with a mass penalty."""

    st: SurfaceTensions
    use_relaxed: bool = False
    mode: str = "constrained"
    bigM: float | None = None
    smallm: float | None = None
    lam: float | None = None

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}")
        if self.bigM is None or self.smallm is None:
            raise ValueError("both masses M and m are required")
        if not 0 < self.smallm < self.bigM:
            raise ValueError(f"need 0 < m < M, got m={self.smallm}, M={self.bigM}")
        if self.lam is not None and self.lam < 0:
            raise ValueError("lambda must be non-negative")
        if self.use_relaxed and not self.st.relax_ok:
            from ..energy import HypothesisViolated

            raise HypothesisViolated("relaxed tensions need sigma_AB <= sigma_A + sigma_B")

    def penalty_weight(self, cell: float) -> float:
        """Explicit lambda, or the default ``4 * max(sigma) / cell``."""
        if self.lam is not None:
            return self.lam
        return 4.0 * max(self.st.coefficients()) / cell

    @property
    def penalized(self) -> bool:
        return self.mode == "penalized"


def objective_energy(cfg: Configuration, obj: Objective, tol: float = 1e-12) -> float:
    """Full recomputation of the objective (iterative solver for the nonlocal term)."""
    f = total_energy(cfg, obj.st, obj.use_relaxed, tol).total_F
    if obj.penalized:
        f += mass_penalty(cfg, obj.penalty_weight(cfg.spec.cell), obj.bigM, obj.smallm)
    return f


@dataclass(frozen=True)
class AnnealSchedule:
    t0: float | None = None
    alpha: float | None = None
    steps: int = 200_000
    seed: int = 0
    move_weights: tuple[float, ...] = DEFAULT_WEIGHTS
    trace_every: int | None = None

    def __post_init__(self):
        if self.steps < 0:
            raise ValueError("steps must be non-negative")
        if self.t0 is not None and not self.t0 > 0:
            raise ValueError("t0 must be positive")
        if self.alpha is not None and not 0 < self.alpha < 1:
            raise ValueError("alpha must lie in (0, 1)")
        w = tuple(float(x) for x in self.move_weights)
        if len(w) != 5 or min(w) < 0 or abs(sum(w) - 1.0) > 1e-9:
            raise ValueError("move_weights must be 5 non-negative numbers summing to 1")
        object.__setattr__(self, "move_weights", w)
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must fit in 64 bits")

    def resolved(self, cfg0: Configuration, obj: Objective) -> tuple[float, float]:
        t0 = self.t0
        if t0 is None:
            counts = face_counts(cfg0.grid)
            g = float(np.dot(coefficients(obj.st, obj.use_relaxed), counts)) * cfg0.spec.cell
            t0 = g / 10.0
        alpha = self.alpha
        if alpha is None:
            alpha = 10.0 ** (-3.0 / max(self.steps, 1))
        return t0, alpha


@dataclass
class RunResult:
    best: Configuration
    best_energy: float
    seed: int
    acceptance_rate: float
    final: Configuration
    final_energy: float
    accumulated_energy: float
    trace_step: np.ndarray = field(repr=False)
    trace_T: np.ndarray = field(repr=False)
    trace_F: np.ndarray = field(repr=False)
    trace_accepted: np.ndarray = field(repr=False)
    violations: int = 0
    t0: float = 0.0
    alpha: float = 0.0

    def trace_csv(self) -> str:
        lines = ["step,T,F,accepted"]
        for s, t, f, a in zip(self.trace_step, self.trace_T, self.trace_F, self.trace_accepted):
            lines.append(f"{int(s)},{float(t)!r},{float(f)!r},{int(a)}")
        return "\n".join(lines) + "\n"


def _exact_energy(cfg: Configuration, obj: Objective, green) -> float:
    # same lattice energy the kernel accumulates, with the tabulated Green's function
    f = float(np.dot(coefficients(obj.st, obj.use_relaxed), face_counts(cfg.grid))) * cfg.spec.cell
    if obj.st.gamma > 0:
        f += obj.st.gamma * green.nonlocal_energy(cfg)
    if obj.penalized:
        f += mass_penalty(cfg, obj.penalty_weight(cfg.spec.cell), obj.bigM, obj.smallm)
    return f


def check_feasible_start(cfg0: Configuration, obj: Objective) -> None:
    spec = cfg0.spec
    try:
        m_cells = spec.cells_for_area(obj.smallm)
        big_m_cells = spec.cells_for_area(obj.bigM)
    except ValueError as exc:
        raise InfeasibleStart(str(exc)) from None
    if cfg0.count(A) != m_cells or cfg0.count(B) != big_m_cells - m_cells:
        raise InfeasibleStart(
            f"start has {cfg0.count(A)} A / {cfg0.count(B)} B cells, "
            f"constraints need {m_cells} / {big_m_cells - m_cells}"
        )


def anneal(
    cfg0: Configuration,
    obj: Objective,
    schedule: AnnealSchedule = AnnealSchedule(),
    validate: bool = False,
    tol: float = 1e-12,
) -> RunResult:
    """Metropolis annealing; deterministic for a given seed.

    ``validate`` re-checks admissibility (and masses, in constrained mode)
    after every step and counts failures in ``RunResult.violations``.
    """
    spec = cfg0.spec
    if obj.mode == "constrained":
        check_feasible_start(cfg0, obj)
    t0, alpha = schedule.resolved(cfg0, obj)
    costs = cost_table(coefficients(obj.st, obj.use_relaxed)) * spec.cell
    use_nl = obj.st.gamma > 0
    green = greens_function(spec.nx, spec.ny) if use_nl else None
    if use_nl:
        g, pot = green.g, green.apply(marker(cfg0))
    else:
        g, pot = np.zeros((1, 1, 1)), np.zeros((1, 1))
    if obj.penalized:
        lam = obj.penalty_weight(spec.cell)
        pen = (True, lam * spec.cell_area, obj.smallm / spec.cell_area, obj.bigM / spec.cell_area)
    else:
        pen = (False, 0.0, 0.0, 0.0)

    energy0 = _exact_energy(cfg0, obj, green)
    every = schedule.trace_every or max(1, schedule.steps // 1000)
    n_trace = schedule.steps // every + 1
    tr_step = np.zeros(n_trace, np.int64)
    tr_t = np.zeros(n_trace)
    tr_f = np.zeros(n_trace)
    tr_a = np.zeros(n_trace, np.int8)
    grid = np.array(cfg0.grid)
    heights = np.array(cfg0.heights)
    best_grid = np.empty_like(grid)
    rng = np.random.default_rng(schedule.seed)

    best, acc_energy, accepted, n_tr, violations, frozen = K.anneal_kernel(
        grid, heights, costs, use_nl, obj.st.gamma * spec.cell_area**2, g, pot,
        pen[0], pen[1], pen[2], pen[3], obj.mode == "constrained",
        np.asarray(schedule.move_weights), t0, alpha, schedule.steps, rng, energy0, every,
        tr_step, tr_t, tr_f, tr_a, best_grid, validate)
    if frozen >= 0:
        raise NoLegalMove(f"no legal move at step {frozen}")

    best_cfg = Configuration(spec, best_grid)
    final_cfg = Configuration(spec, grid)
    try:
        best_energy = objective_energy(best_cfg, obj, tol)
        final_energy = objective_energy(final_cfg, obj, tol)
    except NonConvergence as exc:
        raise AnnealError(schedule.steps, str(exc)) from exc
    logger.debug("seed %d: best %.12g, accepted %d/%d", schedule.seed, best_energy, accepted, schedule.steps)
    return RunResult(
        best=best_cfg,
        best_energy=best_energy,
        seed=schedule.seed,
        acceptance_rate=accepted / schedule.steps if schedule.steps else 0.0,
        final=final_cfg,
        final_energy=final_energy,
        accumulated_energy=float(acc_energy),
        trace_step=tr_step[:n_tr],
        trace_T=tr_t[:n_tr],
        trace_F=tr_f[:n_tr],
        trace_accepted=tr_a[:n_tr],
        violations=int(violations),
        t0=t0,
        alpha=alpha,
    )
