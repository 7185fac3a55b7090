"""Interface measures and the surface / total / penalized energies.

Lengths are face counts times the cell side.  Six interface slots are used
throughout, always in this order::

    (Gamma^A, Gamma^B, Gamma^AB, S^A, S^B, S^V)

with coefficients ``(sigma_A, sigma_B, sigma_AB, sigma_AS, sigma_BS, sigma_S)``.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, fields

import numpy as np

from .core import A, B, S, V, Configuration

SLOTS = ("GammaA", "GammaB", "GammaAB", "SA", "SB", "SV")

# slot index for each unordered phase pair; -1 marks same-phase faces
_PAIR_SLOT = np.full((4, 4), -1, dtype=np.int64)
for _p, _q, _k in ((A, V, 0), (B, V, 1), (A, B, 2), (A, S, 3), (B, S, 4), (V, S, 5)):
    _PAIR_SLOT[_p, _q] = _PAIR_SLOT[_q, _p] = _k


class HypothesisViolated(ValueError):
    """Tensions violate sigma_AB <= sigma_A + sigma_B, required for relaxation."""


@dataclass(frozen=True)
class SurfaceTensions:
    sigma_A: float
    sigma_B: float
    sigma_AB: float
    sigma_AS: float
    sigma_BS: float
    sigma_S: float
    gamma: float = 0.0

    def __post_init__(self):
        for f in fields(self)[:6]:
            if not getattr(self, f.name) > 0:
                raise ValueError(f"{f.name} must be positive, got {getattr(self, f.name)!r}")
        if not self.gamma >= 0:
            raise ValueError("gamma must be non-negative")

    def coefficients(self) -> tuple[float, ...]:
        return (self.sigma_A, self.sigma_B, self.sigma_AB, self.sigma_AS, self.sigma_BS, self.sigma_S)

    @property
    def relax_ok(self) -> bool:
        return self.sigma_AB <= self.sigma_A + self.sigma_B

    @property
    def strict_triangle(self) -> bool:
        a, b, ab = self.sigma_A, self.sigma_B, self.sigma_AB
        return ab < a + b and a < b + ab and b < a + ab

    def with_gamma(self, gamma: float) -> "SurfaceTensions":
        return SurfaceTensions(*self.coefficients(), gamma=gamma)


@dataclass(frozen=True)
class RelaxedTensions:
    sigma_A: float
    sigma_B: float
    sigma_AB: float
    sigma_AS: float
    sigma_BS: float
    sigma_S: float

    def coefficients(self) -> tuple[float, ...]:
        return (self.sigma_A, self.sigma_B, self.sigma_AB, self.sigma_AS, self.sigma_BS, self.sigma_S)


def relaxed_tensions(st: SurfaceTensions) -> RelaxedTensions:
    """Lower-semicontinuous envelope of the interface coefficients (wetting by thin layers)."""
    if not st.relax_ok:
        raise HypothesisViolated(
            f"sigma_AB={st.sigma_AB} exceeds sigma_A + sigma_B = {st.sigma_A + st.sigma_B}"
        )
    a = min(st.sigma_A, st.sigma_B + st.sigma_AB)
    b = min(st.sigma_B, st.sigma_A + st.sigma_AB)
    return RelaxedTensions(
        sigma_A=a,
        sigma_B=b,
        sigma_AB=st.sigma_AB,
        sigma_AS=min(st.sigma_AS, st.sigma_BS + st.sigma_AB),
        sigma_BS=min(st.sigma_BS, st.sigma_AS + st.sigma_AB),
        sigma_S=min(st.sigma_S, st.sigma_AS + a, st.sigma_BS + b),
    )


def coefficients(st: SurfaceTensions, use_relaxed: bool = False) -> tuple[float, ...]:
    return relaxed_tensions(st).coefficients() if use_relaxed else st.coefficients()


def cost_table(coeffs) -> np.ndarray:
    """4x4 symmetric per-face cost table indexed by phase codes (V, A, B, S)."""
    table = np.zeros((4, 4))
    for p in range(4):
        for q in range(4):
            k = _PAIR_SLOT[p, q]
            if k >= 0:
                table[p, q] = coeffs[k]
    return table


def face_counts(grid: np.ndarray) -> np.ndarray:
    """Integer face counts per slot for a phase grid ``grid[column, row]``."""
    counts = np.zeros(6, dtype=np.int64)
    lateral = _PAIR_SLOT[grid, np.roll(grid, -1, axis=0)]
    vertical = _PAIR_SLOT[grid[:, :-1], grid[:, 1:]]
    bottom = _PAIR_SLOT[grid[:, 0], S]
    for slots in (lateral, vertical, bottom):
        slots = slots[slots >= 0]
        counts += np.bincount(slots, minlength=6)
    return counts


def interface_lengths(cfg: Configuration) -> dict[str, float]:
    counts = face_counts(cfg.grid)
    return {name: float(c) * cfg.spec.cell for name, c in zip(SLOTS, counts)}


def surface_energy(cfg: Configuration, st: SurfaceTensions, use_relaxed: bool = False) -> float:
    counts = face_counts(cfg.grid)
    coeffs = coefficients(st, use_relaxed)
    return math.fsum(c * int(n) for c, n in zip(coeffs, counts)) * cfg.spec.cell


@dataclass(frozen=True)
class EnergyBreakdown:
    len_GammaA: float
    len_GammaB: float
    len_GammaAB: float
    len_SA: float
    len_SB: float
    len_SV: float
    surface_G: float
    nonlocal_N: float
    total_F: float
    penalized_H: float | None = None
    relaxed: bool = False
    relax_ok: bool = True
    strict_triangle: bool = True

    CSV_HEADER = (
        "len_GammaA,len_GammaB,len_GammaAB,len_SA,len_SB,len_SV,G,N,F,H,relaxed,relax_ok,strict_triangle"
    )

    def csv_row(self) -> str:
        vals = [
            self.len_GammaA, self.len_GammaB, self.len_GammaAB,
            self.len_SA, self.len_SB, self.len_SV,
            self.surface_G, self.nonlocal_N, self.total_F,
        ]
        out = [repr(float(v)) for v in vals]
        out.append("" if self.penalized_H is None else repr(float(self.penalized_H)))
        out += [str(int(self.relaxed)), str(int(self.relax_ok)), str(int(self.strict_triangle))]
        return ",".join(out)

    def as_dict(self) -> dict:
        return asdict(self)


def total_energy(
    cfg: Configuration,
    st: SurfaceTensions,
    use_relaxed: bool = False,
    tol: float = 1e-10,
) -> EnergyBreakdown:
    from .potential import nonlocal_energy

    counts = face_counts(cfg.grid)
    coeffs = coefficients(st, use_relaxed)
    lengths = [float(c) * cfg.spec.cell for c in counts]
    g = math.fsum(c * int(n) for c, n in zip(coeffs, counts)) * cfg.spec.cell
    n = nonlocal_energy(cfg, tol)
    return EnergyBreakdown(
        *lengths,
        surface_G=g,
        nonlocal_N=n,
        total_F=g + st.gamma * n,
        relaxed=use_relaxed,
        relax_ok=st.relax_ok,
        strict_triangle=st.strict_triangle,
    )


def mass_penalty(cfg: Configuration, lam: float, bigM: float, smallm: float) -> float:
    check_masses(bigM, smallm)
    if lam < 0:
        raise ValueError("penalty weight must be non-negative")
    da = cfg.spec.cell_area
    area_a = cfg.count(A) * da
    area_film = (cfg.count(A) + cfg.count(B)) * da
    return lam * (abs(area_a - smallm) + abs(area_film - bigM))


def check_masses(bigM: float, smallm: float) -> None:
    if not 0 < smallm < bigM:
        raise ValueError(f"need 0 < m < M, got m={smallm!r}, M={bigM!r}")


def penalized_energy(
    cfg: Configuration,
    st: SurfaceTensions,
    use_relaxed: bool,
    lam: float,
    bigM: float,
    smallm: float,
    tol: float = 1e-10,
) -> float:
    penalty = mass_penalty(cfg, lam, bigM, smallm)
    return total_energy(cfg, st, use_relaxed, tol).total_F + penalty


def breakdown_with_penalty(cfg, st, use_relaxed, lam, bigM, smallm, tol=1e-10) -> EnergyBreakdown:
    br = total_energy(cfg, st, use_relaxed, tol)
    h = br.total_F + mass_penalty(cfg, lam, bigM, smallm)
    return EnergyBreakdown(**{**br.as_dict(), "penalized_H": h})


def energy_delta(
    cfg: Configuration,
    move,
    st: SurfaceTensions,
    use_relaxed: bool = False,
    penalty: tuple[float, float, float] | None = None,
) -> float:
    """Energy change of applying ``move`` to ``cfg``, from local recounts only.

    The surface part re-counts the faces touching changed cells, the nonlocal
    part uses the exact lattice Green's function, ``penalty`` is an optional
    ``(lambda, M, m)`` triple for the penalized objective.
    """
    from .optimizer.moves import local_delta

    return local_delta(cfg, move, st, use_relaxed, penalty)
