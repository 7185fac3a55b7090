"""Long-range (Ohta-Kawasaki type) term via a discrete zero-mean Poisson problem.

The potential solves ``-Lap_h phi = u - mean(u)`` on the truncated box
``Q_L x (0, ny*cell)`` with a five-point stencil: periodic across the lateral
edges, zero flux through the substrate and through the ceiling.  The energy is
the sum of squared face differences of ``phi``, i.e. the discrete Dirichlet
form of the same stencil, so energy and operator are consistent by summation
by parts.

``GreensFunction`` holds the exact pseudo-inverse of the stencil, compressed by
lateral translation invariance; the optimizer uses it for exact local deltas
and it doubles as an independent cross-check of the iterative solver.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .core import MARKER, Configuration, GridSpec, SpecMismatch, symmetric_difference


class NonConvergence(RuntimeError):
    def __init__(self, iterations: int, residual: float):
        self.iterations = iterations
        self.residual = residual
        super().__init__(f"CG did not converge: {iterations} iterations, relative residual {residual:.3e}")


@dataclass(frozen=True)
class PotentialField:
    spec: GridSpec
    phi: np.ndarray
    residual: float
    mean: float
    iterations: int = 0


def marker(cfg: Configuration) -> np.ndarray:
    """u on every cell: +1 on A, -1 on B, 0 on void."""
    return MARKER[cfg.grid]


def source(cfg: Configuration) -> np.ndarray:
    u = marker(cfg)
    return u - u.mean()


def apply_laplacian(phi: np.ndarray) -> np.ndarray:
    """Graph Laplacian ``K phi`` (positive semidefinite, cell-count units)."""
    out = 2.0 * phi - np.roll(phi, 1, axis=0) - np.roll(phi, -1, axis=0)
    dy = np.diff(phi, axis=1)
    out[:, :-1] -= dy
    out[:, 1:] += dy
    return out


def default_max_iter(spec: GridSpec) -> int:
    return int(50 * np.sqrt(spec.nx * spec.ny) * 10)


def solve_potential(
    cfg: Configuration,
    tol: float = 1e-8,
    max_iter: int | None = None,
    x0: np.ndarray | None = None,
) -> PotentialField:
    """Conjugate gradients on the zero-mean subspace.

    Converged when ``||Lap_h phi + s|| <= tol * ||s||``.
    """
    if not tol > 0:
        raise ValueError("tol must be positive")
    spec = cfg.spec
    s = source(cfg)
    b = s * spec.cell_area
    if max_iter is None:
        max_iter = default_max_iter(spec)
    bnorm = np.linalg.norm(b)
    if bnorm == 0.0:
        return PotentialField(spec, np.zeros((spec.nx, spec.ny)), 0.0, 0.0, 0)

    x = np.zeros_like(b) if x0 is None else np.array(x0, dtype=float)
    x -= x.mean()
    it = 0
    # restart from the true residual when the recursive one has drifted
    while True:
        r = b - apply_laplacian(x)
        r -= r.mean()
        rel = np.linalg.norm(r) / bnorm
        if rel <= tol:
            break
        if it >= max_iter:
            raise NonConvergence(it, rel)
        p = r.copy()
        rr = r.ravel() @ r.ravel()
        while it < max_iter:
            kp = apply_laplacian(p)
            alpha = rr / (p.ravel() @ kp.ravel())
            x += alpha * p
            r -= alpha * kp
            r -= r.mean()
            it += 1
            rr_new = r.ravel() @ r.ravel()
            if np.sqrt(rr_new) <= 0.5 * tol * bnorm:
                break
            p = r + (rr_new / rr) * p
            rr = rr_new
    x -= x.mean()
    return PotentialField(spec, x, float(rel), float(x.mean()), it)


def dirichlet_energy(phi: np.ndarray) -> float:
    """Sum over faces of squared differences (gradient^2 times cell area)."""
    lateral = phi - np.roll(phi, -1, axis=0)
    vertical = np.diff(phi, axis=1)
    return float(np.sum(lateral * lateral) + np.sum(vertical * vertical))


def nonlocal_energy(cfg: Configuration, tol: float = 1e-8) -> float:
    if not cfg.count(1) and not cfg.count(2):
        return 0.0
    return dirichlet_energy(solve_potential(cfg, tol).phi)


def bilinear_energy(cfg: Configuration, field: PotentialField) -> float:
    """``sum s * phi * cell_area``; equals the Dirichlet form at the exact solution."""
    return float(np.sum(source(cfg) * field.phi) * cfg.spec.cell_area)


def lipschitz_probe(cfg1: Configuration, cfg2: Configuration, tol: float = 1e-10) -> float:
    """``|N(cfg1) - N(cfg2)| / (|A1 △ A2| + |B1 △ B2|)``."""
    if cfg1.spec != cfg2.spec:
        raise SpecMismatch("configurations live on different grids")
    d_a, d_b = symmetric_difference(cfg1, cfg2)
    if d_a + d_b == 0:
        raise ValueError("configurations are identical; ratio undefined")
    return abs(nonlocal_energy(cfg1, tol) - nonlocal_energy(cfg2, tol)) / (d_a + d_b)


def dump_potential(field: PotentialField, path) -> None:
    """Write phi as text: one line per grid row (substrate row first), 17 significant digits."""
    np.savetxt(path, field.phi.T, fmt="%.16e")


# --- exact lattice Green's function ----------------------------------------

_MAX_GREEN_ENTRIES = 40_000_000


class GreensFunction:
    """Pseudo-inverse ``K^+`` of the stencil, stored as ``g[dx, j, j']``.

    ``K^+[(i, j), (i2, j2)] = g[(i - i2) % nx, j, j2]``; ``K^+`` annihilates
    constants, so ``u^T K^+ u`` needs no mean subtraction.
    """

    def __init__(self, nx: int, ny: int):
        if nx * ny * ny > _MAX_GREEN_ENTRIES:
            raise ValueError(f"Green's function for {nx}x{ny} too large to tabulate")
        self.nx, self.ny = nx, ny
        lam_x = 2.0 - 2.0 * np.cos(2.0 * np.pi * np.arange(nx) / nx)
        ky = np.diag(np.full(ny, 2.0)) - np.diag(np.ones(ny - 1), 1) - np.diag(np.ones(ny - 1), -1)
        ky[0, 0] = ky[-1, -1] = 1.0
        mu, q = np.linalg.eigh(ky)
        mu[0] = 0.0  # constant mode, exactly
        denom = lam_x[:, None] + mu[None, :]
        with np.errstate(divide="ignore"):
            w = np.where(denom > 0, 1.0 / np.where(denom > 0, denom, 1.0), 0.0)
        # per lateral wavenumber: q diag(w_k) q^T
        self._modes = np.einsum("jm,km,lm->kjl", q, w, q)
        self.g = np.ascontiguousarray(np.fft.ifft(self._modes, axis=0).real)

    def apply(self, u: np.ndarray) -> np.ndarray:
        """``K^+ u`` for a field ``u[column, row]``."""
        uk = np.fft.fft(u, axis=0)
        return np.fft.ifft(np.einsum("kjl,kl->kj", self._modes, uk), axis=0).real

    def quadratic(self, u: np.ndarray) -> float:
        return float(np.sum(u * self.apply(u)))

    def nonlocal_energy(self, cfg: Configuration) -> float:
        return self.quadratic(marker(cfg)) * cfg.spec.cell_area**2


@lru_cache(maxsize=8)
def greens_function(nx: int, ny: int) -> GreensFunction:
    return GreensFunction(nx, ny)
