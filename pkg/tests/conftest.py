import numpy as np
import pytest
from hypothesis import HealthCheck, settings, strategies as st
from scipy import integrate

from filmlattice.core import A, B, V, Configuration, GridSpec, from_columns

settings.register_profile(
    "default", max_examples=100, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")

# filled in by test_acceptance.py, printed once at the end of the session
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@st.composite
def configurations(draw, max_nx=8, max_ny=8, min_nx=2, min_ny=2):
    nx = draw(st.integers(min_nx, max_nx))
    ny = draw(st.integers(min_ny, max_ny))
    heights = draw(st.lists(st.integers(0, ny), min_size=nx, max_size=nx))
    grid = np.zeros((nx, ny), dtype=np.int8)
    for i, h in enumerate(heights):
        labels = draw(st.lists(st.sampled_from([A, B]), min_size=h, max_size=h))
        grid[i, :h] = labels
    return Configuration(GridSpec(nx, ny, 1.0), grid)


def random_configuration(rng: np.random.Generator, nx: int, ny: int, width_L: float = 1.0,
                         p_a: float = 0.5, max_h: int | None = None) -> Configuration:
    max_h = ny if max_h is None else max_h
    grid = np.zeros((nx, ny), dtype=np.int8)
    for i in range(nx):
        h = int(rng.integers(0, max_h + 1))
        grid[i, :h] = np.where(rng.random(h) < p_a, A, B)
    return Configuration(GridSpec(nx, ny, width_L), grid)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def direct_face_counts(grid):
    # slow per-cell face walk, independent of the vectorized counter
    nx, ny = grid.shape
    slot = {frozenset((1, 0)): 0, frozenset((2, 0)): 1, frozenset((1, 2)): 2}
    counts = [0] * 6
    for i in range(nx):
        for j in range(ny):
            p = int(grid[i, j])
            q = int(grid[(i + 1) % nx, j])
            if p != q:
                counts[slot[frozenset((p, q))]] += 1
            if j + 1 < ny and p != int(grid[i, j + 1]):
                counts[slot[frozenset((p, int(grid[i, j + 1])))]] += 1
        counts[{1: 3, 2: 4, 0: 5}[int(grid[i, 0])]] += 1
    return counts


def direct_surface_energy(cfg, coeffs) -> float:
    """Surface energy from the slow face walk; ``coeffs`` in slot order."""
    return cfg.spec.cell * float(sum(c * k for c, k in zip(coeffs, direct_face_counts(cfg.grid))))


# --- bilayer oracle ---


def bilayer_cfg(ny):
    """B on y in [0, 1), A on [1, 2), void up to the ceiling at y = 4, L = 1."""
    nx = ny // 4
    q = ny // 4
    return from_columns(GridSpec(nx, ny, 1.0), ["B" * q + "A" * q] * nx)


def _dphi(y):
    # -phi'' = u with u = -1 on [0,1), +1 on [1,2), 0 above; phi'(0) = 0.
    # u is piecewise constant so its primitive is exact
    return min(y, 1.0) - min(max(y - 1.0, 0.0), 1.0)


def _phi_raw(y):
    return integrate.quad(_dphi, 0.0, y, points=[p for p in (1.0, 2.0) if p < y] or None)[0]


def continuum_bilayer_energy() -> float:
    return integrate.quad(lambda y: _dphi(y) ** 2, 0.0, 4.0, points=[1.0, 2.0])[0]


def continuum_bilayer_phi(y: np.ndarray) -> np.ndarray:
    raw = np.array([_phi_raw(t) for t in y])
    mean = integrate.quad(_phi_raw, 0.0, 4.0, points=[1.0, 2.0])[0] / 4.0
    return raw - mean
