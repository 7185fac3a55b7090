"""Discrete state space: periodic grid, admissible film configurations, volumes.

A configuration is stored as an ``(nx, ny)`` int8 phase grid indexed
``grid[column, row]`` (column-major: one column is contiguous) together with
its column heights.  Cells with ``row < h[column]`` carry phase A or B, cells
above are void.  Every public constructor validates the prefix property, so a
``Configuration`` can never describe an overhang, tube or hole.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# Phase codes used in every array in the package.
V, A, B, S = 0, 1, 2, 3
PHASE_CHARS = {A: "A", B: "B"}
CHAR_PHASES = {"A": A, "B": B, "V": V}
# Marker value u used by the nonlocal term: A -> +1, B -> -1, void -> 0.
MARKER = np.array([0.0, 1.0, -1.0, 0.0])

FORMAT_TAG = "FILM"
FORMAT_VERSION = "v1"


class SubgraphViolation(ValueError):
    """A void cell sits below a film cell in some column."""

    def __init__(self, column: int, row: int):
        self.column = column
        self.row = row
        super().__init__(f"void cell below film cell in column {column}, row {row}")


class FormatError(ValueError):
    """Malformed configuration text; ``line`` is 1-based."""

    def __init__(self, line: int, message: str):
        self.line = line
        super().__init__(f"line {line}: {message}")


class SpecMismatch(ValueError):
    pass


@dataclass(frozen=True)
class GridSpec:
    nx: int
    ny: int
    width_L: float = 1.0

    def __post_init__(self):
        if int(self.nx) != self.nx or int(self.ny) != self.ny:
            raise ValueError("nx and ny must be integers")
        if self.nx < 2 or self.ny < 2:
            raise ValueError(f"grid must be at least 2x2, got {self.nx}x{self.ny}")
        if not self.width_L > 0:
            raise ValueError("width_L must be positive")
        object.__setattr__(self, "nx", int(self.nx))
        object.__setattr__(self, "ny", int(self.ny))
        object.__setattr__(self, "width_L", float(self.width_L))

    @property
    def cell(self) -> float:
        """Cell side length."""
        return self.width_L / self.nx

    @property
    def height(self) -> float:
        """Physical height of the (truncated) domain, i.e. the ceiling."""
        return self.ny * self.cell

    @property
    def cell_area(self) -> float:
        return self.cell * self.cell

    def cells_for_area(self, area: float, tol: float = 1e-9) -> int:
        """Convert an area to an exact cell count, or raise if not representable."""
        n = area / self.cell_area
        k = int(round(n))
        if abs(n - k) > tol * max(1.0, abs(n)):
            raise ValueError(f"area {area!r} is not a multiple of the cell area {self.cell_area!r}")
        return k


class Configuration:
    """Immutable admissible configuration on a :class:`GridSpec`."""

    __slots__ = ("spec", "grid", "heights")

    def __init__(self, spec: GridSpec, grid: np.ndarray, *, _validated: bool = False):
        grid = np.array(grid, dtype=np.int8, copy=True)
        if grid.shape != (spec.nx, spec.ny):
            raise SpecMismatch(f"grid shape {grid.shape} does not match {spec.nx}x{spec.ny}")
        heights = _heights_or_raise(grid) if not _validated else (grid != V).sum(axis=1)
        grid.setflags(write=False)
        heights = np.asarray(heights, dtype=np.int64)
        heights.setflags(write=False)
        self.spec = spec
        self.grid = grid
        self.heights = heights

    @property
    def labels(self) -> tuple[str, ...]:
        """Per-column label strings, bottom cell first."""
        return tuple(
            "".join(PHASE_CHARS[int(p)] for p in self.grid[i, : self.heights[i]])
            for i in range(self.spec.nx)
        )

    def count(self, phase: int) -> int:
        return int(np.count_nonzero(self.grid == phase))

    def render(self) -> np.ndarray:
        """Expand to a writable label grid of phase codes."""
        return self.grid.copy()

    def roll(self, shift: int) -> "Configuration":
        """Cyclic column shift (column i moves to i + shift)."""
        return Configuration(self.spec, np.roll(self.grid, shift, axis=0), _validated=True)

    def mirror(self) -> "Configuration":
        return Configuration(self.spec, self.grid[::-1], _validated=True)

    def __eq__(self, other):
        if not isinstance(other, Configuration):
            return NotImplemented
        return self.spec == other.spec and np.array_equal(self.grid, other.grid)

    def __hash__(self):
        return hash((self.spec, self.grid.tobytes()))

    def __repr__(self):
        return f"Configuration({self.spec.nx}x{self.spec.ny}, heights={self.heights.tolist()})"


def _heights_or_raise(grid: np.ndarray) -> np.ndarray:
    if np.any((grid < V) | (grid > B)):
        raise ValueError("label grid may only contain A, B or V codes")
    film = grid != V
    heights = film.sum(axis=1)
    # prefix property: the film cells of a column are exactly rows [0, h)
    rows = np.arange(grid.shape[1])
    bad = film != (rows[None, :] < heights[:, None])
    if bad.any():
        col = int(np.argmax(bad.any(axis=1)))
        # first void row lying below some film cell
        row = int(np.argmax(~film[col]))
        raise SubgraphViolation(col, row)
    return heights


@dataclass(frozen=True)
class Volumes:
    area_A: float
    area_B: float
    area_film: float


def make_flat(spec: GridSpec, height_cells: int, phase: int = A) -> Configuration:
    if not 0 <= height_cells <= spec.ny:
        raise ValueError(f"height {height_cells} outside [0, {spec.ny}]")
    if phase not in (A, B):
        raise ValueError("phase must be A or B")
    grid = np.zeros((spec.nx, spec.ny), dtype=np.int8)
    grid[:, :height_cells] = phase
    return Configuration(spec, grid, _validated=True)


def from_label_grid(spec: GridSpec, grid) -> Configuration:
    """Build a configuration from an ``nx x ny`` array of phase codes or 'A'/'B'/'V' chars.

    Raises :class:`SubgraphViolation` naming the first offending column when a
    void cell lies below a film cell.
    """
    arr = np.asarray(grid)
    if arr.dtype.kind in "US":
        try:
            arr = np.vectorize(CHAR_PHASES.__getitem__, otypes=[np.int8])(arr)
        except KeyError as exc:
            raise ValueError(f"unknown phase label {exc.args[0]!r}") from None
    if arr.shape != (spec.nx, spec.ny):
        raise SpecMismatch(f"grid shape {arr.shape} does not match {spec.nx}x{spec.ny}")
    return Configuration(spec, arr)


def from_columns(spec: GridSpec, columns) -> Configuration:
    """Build from per-column label strings such as ``["AAB", "", "B"]``."""
    columns = list(columns)
    if len(columns) != spec.nx:
        raise SpecMismatch(f"expected {spec.nx} columns, got {len(columns)}")
    grid = np.zeros((spec.nx, spec.ny), dtype=np.int8)
    for i, col in enumerate(columns):
        if len(col) > spec.ny:
            raise ValueError(f"column {i} has {len(col)} cells, ceiling is {spec.ny}")
        for j, ch in enumerate(col):
            if ch not in ("A", "B"):
                raise ValueError(f"column {i}: invalid label {ch!r}")
            grid[i, j] = CHAR_PHASES[ch]
    return Configuration(spec, grid, _validated=True)


def volumes(cfg: Configuration) -> Volumes:
    a = cfg.count(A)
    b = cfg.count(B)
    da = cfg.spec.cell_area
    return Volumes(area_A=a * da, area_B=b * da, area_film=(a + b) * da)


def symmetric_difference(cfg1: Configuration, cfg2: Configuration) -> tuple[float, float]:
    """Areas of ``A1 △ A2`` and ``B1 △ B2``."""
    if cfg1.spec != cfg2.spec:
        raise SpecMismatch("configurations live on different grids")
    da = cfg1.spec.cell_area
    d_a = np.count_nonzero((cfg1.grid == A) != (cfg2.grid == A))
    d_b = np.count_nonzero((cfg1.grid == B) != (cfg2.grid == B))
    return d_a * da, d_b * da


# --- text format -----------------------------------------------------------


def dumps(cfg: Configuration) -> str:
    spec = cfg.spec
    lines = [f"{FORMAT_TAG} {FORMAT_VERSION} {spec.nx} {spec.ny} {spec.width_L!r}"]
    lines.append(" ".join(str(int(h)) for h in cfg.heights))
    lines.extend(cfg.labels)
    return "\n".join(lines) + "\n"


def loads(text: str) -> Configuration:
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    if not lines:
        raise FormatError(1, "empty input")
    head = lines[0].split()
    if len(head) != 5 or head[0] != FORMAT_TAG or head[1] != FORMAT_VERSION:
        raise FormatError(1, f"expected '{FORMAT_TAG} {FORMAT_VERSION} nx ny L'")
    try:
        spec = GridSpec(int(head[2]), int(head[3]), float(head[4]))
    except ValueError as exc:
        raise FormatError(1, str(exc)) from None
    if len(lines) < 2:
        raise FormatError(2, "missing height line")
    parts = lines[1].split(" ")
    try:
        heights = [int(p) for p in parts]
    except ValueError:
        raise FormatError(2, "heights must be space-separated integers") from None
    if len(heights) != spec.nx:
        raise FormatError(2, f"expected {spec.nx} heights, got {len(heights)}")
    expected = 2 + spec.nx
    if len(lines) < expected:
        raise FormatError(len(lines) + 1, f"expected {spec.nx} column lines")
    if len(lines) > expected:
        raise FormatError(expected + 1, "trailing content after last column")
    grid = np.zeros((spec.nx, spec.ny), dtype=np.int8)
    for i, h in enumerate(heights):
        row = lines[2 + i]
        if not 0 <= h <= spec.ny:
            raise FormatError(2, f"height {h} of column {i} outside [0, {spec.ny}]")
        if len(row) != h:
            raise FormatError(3 + i, f"column {i} has {len(row)} labels, height says {h}")
        for j, ch in enumerate(row):
            if ch not in ("A", "B"):
                raise FormatError(3 + i, f"invalid label {ch!r}")
            grid[i, j] = CHAR_PHASES[ch]
    return Configuration(spec, grid, _validated=True)


def load(path) -> Configuration:
    with open(path, encoding="ascii") as fh:
        return loads(fh.read())


def save(cfg: Configuration, path) -> None:
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write(dumps(cfg))
