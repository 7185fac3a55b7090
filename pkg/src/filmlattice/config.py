"""Line-oriented run configuration: ``key = value`` with ``#`` comments.

Every key has a default; ``RunConfig.manifest()`` records all of them, so a
manifest alone reproduces a run.  ``sweep_<key> = v1, v2, ...`` lines define
parameter grids for the sweep command.
"""
from __future__ import annotations

import dataclasses
import itertools
from dataclasses import dataclass, field, fields
from pathlib import Path

from .core import GridSpec
from .energy import SurfaceTensions
from .optimizer.annealing import AnnealSchedule, Objective
from .optimizer.moves import DEFAULT_WEIGHTS


class ConfigError(ValueError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(message if line is None else f"line {line}: {message}")


def _bool(text: str) -> bool:
    low = text.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _opt_float(text: str) -> float | None:
    return None if text.strip().lower() in ("", "none", "auto") else float(text)


def _opt_int(text: str) -> int | None:
    return None if text.strip().lower() in ("", "none", "auto") else int(text)


def _floats(text: str) -> tuple[float, ...]:
    return tuple(float(x) for x in text.replace(",", " ").split())


def _ints(text: str) -> tuple[int, ...]:
    return tuple(int(x) for x in text.replace(",", " ").split())


def _opt_ints(text: str) -> tuple[int, ...] | None:
    return None if text.strip().lower() in ("", "none", "auto") else _ints(text)


@dataclass
class RunConfig:
    # grid
    nx: int = 8
    ny: int = 8
    L: float = 1.0
    # tensions
    sigma_A: float = 1.0
    sigma_B: float = 1.0
    sigma_AB: float = 1.0
    sigma_AS: float = 1.0
    sigma_BS: float = 1.0
    sigma_S: float = 1.0
    gamma: float = 0.0
    relaxed: bool = False
    # objective
    mode: str = "constrained"
    M: float | None = None
    m: float | None = None
    lam: float | None = None
    # schedule
    steps: int = 200_000
    t0: float | None = None
    alpha: float | None = None
    seed: int = 0
    weights: tuple[float, ...] = DEFAULT_WEIGHTS
    trace_every: int | None = None
    # tolerances
    cg_tol: float = 1e-8
    energy_tol: float = 1e-12
    # diagnostics
    eps: float = 0.01
    radii: tuple[int, ...] | None = None
    jump_threshold: int = 4
    slope_cap: int = 8
    # relaxation demo
    thicknesses: tuple[int, ...] = (0, 1, 2, 3, 4)
    wet_thickness: int = 1
    # io
    input: str | None = None
    out: str = "out"
    dump_potential: bool = False
    figures: bool = True
    # sweep
    seeds: tuple[int, ...] | None = None
    max_jobs: int = 256
    jobs: int = 1
    sweep: dict = field(default_factory=dict)

    # --- construction -------------------------------------------------------

    @classmethod
    def from_text(cls, text: str, base_dir: Path | None = None) -> "RunConfig":
        cfg = cls()
        seen: dict[str, int] = {}
        for lineno, raw in enumerate(text.splitlines(), start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"expected 'key = value', got {raw.strip()!r}", lineno)
            key, value = (s.strip() for s in line.split("=", 1))
            if key in seen:
                raise ConfigError(f"duplicate key {key!r} (first on line {seen[key]})", lineno)
            seen[key] = lineno
            try:
                cfg._set(key, value)
            except ConfigError as exc:
                raise ConfigError(str(exc), lineno) from None
            except ValueError as exc:
                raise ConfigError(f"{key}: {exc}", lineno) from None
        if cfg.input is not None and base_dir is not None and not Path(cfg.input).is_absolute():
            cfg.input = str(base_dir / cfg.input)
        return cfg

    @classmethod
    def load(cls, path) -> "RunConfig":
        path = Path(path)
        return cls.from_text(path.read_text(), base_dir=path.parent)

    def _set(self, key: str, value: str) -> None:
        if key.startswith("sweep_"):
            target = key[len("sweep_") :]
            target = "lam" if target == "lambda" else target
            if target not in SWEEPABLE:
                raise ConfigError(f"cannot sweep over {target!r}")
            conv = _PARSERS[target]
            vals = [conv(v) for v in value.replace(",", " ").split()]
            if not vals:
                raise ConfigError(f"{key} has no values")
            self.sweep[target] = vals
            return
        name = "lam" if key == "lambda" else key
        if name not in _PARSERS:
            raise ConfigError(f"unknown key {key!r}")
        setattr(self, name, _PARSERS[name](value))

    def replace(self, **changes) -> "RunConfig":
        return dataclasses.replace(self, **changes)

    # --- domain objects -----------------------------------------------------

    def grid(self) -> GridSpec:
        return GridSpec(self.nx, self.ny, self.L)

    def tensions(self) -> SurfaceTensions:
        return SurfaceTensions(
            self.sigma_A, self.sigma_B, self.sigma_AB, self.sigma_AS, self.sigma_BS, self.sigma_S, self.gamma
        )

    def objective(self) -> Objective:
        return Objective(self.tensions(), self.relaxed, self.mode, self.M, self.m, self.lam)

    def schedule(self) -> AnnealSchedule:
        return AnnealSchedule(self.t0, self.alpha, self.steps, self.seed, self.weights, self.trace_every)

    def validate(self, needs_objective: bool = False) -> None:
        """Build every domain object once so bad parameters fail before any work."""
        try:
            self.grid()
            st = self.tensions()
            if self.relaxed and not st.relax_ok:
                raise ValueError("relaxed tensions need sigma_AB <= sigma_A + sigma_B")
            self.schedule()
            if needs_objective:
                self.objective()
            if self.cg_tol <= 0 or self.energy_tol <= 0:
                raise ValueError("tolerances must be positive")
            if self.eps < 0:
                raise ValueError("eps must be non-negative")
            if self.jump_threshold < 2:
                raise ValueError("jump_threshold must be at least 2")
            if self.jobs < 1 or self.max_jobs < 1:
                raise ValueError("jobs and max_jobs must be positive")
        except ValueError as exc:
            raise ConfigError(str(exc)) from None

    # --- manifests and sweeps -----------------------------------------------

    def manifest(self) -> dict:
        out = {}
        for f in fields(self):
            if f.name == "out":
                continue  # where artifacts go does not change them
            v = getattr(self, f.name)
            out[f.name] = list(v) if isinstance(v, tuple) else v
        out["sweep"] = {k: list(v) for k, v in sorted(self.sweep.items())}
        return out

    def sweep_points(self) -> list[tuple[tuple[str, ...], tuple]]:
        """Cartesian product of the sweep axes, keys in sorted order."""
        keys = tuple(sorted(self.sweep))
        return [(keys, combo) for combo in itertools.product(*(self.sweep[k] for k in keys))]


_PARSERS = {
    "nx": int,
    "ny": int,
    "L": float,
    "sigma_A": float,
    "sigma_B": float,
    "sigma_AB": float,
    "sigma_AS": float,
    "sigma_BS": float,
    "sigma_S": float,
    "gamma": float,
    "relaxed": _bool,
    "mode": str,
    "M": _opt_float,
    "m": _opt_float,
    "lam": _opt_float,
    "steps": int,
    "t0": _opt_float,
    "alpha": _opt_float,
    "seed": int,
    "weights": _floats,
    "trace_every": _opt_int,
    "cg_tol": float,
    "energy_tol": float,
    "eps": float,
    "radii": _opt_ints,
    "jump_threshold": int,
    "slope_cap": int,
    "thicknesses": _ints,
    "wet_thickness": int,
    "input": str,
    "out": str,
    "dump_potential": _bool,
    "figures": _bool,
    "seeds": _opt_ints,
    "max_jobs": int,
    "jobs": int,
}

SWEEPABLE = (
    "sigma_A", "sigma_B", "sigma_AB", "sigma_AS", "sigma_BS", "sigma_S",
    "gamma", "M", "m", "lam", "steps", "t0", "alpha",
)
