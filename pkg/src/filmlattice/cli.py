"""Command line front end: ``filmlattice <command> --config run.cfg [...]``.

Exit codes: 0 success, 1 diagnostic violation, 2 usage or parse error,
3 numerical non-convergence.
"""
from __future__ import annotations

import argparse
import concurrent.futures
import csv
import io
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .config import ConfigError, RunConfig
from .core import A, B, FORMAT_VERSION, S, V, Configuration, FormatError, GridSpec, dumps, load, volumes
from .diagnostics import diagnose
from .energy import EnergyBreakdown, HypothesisViolated, mass_penalty, total_energy
from .optimizer import InfeasibleStart, NoLegalMove, anneal
from .optimizer.annealing import AnnealError
from .potential import NonConvergence, dump_potential, solve_potential
from .relaxation import (
    exposed_substrate_wetting,
    gap_csv,
    graph_wetting,
    recovery_gap,
    substrate_wetting,
)

logger = logging.getLogger("filmlattice")

EXIT_OK, EXIT_VIOLATION, EXIT_USAGE, EXIT_NUMERICS = 0, 1, 2, 3

PGM_SHADES = {S: 0, B: 85, A: 170, V: 255}


class UsageError(Exception):
    pass


# --- helpers -------------------------------------------------------------------


def write_pgm(cfg: Configuration, path) -> None:
    """Plain graymap, top row first, one substrate row at the bottom."""
    spec = cfg.spec
    shade = np.array([PGM_SHADES[V], PGM_SHADES[A], PGM_SHADES[B], PGM_SHADES[S]])
    rows = [" ".join(str(int(v)) for v in shade[cfg.grid[:, j]]) for j in range(spec.ny - 1, -1, -1)]
    rows.append(" ".join([str(PGM_SHADES[S])] * spec.nx))
    Path(path).write_text(f"P2\n{spec.nx} {spec.ny + 1}\n255\n" + "\n".join(rows) + "\n")


def layered_start(spec: GridSpec, bigM: float, smallm: float) -> Configuration:
    """Flat film filled row by row: A cells first, then B, exact masses."""
    f_cells = spec.cells_for_area(bigM)
    a_cells = spec.cells_for_area(smallm)
    if f_cells > spec.nx * spec.ny:
        raise InfeasibleStart(f"film area {bigM} does not fit below the ceiling")
    labels = np.zeros(spec.nx * spec.ny, np.int8)
    labels[:a_cells] = A
    labels[a_cells:f_cells] = B
    grid = labels.reshape(spec.ny, spec.nx).T.copy()
    return Configuration(spec, grid)


def _nearest_masses(spec: GridSpec, bigM: float, smallm: float) -> tuple[float, float]:
    da = spec.cell_area
    return round(bigM / da) * da, round(smallm / da) * da


def start_configuration(rc: RunConfig) -> Configuration:
    spec = rc.grid()
    if rc.mode == "penalized":
        # any admissible start is fine; use the closest representable masses
        bigM, smallm = _nearest_masses(spec, rc.M, rc.m)
        return layered_start(spec, bigM, smallm)
    try:
        return layered_start(spec, rc.M, rc.m)
    except ValueError as exc:
        raise InfeasibleStart(str(exc)) from None


def _write(path: Path, text: str) -> None:
    path.write_text(text)
    logger.info("wrote %s", path)


def _manifest(rc: RunConfig, command: str, extra: dict | None = None) -> str:
    data = {
        "command": command,
        "package_version": __version__,
        "format_version": FORMAT_VERSION,
        "config": rc.manifest(),
    }
    if extra:
        data.update(extra)
    return json.dumps(data, indent=2, sort_keys=True) + "\n"


def _breakdown(cfg, rc: RunConfig, relaxed: bool) -> EnergyBreakdown:
    st = rc.tensions()
    br = total_energy(cfg, st, relaxed, rc.cg_tol)
    if rc.M is not None and rc.m is not None and rc.mode == "penalized":
        obj = rc.objective()
        h = br.total_F + mass_penalty(cfg, obj.penalty_weight(cfg.spec.cell), rc.M, rc.m)
        br = EnergyBreakdown(**{**br.as_dict(), "penalized_H": h})
    return br


def _read_input(rc: RunConfig) -> Configuration:
    if rc.input is None:
        raise UsageError("an input configuration is required (--input or 'input =' in the config)")
    # the file carries its own grid; config grid keys only matter for minimize/sweep
    return load(rc.input)


# --- commands ------------------------------------------------------------------


def cmd_evaluate(rc: RunConfig, out: Path | None) -> int:
    rc.validate()
    cfg = _read_input(rc)
    st = rc.tensions()
    rows = [_breakdown(cfg, rc, False)]
    if st.relax_ok:
        rows.append(_breakdown(cfg, rc, True))
    text = EnergyBreakdown.CSV_HEADER + "\n" + "".join(r.csv_row() + "\n" for r in rows)
    sys.stdout.write(text)
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
        _write(out / "breakdown.csv", text)
        if rc.dump_potential:
            dump_potential(solve_potential(cfg, rc.cg_tol), out / "phi.txt")
        if rc.figures:
            from .plotting import plot_configuration

            plot_configuration(cfg, out / "configuration.png")
    return EXIT_OK


def run_minimize(rc: RunConfig):
    rc.validate(needs_objective=True)
    obj = rc.objective()
    start = start_configuration(rc)
    return anneal(start, obj, rc.schedule(), tol=rc.energy_tol)


def cmd_minimize(rc: RunConfig, out: Path) -> int:
    res = run_minimize(rc)
    out.mkdir(parents=True, exist_ok=True)
    _write(out / "best.film", dumps(res.best))
    write_pgm(res.best, out / "best.pgm")
    _write(out / "trace.csv", res.trace_csv())
    br = _breakdown(res.best, rc, rc.relaxed)
    _write(out / "best_energy.csv", EnergyBreakdown.CSV_HEADER + "\n" + br.csv_row() + "\n")
    extra = {
        "result": {
            "best_energy": res.best_energy,
            "acceptance_rate": res.acceptance_rate,
            "t0": res.t0,
            "alpha": res.alpha,
        }
    }
    _write(out / "manifest.json", _manifest(rc, "minimize", extra))
    if rc.figures:
        from .plotting import plot_configuration, plot_trace

        plot_configuration(res.best, out / "best.png")
        plot_trace(res.trace_step, res.trace_T, res.trace_F, out / "trace.png")
    print(f"best_energy,{res.best_energy!r}")
    print(f"acceptance_rate,{res.acceptance_rate!r}")
    return EXIT_OK


def cmd_relax_demo(rc: RunConfig, out: Path | None) -> int:
    rc.validate()
    st = rc.tensions()
    if not st.relax_ok:
        raise HypothesisViolated("relaxed tensions need sigma_AB <= sigma_A + sigma_B")
    cfg = _read_input(rc)
    t = rc.wet_thickness
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["operator", "status", "before_G", "after_G", "predicted_drop", "measured_drop", "affected_length"])
    for name, op in (
        ("substrate", substrate_wetting),
        ("graph", graph_wetting),
        ("exposed_substrate", exposed_substrate_wetting),
    ):
        try:
            _, rep = op(cfg, st, t)
        except ValueError as exc:
            w.writerow([name, f"skipped: {exc}", "", "", "", "", ""])
            continue
        status = "applied" if rep.affected_length or rep.predicted_drop else "no-op"
        w.writerow([name, status, repr(rep.before_G), repr(rep.after_G), repr(rep.predicted_drop),
                    repr(rep.measured_drop), repr(rep.affected_length)])
    gaps = recovery_gap(cfg, st, rc.thicknesses)
    sys.stdout.write(buf.getvalue())
    sys.stdout.write(gap_csv(gaps))
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
        _write(out / "wetting.csv", buf.getvalue())
        _write(out / "gap.csv", gap_csv(gaps))
        if rc.figures:
            from .plotting import plot_gap

            plot_gap(gaps, out / "gap.png")
    return EXIT_OK


def cmd_diagnose(rc: RunConfig, out: Path | None) -> int:
    rc.validate()
    cfg = _read_input(rc)
    rep = diagnose(cfg, rc.eps, rc.radii, rc.jump_threshold, rc.slope_cap)
    sys.stdout.write(rep.to_text())
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
        _write(out / "report.txt", rep.to_text())
        _write(out / "violations.csv", rep.violations_csv())
    return EXIT_OK if rep.ok else EXIT_VIOLATION


# --- sweep ---------------------------------------------------------------------

SWEEP_RESULT_COLUMNS = (
    "seed", "best_energy", "area_A", "area_film", "mass_err_A", "mass_err_film", "acceptance_rate",
)


def _sweep_job(args):
    rc, keys, values, seed = args
    job = rc.replace(**dict(zip(keys, values)), seed=seed)
    try:
        res = run_minimize(job)
    except (NonConvergence, AnnealError) as exc:
        return keys, values, seed, None, f"non-convergence: {exc}"
    except (ValueError, NoLegalMove) as exc:
        return keys, values, seed, None, f"{type(exc).__name__}: {exc}"
    vol = volumes(res.best)
    row = (
        seed, res.best_energy, vol.area_A, vol.area_film,
        vol.area_A - job.m, vol.area_film - job.M, res.acceptance_rate,
    )
    return keys, values, seed, row, None


def run_sweep(rc: RunConfig):
    """Rows sorted by parameter tuple, then seed; failures listed separately."""
    rc.validate(needs_objective=True)
    points = rc.sweep_points()
    seeds = rc.seeds if rc.seeds is not None else (rc.seed,)
    jobs = [(rc, keys, values, s) for keys, values in points for s in seeds]
    if len(jobs) > rc.max_jobs:
        raise ConfigError(f"sweep has {len(jobs)} jobs, cap is max_jobs = {rc.max_jobs}")
    for keys, values in points:
        rc.replace(**dict(zip(keys, values))).validate(needs_objective=True)
    if rc.jobs == 1:
        results = [_sweep_job(j) for j in jobs]
    else:
        with concurrent.futures.ProcessPoolExecutor(max_workers=rc.jobs) as pool:
            results = list(pool.map(_sweep_job, jobs))
    keys = points[0][0] if points else ()
    rows = sorted((values, row) for _, values, _, row, err in results if err is None)
    failures = sorted((values, seed, err) for _, values, seed, _, err in results if err is not None)
    return keys, rows, failures


def sweep_csv(keys, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow([*keys, *SWEEP_RESULT_COLUMNS])
    for values, row in rows:
        w.writerow([repr(v) for v in values] + [row[0]] + [repr(float(x)) for x in row[1:]])
    return buf.getvalue()


def cmd_sweep(rc: RunConfig, out: Path) -> int:
    keys, rows, failures = run_sweep(rc)
    text = sweep_csv(keys, rows)
    sys.stdout.write(text)
    out.mkdir(parents=True, exist_ok=True)
    _write(out / "sweep.csv", text)
    _write(out / "manifest.json", _manifest(rc, "sweep"))
    if failures:
        lines = ["failed cells:"] + [f"  {dict(zip(keys, v))} seed={s}: {e}" for v, s, e in failures]
        _write(out / "failures.txt", "\n".join(lines) + "\n")
        print("\n".join(lines), file=sys.stderr)
        return EXIT_NUMERICS if any(e.startswith("non-convergence") for _, _, e in failures) else EXIT_USAGE
    return EXIT_OK


# --- entry point -----------------------------------------------------------------

COMMANDS = {
    "evaluate": cmd_evaluate,
    "minimize": cmd_minimize,
    "relax-demo": cmd_relax_demo,
    "diagnose": cmd_diagnose,
    "sweep": cmd_sweep,
}
_NEEDS_OUT = ("minimize", "sweep")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="filmlattice", description="Lattice two-phase thin-film energies.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", type=Path, help="key = value run configuration")
        p.add_argument("--input", type=Path, help="configuration file (text format)")
        p.add_argument("--out", type=Path, help="output directory")
        p.add_argument("--seed", type=int, help="overrides the config seed")
        p.add_argument("--relaxed", action="store_true", help="use the relaxed interface coefficients")
        p.add_argument("-v", "--verbose", action="count", default=0)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    logging.basicConfig(
        level=logging.WARNING - 10 * min(args.verbose, 2),
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        rc = RunConfig.load(args.config) if args.config else RunConfig()
        if args.input is not None:
            rc.input = str(args.input)
        if args.seed is not None:
            rc.seed = args.seed
        if args.relaxed:
            rc.relaxed = True
        out = args.out if args.out is not None else (Path(rc.out) if args.command in _NEEDS_OUT else None)
        return COMMANDS[args.command](rc, out)
    except (NonConvergence, AnnealError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERICS
    except (ConfigError, FormatError, UsageError, OSError, ValueError, NoLegalMove) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
