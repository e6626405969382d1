"""Command-line front end.

Settings are resolved in this order, later winning: scenario defaults, the
``--config`` key-value file, then command-line flags.  Outputs go to
``--out``, else ``$QGFEM_OUTPUT_ROOT/<command>``, else ``./qgfem-output/<command>``.

Exit status: 0 success, 2 a result fell outside its acceptance band,
3 a solve failed.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__
from .errors import ConfigurationError, QGError
from .assembly import build_discretization
from .experiments import SnapshotObserver, attractor_member, decay_member, eoc_columns, manufactured_error
from .mesh import build_mesh
from .output import CsvTable, fmt, manifest_items, read_keyvalue, write_csv, write_manifest, write_snapshot
from .problems import ATTRACTOR_NUS, DECAY_MUS, DECAY_NUS, SNAPSHOT_TIMES, scenario
from .timestepper import EnergyRecorder, Stepper, initial_state, run

log = logging.getLogger("qgfem")

EXIT_OK = 0
EXIT_BAND = 2
EXIT_SOLVER = 3
OUTPUT_ROOT_ENV = "QGFEM_OUTPUT_ROOT"

# expected spatial orders in L2 / H1 / broken H2
SPATIAL_ORDERS = (4.0, 3.0, 2.0)

_FLOAT_KEYS = {"nu", "mu", "dt", "t_end", "newton_tol", "x0", "x1", "y0", "y1",
               "band", "dt_band", "tol", "window"}
_INT_KEYS = {"nx", "ny", "threads", "seed", "newton_max_iter"}
_LIST_KEYS = {"levels": int, "dt_levels": float, "nus": float, "mus": float, "snapshot_times": float}


def _csv_list(kind):
    def parse(text):
        return [kind(v) for v in str(text).replace(" ", "").split(",") if v]
    return parse


def _convert(key: str, value):
    if value is None:
        return None
    if key in _FLOAT_KEYS:
        return float(value)
    if key in _INT_KEYS:
        return int(value)
    if key in _LIST_KEYS and isinstance(value, str):
        return _csv_list(_LIST_KEYS[key])(value)
    return value


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--nu", type=float)
    common.add_argument("--mu", type=float)
    common.add_argument("--nx", type=int)
    common.add_argument("--ny", type=int)
    common.add_argument("--dt", type=float)
    common.add_argument("--t-end", type=float)
    common.add_argument("--newton-tol", type=float)
    common.add_argument("--linear-solver", choices=("nested-dissection", "colamd", "banded"))
    common.add_argument("--out", type=Path, help="output directory")
    common.add_argument("--config", type=Path, help="key = value settings file")
    common.add_argument("--threads", type=int, help="assembly threads (default 1)")
    common.add_argument("--seed", type=int, help="recorded in the manifest")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="qgfem", description=__doc__.split("\n")[0])
    p.add_argument("--version", action="version", version=f"qgfem {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    c = sub.add_parser("convergence", parents=[common],
                       help="manufactured-solution EOC study in h (or in dt with --dt-levels)")
    c.add_argument("--levels", type=_csv_list(int), help="cells per direction, e.g. 4,8,16,32")
    c.add_argument("--dt-levels", type=_csv_list(float),
                   help="time steps for a temporal study at fixed --nx, e.g. 4e-3,2e-3,1e-3")
    c.add_argument("--band", type=float, help="allowed |EOC - expected| in h (default 0.25)")
    c.add_argument("--dt-band", type=float, help="allowed |EOC - 1| in dt for H1 (default 0.15)")

    d = sub.add_parser("decay", parents=[common], help="free-decay sweep over nu and mu")
    d.add_argument("--nus", type=_csv_list(float))
    d.add_argument("--mus", type=_csv_list(float))
    d.add_argument("--window", type=float, help="trailing fraction used for the decay fit")

    a = sub.add_parser("attractor", parents=[common], help="wind-driven runs with snapshots")
    a.add_argument("--nus", type=_csv_list(float))
    a.add_argument("--snapshot-times", type=_csv_list(float))
    a.add_argument("--tol", type=float, help="steady-state relative tolerance")

    u = sub.add_parser("custom", parents=[common], help="single run with explicit settings")
    u.add_argument("--forcing", choices=("zero", "wind_sin_y", "manufactured"))
    u.add_argument("--initial", choices=("zero", "sin2", "manufactured"))
    u.add_argument("--base", choices=("convergence", "decay", "attractor"),
                   help="scenario providing unspecified defaults (default attractor)")
    for k in ("x0", "x1", "y0", "y1"):
        u.add_argument(f"--{k}", type=float)
    u.add_argument("--snapshot-times", type=_csv_list(float))
    return p


def resolve_settings(args: argparse.Namespace) -> dict:
    """Merge config-file values under explicit flags."""
    settings: dict = {}
    if args.config is not None:
        for k, v in read_keyvalue(args.config).items():
            settings[k] = _convert(k, v)
    for k, v in vars(args).items():
        if k in ("config", "command", "verbose"):
            continue
        if v is not None:
            settings[k] = v
    return settings


def output_dir(settings: dict, command: str) -> Path:
    if settings.get("out") is not None:
        return Path(settings["out"])
    root = os.environ.get(OUTPUT_ROOT_ENV)
    return Path(root) / command if root else Path("qgfem-output") / command


_SCENARIO_KEYS = ("nu", "mu", "nx", "ny", "dt", "t_end", "newton_tol", "newton_max_iter",
                  "linear_solver", "x0", "x1", "y0", "y1", "forcing", "initial")


def _overrides(settings: dict, exclude=()) -> dict:
    return {k: settings[k] for k in _SCENARIO_KEYS if k in settings and k not in exclude}


def _manifest(out: Path, command: str, settings: dict, problem, cfg, **extra) -> None:
    write_manifest(out, manifest_items(
        problem, cfg, command=command, output_dir=str(out),
        seed=settings.get("seed", 0), threads=settings.get("threads", 1),
        version=__version__, **extra))


def cmd_convergence(settings: dict, out: Path) -> int:
    threads = settings.get("threads", 1)
    dt_levels = settings.get("dt_levels")
    over = _overrides(settings, exclude=("nx", "ny", "dt"))
    if dt_levels:
        nx = settings.get("nx", 64)
        problem, cfg = scenario("convergence", nx=nx, ny=nx, **over)
        _manifest(out, "convergence", settings, problem, cfg, dt_levels=dt_levels, mode="temporal")
        sizes, key, band = dt_levels, "dt", settings.get("dt_band", 0.15)
        run_one = lambda dt: replace(manufactured_error(nx, dt, threads, **over), size=dt)  # noqa: E731
    else:
        levels = settings.get("levels", [4, 8, 16, 32])
        if any(b != 2 * a for a, b in zip(levels, levels[1:])):
            raise ConfigurationError(f"levels must double each time, got {levels}")
        dt = settings.get("dt", 1e-3)
        problem, cfg = scenario("convergence", dt=dt, **over)
        _manifest(out, "convergence", settings, problem, cfg, levels=levels, mode="spatial")
        sizes, key, band = levels, "h", settings.get("band", 0.25)
        run_one = lambda n: manufactured_error(n, dt, threads, **over)  # noqa: E731

    name = "eoc_dt.csv" if dt_levels else "eoc.csv"
    rows = []
    with CsvTable(out / name, (key, "e_l2", "e_h1", "e_h2", "eoc_l2", "eoc_h1", "eoc_h2")) as tab:
        for s in sizes:
            try:
                rows.append(run_one(s))
            except QGError as exc:
                log.error("solve failed at %s=%s: %s", key, s, exc)
                return EXIT_SOLVER
            eocs = eoc_columns(rows)[-1]
            r = rows[-1]
            tab.row([r.size, *r.errors.as_tuple(), *(eocs or ("", "", ""))])
            log.info("%s=%s errors=%s eoc=%s", key, fmt(r.size), r.errors.as_tuple(), eocs)
    if len(rows) < 2:
        return EXIT_OK
    last = eoc_columns(rows)[-1]
    if dt_levels:
        ok = abs(last[1] - 1.0) <= band
    else:
        ok = all(abs(e - o) <= band for e, o in zip(last, SPATIAL_ORDERS))
    if not ok:
        log.warning("trailing EOC %s outside the acceptance band +-%g", last, band)
    return EXIT_OK if ok else EXIT_BAND


def _short(x) -> str:
    """Shortest round-trip decimal, for file names."""
    return np.format_float_positional(float(x), trim="-")


def _member_tag(nu, mu) -> str:
    return f"nu={_short(nu)}_mu={_short(mu)}"


def cmd_decay(settings: dict, out: Path) -> int:
    nus = settings.get("nus") or ([settings["nu"]] if "nu" in settings else list(DECAY_NUS))
    mus = settings.get("mus") or ([settings["mu"]] if "mu" in settings else list(DECAY_MUS))
    over = _overrides(settings, exclude=("nu", "mu"))
    problem, cfg = scenario("decay", **over)
    _manifest(out, "decay", settings, problem, cfg, nus=nus, mus=mus)
    window = settings.get("window", 0.5)
    status = EXIT_OK
    with CsvTable(out / "decay_rates.csv", ("nu", "mu", "rate", "r2", "status")) as rates:
        for mu in mus:
            for nu in nus:
                try:
                    res = decay_member(nu, mu, nx=problem.nx, ny=problem.ny, dt=cfg.dt,
                                       t_end=cfg.t_end, window=window,
                                       threads=settings.get("threads", 1),
                                       **_overrides(settings, exclude=("nu", "mu", "nx", "ny", "dt", "t_end")))
                except QGError as exc:
                    log.error("member nu=%g mu=%g failed: %s", nu, mu, exc)
                    rates.row([nu, mu, "", "", "failed"])
                    status = EXIT_SOLVER
                    continue
                write_csv(out / f"energy_{_member_tag(nu, mu)}.csv", ("t", "grad_norm", "delta_norm"),
                          ((t, g, l) for (t, g), l in zip(res.history, res.lap_history)))
                if res.fit is None:
                    rates.row([nu, mu, "", "", "zero_history"])
                    continue
                rates.row([nu, mu, res.fit.rate, res.fit.r2, "ok"])
                if res.fit.rate >= 0 and status == EXIT_OK:
                    status = EXIT_BAND
    return status


def cmd_attractor(settings: dict, out: Path) -> int:
    nus = settings.get("nus") or ([settings["nu"]] if "nu" in settings else list(ATTRACTOR_NUS))
    over = _overrides(settings, exclude=("nu",))
    problem, cfg = scenario("attractor", **over)
    times = settings.get("snapshot_times", list(SNAPSHOT_TIMES))
    _manifest(out, "attractor", settings, problem, cfg, nus=nus, snapshot_times=times)
    tol = settings.get("tol", 1e-3)
    status = EXIT_OK
    mesh = build_mesh(problem.x0, problem.x1, problem.y0, problem.y1, problem.nx, problem.ny)
    header = ("nu", "mu", "steady", "plateau", "max_energy", "median_energy", "status")
    with CsvTable(out / "steady_state.csv", header) as summary:
        for nu in nus:
            tag = _member_tag(nu, problem.mu)

            def on_snapshot(target, t, nodal, tag=tag):
                write_snapshot(out / f"snapshot_{tag}_t={_short(target)}", mesh, nodal, t)

            try:
                res = attractor_member(nu, problem.mu, nx=problem.nx, ny=problem.ny, dt=cfg.dt,
                                       t_end=cfg.t_end, tol=tol, snapshot_times=times,
                                       snapshot_callback=on_snapshot, threads=settings.get("threads", 1),
                                       **_overrides(settings, exclude=("nu", "mu", "nx", "ny", "dt", "t_end")))
            except QGError as exc:
                log.error("member nu=%g failed: %s", nu, exc)
                summary.row([nu, problem.mu, "", "", "", "", "failed"])
                status = EXIT_SOLVER
                continue
            e = np.array([g for _, g in res.history])
            write_csv(out / f"energy_{tag}.csv", ("t", "grad_norm", "delta_norm"),
                      ((t, g, l) for (t, g), l in zip(res.history, res.sim.energy.lap_norm)))
            summary.row([nu, problem.mu, res.steady, res.plateau, e.max(), float(np.median(e)), "ok"])
    return status


def cmd_custom(settings: dict, out: Path) -> int:
    base = settings.get("base", "attractor")
    problem, cfg = scenario(base, **_overrides(settings))
    times = settings.get("snapshot_times", [cfg.t_end])
    _manifest(out, "custom", settings, problem, cfg, base=base, snapshot_times=times)
    mesh = build_mesh(problem.x0, problem.x1, problem.y0, problem.y1, problem.nx, problem.ny)
    disc = build_discretization(mesh, threads=settings.get("threads", 1))
    snaps = SnapshotObserver(
        disc, times, lambda target, t, nodal: write_snapshot(out / f"snapshot_t={_short(target)}", mesh, nodal, t)
    )
    energy = EnergyRecorder(disc)
    try:
        run(initial_state(problem.initial_field(), disc), cfg, Stepper(disc, problem, cfg), [energy, snaps])
    except QGError as exc:
        log.error("run failed: %s", exc)
        status = EXIT_SOLVER
    else:
        status = EXIT_OK
    write_csv(out / "energy.csv", ("t", "grad_norm", "delta_norm"),
              zip(energy.times, energy.grad_norm, energy.lap_norm))
    return status


COMMANDS = {
    "convergence": cmd_convergence,
    "decay": cmd_decay,
    "attractor": cmd_attractor,
    "custom": cmd_custom,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        settings = resolve_settings(args)
        out = output_dir(settings, args.command)
        return COMMANDS[args.command](settings, out)
    except (ConfigurationError, ValueError) as exc:
        parser.exit(1, f"qgfem: error: {exc}\n")


if __name__ == "__main__":
    sys.exit(main())
