"""Drivers for the convergence, free-decay and wind-driven studies."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .assembly import Discretization, build_discretization
from .diagnostics import DecayFit, NormReport, decay_rate, eoc, error_norms, steady_state
from .mesh import build_mesh
from .problems import ProblemSpec, SolverConfig, scenario
from .timestepper import EnergyRecorder, RunSummary, State, Stepper, initial_state, run

log = logging.getLogger(__name__)


@dataclass
class Simulation:
    disc: Discretization
    stepper: Stepper
    initial: State
    energy: EnergyRecorder
    summary: RunSummary | None = None


def simulate(problem: ProblemSpec, cfg: SolverConfig, observers: Sequence[Callable] = (),
             threads: int = 1) -> Simulation:
    """Build the discretization for ``problem`` and integrate to ``cfg.t_end``."""
    mesh = build_mesh(problem.x0, problem.x1, problem.y0, problem.y1, problem.nx, problem.ny)
    disc = build_discretization(mesh, threads=threads)
    stepper = Stepper(disc, problem, cfg)
    init = initial_state(problem.initial_field(), disc)
    energy = EnergyRecorder(disc)
    sim = Simulation(disc, stepper, init, energy)
    sim.summary = run(init, cfg, stepper, [energy, *observers])
    return sim


@dataclass
class ConvergenceRow:
    size: float  # h for spatial studies, dt for temporal ones
    errors: NormReport
    max_newton_iterations: int


def manufactured_error(nx: int, dt: float, threads: int = 1, **overrides) -> ConvergenceRow:
    problem, cfg = scenario("convergence", nx=nx, ny=nx, dt=dt, **overrides)
    sim = simulate(problem, cfg, threads=threads)
    exact = problem.exact_solution()
    err = error_norms(sim.summary.final, exact, sim.disc, t=cfg.t_end)
    log.info("nx=%d dt=%g errors %s", nx, dt, err)
    return ConvergenceRow(sim.disc.mesh.hx, err, sim.summary.max_newton_iterations)


def eoc_columns(rows: Sequence[ConvergenceRow]) -> list[tuple[float, float, float] | None]:
    """EOC per row against the previous one; None for the first row."""
    out: list = [None]
    for a, b in zip(rows, rows[1:]):
        ratio = math.log2(a.size / b.size)
        out.append(tuple(e / ratio for e in eoc([a.errors.as_tuple(), b.errors.as_tuple()])[0]))
    return out


@dataclass
class DecayResult:
    nu: float
    mu: float
    history: list[tuple[float, float]]
    lap_history: list[float]
    fit: DecayFit | None
    error: str | None = None


def decay_member(nu: float, mu: float, nx: int = 32, ny: int | None = None, dt: float = 1e-3,
                 t_end: float = 0.1, window: float = 0.5, threads: int = 1, **overrides) -> DecayResult:
    ny = 2 * nx if ny is None else ny
    problem, cfg = scenario("decay", nu=nu, mu=mu, nx=nx, ny=ny, dt=dt, t_end=t_end, **overrides)
    sim = simulate(problem, cfg, threads=threads)
    hist = sim.energy.history()
    fit = decay_rate(hist, window) if all(e > 0 for _, e in hist) else None
    return DecayResult(nu, mu, hist, list(sim.energy.lap_norm), fit)


@dataclass
class AttractorResult:
    nu: float
    mu: float
    history: list[tuple[float, float]]
    steady: bool
    plateau: float
    snapshots: dict[float, np.ndarray] = field(default_factory=dict)
    sim: Simulation | None = None


class SnapshotObserver:
    """Keeps nodal Hermite data the first time the clock reaches each target time."""

    def __init__(self, disc: Discretization, times: Sequence[float], callback=None):
        self.disc = disc
        self.pending = sorted(times)
        self.taken: dict[float, np.ndarray] = {}
        self.callback = callback

    def __call__(self, n: int, t: float, state: State) -> None:
        while self.pending and t >= self.pending[0] - 1e-9 * max(1.0, abs(self.pending[0])):
            target = self.pending.pop(0)
            nodal = self.disc.dofmap.nodal(state.coefficients)
            self.taken[target] = nodal
            if self.callback is not None:
                self.callback(target, t, nodal)


def steady_window(history, fraction: float = 0.25) -> int:
    return max(2, int(round(fraction * len(history))))


def attractor_member(nu: float, mu: float = 100.0, nx: int = 32, ny: int | None = None,
                     dt: float | None = None, t_end: float = 4.0, tol: float = 1e-3,
                     window_fraction: float = 0.25, snapshot_times: Sequence[float] = (),
                     snapshot_callback=None, threads: int = 1, **overrides) -> AttractorResult:
    ny = 2 * nx if ny is None else ny
    extra = {} if dt is None else {"dt": dt}
    problem, cfg = scenario("attractor", nu=nu, mu=mu, nx=nx, ny=ny, t_end=t_end, **extra, **overrides)
    mesh = build_mesh(problem.x0, problem.x1, problem.y0, problem.y1, problem.nx, problem.ny)
    disc = build_discretization(mesh, threads=threads)
    snaps = SnapshotObserver(disc, snapshot_times, snapshot_callback)
    stepper = Stepper(disc, problem, cfg)
    init = initial_state(problem.initial_field(), disc)
    energy = EnergyRecorder(disc)
    summary = run(init, cfg, stepper, [energy, snaps])
    hist = energy.history()
    ok, plateau = steady_state(hist, steady_window(hist, window_fraction), tol)
    sim = Simulation(disc, stepper, init, energy, summary)
    return AttractorResult(nu, mu, hist, ok, plateau, snaps.taken, sim)
