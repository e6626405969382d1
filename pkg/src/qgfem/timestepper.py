"""Backward Euler in time, full Newton per step."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .assembly import Discretization, assemble_load, jacobian, residual
from .errors import ConfigurationError, DivergedStateError, StepFailure
from .linsolve import DirectSolver
from .problems import AnalyticField, ProblemSpec, SolverConfig

log = logging.getLogger(__name__)

ABS_RESIDUAL_FLOOR = 1e-14
# residual evaluation error is about eps * || |terms| ||; rows of A cancel heavily
ROUNDOFF_FACTOR = 8 * np.finfo(float).eps


@dataclass(frozen=True)
class State:
    coefficients: np.ndarray
    t: float

    def __post_init__(self):
        c = np.asarray(self.coefficients, dtype=float)
        if not np.all(np.isfinite(c)):
            raise DivergedStateError(f"non-finite coefficients at t={self.t}")
        c.setflags(write=False)
        object.__setattr__(self, "coefficients", c)


@dataclass
class NewtonReport:
    iterations: int = 0
    residual_norms: list[float] = field(default_factory=list)
    converged: bool = False
    roundoff_limited: bool = False


def initial_state(psi0: AnalyticField, disc: Discretization, t: float = 0.0,
                  boundary_tol: float = 1e-10) -> State:
    """Hermite interpolant of ``psi0``; the field must satisfy the clamped data."""
    xy = disc.mesh.node_coords[disc.mesh.boundary_nodes]
    for name in ("value", "dx", "dy", "dxy"):
        vals = np.asarray(getattr(psi0, name)(xy[:, 0], xy[:, 1]), dtype=float)
        worst = float(np.max(np.abs(vals))) if vals.size else 0.0
        if worst > boundary_tol:
            raise ConfigurationError(
                f"initial field violates the clamped boundary data: |{name}| = {worst:.3g} on the boundary"
            )
    return State(disc.interpolate(psi0.value, psi0.dx, psi0.dy, psi0.dxy), t)


class Stepper:
    """Solves the backward Euler step equations on one discretization."""

    def __init__(self, disc: Discretization, problem: ProblemSpec, cfg: SolverConfig):
        self.disc = disc
        self.problem = problem
        self.cfg = cfg
        m = disc.mesh
        self.solver = DirectSolver(disc.pattern, (m.nx - 1, m.ny - 1), cfg.linear_solver)
        self._forcing = problem.forcing_field()
        self._static_load = None
        pat = disc.pattern
        self._absD = pat.matrix(np.abs(disc.D.data))
        self._absA = pat.matrix(np.abs(disc.A.data))
        self._absB0 = pat.matrix(np.abs(disc.B0.data))

    def roundoff_floor(self, prev, cur, dt: float, load) -> float:
        """Attainable residual norm given floating-point cancellation in the sums."""
        p, c = np.abs(prev), np.abs(cur)
        nu, mu = self.problem.nu, self.problem.mu
        scale = (
            np.linalg.norm(self._absD @ (p + c)) / dt
            + nu * np.linalg.norm(self._absA @ c)
            + mu * np.linalg.norm(self._absB0 @ c)
            + np.linalg.norm(load)
        )
        return ROUNDOFF_FACTOR * float(scale)

    def load_at(self, t: float) -> np.ndarray:
        if self._forcing is None:
            return np.zeros(self.disc.n_free)
        if not self.problem.time_dependent_forcing:
            if self._static_load is None:
                self._static_load = assemble_load(self.disc, self._forcing, 0.0, self.problem.mu)
            return self._static_load
        return assemble_load(self.disc, self._forcing, t, self.problem.mu)

    def step(self, prev: State, dt: float | None = None,
             t_new: float | None = None) -> tuple[State, NewtonReport]:
        dt = self.cfg.dt if dt is None else dt
        nu, mu = self.problem.nu, self.problem.mu
        t_new = prev.t + dt if t_new is None else t_new
        load = self.load_at(t_new)
        cur = np.array(prev.coefficients)
        report = NewtonReport()
        r = residual(self.disc, prev, cur, dt, nu, mu, load)
        r0 = float(np.linalg.norm(r))
        report.residual_norms.append(r0)
        target = max(self.cfg.newton_tol * r0, ABS_RESIDUAL_FLOOR)
        for it in range(1, self.cfg.newton_max_iter + 1):
            delta = self.solver.solve(jacobian(self.disc, cur, dt, nu, mu), -r)
            cur = cur + delta
            r = residual(self.disc, prev, cur, dt, nu, mu, load)
            rn = float(np.linalg.norm(r))
            report.residual_norms.append(rn)
            report.iterations = it
            if rn <= target:
                report.converged = True
                break
            if rn <= self.roundoff_floor(prev.coefficients, cur, dt, load):
                report.converged = report.roundoff_limited = True
                break
        if not report.converged:
            raise StepFailure(
                f"Newton did not converge in {self.cfg.newton_max_iter} iterations at t={t_new:.6g}; "
                f"residual history {report.residual_norms}",
                report.residual_norms,
            )
        return State(cur, t_new), report


def step(prev: State, cfg: SolverConfig, stepper: Stepper) -> tuple[State, NewtonReport]:
    return stepper.step(prev, cfg.dt)


def time_grid(dt: float, t_end: float) -> np.ndarray:
    """Step sizes covering [0, t_end]; the last one is shortened when needed."""
    n_full = math.floor(t_end / dt + 1e-9)
    steps = [dt] * n_full
    rest = t_end - n_full * dt
    if rest > 1e-9 * dt:
        steps.append(rest)
    return np.array(steps)


Observer = Callable[[int, float, State], None]


@dataclass
class RunSummary:
    final: State
    n_steps: int
    reports: list[NewtonReport]
    shortened_last_step: bool
    failure: StepFailure | None = None

    @property
    def max_newton_iterations(self) -> int:
        return max((r.iterations for r in self.reports), default=0)


def run(initial: State, cfg: SolverConfig, stepper: Stepper,
        observers: Sequence[Observer] = ()) -> RunSummary:
    """Advance ``initial`` to ``cfg.t_end``; observers see step 0 and every step after."""
    steps = time_grid(cfg.dt, cfg.t_end)
    state = initial
    for obs in observers:
        obs(0, state.t, state)
    reports = []
    t0 = initial.t
    for n, dt in enumerate(steps, start=1):
        t_new = t0 + (cfg.t_end if n == len(steps) else n * cfg.dt)
        try:
            state, rep = stepper.step(state, dt, t_new)
        except StepFailure as exc:
            exc.step_index = n
            raise
        reports.append(rep)
        for obs in observers:
            obs(n, state.t, state)
    shortened = bool(len(steps) and not math.isclose(steps[-1], cfg.dt, rel_tol=1e-9))
    if shortened:
        log.info("final step shortened to %.3g to land on t_end=%g", steps[-1], cfg.t_end)
    return RunSummary(state, len(steps), reports, shortened)


class EnergyRecorder:
    """Observer recording (t, ||grad psi_h||, ||lap psi_h||) after every step."""

    def __init__(self, disc: Discretization):
        self.disc = disc
        self.times: list[float] = []
        self.grad_norm: list[float] = []
        self.lap_norm: list[float] = []

    def __call__(self, n: int, t: float, state: State) -> None:
        c = state.coefficients
        self.times.append(t)
        self.grad_norm.append(math.sqrt(max(float(c @ (self.disc.D @ c)), 0.0)))
        self.lap_norm.append(math.sqrt(max(float(c @ (self.disc.A @ c)), 0.0)))

    def history(self) -> list[tuple[float, float]]:
        return list(zip(self.times, self.grad_norm))
