"""Problem descriptors and the built-in scenarios.

The stream function solves

    -d/dt lap(psi) + nu lap^2(psi) + [psi, lap(psi)] - mu d/dx psi = mu F

with clamped walls, where ``[p, q] = p_x q_y - p_y q_x`` is the advection
bracket whose weak form is the trilinear term (lap psi, psi_y chi_x - psi_x chi_y)
used by the discretization (integrate by parts once to see the pairing).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

from .errors import ConfigurationError

PI = math.pi
# psi(., T) equals sin^2 sin^2 at T = 0.1 by construction
MMS_T_REF = 0.1


class Forcing(str, enum.Enum):
    ZERO = "zero"
    WIND_SIN_Y = "wind_sin_y"
    MANUFACTURED = "manufactured"
    USER = "user"


class Initial(str, enum.Enum):
    ZERO = "zero"
    SIN2 = "sin2"
    MANUFACTURED = "manufactured"


@dataclass(frozen=True)
class AnalyticField:
    """Closed-form field with the partial derivatives the solver consumes.

    Each entry is a vectorized callable ``(x, y) -> array``.
    """

    value: Callable
    dx: Callable
    dy: Callable
    dxy: Callable
    dxx: Callable
    dyy: Callable

    def laplacian(self, x, y):
        return self.dxx(x, y) + self.dyy(x, y)

    def scaled(self, factor: float) -> "AnalyticField":
        def s(f):
            return lambda x, y: factor * f(x, y)

        return AnalyticField(*(s(f) for f in (self.value, self.dx, self.dy, self.dxy, self.dxx, self.dyy)))


# s(z) = sin^2(pi z) and its derivatives
def _s(z):
    return np.sin(PI * z) ** 2


def _s1(z):
    return PI * np.sin(2 * PI * z)


def _s2(z):
    return 2 * PI**2 * np.cos(2 * PI * z)


def _s3(z):
    return -4 * PI**3 * np.sin(2 * PI * z)


def _s4(z):
    return -8 * PI**4 * np.cos(2 * PI * z)


SIN2_BUMP = AnalyticField(
    value=lambda x, y: _s(x) * _s(y),
    dx=lambda x, y: _s1(x) * _s(y),
    dy=lambda x, y: _s(x) * _s1(y),
    dxy=lambda x, y: _s1(x) * _s1(y),
    dxx=lambda x, y: _s2(x) * _s(y),
    dyy=lambda x, y: _s(x) * _s2(y),
)

ZERO_FIELD = AnalyticField(*(lambda x, y: np.zeros_like(np.asarray(x, dtype=float) + y),) * 6)


@dataclass(frozen=True)
class ManufacturedSolution:
    """psi(x, y, t) = g(t) sin^2(pi x) sin^2(pi y) with g(t) = (1 - e^-t) / (1 - e^-0.1)."""

    def g(self, t):
        return (1.0 - np.exp(-t)) / (1.0 - math.exp(-MMS_T_REF))

    def dg(self, t):
        return np.exp(-t) / (1.0 - math.exp(-MMS_T_REF))

    def at(self, t: float) -> AnalyticField:
        return SIN2_BUMP.scaled(float(self.g(t)))

    def value(self, x, y, t):
        return self.g(t) * _s(x) * _s(y)

    def laplacian(self, x, y, t):
        return self.g(t) * (_s2(x) * _s(y) + _s(x) * _s2(y))

    def bilaplacian(self, x, y, t):
        return self.g(t) * (_s4(x) * _s(y) + 2 * _s2(x) * _s2(y) + _s(x) * _s4(y))

    def grad_laplacian(self, x, y, t):
        g = self.g(t)
        return (g * (_s3(x) * _s(y) + _s1(x) * _s2(y)),
                g * (_s2(x) * _s1(y) + _s(x) * _s3(y)))

    def advection(self, x, y, t):
        """[psi, lap psi] = psi_x (lap psi)_y - psi_y (lap psi)_x."""
        g = self.g(t)
        px, py = g * _s1(x) * _s(y), g * _s(x) * _s1(y)
        lx, ly = self.grad_laplacian(x, y, t)
        return px * ly - py * lx

    def forcing(self, x, y, t, nu: float, mu: float):
        return manufactured_forcing(x, y, t, nu, mu, self)


MANUFACTURED = ManufacturedSolution()


def manufactured_forcing(x, y, t, nu: float, mu: float, sol: ManufacturedSolution = MANUFACTURED):
    """Forcing for which ``sol`` solves the clamped QG problem exactly."""
    if mu == 0:
        raise ConfigurationError("manufactured forcing divides by mu; mu must be nonzero")
    dt_lap = sol.dg(t) * (_s2(x) * _s(y) + _s(x) * _s2(y))
    psi_x = sol.g(t) * _s1(x) * _s(y)
    return (-dt_lap + nu * sol.bilaplacian(x, y, t) + sol.advection(x, y, t) - mu * psi_x) / mu


@dataclass(frozen=True)
class ProblemSpec:
    x0: float = 0.0
    x1: float = 1.0
    y0: float = 0.0
    y1: float = 1.0
    nu: float = 1.0
    mu: float = 1.0
    forcing: Forcing = Forcing.ZERO
    initial: Initial = Initial.ZERO
    nx: int = 16
    ny: int = 16
    user_forcing: Callable | None = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        if not self.nu > 0:
            raise ConfigurationError(f"nu must be positive, got {self.nu}")
        if not self.mu >= 0:
            raise ConfigurationError(f"mu must be nonnegative, got {self.mu}")
        if self.forcing is Forcing.USER and self.user_forcing is None:
            raise ConfigurationError("USER forcing needs a user_forcing callable")
        if self.forcing is Forcing.MANUFACTURED and self.mu == 0:
            raise ConfigurationError("manufactured forcing needs mu > 0")

    @property
    def time_dependent_forcing(self) -> bool:
        return self.forcing in (Forcing.MANUFACTURED, Forcing.USER)

    def forcing_field(self) -> Callable | None:
        """Pointwise ``F(x, y, t)``, or None for zero forcing."""
        if self.forcing is Forcing.ZERO:
            return None
        if self.forcing is Forcing.WIND_SIN_Y:
            return lambda x, y, t: np.sin(PI * y) + 0.0 * x
        if self.forcing is Forcing.MANUFACTURED:
            nu, mu = self.nu, self.mu
            return lambda x, y, t: manufactured_forcing(x, y, t, nu, mu)
        return self.user_forcing

    def initial_field(self) -> AnalyticField:
        if self.initial is Initial.SIN2:
            return SIN2_BUMP
        if self.initial is Initial.MANUFACTURED:
            return MANUFACTURED.at(0.0)
        return ZERO_FIELD

    def exact_solution(self) -> ManufacturedSolution | None:
        return MANUFACTURED if self.forcing is Forcing.MANUFACTURED else None


@dataclass(frozen=True)
class SolverConfig:
    dt: float = 1e-3
    t_end: float = 0.1
    newton_tol: float = 1e-10
    newton_max_iter: int = 25
    linear_solver: str = "nested-dissection"

    def __post_init__(self):
        if not self.dt > 0:
            raise ConfigurationError(f"dt must be positive, got {self.dt}")
        if not 0 < self.newton_tol < 1:
            raise ConfigurationError(f"newton_tol must lie in (0, 1), got {self.newton_tol}")
        if self.newton_max_iter < 1:
            raise ConfigurationError("newton_max_iter must be at least 1")
        if not self.t_end >= 0:
            raise ConfigurationError(f"t_end must be nonnegative, got {self.t_end}")


# Sweep values for the free-decay study (artifact defaults).
DECAY_NUS = (1.6667, 0.16667, 0.016667)
DECAY_MUS = (10.0, 100.0, 1000.0)
ATTRACTOR_NUS = (1.0, 0.01, 0.0001)
SNAPSHOT_TIMES = (0.0, 1.0, 2.0, 3.0, 4.0)
ATTRACTOR_DT = 1e-3

SCENARIOS = ("convergence", "decay", "attractor")

_PROBLEM_KEYS = {f for f in ProblemSpec.__dataclass_fields__ if f != "user_forcing"}
_SOLVER_KEYS = set(SolverConfig.__dataclass_fields__)


def scenario(name: str, **overrides) -> tuple[ProblemSpec, SolverConfig]:
    """Default problem and solver settings of a named study, with ``overrides`` applied last."""
    if name == "convergence":
        prob = ProblemSpec(0.0, 1.0, 0.0, 1.0, nu=1.6667, mu=1e3,
                           forcing=Forcing.MANUFACTURED, initial=Initial.MANUFACTURED,
                           nx=16, ny=16)
        cfg = SolverConfig(dt=1e-3, t_end=MMS_T_REF)
    elif name == "decay":
        prob = ProblemSpec(0.0, 1.0, -1.0, 1.0, nu=DECAY_NUS[0], mu=DECAY_MUS[-1],
                           forcing=Forcing.ZERO, initial=Initial.SIN2, nx=128, ny=256)
        cfg = SolverConfig(dt=1e-3, t_end=0.1)
    elif name == "attractor":
        prob = ProblemSpec(0.0, 1.0, -1.0, 1.0, nu=ATTRACTOR_NUS[0], mu=100.0,
                           forcing=Forcing.WIND_SIN_Y, initial=Initial.ZERO, nx=32, ny=64)
        cfg = SolverConfig(dt=ATTRACTOR_DT, t_end=4.0)
    else:
        raise ConfigurationError(f"unknown scenario {name!r}; expected one of {SCENARIOS}")
    unknown = set(overrides) - _PROBLEM_KEYS - _SOLVER_KEYS - {"user_forcing"}
    if unknown:
        raise ConfigurationError(f"unknown override(s): {sorted(unknown)}")
    p_over = {k: v for k, v in overrides.items() if k in _PROBLEM_KEYS or k == "user_forcing"}
    s_over = {k: v for k, v in overrides.items() if k in _SOLVER_KEYS}
    if "forcing" in p_over:
        p_over["forcing"] = Forcing(p_over["forcing"])
    if "initial" in p_over:
        p_over["initial"] = Initial(p_over["initial"])
    return replace(prob, **p_over), replace(cfg, **s_over)

