"""Two-way coupling of the flow and gravity solvers.

Both semidiscretizations share one mesh and one polynomial degree, so the
exchange is purely through source terms: the flow density drives the
Poisson forcing -4*pi*G*(rho - rho_background), and the converged gradient
variables (q1, q2) feed the flow's gravity source. The gravity system is
relaxed to steady state in pseudotime either before every Runge-Kutta stage
of the flow solver (order-preserving) or once per time step (first-order).
"""

from dataclasses import dataclass, field

import numpy as np

from . import _kernels as K
from .timeint import ck45, pseudotime_steady_state, stable_dt


@dataclass
class CoupledSystem:
    semi_euler: object
    semi_gravity: object
    u_euler: np.ndarray
    u_gravity: np.ndarray
    grav_const: float
    rho_background: float = 0.0
    strategy: str = "per_stage"
    tol: float = 1.0e-4
    cfl_euler: float = 0.5
    cfl_gravity: float = 0.8
    scheme_euler: object = None
    scheme_gravity: object = None
    extra_euler_source: callable = None  # analytic (x, y, t) forcing, optional
    dt_convention: str = "max"
    max_subcycle_steps: int = 1_000_000
    subcycles: list = field(default_factory=list)

    def __post_init__(self):
        if self.strategy not in ("per_stage", "per_step"):
            raise ValueError(f"unknown coupling strategy {self.strategy!r}")
        self.scheme_euler = self.scheme_euler or ck45()
        if self.scheme_euler.kind != "2N":
            raise ValueError("the flow integrator must be a 2N low-storage scheme")
        self.scheme_gravity = self.scheme_gravity or ck45()
        if self.semi_euler.tree is not self.semi_gravity.tree:
            raise ValueError("flow and gravity solvers must share one mesh")
        if self.semi_euler.degree != self.semi_gravity.degree:
            raise ValueError("flow and gravity solvers must share one degree")
        euler_source, _ = coupled_sources(self)
        self.semi_euler.source = euler_source
        self.reset_buffers()

    def reset_buffers(self):
        """Reallocate work buffers (needed after mesh adaptation)."""
        self._du = np.zeros_like(self.u_euler)
        self._k = np.empty_like(self.u_euler)

    def stable_dt_euler(self):
        return stable_dt(
            self.semi_euler, self.u_euler, self.cfl_euler,
            convention=self.dt_convention,
        )


def coupled_sources(sys):
    """Source closures: the flow source reads (q1, q2) nodewise from the
    gravity state; the gravity forcing reads rho nodewise from the flow."""

    def euler_source(u, x, y, t):
        rho = u[:, 0]
        q1 = sys.u_gravity[:, 1]
        q2 = sys.u_gravity[:, 2]
        src = np.empty_like(u)
        src[:, 0] = 0.0
        src[:, 1] = -rho * q1
        src[:, 2] = -rho * q2
        src[:, 3] = -(u[:, 1] * q1 + u[:, 2] * q2)
        if sys.extra_euler_source is not None:
            src += np.moveaxis(np.asarray(sys.extra_euler_source(x, y, t)), 0, 1)
        return src

    def gravity_forcing(u_euler):
        return np.ascontiguousarray(
            -4.0 * np.pi * sys.grav_const * (u_euler[:, 0] - sys.rho_background)
        )

    return euler_source, gravity_forcing


def solve_gravity(sys, t, record=True):
    """Converge the gravity field for the current flow density; the previous
    gravity solution is the warm start. Records the sub-cycle count unless
    called for analysis only.

    At least one pseudotime step is always taken: the coupled update loop is
    a do-while, which lets a weakly forced potential (residual below the
    tolerance from the start) still build up across repeated solves."""
    _, gravity_forcing = coupled_sources(sys)
    forcing = gravity_forcing(sys.u_euler)
    _, n = pseudotime_steady_state(
        sys.semi_gravity,
        sys.u_gravity,
        sys.tol,
        sys.cfl_gravity,
        scheme=sys.scheme_gravity,
        forcing=forcing,
        t=t,
        max_steps=sys.max_subcycle_steps,
        min_steps=1,
        convention=sys.dt_convention,
    )
    if record:
        sys.subcycles.append(n)
    return n


def advance_per_stage(sys, t, dt):
    """One flow time step with the gravity field reconverged before every
    RK stage (retains the spatial order of the coupled system)."""
    sch = sys.scheme_euler
    du = sys._du
    du[:] = 0.0
    for i in range(sch.stages):
        t_stage = t + sch.c[i] * dt
        solve_gravity(sys, t_stage)
        k = sys.semi_euler.rhs(sys.u_euler, t_stage, out=sys._k)
        K.update_2n(du, k, sys.u_euler, sch.a[i], sch.b[i], dt)
    return t + dt


def advance_per_step(sys, t, dt):
    """One flow time step with the gravity field frozen after a single
    converged solve at the step start (introduces a first-order error)."""
    sch = sys.scheme_euler
    solve_gravity(sys, t)
    du = sys._du
    du[:] = 0.0
    for i in range(sch.stages):
        t_stage = t + sch.c[i] * dt
        k = sys.semi_euler.rhs(sys.u_euler, t_stage, out=sys._k)
        K.update_2n(du, k, sys.u_euler, sch.a[i], sch.b[i], dt)
    return t + dt


def advance(sys, t, dt):
    if sys.strategy == "per_stage":
        return advance_per_stage(sys, t, dt)
    return advance_per_step(sys, t, dt)
