"""Experiment definitions and diagnostics.

Five setups: manufactured flow and Poisson problems (single physics), the
coupled manufactured problem, the self-gravitating acoustic (Jeans-type)
oscillation, and the self-gravitating blast with localized ambient density.
Plus discrete error norms, convergence-order bookkeeping, bulk energies and
the linear-theory energy profiles for the oscillation case.
"""

from dataclasses import dataclass, field

import numpy as np

from .dgcore import lagrange_eval_matrix
from .semidisc import DirichletBC

TWO_PI = 2.0 * np.pi
GRAV_CGS = 6.674e-8


@dataclass
class TestCase:
    name: str
    domain: tuple
    periodic: tuple
    gamma: float | None = None
    initial_euler: callable = None
    initial_gravity: callable = None
    exact_euler: callable = None      # (x, y, t) -> conserved components
    exact_gravity: callable = None    # (x, y, t) -> (phi, q1, q2)
    euler_source: callable = None     # analytic extra source (x, y, t)
    gravity_forcing: callable = None  # standalone Poisson forcing f(x, y)
    euler_bc: dict = field(default_factory=dict)
    gravity_bc: dict = field(default_factory=dict)
    grav_const: float = 0.0
    rho_background: float = 0.0
    length_scale: float = 1.0 / TWO_PI


# -- manufactured flow problem ------------------------------------------------

def euler_manufactured():
    """Flow with density wave rho = 2 + sin(pi(x+y-t))/10, v = (1,1),
    p = rho^2/pi, gamma = 2 on the periodic square [0,2]^2."""
    gamma = 2.0

    def prim(x, y, t):
        rho = 2.0 + 0.1 * np.sin(np.pi * (x + y - t))
        return rho, rho**2 / np.pi

    def exact(x, y, t):
        rho, p = prim(x, y, t)
        E = p / (gamma - 1.0) + rho  # |v|^2 = 2
        return np.stack(np.broadcast_arrays(rho, rho, rho, E))

    def source(x, y, t):
        rho, _ = prim(x, y, t)
        a = 0.1 * np.pi * np.cos(np.pi * (x + y - t))
        s_mom = a * (1.0 + 2.0 * rho / np.pi)
        s_e = a * (1.0 + 6.0 * rho / np.pi)
        return np.stack(np.broadcast_arrays(a, s_mom, s_mom, s_e))

    return TestCase(
        name="euler_manufactured",
        domain=((0.0, 0.0), (2.0, 2.0)),
        periodic=(True, True),
        gamma=gamma,
        initial_euler=lambda x, y: exact(x, y, 0.0),
        exact_euler=exact,
        euler_source=source,
    )


# -- manufactured Poisson problem ----------------------------------------------

def hypdiff_manufactured():
    """Poisson problem with phi = 2 + 2cos(pi x)sin(2pi y); Dirichlet in x,
    periodic in y. The pseudotime march starts from the unit constant state,
    which reproduces the reference step counts."""

    def exact(x, y, t=0.0):
        phi = 2.0 + 2.0 * np.cos(np.pi * x) * np.sin(TWO_PI * y)
        q1 = -TWO_PI * np.sin(np.pi * x) * np.sin(TWO_PI * y)
        q2 = 2.0 * TWO_PI * np.cos(np.pi * x) * np.cos(TWO_PI * y)
        return np.stack(np.broadcast_arrays(phi, q1, q2))

    def forcing(x, y, t=0.0):
        return 10.0 * np.pi**2 * np.cos(np.pi * x) * np.sin(TWO_PI * y)

    def init(x, y):
        one = np.ones_like(np.broadcast_arrays(x, y)[0])
        return np.stack([one, one, one])

    bc = DirichletBC(lambda x, y, t: exact(x, y, t))
    return TestCase(
        name="hypdiff_manufactured",
        domain=((0.0, 0.0), (1.0, 1.0)),
        periodic=(False, True),
        initial_gravity=init,
        exact_gravity=exact,
        gravity_forcing=forcing,
        gravity_bc={"-x": bc, "+x": bc},
    )


# -- coupled manufactured problem ----------------------------------------------

def coupled_manufactured():
    """Flow of the manufactured density wave coupled to its own gravity:
    phi = -(2/pi)(rho - 2), so the Poisson forcing is -4 pi rho + 8 pi with
    G = 1 (background density 2). The flow keeps an extra analytic residual
    on top of the physical gravity source."""
    base = euler_manufactured()
    gamma = base.gamma

    def exact_gravity(x, y, t):
        s = np.sin(np.pi * (x + y - t))
        c = np.cos(np.pi * (x + y - t))
        phi = -0.2 * s / np.pi  # -(2/pi) * (rho - 2)
        q = -0.2 * c
        return np.stack(np.broadcast_arrays(phi, q, q))

    def extra_source(x, y, t):
        rho = 2.0 + 0.1 * np.sin(np.pi * (x + y - t))
        a = 0.1 * np.pi * np.cos(np.pi * (x + y - t))
        s_e = a * (1.0 + 2.0 * rho / np.pi)
        return np.stack(np.broadcast_arrays(a, a, a, s_e))

    return TestCase(
        name="coupled_manufactured",
        domain=base.domain,
        periodic=(True, True),
        gamma=gamma,
        initial_euler=base.initial_euler,
        initial_gravity=lambda x, y: exact_gravity(x, y, 0.0),
        exact_euler=base.exact_euler,
        exact_gravity=exact_gravity,
        euler_source=extra_source,
        grav_const=1.0,
        rho_background=2.0,
    )


# -- self-gravitating acoustic oscillation --------------------------------------

@dataclass(frozen=True)
class OscillationParams:
    rho0: float = 1.5e7
    p0: float = 1.5e7
    delta0: float = 1.0e-3
    kx: float = 2.0 * TWO_PI
    ky: float = 0.0
    gamma: float = 5.0 / 3.0
    grav_const: float = GRAV_CGS

    @property
    def k_squared(self):
        return self.kx**2 + self.ky**2

    @property
    def sound_speed(self):
        return np.sqrt(self.gamma * self.p0 / self.rho0)

    @property
    def omega(self):
        w2 = self.sound_speed**2 * self.k_squared - 4.0 * np.pi * self.grav_const * self.rho0
        if w2 <= 0.0:
            raise ValueError("perturbation is in the collapsing regime")
        return np.sqrt(w2)

    @property
    def jeans_wavenumber(self):
        return np.sqrt(4.0 * np.pi * self.grav_const * self.rho0) / self.sound_speed


def jeans_case(params=None):
    """Perturbed uniform self-gravitating medium on the periodic unit square.

    The wave number 4 pi exceeds the instability threshold (~2.75), so the
    perturbation oscillates with stationary amplitude."""
    pr = params or OscillationParams()
    gamma = pr.gamma

    def initial(x, y):
        pert = pr.delta0 * np.cos(pr.kx * x + pr.ky * y)
        rho = pr.rho0 * (1.0 + pert)
        p = pr.p0 * (1.0 + gamma * pert)
        z = np.zeros_like(rho)
        E = p / (gamma - 1.0)
        return np.stack(np.broadcast_arrays(rho, z, z, E))

    def initial_gravity(x, y):
        phi = np.full_like(np.broadcast_arrays(x, y)[0], pr.delta0 * pr.rho0)
        z = np.zeros_like(phi)
        return np.stack([phi, z, z])

    case = TestCase(
        name="jeans",
        domain=((0.0, 0.0), (1.0, 1.0)),
        periodic=(True, True),
        gamma=gamma,
        initial_euler=initial,
        initial_gravity=initial_gravity,
        grav_const=pr.grav_const,
        rho_background=pr.rho0,
    )
    case.oscillation = pr
    return case


def jeans_analytic_energies(t, params):
    """Linear-theory bulk energies: E_kin and the deviations of internal and
    potential energy from their initial values (derivation in
    docs/oscillation_linear_theory.md)."""
    pr = params
    w = pr.omega
    k2 = pr.k_squared
    s2 = np.sin(w * np.asarray(t)) ** 2
    e_kin = pr.rho0 * pr.delta0**2 * w**2 / (4.0 * k2) * s2
    de_int = -pr.sound_speed**2 * pr.delta0**2 * pr.rho0 / 4.0 * s2
    de_pot = 2.0 * np.pi * pr.grav_const * (pr.rho0 * pr.delta0) ** 2 / k2 * s2
    return e_kin, de_int, de_pot


# -- self-gravitating blast ------------------------------------------------------

def logistic_blend(r, inner, outer, r0, steepness):
    return inner + (outer - inner) / (1.0 + np.exp(-2.0 * steepness * (r - r0)))


def sedov_selfgrav_case(h_initial, steepness=150.0):
    """Blast with explosion energy deposited as pressure in a disc of radius
    four grid spacings, ambient density localized in a unit disc, and
    far-field Dirichlet data (ambient flow, zero gravity)."""
    if h_initial <= 0.0:
        raise ValueError("h_initial must be positive")
    gamma = 1.4
    e_expl = 1.0
    p_ambient = 1.0e-5
    rho_inner, rho_outer = 1.0, 1.0e-5
    r_rho = 1.0
    r_ini = 4.0 * h_initial
    p_ini = (gamma - 1.0) * e_expl / (np.pi * r_ini)

    def initial(x, y):
        r = np.sqrt(x**2 + y**2)
        p = logistic_blend(r, p_ini, p_ambient, r_ini, steepness)
        rho = logistic_blend(r, rho_inner, rho_outer, r_rho, steepness)
        z = np.zeros_like(rho)
        E = p / (gamma - 1.0)
        return np.stack(np.broadcast_arrays(rho, z, z, E))

    def zero_gravity(x, y, t=0.0):
        z = np.zeros_like(np.broadcast_arrays(x, y)[0])
        return np.stack([z, z, z])

    euler_bc = DirichletBC(lambda x, y, t: initial(x, y))
    gravity_bc = DirichletBC(zero_gravity)
    case = TestCase(
        name="sedov_selfgrav",
        domain=((-4.0, -4.0), (4.0, 4.0)),
        periodic=(False, False),
        gamma=gamma,
        initial_euler=initial,
        initial_gravity=lambda x, y: zero_gravity(x, y),
        euler_bc={t: euler_bc for t in ("-x", "+x", "-y", "+y")},
        gravity_bc={t: gravity_bc for t in ("-x", "+x", "-y", "+y")},
        grav_const=GRAV_CGS,
    )
    case.r_ini = r_ini
    case.p_ini = p_ini
    return case


# -- norms, convergence orders, energies -----------------------------------------

def l2_error(semi, u, exact, t, oversample=2):
    """Discrete L2 error per variable, normalized by the domain area.

    With oversample >= 1 the solution is interpolated to oversample*(N+1)
    Gauss points per direction (reproducing the reference tables); with
    oversample = 0 the collocated LGL quadrature is used.
    """
    h = semi.conn.h[:, None, None]
    if oversample and oversample >= 1:
        npts = int(oversample) * semi.basis.n_nodes
        gx, gw = np.polynomial.legendre.leggauss(npts)
        L = lagrange_eval_matrix(semi.basis.nodes, gx)
        uq = np.einsum("ai,bj,evij->evab", L, L, u)
        xq = semi.conn.centers[:, 0][:, None, None] + 0.5 * h * gx[None, :, None]
        yq = semi.conn.centers[:, 1][:, None, None] + 0.5 * h * gx[None, None, :]
        wq = 0.25 * h**2 * np.outer(gw, gw)[None]
    else:
        uq = u
        xq, yq = semi.node_x, semi.node_y
        wq = semi.quadrature_weights()
    ue = np.moveaxis(np.asarray(exact(xq, yq, t)), 0, 1)
    area = (semi.tree.size) ** 2
    return np.sqrt(np.einsum("eab,evab->v", wq, (uq - ue) ** 2) / area)


def eoc(errors, resolutions):
    """Experimental orders of convergence for a refinement sequence.

    `resolutions` are mesh spacings (strictly decreasing). Returns
    (per-pair EOC array, average)."""
    errors = np.asarray(errors, dtype=float)
    hs = np.asarray(resolutions, dtype=float)
    if len(hs) < 2 or len(errors) != len(hs):
        raise ValueError("need errors for at least two resolutions")
    if np.any(np.diff(hs) >= 0.0):
        raise ValueError("resolutions must be strictly refining")
    log_h = np.log(hs[:-1] / hs[1:])
    if errors.ndim > 1:
        log_h = log_h.reshape((-1,) + (1,) * (errors.ndim - 1))
    rates = np.log(errors[:-1] / errors[1:]) / log_h
    return rates, rates.mean(axis=0)


def bulk_energies(semi, u_euler, u_gravity, gamma):
    """Domain integrals of kinetic and internal energy density and rho*phi."""
    rho = u_euler[:, 0]
    ke = 0.5 * (u_euler[:, 1] ** 2 + u_euler[:, 2] ** 2) / rho
    p = (gamma - 1.0) * (u_euler[:, 3] - ke)
    e_kin = semi.integrate(ke)
    e_int = semi.integrate(p / (gamma - 1.0))
    if u_gravity is None:
        e_pot = 0.0
    else:
        e_pot = semi.integrate(rho * u_gravity[:, 0])
    return e_kin, e_int, e_pot


def sample_line(semi, u, y0, xs):
    """Sample the DG polynomial along the horizontal line y = y0.

    Elements are selected by the half-open rule ymin <= y0 < ymax, so a line
    on a mesh boundary samples the elements above it. Points outside any
    selected element return NaN."""
    xs = np.asarray(xs, dtype=float)
    nvar = u.shape[1]
    out = np.full((nvar, len(xs)), np.nan)
    centers = semi.conn.centers
    h = semi.conn.h
    nodes = semi.basis.nodes
    for e in range(semi.n_elements):
        ymin = centers[e, 1] - 0.5 * h[e]
        ymax = centers[e, 1] + 0.5 * h[e]
        if not (ymin <= y0 < ymax):
            continue
        xmin = centers[e, 0] - 0.5 * h[e]
        xmax = centers[e, 0] + 0.5 * h[e]
        sel = (xs >= xmin - 1e-12) & (xs <= xmax + 1e-12)
        if not np.any(sel):
            continue
        eta = np.clip(2.0 * (y0 - ymin) / h[e] - 1.0, -1.0, 1.0)
        xi = np.clip(2.0 * (xs[sel] - xmin) / h[e] - 1.0, -1.0, 1.0)
        Ly = lagrange_eval_matrix(nodes, [eta])[0]
        Lx = lagrange_eval_matrix(nodes, xi)
        out[:, sel] = np.einsum("mi,j,vij->vm", Lx, Ly, u[e])
    return out
