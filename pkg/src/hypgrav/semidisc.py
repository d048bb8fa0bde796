"""Semi-discrete DG operators on the quadtree mesh.

Wires the mesh connectivity, basis operators, equations, numerical fluxes,
boundary conditions and sources into a right-hand-side evaluator. The weak
form is the default; for the Euler equations a split-form flux-differencing
variant with subcell finite-volume shock-capturing blending is available.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels as K
from .dgcore import lgl_basis, transfer_operators
from .euler import InadmissibleStateError
from .hypdiff import RelaxationParams
from .mesh import leaf_connectivity


@dataclass(frozen=True)
class EulerEquations:
    gamma: float
    nvars: int = 4


@dataclass(frozen=True)
class HyperbolicDiffusion:
    params: RelaxationParams
    nvars: int = 3


def indicator_threshold(degree):
    """Reference indicator threshold 0.5 * 10^(-1.8 (N+1)^(1/4))."""
    return 0.5 * 10.0 ** (-1.8 * (degree + 1) ** 0.25)


@dataclass
class BlendParams:
    """Modal-energy shock indicator and blending limits."""

    alpha_max: float = 0.5
    alpha_floor: float = 0.001
    sharpness: float = math.log(9999.0)
    smooth: bool = True
    smooth_factor: float = 0.5


@dataclass
class DirichletBC:
    """Weakly imposed boundary state: surface_flux(interior, external).

    `state(x, y, t)` returns the external state with components first,
    evaluated at arrays of face-node coordinates.
    """

    state: callable


_SURFACE_FLAGS = {"hll": K.FLUX_HLL, "chandrashekar": K.FLUX_CHANDRASHEKAR,
                  "central": K.FLUX_CENTRAL}


class Semidiscretization:
    def __init__(
        self,
        tree,
        degree,
        equations,
        surface_flux=None,
        volume_flux=None,
        boundary_conditions=None,
        source=None,
        shock_capture=None,
    ):
        self.tree = tree
        self.basis = lgl_basis(degree)
        self.transfer = transfer_operators(degree)
        self.equations = equations
        self.is_euler = isinstance(equations, EulerEquations)
        if surface_flux is None:
            surface_flux = "hll" if self.is_euler else "llf"
        if not self.is_euler and surface_flux != "llf":
            raise ValueError("the hyperbolic diffusion system uses the LLF flux")
        if self.is_euler and surface_flux not in _SURFACE_FLAGS:
            raise ValueError(f"unknown surface flux {surface_flux!r}")
        self.surface_flux = surface_flux
        self.volume_flux = volume_flux
        if volume_flux is not None and volume_flux not in ("chandrashekar", "central"):
            raise ValueError(f"unknown volume flux {volume_flux!r}")
        self.boundary_conditions = dict(boundary_conditions or {})
        self.source = source
        self.shock_capture = shock_capture
        self.rebuild()

    # -- mesh-dependent data ------------------------------------------------

    def rebuild(self):
        """Refresh connectivity and packed arrays after mesh adaptation."""
        conn = leaf_connectivity(self.tree)
        self.conn = conn
        n = self.basis.n_nodes
        self.h = conn.h
        self.inv_jacobian = np.ascontiguousarray(2.0 / conn.h)
        ref = 0.5 * (self.basis.nodes + 1.0)  # in [0, 1]
        cx = conn.centers[:, 0][:, None, None]
        cy = conn.centers[:, 1][:, None, None]
        hh = conn.h[:, None, None]
        full = (conn.n_elements, n, n)
        self.node_x = np.ascontiguousarray(
            np.broadcast_to(cx - 0.5 * hh + hh * ref[None, :, None], full)
        )
        self.node_y = np.ascontiguousarray(
            np.broadcast_to(cy - 0.5 * hh + hh * ref[None, None, :], full)
        )
        for tag in set(conn.bd_tags):
            if tag not in self.boundary_conditions:
                raise KeyError(f"no boundary condition registered for tag {tag!r}")
        nbd = len(conn.bd_elem)
        self.bd_x = np.empty((nbd, n))
        self.bd_y = np.empty((nbd, n))
        for m in range(nbd):
            e, f = conn.bd_elem[m], conn.bd_face[m]
            x0 = conn.centers[e, 0] - 0.5 * conn.h[e]
            y0 = conn.centers[e, 1] - 0.5 * conn.h[e]
            line = conn.h[e] * ref
            if f == 0:
                self.bd_x[m], self.bd_y[m] = x0, y0 + line
            elif f == 1:
                self.bd_x[m], self.bd_y[m] = x0 + conn.h[e], y0 + line
            elif f == 2:
                self.bd_x[m], self.bd_y[m] = x0 + line, y0
            else:
                self.bd_x[m], self.bd_y[m] = x0 + line, y0 + conn.h[e]
        nvar = self.equations.nvars
        ne = conn.n_elements
        self._faceflux = np.empty((ne, 4, nvar, n))
        self._prim = np.empty((ne, 3, n, n)) if self.is_euler else None
        self._badflag = np.full(1, -1, dtype=np.int64)
        self._conn_args = (
            conn.if_left, conn.if_right, conn.if_axis,
            conn.mt_large, conn.mt_small_lo, conn.mt_small_hi,
            conn.mt_axis, conn.mt_large_side,
            np.ascontiguousarray(self.transfer.forward_lower),
            np.ascontiguousarray(self.transfer.forward_upper),
            np.ascontiguousarray(self.transfer.reverse_lower),
            np.ascontiguousarray(self.transfer.reverse_upper),
            conn.bd_elem, conn.bd_face,
        )
        self._winv = np.ascontiguousarray(1.0 / self.basis.weights)

    @property
    def n_elements(self):
        return self.conn.n_elements

    @property
    def degree(self):
        return self.basis.degree

    def quadrature_weights(self):
        """Physical quadrature weights J^2 w_i w_j, shape (nelem, n, n)."""
        w2 = np.outer(self.basis.weights, self.basis.weights)
        return 0.25 * self.conn.h[:, None, None] ** 2 * w2[None]

    def integrate(self, nodal):
        """Quadrature over the domain of a nodal field shaped (nelem, n, n)
        or (nelem, k, n, n); middle axes are kept."""
        return np.einsum(
            "e...ij,eij->...", np.asarray(nodal), self.quadrature_weights()
        )

    def new_state(self, init=None):
        """Allocate a state array, optionally filled from init(x, y)."""
        n = self.basis.n_nodes
        u = np.zeros((self.n_elements, self.equations.nvars, n, n))
        if init is not None:
            u[:] = np.moveaxis(init(self.node_x, self.node_y), 0, 1)
        return u

    # -- boundary and source evaluation --------------------------------------

    def boundary_external(self, t):
        n = self.basis.n_nodes
        nvar = self.equations.nvars
        out = np.zeros((len(self.conn.bd_elem), nvar, n))
        for m, tag in enumerate(self.conn.bd_tags):
            bc = self.boundary_conditions[tag]
            out[m] = bc.state(self.bd_x[m], self.bd_y[m], t)
        return np.ascontiguousarray(out)

    def source_array(self, u, t):
        nvar = self.equations.nvars
        if self.source is None:
            n = self.basis.n_nodes
            return np.zeros((self.n_elements, nvar, n, n))
        src = self.source(u, self.node_x, self.node_y, t)
        return np.ascontiguousarray(src)

    def forcing_array(self, t=0.0):
        """First-component source of the hyperbolic diffusion system."""
        if self.is_euler:
            raise ValueError("forcing_array applies to the gravity system")
        if self.source is None:
            n = self.basis.n_nodes
            return np.zeros((self.n_elements, n, n))
        return np.ascontiguousarray(self.source(self.node_x, self.node_y, t))

    # -- right-hand sides -----------------------------------------------------

    def _check_admissible(self, u):
        self._badflag[0] = -1
        bad = K.compute_prim(u, self.equations.gamma, self._prim, self._badflag)
        if bad >= 0:
            raise InadmissibleStateError(
                f"inadmissible state in element {bad} "
                f"(center {tuple(self.conn.centers[bad])})"
            )

    def rhs(self, u, t, out=None):
        """Semi-discrete operator du/dt; dispatches weak or split-blended."""
        if self.is_euler and self.volume_flux is not None:
            alpha = self.blending_alpha(u)
            return self.rhs_split_blended(u, t, alpha, out=out)
        return self.rhs_weak(u, t, out=out)

    def rhs_weak(self, u, t, out=None):
        du = out if out is not None else np.empty_like(u)
        bext = self.boundary_external(t)
        if self.is_euler:
            g = self.equations.gamma
            self._check_admissible(u)
            K.fill_faceflux_euler(
                u, g, _SURFACE_FLAGS[self.surface_flux],
                *self._conn_args, bext, self._faceflux,
            )
            src = self.source_array(u, t)
            K.rhs_euler_weak(
                u, self._prim, src, self._faceflux,
                self.basis.diff_weak, self._winv, self.inv_jacobian, du,
            )
        else:
            params = self.equations.params
            forcing = self.forcing_array(t)
            K.rhs_hypdiff_full(
                u, forcing, 1.0 / params.t_relax, params.wave_speed,
                *self._conn_args, bext,
                self.basis.diff_weak, self._winv, self.inv_jacobian,
                self._faceflux, du,
            )
        return du

    def rhs_split_blended(self, u, t, alpha=None, out=None):
        if not self.is_euler:
            raise ValueError("split form is used by the Euler solver only")
        if self.volume_flux is None:
            raise ValueError("split form requires a volume flux")
        du = out if out is not None else np.empty_like(u)
        g = self.equations.gamma
        self._check_admissible(u)
        bext = self.boundary_external(t)
        K.fill_faceflux_euler(
            u, g, _SURFACE_FLAGS[self.surface_flux],
            *self._conn_args, bext, self._faceflux,
        )
        if alpha is None:
            alpha = self.blending_alpha(u)
        src = self.source_array(u, t)
        volflag = _SURFACE_FLAGS[self.volume_flux]
        K.rhs_euler_split_blended(
            u, self._prim, src, self._faceflux,
            self.basis.diff, self._winv, self.inv_jacobian,
            alpha, g, volflag, du,
        )
        return du

    def blending_alpha(self, u):
        if self.shock_capture is None:
            return np.zeros(self.n_elements)
        return blending_indicator(
            u, self.basis, self.shock_capture, self.equations.gamma,
            pairs=self.conn.face_pairs(),
        )


def rhs_weak(semi, u, t):
    return semi.rhs_weak(u, t)


def rhs_split_blended(semi, u, t, alpha=None):
    return semi.rhs_split_blended(u, t, alpha=alpha)


def apply_boundary(semi, face_values, tag, t, face):
    """Boundary numerical flux for interior face data (nvar, n) at a tagged
    physical boundary; Dirichlet states enter through the surface flux."""
    from . import euler as eu
    from . import hypdiff as hd

    bc = semi.boundary_conditions[tag]
    idx = [m for m, tg in enumerate(semi.conn.bd_tags)
           if tg == tag and semi.conn.bd_face[m] == face]
    if not idx:
        raise KeyError(f"no boundary face with tag {tag!r} and face {face}")
    m = idx[0]
    ext = np.asarray(bc.state(semi.bd_x[m], semi.bd_y[m], t))
    axis = face // 2
    inner_first = face in (1, 3)
    if semi.is_euler:
        g = semi.equations.gamma
        if semi.surface_flux == "hll":
            fl = lambda a, b: eu.flux_hll(a, b, axis, g)
        elif semi.surface_flux == "chandrashekar":
            fl = lambda a, b: eu.flux_chandrashekar(a, b, axis, g)
        else:
            fl = lambda a, b: 0.5 * (eu.flux_euler(a, axis, g) + eu.flux_euler(b, axis, g))
    else:
        fl = lambda a, b: hd.flux_llf_hypdiff(a, b, axis, semi.equations.params)
    return fl(face_values, ext) if inner_first else fl(ext, face_values)


def blending_indicator(u, basis, params, gamma, pairs=None):
    """Per-element blending coefficient from the modal energy of rho*p.

    The energy ratio compares the highest to the total modal content and the
    second-highest to the truncated content; a logistic ramp around the
    degree-dependent threshold maps it to [0, alpha_max].
    """
    rho = u[:, 0]
    p = (gamma - 1.0) * (
        u[:, 3] - 0.5 * (u[:, 1] ** 2 + u[:, 2] ** 2) / rho
    )
    ind = rho * p
    Vi = basis.vandermonde_inv
    modal = np.einsum("ai,eij,bj->eab", Vi, ind, Vi)
    sq = modal**2
    total = sq.sum(axis=(1, 2))
    n = basis.n_nodes
    clip1 = sq[:, : n - 1, : n - 1].sum(axis=(1, 2))
    with np.errstate(divide="ignore", invalid="ignore"):
        e1 = np.where(total > 0.0, (total - clip1) / total, 0.0)
        if n >= 3:
            clip2 = sq[:, : n - 2, : n - 2].sum(axis=(1, 2))
            e2 = np.where(clip1 > 0.0, (clip1 - clip2) / clip1, 0.0)
            energy = np.maximum(e1, e2)
        else:
            energy = e1
    T = indicator_threshold(basis.degree)
    alpha = 1.0 / (1.0 + np.exp(-params.sharpness / T * (energy - T)))
    alpha[alpha < params.alpha_floor] = 0.0
    alpha[alpha > 1.0 - params.alpha_floor] = 1.0
    alpha = np.minimum(alpha, params.alpha_max)
    if params.smooth and pairs is not None and len(pairs):
        base = alpha.copy()
        np.maximum.at(alpha, pairs[:, 0], params.smooth_factor * base[pairs[:, 1]])
        np.maximum.at(alpha, pairs[:, 1], params.smooth_factor * base[pairs[:, 0]])
    return np.ascontiguousarray(alpha)
