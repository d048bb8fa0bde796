"""Compressible Euler equations in 2D.

Conserved layout is components-first: u[0] = rho, u[1] = rho*v1,
u[2] = rho*v2, u[3] = E. All functions broadcast over trailing axes.
"""

import numpy as np


class InadmissibleStateError(ValueError):
    """Non-positive density or pressure encountered."""


def cons2prim(u, gamma):
    """(rho, v1, v2, p) from conserved variables; validates admissibility."""
    rho = np.asarray(u[0])
    if np.any(rho <= 0.0) or not np.all(np.isfinite(rho)):
        raise InadmissibleStateError("non-positive density")
    v1 = u[1] / rho
    v2 = u[2] / rho
    p = (gamma - 1.0) * (u[3] - 0.5 * rho * (v1 * v1 + v2 * v2))
    if np.any(p <= 0.0) or not np.all(np.isfinite(p)):
        raise InadmissibleStateError("non-positive pressure")
    return rho, v1, v2, p


def prim2cons(rho, v1, v2, p, gamma):
    rho, v1, v2, p = np.broadcast_arrays(rho, v1, v2, p)
    E = p / (gamma - 1.0) + 0.5 * rho * (v1 * v1 + v2 * v2)
    return np.stack([rho, rho * v1, rho * v2, E])

def flux_euler(u, axis, gamma):
    """Physical flux along the given axis (0 = x, 1 = y)."""
    rho, v1, v2, p = cons2prim(u, gamma)
    vn = v1 if axis == 0 else v2
    f0 = rho * vn
    f1 = u[1] * vn + (p if axis == 0 else 0.0)
    f2 = u[2] * vn + (p if axis == 1 else 0.0)
    f3 = (u[3] + p) * vn
    return np.stack(np.broadcast_arrays(f0, f1, f2, f3))


def sound_speed(u, gamma):
    rho, _, _, p = cons2prim(u, gamma)
    return np.sqrt(gamma * p / rho)


def max_wave_speed_euler(u, gamma):
    """Directional bound max(|v1| + c, |v2| + c), per node."""
    rho, v1, v2, p = cons2prim(u, gamma)
    c = np.sqrt(gamma * p / rho)
    return np.maximum(np.abs(v1), np.abs(v2)) + c


def flux_hll(uL, uR, axis, gamma):
    """HLL flux with Davis wave-speed estimates."""
    rhoL, v1L, v2L, pL = cons2prim(uL, gamma)
    rhoR, v1R, v2R, pR = cons2prim(uR, gamma)
    vnL = v1L if axis == 0 else v2L
    vnR = v1R if axis == 0 else v2R
    cL = np.sqrt(gamma * pL / rhoL)
    cR = np.sqrt(gamma * pR / rhoR)
    sL = np.minimum(vnL - cL, vnR - cR)
    sR = np.maximum(vnL + cL, vnR + cR)
    fL = flux_euler(uL, axis, gamma)
    fR = flux_euler(uR, axis, gamma)
    uL_b = np.broadcast_arrays(*uL)
    uR_b = np.broadcast_arrays(*uR)
    mid = (sR * fL - sL * fR + sL * sR * (np.stack(uR_b) - np.stack(uL_b))) / (sR - sL)
    out = np.where(sL >= 0.0, fL, np.where(sR <= 0.0, fR, mid))
    return out


def logmean(a, b):
    """Logarithmic mean (b - a)/(ln b - ln a) with a series branch near a = b."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if np.any(a <= 0.0) or np.any(b <= 0.0):
        raise ValueError("logmean requires positive arguments")
    z = ((b - a) / (b + a)) ** 2
    series = 0.5 * (a + b) / (1.0 + z * (1.0 / 3.0 + z * (1.0 / 5.0 + z / 7.0)))
    with np.errstate(divide="ignore", invalid="ignore"):
        direct = (b - a) / (np.log(b) - np.log(a))
    return np.where(z < 1e-4, series, direct)


def flux_chandrashekar(uL, uR, axis, gamma):
    """Entropy-conservative two-point flux built from logarithmic means of
    density and inverse temperature beta = rho/(2p)."""
    rhoL, v1L, v2L, pL = cons2prim(uL, gamma)
    rhoR, v1R, v2R, pR = cons2prim(uR, gamma)
    betaL = rhoL / (2.0 * pL)
    betaR = rhoR / (2.0 * pR)
    rho_ln = logmean(rhoL, rhoR)
    beta_ln = logmean(betaL, betaR)
    v1a = 0.5 * (v1L + v1R)
    v2a = 0.5 * (v2L + v2R)
    p_hat = 0.5 * (rhoL + rhoR) / (betaL + betaR)
    vsq = 0.5 * (v1L * v1L + v2L * v2L + v1R * v1R + v2R * v2R)
    vna = v1a if axis == 0 else v2a
    f0 = rho_ln * vna
    f1 = f0 * v1a
    f2 = f0 * v2a
    if axis == 0:
        f1 = f1 + p_hat
    else:
        f2 = f2 + p_hat
    f3 = f0 * (0.5 / ((gamma - 1.0) * beta_ln) - 0.5 * vsq) + f1 * v1a + f2 * v2a
    return np.stack(np.broadcast_arrays(f0, f1, f2, f3))


def entropy_variables(u, gamma):
    """Entropy variables of S = -rho*s/(gamma-1), s = ln p - gamma ln rho."""
    rho, v1, v2, p = cons2prim(u, gamma)
    s = np.log(p) - gamma * np.log(rho)
    beta = rho / (2.0 * p)
    w0 = (gamma - s) / (gamma - 1.0) - beta * (v1 * v1 + v2 * v2)
    return np.stack(np.broadcast_arrays(w0, 2.0 * beta * v1, 2.0 * beta * v2, -2.0 * beta))


def flux_potential(u, axis):
    """Entropy flux potential psi = rho*v along the axis."""
    return np.asarray(u[axis + 1])


def gravity_source_euler(u, phi_x, phi_y):
    """Momentum/energy sources from a potential gradient: no mass source,
    -rho*grad(phi) in the momenta, -(rho v . grad phi) in the energy."""
    z = np.zeros_like(np.broadcast_arrays(u[0], phi_x)[0])
    return np.stack(
        np.broadcast_arrays(
            z,
            -u[0] * phi_x,
            -u[0] * phi_y,
            -(u[1] * phi_x + u[2] * phi_y),
        )
    )
