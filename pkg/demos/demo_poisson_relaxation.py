#!/usr/bin/env python3
"""Solve a Poisson problem with a purely hyperbolic solver.

The manufactured problem -laplace(phi) = f on the unit square (Dirichlet in
x, periodic in y) is reformulated as a first-order hyperbolic system with
relaxation time T_r = L_r^2 and marched to steady state in pseudotime. Any
T_r > 0 yields the same steady solution; L_r = 1/(2*pi) converges fastest on
square domains. The five-stage scheme optimized for this operator takes
twice the pseudotime step of CK45 and halves the step count.
"""

import numpy as np

from hypgrav.harness import hypdiff_manufactured, l2_error
from hypgrav.hypdiff import RelaxationParams
from hypgrav.mesh import create_uniform
from hypgrav.semidisc import HyperbolicDiffusion, Semidiscretization
from hypgrav.timeint import ck45, pseudotime_steady_state, rk3sstar

case = hypdiff_manufactured()

print("pseudotime steps to reach |d(phi)/dtau| < 1e-10")
print(f"{'K':>6} {'CK45@0.5':>10} {'RK3S*@1.0':>10} {'L2(phi)':>12}")
for level in (2, 3, 4):
    counts = []
    for scheme, cfl in ((ck45(), 0.5), (rk3sstar(), 1.0)):
        tree = create_uniform(case.domain, level, periodic=case.periodic)
        semi = Semidiscretization(
            tree, 3, HyperbolicDiffusion(RelaxationParams(1.0, case.length_scale)),
            boundary_conditions=case.gravity_bc,
            source=case.gravity_forcing,
        )
        u = semi.new_state(case.initial_gravity)
        u, n = pseudotime_steady_state(semi, u, 1e-10, cfl, scheme)
        counts.append(n)
    err = l2_error(semi, u, case.exact_gravity, 0.0)[0]
    k = 2**level
    print(f"{k:>4}^2 {counts[0]:>10} {counts[1]:>10} {err:>12.3e}")

print("\nthe steady state of the hyperbolic system is the Poisson solution;")
print("the optimized integrator reduces the effort by a factor of two.")
