#!/usr/bin/env python3
"""The coupling strategy decides the convergence order.

Flow and gravity exchange information only through source terms. If the
gravity field is reconverged before every Runge-Kutta stage of the flow
solver, all seven variables keep the full spatial order N+1; freezing it for
a whole time step introduces a first-order error that dominates everything.
"""

import numpy as np

from hypgrav.cli import RunConfig, make_case, run_coupled
from hypgrav.harness import eoc, l2_error

for strategy in ("per_stage", "per_step"):
    errs, hs = [], []
    for level in (2, 3):
        cfg = RunConfig(
            experiment="coupled_manufactured", polydeg=3, initial_level=level,
            coupling=strategy, cfl_euler=0.5, cfl_gravity=1.0, tol=1e-10,
            t_final=0.5, integrator_gravity="rk3sstar",
        )
        case = make_case(cfg)
        sys_, stats = run_coupled(case, cfg, level=level)
        e = np.concatenate([
            l2_error(sys_.semi_euler, sys_.u_euler, case.exact_euler,
                     stats["t_final"]),
            l2_error(sys_.semi_gravity, sys_.u_gravity, case.exact_gravity,
                     stats["t_final"]),
        ])
        errs.append(e)
        hs.append(sys_.semi_euler.conn.h[0])
    rates, _ = eoc(np.array(errs), hs)
    names = ("rho", "mom_x", "mom_y", "energy", "phi", "q1", "q2")
    print(f"{strategy}: EOC " + ", ".join(
        f"{n}={r:.2f}" for n, r in zip(names, rates[0])))

print("\nreconverging gravity per stage keeps every variable at high order;")
print("freezing it per step collapses the whole system to first order.")
