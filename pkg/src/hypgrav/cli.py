"""Batch runner: parse a TOML run configuration, orchestrate single-physics
and coupled simulations (with optional shock capturing and adaptive meshes),
and emit structured text outputs: error tables, energy time series,
sub-cycle histograms, nodal snapshots and 1D slices, and a machine-readable
summary per run."""

import argparse
import json
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib

from . import harness
from .amr import AMRPolicy, adapt_step, initial_adapt_cycle
from .coupling import CoupledSystem, advance, solve_gravity
from .euler import InadmissibleStateError
from .harness import bulk_energies, eoc, jeans_analytic_energies, l2_error, sample_line
from .hypdiff import RelaxationParams
from .mesh import create_uniform
from .semidisc import (
    BlendParams,
    EulerEquations,
    HyperbolicDiffusion,
    Semidiscretization,
)
from .timeint import (
    PseudotimeDivergenceError,
    get_scheme,
    pseudotime_steady_state,
    stable_dt,
    step_lowstorage_2n,
)

EXIT_OK, EXIT_CONFIG, EXIT_SOLVER = 0, 2, 3

EULER_VARS = ("rho", "mom_x", "mom_y", "energy")
GRAVITY_VARS = ("phi", "q1", "q2")


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    experiment: str
    polydeg: int = 3
    initial_level: int = 2
    amr: dict | None = None
    cfl_euler: float = 0.5
    cfl_gravity: float = 0.5
    tol: float = 1.0e-10
    t_final: float = 1.0
    integrator_euler: str = "ck45"
    integrator_gravity: str = "ck45"
    coupling: str = "none"
    shock_capture: bool = False
    volume_flux: str = ""
    outdir: str = "out"
    energy_interval: int = 1
    snapshot_times: list = field(default_factory=list)
    slice_y: float = 0.0
    max_level: int = 16
    threads: int = 1


def _apply_override(raw, key, value):
    parts = key.split(".")
    node = raw
    for p in parts[:-1]:
        node = node.setdefault(p, {})
    try:
        node[parts[-1]] = tomllib.loads(f"v = {value}")["v"]
    except tomllib.TOMLDecodeError:
        node[parts[-1]] = value


def parse_config(path, overrides=()):
    try:
        raw = tomllib.loads(Path(path).read_text())
    except (OSError, tomllib.TOMLDecodeError) as exc:
        raise ConfigError(f"cannot parse config {path}: {exc}") from exc
    for ov in overrides:
        if "=" not in ov:
            raise ConfigError(f"override {ov!r} is not of the form key=value")
        key, value = ov.split("=", 1)
        _apply_override(raw, key.strip(), value.strip())
    try:
        exp = raw["experiment"]["name"]
    except KeyError as exc:
        raise ConfigError("config needs [experiment] name") from exc
    mesh = raw.get("mesh", {})
    solver = raw.get("solver", {})
    output = raw.get("output", {})
    cfg = RunConfig(
        experiment=exp,
        polydeg=int(solver.get("polydeg", 3)),
        initial_level=int(mesh.get("initial_level", 2)),
        amr=mesh.get("amr"),
        cfl_euler=float(solver.get("cfl_euler", 0.5)),
        cfl_gravity=float(solver.get("cfl_gravity", 0.5)),
        tol=float(solver.get("tol", 1.0e-10)),
        t_final=float(solver.get("t_final", 1.0)),
        integrator_euler=str(solver.get("integrator_euler", "ck45")),
        integrator_gravity=str(solver.get("integrator_gravity", "ck45")),
        coupling=str(solver.get("coupling", "none")),
        shock_capture=bool(solver.get("shock_capture", False)),
        volume_flux=str(solver.get("volume_flux", "")),
        outdir=str(output.get("dir", "out")),
        energy_interval=int(output.get("energy_interval", 1)),
        snapshot_times=list(output.get("snapshot_times", [])),
        slice_y=float(output.get("slice_y", 0.0)),
        max_level=int(mesh.get("max_level", 16)),
        threads=int(solver.get("threads", 1)),
    )
    known = {
        "euler_manufactured", "hypdiff_manufactured", "coupled_manufactured",
        "jeans", "sedov",
    }
    if cfg.experiment not in known:
        raise ConfigError(f"unknown experiment {cfg.experiment!r}")
    if cfg.coupling not in ("none", "per_stage", "per_step"):
        raise ConfigError(f"unknown coupling strategy {cfg.coupling!r}")
    if cfg.polydeg < 1:
        raise ConfigError("polydeg must be at least 1")
    return cfg


# -- experiment assembly ----------------------------------------------------------


def make_case(cfg, level=None):
    level = cfg.initial_level if level is None else level
    if cfg.experiment == "euler_manufactured":
        return harness.euler_manufactured()
    if cfg.experiment == "hypdiff_manufactured":
        return harness.hypdiff_manufactured()
    if cfg.experiment == "coupled_manufactured":
        return harness.coupled_manufactured()
    if cfg.experiment == "jeans":
        return harness.jeans_case()
    if cfg.experiment == "sedov":
        fine_level = cfg.amr["level_high"] if cfg.amr else level
        (lo, _), (hi, _) = ((-4.0, -4.0), (4.0, 4.0))
        h_min = (hi - lo) / 2**fine_level
        return harness.sedov_selfgrav_case(h_min)
    raise ConfigError(f"unknown experiment {cfg.experiment!r}")


def build_semis(case, cfg, level=None):
    level = cfg.initial_level if level is None else level
    tree = create_uniform(case.domain, level, periodic=case.periodic,
                          max_level=cfg.max_level)
    semi_euler = None
    semi_gravity = None
    if case.initial_euler is not None:
        shock = BlendParams() if cfg.shock_capture else None
        volume = cfg.volume_flux or None
        if cfg.shock_capture and volume is None:
            volume = "chandrashekar"
        source = None
        if case.euler_source is not None and cfg.coupling == "none":
            fn = case.euler_source
            source = lambda u, x, y, t: np.moveaxis(np.asarray(fn(x, y, t)), 0, 1)
        semi_euler = Semidiscretization(
            tree, cfg.polydeg, EulerEquations(case.gamma),
            surface_flux="hll", volume_flux=volume,
            boundary_conditions=case.euler_bc, source=source,
            shock_capture=shock,
        )
    if case.initial_gravity is not None:
        params = RelaxationParams(1.0, case.length_scale)
        semi_gravity = Semidiscretization(
            tree, cfg.polydeg, HyperbolicDiffusion(params),
            boundary_conditions=case.gravity_bc,
            source=case.gravity_forcing,
        )
    return tree, semi_euler, semi_gravity


# -- drivers ----------------------------------------------------------------------


def run_euler_transient(case, cfg, level=None):
    """Single-physics flow run to t_final; returns (semi, state, stats)."""
    _, semi, _ = build_semis(case, cfg, level)
    u = semi.new_state(case.initial_euler)
    scheme = get_scheme(cfg.integrator_euler)
    du = np.zeros_like(u)
    t, steps = 0.0, 0
    t0 = time.perf_counter()
    while t < cfg.t_final - 1e-14:
        dt = min(stable_dt(semi, u, cfg.cfl_euler), cfg.t_final - t)
        step_lowstorage_2n(scheme, semi.rhs, u, t, dt, du=du)
        t += dt
        steps += 1
    stats = {
        "t_final": t,
        "steps": steps,
        "element_steps": steps * semi.n_elements,
        "seconds_euler": time.perf_counter() - t0,
    }
    return semi, u, stats


def run_hypdiff_steady(case, cfg, level=None):
    """Single-physics pseudotime relaxation; returns (semi, state, stats)."""
    _, _, semi = build_semis(case, cfg, level)
    u = semi.new_state(case.initial_gravity)
    scheme = get_scheme(cfg.integrator_gravity)
    t0 = time.perf_counter()
    u, n = pseudotime_steady_state(semi, u, cfg.tol, cfg.cfl_gravity, scheme)
    stats = {
        "subcycles": n,
        "steps": n,
        "element_steps": n * semi.n_elements,
        "seconds_gravity": time.perf_counter() - t0,
    }
    return semi, u, stats


def build_coupled(case, cfg, level=None):
    tree, semi_euler, semi_gravity = build_semis(case, cfg, level)
    sys_ = CoupledSystem(
        semi_euler=semi_euler,
        semi_gravity=semi_gravity,
        u_euler=semi_euler.new_state(case.initial_euler),
        u_gravity=semi_gravity.new_state(case.initial_gravity),
        grav_const=case.grav_const,
        rho_background=case.rho_background,
        strategy=cfg.coupling,
        tol=cfg.tol,
        cfl_euler=cfg.cfl_euler,
        cfl_gravity=cfg.cfl_gravity,
        scheme_euler=get_scheme(cfg.integrator_euler),
        scheme_gravity=get_scheme(cfg.integrator_gravity),
        extra_euler_source=case.euler_source,
    )
    return tree, sys_


def run_coupled(case, cfg, level=None, collect_energies=False, snapshot_hook=None):
    """Coupled flow-gravity run to t_final with optional AMR per step.

    snapshot_hook(sys, t) is called at each requested snapshot time.
    Returns (sys, stats); stats carries energies rows, sub-cycle counts,
    element-step totals and coarse timing shares."""
    tree, sys_ = build_coupled(case, cfg, level)
    policy = None
    timers = {"euler_gravity": 0.0, "amr": 0.0}
    if cfg.amr:
        policy = AMRPolicy(
            level_low=int(cfg.amr["level_low"]),
            level_high=int(cfg.amr["level_high"]),
            threshold=float(cfg.amr.get("threshold", 3.0e-4)),
            interval=int(cfg.amr.get("interval", 1)),
        )
        t0 = time.perf_counter()
        ue, ug, cycles = initial_adapt_cycle(
            policy, tree, sys_.semi_euler, sys_.semi_gravity,
            case.initial_euler, case.initial_gravity,
            max_cycles=int(cfg.amr.get("max_initial_cycles", 10)),
        )
        timers["amr"] += time.perf_counter() - t0
        sys_.u_euler, sys_.u_gravity = ue, ug
        sys_.reset_buffers()
    pending_snaps = sorted(cfg.snapshot_times)
    energies = []
    omega = case.oscillation.omega if hasattr(case, "oscillation") else None
    # initial solve: all recorded diagnostics use a converged potential; its
    # sub-cycle count appears once and is dropped from histogram figures
    solve_gravity(sys_, 0.0)

    def record(t):
        e_kin, e_int, e_pot = bulk_energies(
            sys_.semi_euler, sys_.u_euler, sys_.u_gravity, case.gamma
        )
        row = {"t": t, "e_kin": e_kin, "e_int": e_int, "e_pot": e_pot}
        if omega is not None:
            row["omega_t"] = omega * t
        energies.append(row)

    t, steps, element_steps = 0.0, 0, 0
    if collect_energies:
        record(t)
    t_wall = time.perf_counter()
    while t < cfg.t_final - 1e-14:
        dt = stable_dt(sys_.semi_euler, sys_.u_euler, cfg.cfl_euler)
        dt = min(dt, cfg.t_final - t)
        if pending_snaps:
            dt = min(dt, max(pending_snaps[0] - t, 1e-14))
        element_steps += sys_.semi_euler.n_elements
        t = advance(sys_, t, dt)
        steps += 1
        if policy is not None and steps % policy.interval == 0:
            t0 = time.perf_counter()
            ue, ug, changed = adapt_step(
                policy, tree, sys_.semi_euler, sys_.semi_gravity,
                sys_.u_euler, sys_.u_gravity,
            )
            if changed:
                sys_.u_euler, sys_.u_gravity = ue, ug
                sys_.reset_buffers()
            timers["amr"] += time.perf_counter() - t0
        if collect_energies and steps % cfg.energy_interval == 0:
            record(t)
        while pending_snaps and t >= pending_snaps[0] - 1e-12:
            if snapshot_hook is not None:
                snapshot_hook(sys_, pending_snaps[0])
            pending_snaps.pop(0)
    # analysis-time sync: the gravity field corresponds to the final density
    solve_gravity(sys_, t, record=False)
    timers["euler_gravity"] = time.perf_counter() - t_wall - timers["amr"]
    stats = {
        "t_final": t,
        "steps": steps,
        "element_steps": element_steps,
        "subcycles": list(sys_.subcycles),
        "total_subcycles": int(np.sum(sys_.subcycles)) if sys_.subcycles else 0,
        "energies": energies,
        "seconds_amr": timers["amr"],
        "seconds_euler_gravity": timers["euler_gravity"],
    }
    return sys_, stats


# -- output writers ----------------------------------------------------------------


def _fmt(x):
    return f"{x:.17e}"


def write_csv(path, header, rows):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(_fmt(v) if isinstance(v, float) else str(v) for v in row))
    path.write_text("\n".join(lines) + "\n")


def write_errors(path, names, errors):
    write_csv(path, ["variable", "l2_error"],
              [(n, float(e)) for n, e in zip(names, errors)])


def write_energies(path, case, rows):
    omega = case.oscillation.omega if hasattr(case, "oscillation") else None
    header = ["t", "omega_t", "e_kin", "e_int", "e_pot",
              "e_int_dev", "e_pot_dev"]
    if omega is not None:
        header += ["e_kin_ref", "e_int_dev_ref", "e_pot_dev_ref"]
    out = []
    e_int0 = rows[0]["e_int"] if rows else 0.0
    e_pot0 = rows[0]["e_pot"] if rows else 0.0
    for r in rows:
        line = [r["t"], r.get("omega_t", 0.0), r["e_kin"], r["e_int"], r["e_pot"],
                r["e_int"] - e_int0, r["e_pot"] - e_pot0]
        if omega is not None:
            ek, dei, dep = jeans_analytic_energies(r["t"], case.oscillation)
            line += [float(ek), float(dei), float(dep)]
        out.append(line)
    write_csv(path, header, out)


def write_histogram(path, subcycles):
    values, counts = np.unique(np.asarray(subcycles, dtype=int), return_counts=True)
    write_csv(path, ["subcycles", "frequency"],
              [(int(v), int(c)) for v, c in zip(values, counts)])


def write_snapshot(semi_euler, semi_gravity, u_euler, u_gravity, t, outdir,
                   slice_y=0.0):
    """Per-element nodal dump, mesh level map, and a 1D slice along y=slice_y."""
    out = Path(outdir) / f"snapshot_t{t:.4f}"
    out.mkdir(parents=True, exist_ok=True)
    conn = semi_euler.conn
    write_csv(
        out / "elements.csv",
        ["element", "center_x", "center_y", "level", "h"],
        [
            (e, float(conn.centers[e, 0]), float(conn.centers[e, 1]),
             int(conn.levels[e]), float(conn.h[e]))
            for e in range(conn.n_elements)
        ],
    )

    def dump_state(name, semi, u, varnames):
        n = semi.basis.n_nodes
        rows = []
        for e in range(semi.n_elements):
            for i in range(n):
                for j in range(n):
                    rows.append(
                        (e, i, j, float(semi.node_x[e, i, j]),
                         float(semi.node_y[e, i, j]))
                        + tuple(float(u[e, v, i, j]) for v in range(u.shape[1]))
                    )
        write_csv(out / name, ["element", "i", "j", "x", "y", *varnames], rows)

    dump_state("state_euler.csv", semi_euler, u_euler, EULER_VARS)
    if u_gravity is not None:
        dump_state("state_gravity.csv", semi_gravity, u_gravity, GRAVITY_VARS)

    # slice through element rows at y = slice_y, at the elements' own x nodes
    xs = np.unique(
        np.concatenate(
            [
                semi_euler.node_x[e, :, 0]
                for e in range(conn.n_elements)
                if conn.centers[e, 1] - 0.5 * conn.h[e] <= slice_y
                < conn.centers[e, 1] + 0.5 * conn.h[e]
            ]
        )
    )
    vals_e = sample_line(semi_euler, u_euler, slice_y, xs)
    cols = [xs] + [vals_e[v] for v in range(vals_e.shape[0])]
    names = ["x", *EULER_VARS]
    if u_gravity is not None:
        vals_g = sample_line(semi_gravity, u_gravity, slice_y, xs)
        cols += [vals_g[v] for v in range(vals_g.shape[0])]
        names += list(GRAVITY_VARS)
    write_csv(out / "slice.csv", names,
              [tuple(float(c[m]) for c in cols) for m in range(len(xs))])
    return out


def write_summary(path, payload):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


# -- top-level commands --------------------------------------------------------------


def run(cfg):
    """Execute one configured run; returns the summary payload."""
    outdir = Path(cfg.outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    case = make_case(cfg)
    summary = {"experiment": cfg.experiment, "polydeg": cfg.polydeg,
               "initial_level": cfg.initial_level, "coupling": cfg.coupling}
    t_wall = time.perf_counter()
    if cfg.experiment == "euler_manufactured":
        semi, u, stats = run_euler_transient(case, cfg)
        err = l2_error(semi, u, case.exact_euler, stats["t_final"])
        write_errors(outdir / "errors.csv", EULER_VARS, err)
        summary.update(stats, errors=dict(zip(EULER_VARS, map(float, err))))
    elif cfg.experiment == "hypdiff_manufactured":
        semi, u, stats = run_hypdiff_steady(case, cfg)
        err = l2_error(semi, u, case.exact_gravity, 0.0)
        write_errors(outdir / "errors.csv", GRAVITY_VARS, err)
        summary.update(stats, errors=dict(zip(GRAVITY_VARS, map(float, err))))
    elif cfg.experiment in ("coupled_manufactured", "jeans", "sedov"):
        if cfg.coupling == "none":
            raise ConfigError(f"{cfg.experiment} requires a coupling strategy")
        snaps = []

        def hook(sys_, t_snap):
            solve_gravity(sys_, t_snap, record=False)
            snaps.append(
                write_snapshot(
                    sys_.semi_euler, sys_.semi_gravity,
                    sys_.u_euler, sys_.u_gravity,
                    t_snap, outdir, slice_y=cfg.slice_y,
                )
            )

        sys_, stats = run_coupled(
            case, cfg,
            collect_energies=cfg.experiment != "coupled_manufactured",
            snapshot_hook=hook if cfg.snapshot_times else None,
        )
        if cfg.experiment == "coupled_manufactured":
            err_e = l2_error(sys_.semi_euler, sys_.u_euler,
                             case.exact_euler, stats["t_final"])
            err_g = l2_error(sys_.semi_gravity, sys_.u_gravity,
                             case.exact_gravity, stats["t_final"])
            names = EULER_VARS + GRAVITY_VARS
            err = np.concatenate([err_e, err_g])
            write_errors(outdir / "errors.csv", names, err)
            summary["errors"] = dict(zip(names, map(float, err)))
        if stats["energies"]:
            write_energies(outdir / "energies.csv", case, stats["energies"])
        if stats["subcycles"]:
            write_histogram(outdir / "subcycles.csv", stats["subcycles"])
        stats.pop("energies")
        stats.pop("subcycles")
        summary.update(stats)
        summary["snapshots"] = [str(s) for s in snaps]
    wall = time.perf_counter() - t_wall
    summary["seconds_total"] = wall
    shares = {}
    for key in ("seconds_euler", "seconds_gravity", "seconds_amr",
                "seconds_euler_gravity"):
        if key in summary:
            shares[key.removeprefix("seconds_")] = (
                100.0 * summary[key] / wall if wall > 0 else 0.0
            )
    summary["timing_shares_percent"] = shares
    write_summary(outdir / "summary.json", summary)
    return summary


def run_convergence(cfg, levels):
    """Run the configured experiment over a refinement sequence and write the
    aggregated error/EOC tables."""
    if len(levels) < 2:
        raise ConfigError("convergence needs at least two levels")
    if sorted(levels) != list(levels):
        raise ConfigError("levels must be strictly increasing")
    case = make_case(cfg)
    if cfg.experiment == "euler_manufactured":
        names = EULER_VARS
    elif cfg.experiment == "hypdiff_manufactured":
        names = GRAVITY_VARS
    elif cfg.experiment == "coupled_manufactured":
        names = EULER_VARS + GRAVITY_VARS
    else:
        raise ConfigError(f"{cfg.experiment} has no exact solution to converge to")
    rows = []
    hs = []
    errs = []
    for level in levels:
        if cfg.experiment == "euler_manufactured":
            semi, u, stats = run_euler_transient(case, cfg, level=level)
            err = l2_error(semi, u, case.exact_euler, stats["t_final"])
        elif cfg.experiment == "hypdiff_manufactured":
            semi, u, stats = run_hypdiff_steady(case, cfg, level=level)
            err = l2_error(semi, u, case.exact_gravity, 0.0)
        else:
            sys_, stats = run_coupled(case, cfg, level=level)
            err_e = l2_error(sys_.semi_euler, sys_.u_euler,
                             case.exact_euler, stats["t_final"])
            err_g = l2_error(sys_.semi_gravity, sys_.u_gravity,
                             case.exact_gravity, stats["t_final"])
            semi = sys_.semi_euler
            err = np.concatenate([err_e, err_g])
        h = semi.conn.h[0]
        hs.append(float(h))
        errs.append(err)
        rows.append([float(h), semi.n_elements] + [float(e) for e in err])
    errs = np.array(errs)
    rates, avg = eoc(errs, hs)
    outdir = Path(cfg.outdir)
    write_csv(outdir / "eoc_table.csv", ["h", "n_elements", *names], rows)
    lines = [f"{'K':>8} " + " ".join(f"{n:>12}" for n in names)]
    for m, level in enumerate(levels):
        k = int(round(np.sqrt(rows[m][1])))
        lines.append(f"{k:>6}^2 " + " ".join(f"{errs[m, v]:12.3e}"
                                             for v in range(len(names))))
        if m > 0:
            lines.append(f"{'EOC':>8} " + " ".join(f"{rates[m - 1, v]:12.2f}"
                                                   for v in range(len(names))))
    lines.append(f"{'avg EOC':>8} " + " ".join(f"{avg[v]:12.2f}"
                                               for v in range(len(names))))
    (outdir / "eoc_table.txt").write_text("\n".join(lines) + "\n")
    summary = {
        "experiment": cfg.experiment,
        "polydeg": cfg.polydeg,
        "levels": list(levels),
        "h": hs,
        "errors": {n: errs[:, v].tolist() for v, n in enumerate(names)},
        "avg_eoc": {n: float(avg[v]) for v, n in enumerate(names)},
    }
    write_summary(outdir / "summary.json", summary)
    return summary


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="hypgrav",
        description="DG solver for self-gravitating gas dynamics with "
        "purely hyperbolic gravity",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    p_run = sub.add_parser("run", help="execute one configured simulation")
    p_run.add_argument("config")
    p_run.add_argument("--out", help="override the output directory")
    p_run.add_argument("--threads", type=int, default=None)
    p_run.add_argument("--override", action="append", default=[],
                       metavar="KEY=VALUE")
    p_conv = sub.add_parser("convergence", help="run a mesh refinement study")
    p_conv.add_argument("config")
    p_conv.add_argument("--levels", required=True,
                        help="comma-separated refinement levels, e.g. 2,3,4,5")
    p_conv.add_argument("--out", help="override the output directory")
    p_conv.add_argument("--threads", type=int, default=None)
    p_conv.add_argument("--override", action="append", default=[],
                        metavar="KEY=VALUE")
    args = parser.parse_args(argv)

    try:
        cfg = parse_config(args.config, args.override)
        if args.out:
            cfg.outdir = args.out
        if args.threads:
            cfg.threads = args.threads
        import numba

        numba.set_num_threads(max(1, cfg.threads))
        if args.command == "run":
            summary = run(cfg)
            print(json.dumps(summary.get("errors", summary.get("avg_eoc", {})),
                             indent=2, sort_keys=True))
        else:
            levels = [int(x) for x in args.levels.split(",")]
            summary = run_convergence(cfg, levels)
            print(json.dumps(summary["avg_eoc"], indent=2, sort_keys=True))
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (InadmissibleStateError, PseudotimeDivergenceError) as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
