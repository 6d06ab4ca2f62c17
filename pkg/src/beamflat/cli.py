"""Command-line scenario runner.

Verbs::

    beamflat plan             solve the steady actuator amplitudes
    beamflat sweep-actuators  compare interpolation error and effort over N
    beamflat simulate         closed-loop run with feedforward and feedback
    beamflat verify           convergence and identity checks, pass/fail table

Exit status is 0 only if every requested stage succeeded; 2 signals an
invalid configuration or command line.
"""

import argparse
import json
import os
import sys

import numpy as np

from . import io
from .config import DEFAULTS, ScenarioConfig
from .errors import BeamFlatError, ConfigError
from .flatseries import (FlatTrajectory, input_rows, input_series, state_series, truncation_diagnostic)
from .gevrey import GevreyProfile, jet_rows
from .green import (build_influence, evenly_spaced, green_dx, green_eval, interpolation_error,
                    plan_rows, plan_summary, solve_amplitudes, CONDITION_LIMIT)
from .lifting import (Blob, LiftKernel, boundary_residuals, kernel_I, profile_rows, theorem1_gap)
from .modalsim import ClosedLoopConfig, run_scenario

EXIT_OK, EXIT_FAILED, EXIT_USAGE = 0, 1, 2
BOUNDARY_TOL = 1e-8
DUAL_MODE_TOL = 1e-10
PROFILE_SAMPLES = 501


def build_plan(cfg):
    return solve_amplitudes(cfg.actuator_positions, cfg.shape("desired_shape"), cfg.collocation_points)


def build_profile(cfg):
    return GevreyProfile(cfg["epsilon"], cfg["transition_time"], cfg["n_max"])


def build_trajectories(cfg, plan, strict=True):
    prof = build_profile(cfg)
    return [FlatTrajectory(float(y), prof, actuator_index=j, strict=strict)
            for j, y in enumerate(plan.y_bar)]


def closed_loop(cfg, plan, trajectories):
    h0 = cfg.shape("initial_displacement")
    h1 = cfg.shape("initial_velocity")
    return ClosedLoopConfig(
        plan=plan,
        trajectories=trajectories,
        feedback_gain=cfg["feedback_gain"],
        feedback_position=cfg["feedback_position"],
        h0=None if cfg["initial_displacement"]["kind"] == "zero" else h0,
        h1=None if cfg["initial_velocity"]["kind"] == "zero" else h1,
        dt=cfg["dt"],
        mode_count=cfg["modes"],
        t_final=cfg["t_final"],
        forcing=cfg["forcing"],
        record_every=cfg["record_every"],
        snapshot_every=cfg["snapshot_every"],
        x_grid=cfg.x_grid,
    )


def cmd_plan(cfg, out):
    plan = build_plan(cfg)
    desired = cfg.shape("desired_shape")
    header = ["collocation"] + [f"xi_{j + 1}" for j in range(plan.size)]
    io.write_csv(os.path.join(out, "influence.csv"), header,
                 [(x, *row) for x, row in zip(plan.collocation_points, plan.influence)])
    io.write_csv(os.path.join(out, "amplitudes.csv"), ["position", "alpha_bar", "y_bar"], plan_rows(plan))
    summary = plan_summary(plan, desired)
    io.write_json(os.path.join(out, "plan.json"), summary)
    return summary


def cmd_sweep(cfg, out, counts=None):
    counts = counts or cfg["sweep_counts"]
    desired = cfg.shape("desired_shape")
    rows = []
    for n in counts:
        try:
            plan = solve_amplitudes(evenly_spaced(n), desired)
            rows.append((n, interpolation_error(plan, desired), float(np.abs(plan.alpha_bar).max()),
                         plan.condition, "ok"))
        except BeamFlatError as exc:
            rows.append((n, None, None, getattr(exc, "condition", None), f"failed: {exc}"))
    io.write_csv(os.path.join(out, "sweep.csv"),
                 ["actuator_count", "l1_error", "max_abs_alpha", "condition", "status"], rows)
    return rows


def cmd_simulate(cfg, out):
    plan = build_plan(cfg)
    trajs = build_trajectories(cfg, plan) if cfg["forcing"] == "feedforward" else []
    result = run_scenario(closed_loop(cfg, plan, trajs))
    x = result.x_grid
    io.write_csv(os.path.join(out, "snapshots.csv"), ["t", "x", "w"],
                 [(t, xi, w) for t, snap in zip(result.snapshot_times, result.snapshots)
                  for xi, w in zip(x, snap)])
    io.write_csv(os.path.join(out, "energy.csv"), ["t", "energy"], zip(result.times, result.energy))
    io.write_csv(os.path.join(out, "error.csv"), ["t", "error_sup", "error_l2"],
                 zip(result.times, result.error_sup, result.error_l2))
    header = ["t"] + [f"alpha_{j + 1}" for j in range(plan.size)] + ["alpha_feedback"]
    io.write_csv(os.path.join(out, "controls.csv"), header,
                 [(t, *row) for t, row in zip(result.times, result.controls)])
    if trajs:
        prof = trajs[0].profile
        t = np.linspace(0.0, prof.T, PROFILE_SAMPLES)
        io.write_csv(os.path.join(out, "inputs.csv"), ["t"] + [f"g_{j + 1}" for j in range(plan.size)],
                     input_rows(trajs, t))
        io.write_csv(os.path.join(out, "profile.csv"), ["t"] + [f"phi_d{k}" for k in range(prof.jet_order + 1)],
                     jet_rows(prof, t))
    summary = result.summary()
    io.write_json(os.path.join(out, "simulate.json"), summary)
    return summary


def _check(name, passed, detail):
    return {"property": name, "passed": bool(passed), "detail": detail}


def verify_properties(cfg, out=None):
    """Run the verification suite; returns a list of property records."""
    results = []
    plan = build_plan(cfg)
    m_values = sorted(float(m) for m in cfg["blob_m"])

    # the gap oscillates in m, so compare against its envelope over [m_min, 2 m_min]
    report = theorem1_gap(plan, m_values)
    band = theorem1_gap(plan, np.linspace(m_values[0], 2.0 * m_values[0], 9))
    interior = sorted({r.position for r in report.rows if not r.boundary_actuator})
    trend, monotone = [], []
    for pos in interior:
        c0, c1 = report.gaps(pos)
        e0, e1 = band.gaps(pos)
        trend.append(bool(c0[-1] < e0.max() and c1[-1] < e1.max()))
        monotone.append(report.monotone(pos))
    results.append(_check(
        "blob_steady_state_convergence", all(trend),
        f"gap at m={m_values[-1]:g} below its envelope on [{m_values[0]:g}, {2 * m_values[0]:g}] "
        f"at {sum(trend)}/{len(trend)} interior actuators (monotone over the m list at {sum(monotone)})"))

    worst = 0.0
    for xj in plan.actuator_positions:
        kern = LiftKernel(Blob(m_values[0], float(xj)))
        if kern.resolved_mode == "series":
            grid = np.linspace(0.0, 1.0, 51)
            worst = max(worst, float(np.abs(kernel_I(kern, grid, "series") - kernel_I(kern, grid, "quadrature")).max()))
    results.append(_check("dual_mode_agreement", worst <= DUAL_MODE_TOL,
                          f"max series/quadrature difference {worst:.3e} at m={m_values[0]:g}"))

    unit = FlatTrajectory(1.0, build_profile(cfg), strict=False)
    diag = truncation_diagnostic(unit, np.linspace(0.0, cfg["transition_time"], 2001))
    results.append(_check(
        "flat_series_truncation", diag.ok,
        f"sigma={diag.sigma:.4g} K={diag.K:.4g} sigma<2={diag.guaranteed} convergent={diag.convergent} "
        f"dominated={diag.dominated} decaying={diag.decaying}"))

    worst_cond = 0.0
    for n in range(1, plan.size + 1):
        cond = float(np.linalg.cond(build_influence(evenly_spaced(n))))
        worst_cond = max(worst_cond, cond if np.isfinite(cond) else np.inf)
    results.append(_check("influence_invertible", worst_cond < CONDITION_LIMIT and plan.condition < CONDITION_LIMIT,
                          f"worst condition {worst_cond:.3e} over N=1..{plan.size}; plan {plan.condition:.3e}"))

    xi = plan.actuator_positions
    green_bc = max(float(np.abs(green_eval(0.0, xi)).max()),
                   float(np.abs(green_dx(1.0, xi[xi < 1.0])).max(initial=0.0)))
    kernel_bc = max(abs(v) for m in m_values for x in xi
                    for v in boundary_residuals(LiftKernel(Blob(m, float(x)))).values())
    t = np.linspace(0.0, cfg["transition_time"], 51)
    flat_bc = 0.0
    if diag.guaranteed:
        traj = FlatTrajectory(1.0, build_profile(cfg))
        g = input_series(traj, t)
        flat_bc = max(float(np.abs(state_series(traj, 0.0, t)).max()),
                      float(np.abs(state_series(traj, 0.0, t, dx=2)).max()),
                      float(np.abs(state_series(traj, 1.0, t, dx=1)).max()),
                      float(np.abs(state_series(traj, 1.0, t, dx=3) - g).max()))
    worst_bc = max(green_bc, kernel_bc, flat_bc)
    results.append(_check("boundary_identities", worst_bc <= BOUNDARY_TOL,
                          f"largest boundary residual {worst_bc:.3e}"))

    if out is not None:
        io.write_csv(os.path.join(out, "theorem_gaps.csv"), ["m", "position", "c0_gap", "c1_gap", "boundary"],
                     [(r.m, r.position, r.c0_gap, r.c1_gap, r.boundary_actuator) for r in report.rows])
        io.write_csv(os.path.join(out, "truncation.csv"), ["n", "empirical", "majorant", "empirical_root"],
                     diag.rows())
        for m in m_values:
            io.write_csv(os.path.join(out, f"profile_m{m:g}.csv"), ["x", "psi_bar", "w_bar"],
                         profile_rows(plan, m, cfg.x_grid))
        io.write_csv(os.path.join(out, "verify.csv"), ["property", "passed", "detail"],
                     [(r["property"], r["passed"], r["detail"]) for r in results])
    return results


def _parser():
    ap = argparse.ArgumentParser(prog="beamflat", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)
    for name, text in (("plan", "solve steady actuator amplitudes"),
                       ("sweep-actuators", "compare actuator counts"),
                       ("simulate", "run the closed-loop simulation"),
                       ("verify", "run the verification suite")):
        p = sub.add_parser(name, help=text)
        p.add_argument("--config", help="scenario JSON file (defaults apply to missing keys)")
        p.add_argument("--out", help="output directory (overrides output_dir)")
        p.add_argument("--n-max", type=int, help="flat-series terms")
        p.add_argument("--modes", type=int, help="simulation mode count")
        p.add_argument("--dt", type=float, help="simulation time step")
        if name == "sweep-actuators":
            p.add_argument("--counts", type=int, nargs="+", help="actuator counts (overrides sweep_counts)")
    return ap


def load_config(args):
    data = {}
    if args.config:
        try:
            with open(args.config) as fh:
                data = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError([f"cannot read {args.config}: {exc}"]) from exc
        if not isinstance(data, dict):
            raise ConfigError(["configuration must be a JSON object"])
    overrides = {"n_max": args.n_max, "modes": args.modes, "dt": args.dt, "output_dir": args.out}
    data.update({k: v for k, v in overrides.items() if v is not None})
    if getattr(args, "counts", None):
        data["sweep_counts"] = args.counts
    return ScenarioConfig.from_dict(data)


def main(argv=None):
    args = _parser().parse_args(argv)
    try:
        cfg = load_config(args)
        io.precision()
    except (ConfigError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    out = cfg["output_dir"]
    try:
        if args.command == "plan":
            summary = cmd_plan(cfg, out)
            print(json.dumps(summary, indent=2, sort_keys=True))
        elif args.command == "sweep-actuators":
            rows = cmd_sweep(cfg, out)
            for n, err, amax, _, status in rows:
                print(f"N={n:3d}  L1={io.format_value(err, 6):>12}  max|alpha|={io.format_value(amax, 6):>12}  {status}")
            if any(r[-1] != "ok" for r in rows):
                return EXIT_FAILED
        elif args.command == "simulate":
            summary = cmd_simulate(cfg, out)
            print(json.dumps(summary, indent=2, sort_keys=True))
        else:
            results = verify_properties(cfg, out)
            for r in results:
                print(f"{'PASS' if r['passed'] else 'FAIL'}  {r['property']}: {r['detail']}")
            if not all(r["passed"] for r in results):
                return EXIT_FAILED
    except BeamFlatError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAILED
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
