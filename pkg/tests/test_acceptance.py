"""Acceptance criteria, each checked at its stated tolerance.

Every test prints one PASS/FAIL line; the lines are also collected in the
"acceptance criteria" section of the pytest summary.
"""

import time

import numpy as np
import numpy.polynomial.polynomial as npoly
import pytest

from beamflat.cli import build_plan, build_trajectories, closed_loop
from beamflat.config import ScenarioConfig
from beamflat.flatseries import (FlatTrajectory, coeff_psi, input_dropped_term, input_series, pde_residual, phi_polynomial,
                                 state_series, truncation_diagnostic)
from beamflat.gevrey import GevreyProfile, derivative_table
from beamflat.green import evenly_spaced, interpolation_error, solve_amplitudes, steady_shape, three_bump_shape
from beamflat.lifting import Blob, LiftKernel, kernel_I, theorem1_gap
from beamflat.modalsim import ClosedLoopConfig, Integrator, ModeBasis, project_initial, run_scenario

EPS = np.finfo(float).eps
PEAK_DEFLECTION = 3.8e-3


def scenario_h0(x):
    return -3e-3 * np.exp(-400.0 * (np.asarray(x) - 0.8) ** 2)


@pytest.fixture(scope="module")
def plan():
    return solve_amplitudes(evenly_spaced(12), three_bump_shape())


@pytest.fixture(scope="module")
def scenario_runs():
    """Closed-loop scenario at t=10 for the (dt, M) pairs used by the regression and self-convergence checks."""
    base = ScenarioConfig.from_dict({})
    plan = build_plan(base)
    trajs = build_trajectories(base, plan)
    runs = {}
    for dt, modes in ((2e-4, 40), (1e-4, 40), (5e-5, 40), (1e-4, 20)):
        cfg = base.replace(dt=dt, modes=modes)
        start = time.perf_counter()
        res = run_scenario(closed_loop(cfg, plan, trajs))
        runs[dt, modes] = (res, time.perf_counter() - start)
    return runs


def test_steady_planning(acceptance):
    start = time.perf_counter()
    plan = solve_amplitudes(evenly_spaced(12), three_bump_shape())
    elapsed = time.perf_counter() - start
    rhs = three_bump_shape()(plan.collocation_points)
    rel = np.abs(plan.influence @ plan.alpha_bar - rhs).max() / np.abs(rhs).max()
    acceptance(1, "steady planning", rel <= 1e-9 and elapsed < 1.0,
               f"relative residual {rel:.2e} (<= 1e-9), runtime {elapsed:.3f} s (< 1 s)")


def test_actuator_trade_off(acceptance):
    desired = three_bump_shape()
    plans = {n: solve_amplitudes(evenly_spaced(n), desired) for n in (8, 12, 16)}
    err = [interpolation_error(plans[n], desired) for n in (8, 12, 16)]
    amax = [np.abs(plans[n].alpha_bar).max() for n in (8, 12, 16)]
    acceptance(2, "actuator trade-off", err[0] > err[1] > err[2] and amax[2] > amax[1],
               f"L1 errors {err[0]:.3e} > {err[1]:.3e} > {err[2]:.3e}; max|alpha| N=16 {amax[2]:.1f} > N=12 {amax[1]:.1f}")


def test_flat_series_identities(acceptance, plan):
    exact_zero = all(phi_polynomial(n)[0] == 0.0 and npoly.polyder(phi_polynomial(n), 2)[0] == 0.0
                     for n in range(1, 9))
    slope = max(abs(npoly.polyval(1.0, npoly.polyder(phi_polynomial(n), 1))) for n in range(1, 9))
    psi_exact = coeff_psi(1) == -1.0 / 6.0

    prof = GevreyProfile(1.111, 5.0)
    t = np.random.default_rng(20240601).uniform(0.0, 5.0, 100)
    jets = derivative_table(prof, t, 18)
    worst = 0.0
    for y in plan.y_bar:
        traj = FlatTrajectory(float(y), prof)
        diff = np.abs(state_series(traj, 1.0, t, dx=3) - input_series(traj, t))
        # g(t) may stop before n_max; the state side sums all n_max terms
        dropped = input_dropped_term(traj, t)
        magnitude = abs(y) * (np.abs(jets[0]) + sum(
            np.abs(npoly.polyder(phi_polynomial(n), 3)).sum() * np.abs(jets[2 * n]) for n in range(1, 9)))
        worst = max(worst, float((diff / (dropped + 32 * EPS * magnitude)).max()))
    acceptance(3, "flat-series identities", exact_zero and slope <= 1e-12 and psi_exact and worst <= 1.0,
               f"Phi_n(0)=Phi_n''(0)=0 exact: {exact_zero}; max|Phi_n'(1)| {slope:.1e}; Psi_1 == -1/6: {psi_exact}; "
               f"max |u_xxx(1,t)-g(t)| / (first dropped term + rounding) = {worst:.10f} over 100 t")


def test_pde_residual_and_majorant(acceptance, plan):
    prof = GevreyProfile(1.111, 5.0)
    x = np.linspace(0.0, 1.0, 101)[:, None]
    t = np.linspace(0.0, 5.0, 101)[None, :]
    ratio = 0.0
    for y in plan.y_bar:
        res, est, rnd = pde_residual(FlatTrajectory(float(y), prof), x, t)
        ratio = max(ratio, float((np.abs(res) / (est + rnd + 1e-300)).max()))
    diag = truncation_diagnostic(FlatTrajectory(1.0, GevreyProfile(1.0 / 0.9, 5.0)), np.linspace(0.0, 5.0, 2001))
    margin = float((diag.empirical / diag.majorant).max())
    acceptance(4, "PDE residual and majorant", ratio <= 1.0 and diag.dominated and abs(diag.sigma - 1.9) < 1e-12,
               f"max residual/estimate {ratio:.2f} on 101x101 grid; sigma={diag.sigma:.3f}, "
               f"max empirical/majorant {margin:.2e} over n<=8")


def test_steady_limit(acceptance, plan):
    prof = GevreyProfile(1.111, 5.0)
    x = np.linspace(0.0, 1.0, 51)[:, None]
    t = np.array([5.0, 5.5, 7.0, 100.0])
    worst = 0.0
    for y in plan.y_bar:
        traj = FlatTrajectory(float(y), prof)
        u_ref = y * (x / 2 - x**3 / 6)
        du = np.abs(state_series(traj, x, t[None, :]) - u_ref).max() / max(np.abs(u_ref).max(), 1e-300)
        dg = np.abs(input_series(traj, t) + y).max() / abs(y)
        worst = max(worst, du, dg)
    acceptance(5, "steady limit of feedforward", worst <= 4 * EPS,
               f"max relative deviation {worst:.1e} (rounding level {4 * EPS:.1e}) for t >= T")


def test_blob_convergence(acceptance, plan):
    chosen = [0, 5, 11]  # first, middle and last interior actuator: 1/13, 6/13, 12/13
    report = theorem1_gap(plan, [10.0, 50.0, 200.0], actuators=chosen)
    ok = True
    parts = []
    for j in chosen:
        pos = float(plan.actuator_positions[j])
        c0, c1 = report.gaps(pos)
        mono = bool(np.all(np.diff(c0) < 0) and np.all(np.diff(c1) < 0))
        ok &= mono
        parts.append(f"x={pos:.4f} C0 {'/'.join(f'{v:.2e}' for v in c0)} C1 {'/'.join(f'{v:.2e}' for v in c1)}")
    grid = np.linspace(0.0, 1.0, 201)
    dual = max(float(np.abs(kernel_I(LiftKernel(Blob(10.0, float(plan.actuator_positions[j]))), grid, "series")
                            - kernel_I(LiftKernel(Blob(10.0, float(plan.actuator_positions[j]))), grid,
                                       "quadrature")).max()) for j in chosen)
    acceptance(6, "blob steady-state convergence", ok and dual <= 1e-10,
               "; ".join(parts) + f"; series/quadrature difference {dual:.1e} at m=10")


def test_dissipativity(acceptance):
    basis = ModeBasis(40)
    start = project_initial(scenario_h0, None, basis)
    energy = lambda q, v: 0.5 * np.sum(v**2 + basis.omega**2 * q**2)
    steps = 100_000

    integ = Integrator(basis, 1e-4, 2.0, 1.0)
    q, v = start.q, start.qdot
    prev = e_start = energy(q, v)
    increases = 0
    for _ in range(steps):
        q, v = integ.step(q, v, 0.0)
        now = energy(q, v)
        increases += now > prev
        prev = now

    integ0 = Integrator(basis, 1e-4, 0.0, 1.0)
    q, v = start.q, start.qdot
    drift = 0.0
    for _ in range(steps):
        q, v = integ0.step(q, v, 0.0)
        drift = max(drift, abs(energy(q, v) - e_start) / e_start)
    acceptance(7, "dissipativity", increases == 0 and drift <= 1e-10,
               f"k=2: {increases} energy increases in {steps} steps (E {e_start:.3e} -> {prev:.3e}); "
               f"k=0: max relative drift {drift:.1e}")


def test_constant_input_consistency(acceptance, plan):
    cfg = ClosedLoopConfig(plan=plan, forcing="constant", dt=1e-4, mode_count=40, t_final=10.0,
                           record_every=10_000, snapshot_every=100_000)
    res = run_scenario(cfg)
    gap = float(np.abs(res.snapshots[-1] - steady_shape(plan, cfg.x_grid)).max())
    acceptance(8, "constant input reaches the Green superposition", gap <= 1e-4,
               f"sup|w(.,10) - sum alpha_j G(., x_j)| = {gap:.2e} (<= 1e-4)")


def test_scenario_regression(acceptance, scenario_runs):
    res, elapsed = scenario_runs[1e-4, 40]
    final = float(res.error_sup[-1])
    limit = 0.05 * PEAK_DEFLECTION
    acceptance(9, "closed-loop scenario regression", final < limit and elapsed < 120.0,
               f"sup|e(.,10)| = {final:.2e} (< {limit:.1e}), runtime {elapsed:.1f} s (< 120 s)")


def test_self_convergence(acceptance, scenario_runs):
    w = {key: run[0].snapshots[-1] for key, run in scenario_runs.items()}
    coarse = np.abs(w[2e-4, 40] - w[1e-4, 40]).max()
    fine = np.abs(w[1e-4, 40] - w[5e-5, 40]).max()
    ratio = coarse / fine
    modal = float(np.abs(w[1e-4, 20] - w[1e-4, 40]).max())
    acceptance(10, "self-convergence", ratio >= 3.5 and modal < 1e-6,
               f"dt halving ratio {ratio:.2f} (>= 3.5); M 20->40 change {modal:.2e} (< 1e-6)")
