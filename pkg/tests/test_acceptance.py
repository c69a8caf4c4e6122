"""Acceptance criteria.  Each test logs one PASS/FAIL line (shown in the terminal summary)
and then asserts the same condition at the stated tolerance."""

import math

import mpmath
import numpy as np
import pytest

from _oracles import mass_outside_ball
from tdpsf.classifier import Verdict, build_filter_sets, classify_framelet
from tdpsf.experiments import (
    freewave_config,
    longrange_config,
    make_preset,
    run_experiment,
    soliton_config,
    soliton_reference,
)
from tdpsf.frame import GaborFrame, dual_decay_slope
from tdpsf.lattice import make_grid
from tdpsf.propagator import CubicFocusing, StaticPotential, StepperConfig, split_step_evolve
from tdpsf.special import inverse_upper_incomplete_gamma, upper_incomplete_gamma


def record(log, number, title, ok, detail):
    line = f"criterion {number} [{'PASS' if ok else 'FAIL'}] {title}: {detail}"
    print(line)
    log.append(line)
    return ok


def richardson(run, dts):
    u = [run(dt) for dt in dts]
    return math.log2((u[0] - u[1]).norm() / (u[1] - u[2]).norm())


@pytest.mark.slow
def test_1_soliton_filtering(acceptance_log):
    result = run_experiment("soliton1d", scale="ci")
    series = result.get("E_of_v", "")
    E = dict(zip(series.x, series.y))
    e15 = E[15.0]
    tail = [(v, e) for v, e in sorted(E.items()) if v >= 4]
    floor = 1e-8
    monotone = all(b <= a or max(a, b) <= floor for (_, a), (_, b) in zip(tail, tail[1:]))
    reached_floor = min(e for _, e in tail) <= floor
    ok = e15 <= 1e-6 and monotone and reached_floor
    detail = f"E(15)={e15:.3e} (need <= 1e-6); E(v>=4) nonincreasing={monotone}; floor<=1e-8 reached={reached_floor}; " \
             + ", ".join(f"E({v:g})={e:.2e}" for v, e in sorted(E.items()))
    record(acceptance_log, 1, "soliton E(v)", ok, detail)
    assert e15 <= 1e-6
    assert monotone and reached_floor


@pytest.mark.slow
def test_2_long_range_potential(acceptance_log):
    result = run_experiment("longrange2d", scale="ci")
    ex = result.extras
    err_t = float(ex["error_tdpsf_final"])
    err_a = float(ex["error_absorber_final"])
    var_t = float(ex["M_variation_tdpsf"])
    dec_a = float(ex["M_decrease_absorber"])
    m_a = result.get("M_of_t", "absorber")
    start = result.params["plateau_start"]
    seg = [y for x, y in zip(m_a.x, m_a.y) if x >= start - 1e-9]
    monotone = all(b <= a for a, b in zip(seg, seg[1:]))
    ok = err_t <= 0.06 and err_t < err_a and var_t <= 0.02 and dec_a >= 0.05
    record(acceptance_log, 2, "long-range potential (CI scale)", ok,
           f"error at t={result.params['compare_time']:g}: tdpsf {100 * err_t:.2f}% vs absorber {100 * err_a:.2f}%; "
           f"M variation tdpsf {100 * var_t:.2f}% (<= 2%); M decrease absorber {100 * dec_a:.2f}% (>= 5%, monotone={monotone})")
    assert err_t <= 0.06
    assert err_t < err_a
    assert var_t <= 0.02
    assert dec_a >= 0.05


@pytest.mark.slow
def test_3_graceful_failure(acceptance_log):
    result = run_experiment("freewave1d", scale="ci")
    eps = result.params["eps"]
    tdpsf = [r for r in result.runs if r.baseline == "tdpsf"]
    inaccurate = [r for r in tdpsf if r.error > 10 * eps]
    silent = [r for r in inaccurate if r.status != "AmbiguousMassExceeded"]
    flagged = [r for r in tdpsf if r.status == "AmbiguousMassExceeded"]
    supported_sigma2 = [r for r in tdpsf if r.label.startswith("sigma=2") and r.status == "Completed"]
    record(acceptance_log, 3, "graceful failure (freewave1d)", not silent,
           f"{len(tdpsf)} runs, {len(flagged)} flagged AmbiguousMassExceeded, {len(inaccurate)} with error > 10*eps, "
           f"{len(silent)} silent" + (": " + ", ".join(f"{r.label} err={r.error:.2e}" for r in silent) if silent else "")
           + f"; sigma=2 completed runs: {len(supported_sigma2)}")
    assert not silent
    for r in supported_sigma2:
        assert r.error <= 1e-5


def test_4_split_step_orders(acceptance_log):
    grid = make_grid(1, 25.6, 512)
    period = 4 * math.pi
    sol = soliton_reference(0.0, 0.0, grid)

    def nonlinear(dt):
        return split_step_evolve(sol, CubicFocusing(-2.0), StepperConfig(dt, kappa=0.5), period)

    x = grid.axis
    well = StaticPotential(-15.0 / (0.05 * x**2 + 1))
    packet = grid.field(np.exp(-x**2 / 2 + 1j * x))

    def linear(dt):
        return split_step_evolve(packet, well, StepperConfig(dt, kappa=0.5), 1.0)

    p_nl = richardson(nonlinear, [period / 200, period / 400, period / 800])
    p_lin = richardson(linear, [1 / 50, 1 / 100, 1 / 200])
    # one-step (local) order of the same linear problem, for context
    one = [(split_step_evolve(packet, well, StepperConfig(h), h)
            - split_step_evolve(packet, well, StepperConfig(h / 256), h)).norm() for h in (0.08, 0.04)]
    p_local = math.log2(one[0] / one[1])
    ok = p_nl >= 1.9 and p_lin >= 2.9
    record(acceptance_log, 4, "split-step orders", ok,
           f"nonlinear {p_nl:.3f} (>= 1.9), linear {p_lin:.3f} (>= 2.9); linear one-step order {p_local:.3f}")
    assert p_nl >= 1.9
    assert p_lin >= 2.9


def _bandlimited(grid, rng):
    spec = rng.normal(size=grid.shape) + 1j * rng.normal(size=grid.shape)
    for ax, k in enumerate(grid.kmesh()):
        spec = spec * (np.abs(k) <= 0.8 * grid.kmax)
    return grid.field(np.fft.ifftn(spec))


def test_5_frame_reconstruction(acceptance_log):
    setups = []
    sol = make_preset("soliton1d").params
    setups.append((make_grid(1, sol["half_width"], sol["points"]), sol["sigma"], sol["xs"], sol["ks"], 30))
    fw = make_preset("freewave1d").params
    for sigma in (1.0, 2.0, 4.0):
        setups.append((make_grid(1, fw["half_width"], fw["points"]), sigma, fw["xs"], fw["ks"], 20))
    lr = make_preset("longrange2d").params
    setups.append((make_grid(2, lr["half_width"], lr["points"]), lr["sigma"], lr["xs"], lr["ks"], 10))
    rng = np.random.default_rng(2024)
    worst, count, slopes = 0.0, 0, []
    for grid, sigma, xs, ks, n in setups:
        est = GaborFrame(sigma=sigma, xs=xs, ks=ks, q=None).fit(grid)
        for _ in range(n):
            f = _bandlimited(grid, rng)
            worst = max(worst, (est.inverse_transform(est.transform(f)) - f).norm() / f.norm())
            count += 1
        slopes.append((sigma, est.params_.xs, -dual_decay_slope(est.dual_), est.params_.decay_rate))
    decay_ok = all(s >= 0.8 * lam for _, _, s, lam in slopes)
    ok = count == 100 and worst <= 1e-8 and decay_ok
    record(acceptance_log, 5, "frame reconstruction and dual decay", ok,
           f"{count} fields, worst relative error {worst:.2e} (<= 1e-8); decay rates "
           + ", ".join(f"sigma={s:g},xs={x:g}: {m:.3f} vs 0.8*{lam:.3f}" for s, x, m, lam in slopes))
    assert count == 100
    assert worst <= 1e-8
    assert decay_ok


def test_6_classifier_oracle(acceptance_log):
    p = make_preset("freewave1d").params
    cfg = freewave_config(p, 2.0, 10.0).classifier
    grid = make_grid(1, p["half_width"], p["points"])
    sets = build_filter_sets(cfg, grid)
    rng = np.random.default_rng(6)
    bins = sets.layout.signed_bins
    allowed = bins[np.abs(bins * cfg.frame.ks) <= cfg.kmax]
    bs = rng.choice(allowed, size=50)
    times = np.linspace(0.0, cfg.Tmax, 10)
    worst = max(mass_outside_ball(cfg, (int(b),), float(t)) for b in bs for t in times)
    disjoint = sets.outgoing.isdisjoint(sets.ambiguous)
    centre = int(round((cfg.Lb + cfg.wb / 2) / cfg.frame.xs))
    stationary = classify_framelet(((centre,), (0,)), cfg).verdict
    ok = worst <= 1.5 * cfg.eps and disjoint and stationary is Verdict.AMBIGUOUS
    record(acceptance_log, 6, "classifier oracle", ok,
           f"worst mass outside B(t) {worst:.3e} (<= {1.5 * cfg.eps:.1e}, {cfg.norm}); OUT/AMB disjoint={disjoint}; "
           f"stationary buffer framelet -> {stationary.value}")
    assert worst <= 1.5 * cfg.eps
    assert disjoint
    assert stationary is Verdict.AMBIGUOUS


def test_7_special_functions(acceptance_log):
    mpmath.mp.dps = 40

    def quad(a, x):
        return mpmath.quad(lambda t: t ** (a - 1) * mpmath.e ** (-t), [x, x + 1, x + 30, mpmath.inf])

    worst_fwd = worst_inv = worst_res = 0.0
    direct = residual_only = unrepresentable = 0
    for a in np.linspace(0.25, 4.0, 8):
        full = math.gamma(a)
        for x in np.logspace(-8, math.log10(50.0), 20):
            exact = quad(a, x)
            worst_fwd = max(worst_fwd, abs(upper_incomplete_gamma(a, x) / float(exact) - 1))
            y = float(exact)
            if not y < full:
                # Gamma(a, x) rounds to Gamma(a): no double y encodes this x
                unrepresentable += 1
                continue
            xi = inverse_upper_incomplete_gamma(a, y)
            # |dx/x| = cond * |dy/y|; compare x directly when rounding y cannot move x by 1e-11
            cond = y / float(mpmath.power(x, a) * mpmath.e ** (-x))
            if cond * 2.3e-16 <= 1e-11:
                worst_inv = max(worst_inv, abs(xi / x - 1))
                direct += 1
            else:
                worst_res = max(worst_res, abs(float(quad(a, xi)) / y - 1))
                residual_only += 1
    ok = worst_fwd <= 1e-10 and worst_inv <= 1e-10 and worst_res <= 1e-10
    record(acceptance_log, 7, "incomplete gamma and inverse", ok,
           f"forward worst rel {worst_fwd:.2e} over 160 points; inverse worst rel {worst_inv:.2e} on {direct} "
           f"well-conditioned points, residual {worst_res:.2e} on {residual_only} ill-conditioned points, "
           f"{unrepresentable} points with Gamma(a,x) == Gamma(a) in double")
    assert worst_fwd <= 1e-10
    assert worst_inv <= 1e-10
    assert worst_res <= 1e-10


def test_8_determinism(acceptance_log, tmp_path):
    jobs = [("soliton1d", {"velocities": "12, 15", "duration_times_v": "20"}),
            ("freewave1d", {"velocities": "25", "sigmas": "1"})]
    mismatched, compared = [], 0
    for name, overrides in jobs:
        for tag in ("a", "b"):
            run_experiment(name, overrides, out_dir=tmp_path / tag)
    for path in sorted((tmp_path / "a").glob("*.csv")):
        compared += 1
        if path.read_bytes() != (tmp_path / "b" / path.name).read_bytes():
            mismatched.append(path.name)
    ok = compared > 0 and not mismatched
    record(acceptance_log, 8, "determinism", ok,
           f"{compared} CSV files compared across two runs, {len(mismatched)} differ {mismatched or ''}")
    assert compared > 0
    assert not mismatched
