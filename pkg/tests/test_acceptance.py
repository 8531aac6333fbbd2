"""Acceptance suite: one test per release criterion, each printing a
PASS/FAIL line with its measured numbers (run with -s to see them all).
"""
import dataclasses
import math
import time

import numpy as np

from lcvco_isf.design import (FeedbackRealization, body_bias_design,
                              design_ratio, feedback_check,
                              feedback_synthesize, phi1_equation,
                              solve_phi1_star)
from lcvco_isf.device import DeviceParams, _region_code
from lcvco_isf.flicker import FlickerSynth
from lcvco_isf.isf import effective_isf_closed_form, nmf_closed_form
from lcvco_isf.metrics import (TankParams, c0, phase_noise_flicker,
                               phase_noise_thermal, rms2, rms2_f)
from lcvco_isf.regions import (M1, M2, BoundaryAngles, boundary_angles_from,
                               schedule, waveforms_at)
from lcvco_isf.sim import (SimConfig, compare_configs, estimate_psd,
                           measure_frequency, simulate)

TWO_PI = 2.0 * math.pi

DESK_DEVICE = DeviceParams(mu_cox=2e-4, w=1e-4, l=1e-5, vth0=0.5,
                           gamma_body=1.0, phi_s=0.7, kf=1e-21, gamma_ch=1.0,
                           temperature=300.0)
DESK_TANK = TankParams(l=2.533e-6, c=1e-10, rp=12000.0)
DESK_DT = 1.0 / (200.0 * DESK_TANK.f0)


def _report(num, ok, detail):
    print(f"criterion {num:02d} {'PASS' if ok else 'FAIL'} - {detail}")
    assert ok, f"criterion {num}: {detail}"


def _angles(p1, p2, px=0.3):
    return BoundaryAngles(phi1=p1, phi2=p2, phi_x=px, phi1_raw=-p1,
                          phi1_arg=-math.sin(p1), phi2_arg=math.sin(p2),
                          phi_x_arg=math.sin(px), phi1_valid=True,
                          phi2_valid=True, phi_x_valid=True)


def test_criterion_01_optimal_angle_root():
    t0 = time.perf_counter()
    root = solve_phi1_star()
    elapsed = time.perf_counter() - t0
    deg = math.degrees(root)
    ok = abs(deg - 16.172) <= 0.01 and abs(phi1_equation(root)) < 1e-10 \
        and elapsed < 1.0
    _report(1, ok, f"root = {deg:.6f} deg (target 16.172 +/- 0.01), "
                   f"residual {abs(phi1_equation(root)):.2e}, {elapsed:.3f} s")


def test_criterion_02_design_roundtrip_identity():
    t0 = time.perf_counter()
    rng = np.random.default_rng(1234)
    s_star = math.sin(solve_phi1_star())
    worst1 = worst2 = 0.0
    done = 0
    while done < 1000:
        a = rng.uniform(0.5, 2.0)
        vdc0 = rng.uniform(0.3, 2.5)
        if abs(a - vdc0) < 0.02:
            continue
        dev = DeviceParams(mu_cox=2e-4, w=1e-4, l=1e-5,
                           vth0=rng.uniform(0.2, 0.8),
                           gamma_body=rng.uniform(0.2, 1.0),
                           phi_s=rng.uniform(0.5, 1.0),
                           kf=1e-24, gamma_ch=1.0, temperature=300.0)
        sol = body_bias_design(a, vdc0, dev)
        ang = boundary_angles_from(a, vdc0, sol.a1, sol.vdc1, dev)
        worst1 = max(worst1, abs(abs(ang.phi1_arg) - s_star) / s_star)
        worst2 = max(worst2, abs(ang.phi2_arg - 1.0))
        done += 1
    elapsed = time.perf_counter() - t0
    ok = worst1 < 1e-9 and worst2 < 1e-9 and elapsed < 5.0
    _report(2, ok, f"1000 draws: worst |sin(phi1)| error {worst1:.2e}, "
                   f"worst sin(phi2)-1 {worst2:.2e}, {elapsed:.2f} s")


def test_criterion_03_ratio_and_feedback_residual():
    ratio = design_ratio(0.5, 1.8)
    resid = feedback_check(FeedbackRealization(k=0.33, vb=0.4, cc=1e-9),
                           0.5, 1.8)
    ok = abs(ratio - 13.0 / 18.0) <= 1e-12 and abs(resid - 0.04882) <= 1e-5
    _report(3, ok, f"ratio = {ratio:.12f} (13/18), residual = {resid:.7f} "
                   f"(target 0.04882 +/- 1e-5)")


def test_criterion_04_quadrature_vs_oracles():
    t0 = time.perf_counter()
    rng = np.random.default_rng(99)
    worst_c0 = 0.0
    for _ in range(500):
        p1 = rng.uniform(0.05, math.pi / 2)
        p2 = rng.uniform(p1, math.pi / 2)
        px = rng.uniform(0.05, math.pi / 2)
        ang = _angles(p1, p2, px)
        eff = effective_isf_closed_form(ang, "flicker", schedule(ang, M1))
        worst_c0 = max(worst_c0, abs(c0(eff)))

    p1 = solve_phi1_star()
    p2 = math.pi / 2
    ang = _angles(p1, p2)
    val = rms2(effective_isf_closed_form(ang, "thermal", schedule(ang, M1)),
               tol=1e-12)

    def integrand(t):
        return np.cos(t) ** 2 * np.clip(0.5 * (math.sin(p1) - np.sin(t)),
                                        0.0, None)

    n = 2 ** 20
    spans = [(0.0, p2), (math.pi - p2, math.pi + p1), (TWO_PI - p1, TWO_PI)]
    total_len = sum(b - a for a, b in spans)
    oracle = 0.0
    for a, b in spans:
        m = max(3, int(n * (b - a) / total_len))
        grid = np.linspace(a, b, m)
        oracle += np.trapezoid(integrand(grid), dx=(b - a) / (m - 1))
    oracle /= TWO_PI
    rel = abs(val - oracle) / oracle
    elapsed = time.perf_counter() - t0
    ok = worst_c0 < 1e-9 and rel < 1e-8 and elapsed < 30.0
    _report(4, ok, f"500 triples: worst |c0| {worst_c0:.2e} (< 1e-9); "
                   f"rms2 vs 2^20 trapezoid rel {rel:.2e} (< 1e-8); "
                   f"{elapsed:.1f} s")


def test_criterion_05_trigonometric_identities():
    rng = np.random.default_rng(55)
    worst_env = 0.0
    worst_f = 0.0
    from lcvco_isf.device import OperatingRegion
    for _ in range(100):
        p1 = rng.uniform(0.01, math.pi / 2 - 0.01)
        th = rng.uniform(0.0, TWO_PI)
        env = nmf_closed_form(_angles(p1, 1.0), OperatingRegion.SATURATION,
                        "flicker", th)
        worst_env = max(worst_env, abs(env - 0.5 * (math.sin(p1) - math.sin(th))))
        reduced = (math.pi + 2 * p1 + (5 / 3) * math.sin(2 * p1)
                   - (4 / 3) / math.tan(p1))
        worst_f = max(worst_f, abs(rms2_f(p1, math.pi / 2) - reduced))
    ok = worst_env < 1e-12 and worst_f < 1e-12
    _report(5, ok, f"envelope identity worst {worst_env:.2e}, "
                   f"crossover-at-90deg reduction worst {worst_f:.2e} "
                   f"(both < 1e-12)")


def test_criterion_06_schedule_consistency():
    rng = np.random.default_rng(321)
    dev = DeviceParams(mu_cox=2e-4, w=1e-4, l=1e-5, vth0=0.5, gamma_body=0.5,
                       phi_s=0.7, kf=1e-24, gamma_ch=1.0, temperature=300.0)
    checked = 0
    mismatches = 0
    shift_bad = 0
    while checked < 200:
        a = rng.uniform(0.8, 2.0)
        vdc0 = rng.uniform(0.5, 2.5)
        a1 = rng.uniform(0.0, min(0.8, 0.9 * a / dev.n))
        vdc1 = rng.uniform(-1.5, 0.2)
        ang = boundary_angles_from(a, vdc0, a1, vdc1, dev)
        if not (ang.phi1_valid and ang.phi2_valid and ang.phi1_arg <= 0
                and ang.phi2_arg >= 0 and ang.phi1 <= ang.phi2):
            continue
        checked += 1
        from lcvco_isf.regions import SteadyStateConfig
        cfg = SteadyStateConfig(a=a, vdc0=vdc0, a1=a1, vdc1=vdc1, omega=1.0)
        th = rng.uniform(0.0, TWO_PI, 10000)
        scheds = {tr: schedule(ang, tr) for tr in (M1, M2)}
        for tr in (M1, M2):
            sched = scheds[tr]
            starts = np.array([iv[0] for iv in sched.intervals])
            codes_sched = np.array([int(iv[2]) for iv in sched.intervals])
            borders = np.concatenate([starts, [TWO_PI]])
            keep = np.min(np.abs(th[:, None] - borders[None, :]), axis=1) > 1e-6
            tk = th[keep]
            bias = waveforms_at(cfg, tk, tr)
            direct = _region_code(dev, bias.vgs, bias.vds, bias.vbs)
            idx = np.searchsorted(starts, tk, side="right") - 1
            mismatches += int(np.sum(codes_sched[idx] != direct))
        # half-period antisymmetry
        sub = th[:1000]
        s1, s2 = scheds[M1], scheds[M2]
        for t in sub:
            if s2.region_at(t) != s1.region_at(t + math.pi):
                shift_bad += 1
    ok = mismatches == 0 and shift_bad == 0
    _report(6, ok, f"200 configs x 10000 angles: {mismatches} schedule/"
                   f"pointwise mismatches, {shift_bad} half-period "
                   f"antisymmetry violations")


def test_criterion_07_formula_slopes():
    tank = TankParams(l=2.533e-6, c=1e-10, rp=1e4)
    f_lo, f_hi = 1e4, 1e7
    decades = math.log10(f_hi / f_lo)
    lf = [phase_noise_flicker(0.05, tank, 1e-22, TWO_PI * 2e5, TWO_PI * f, 1.7)
          for f in (f_lo, f_hi)]
    lt = [phase_noise_thermal(0.3, tank, 1e-22, TWO_PI * f, 1.7)
          for f in (f_lo, f_hi)]
    slope_f = (lf[1] - lf[0]) / decades
    slope_t = (lt[1] - lt[0]) / decades
    ok = abs(slope_f + 30.0) < 0.01 and abs(slope_t + 20.0) < 0.01
    _report(7, ok, f"flicker slope {slope_f:.4f} dB/dec (target -30), "
                   f"thermal slope {slope_t:.4f} dB/dec (target -20)")


def test_criterion_08_simulator_physics():
    # oscillation frequency
    cfg = SimConfig(tank=DESK_TANK, device=DESK_DEVICE, feedback=None,
                    dt=DESK_DT, duration=2200 / DESK_TANK.f0, seed=1,
                    thermal=False, flicker=False)
    f_meas = measure_frequency(simulate(cfg))
    freq_err = abs(f_meas - DESK_TANK.f0) / DESK_TANK.f0

    # bitwise determinism
    noisy = dataclasses.replace(cfg, thermal=True, flicker=True, seed=77)
    t1, t2 = simulate(noisy), simulate(noisy)
    deterministic = all(np.array_equal(getattr(t1, f), getattr(t2, f))
                        for f in ("v_o1", "v_o2", "v_b1", "v_b2"))

    # flicker synthesizer slope
    fs = 1e7
    syn = FlickerSynth(corner_hz=1e5, dt=1.0 / fs, num_stages=12)
    x = syn.generate(2 ** 21, np.random.default_rng(3))
    f, pxx = estimate_psd(x, fs, 2 ** 17)
    band = (f >= 1e3) & (f <= 1e5)
    slope = np.polyfit(np.log10(f[band]), 10 * np.log10(pxx[band]), 1)[0]

    # energy drift with loss and devices removed
    dead = DeviceParams(mu_cox=1e-30, w=1e-4, l=1e-5, vth0=0.5,
                        gamma_body=1.0, phi_s=0.7, kf=0.0, gamma_ch=1.0,
                        temperature=300.0)
    lossless = TankParams(l=DESK_TANK.l, c=DESK_TANK.c, rp=math.inf)
    e_cfg = SimConfig(tank=lossless, device=dead, feedback=None, dt=DESK_DT,
                      duration=2000 / DESK_TANK.f0, seed=1, thermal=False,
                      flicker=False, init_kick=0.5)
    tr = simulate(e_cfg)

    def energy(state):
        v1, v2, il1, il2 = state[:4]
        return (0.5 * lossless.c * ((v1 - 1.8) ** 2 + (v2 - 1.8) ** 2)
                + 0.5 * lossless.l * (il1 ** 2 + il2 ** 2))

    drift = abs(energy(tr.final_state) - energy(tr.initial_state)) \
        / energy(tr.initial_state)

    ok = freq_err < 0.02 and deterministic and abs(slope + 10.0) < 1.0 \
        and drift < 1e-3
    _report(8, ok, f"freq err {freq_err * 100:.2f}% (< 2%); deterministic = "
                   f"{deterministic}; flicker slope {slope:.2f} dB/dec "
                   f"(-10 +/- 1); energy drift {drift * 100:.4f}% over 1000+ "
                   f"periods (< 0.1%)")


def test_criterion_09_directional_improvement():
    t0 = time.perf_counter()
    fb = feedback_synthesize(0.33, 0.5, 1.8)
    duration = 20e-3
    base = SimConfig(tank=DESK_TANK, device=DESK_DEVICE, feedback=None,
                     dt=DESK_DT, duration=duration, seed=0)
    prop = dataclasses.replace(base, feedback=fb)
    offsets = [100.0, 300.0, 6e3, 1e4, 1e5, 1e6]
    seeds = [101, 202, 303, 404]
    rep = compare_configs(base, prop, offsets, seeds)
    elapsed = time.perf_counter() - t0

    asserted = [j for j, off in enumerate(offsets)
                if off <= 1e5 and bool(np.all(rep.available[:, j]))]
    passing = 0
    for i in range(len(seeds)):
        if all(rep.delta_l[i, j] > 0.0 for j in asserted):
            passing += 1
    mean = rep.mean_delta()
    detail = ", ".join(f"{offsets[j]:g} Hz: {mean[j]:+.2f} dB"
                       for j in asserted)
    ok = len(asserted) >= 2 and passing >= 3 and elapsed < 600.0
    _report(9, ok, f"{passing}/4 seeds improve at every resolvable offset "
                   f"<= 100 kHz ({detail}); {elapsed:.0f} s")


def test_criterion_10_noise_psd_proportionality():
    from lcvco_isf.device import BiasPoint, noise_psd, transconductance
    dev = DESK_DEVICE
    rng = np.random.default_rng(10)
    bias = BiasPoint(vgs=rng.uniform(0.0, 3.0, 1000),
                     vds=rng.uniform(0.0, 3.0, 1000),
                     vbs=rng.uniform(-0.5, 0.3, 1000))
    gm = np.asarray(transconductance(dev, bias))
    fl = np.asarray(noise_psd(dev, bias, "flicker", f=1e3))
    th = np.asarray(noise_psd(dev, bias, "thermal"))
    on = gm > 0
    k_fl = fl[on] / gm[on] ** 2
    k_th = th[on] / gm[on]
    worst_fl = np.max(np.abs(k_fl / k_fl[0] - 1.0))
    worst_th = np.max(np.abs(k_th / k_th[0] - 1.0))
    ok = worst_fl < 1e-12 and worst_th < 1e-12 \
        and np.all(fl[~on] == 0.0) and np.all(th[~on] == 0.0)
    _report(10, ok, f"1000 biases: flicker/gm^2 spread {worst_fl:.2e}, "
                    f"thermal/gm spread {worst_th:.2e} (both < 1e-12)")
