"""Command-line front end.

    lcvco-isf <subcommand> --config <path> [--out <dir>] [options]

Subcommands: regions, isf, metrics, design, simulate, compare, sweep.
Data goes to files under --out; progress and errors go to stderr.

Exit codes: 0 success; 2 config error; 3 analysis/domain error;
4 simulation failure (no startup or divergence); 5 spectral-resolution
error; 1 unexpected failure.
"""
from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import design as design_mod
from . import isf as isf_mod
from . import metrics as metrics_mod
from . import regions as regions_mod
from . import sim as sim_mod
from .config import ToolConfig, parse_config, parse_quantity
from .device import noise_psd
from .errors import (ConfigError, LcvcoError, ResolutionError, SimulationError)

EXIT_OK = 0
EXIT_UNEXPECTED = 1
EXIT_CONFIG = 2
EXIT_ANALYSIS = 3
EXIT_SIMULATION = 4
EXIT_RESOLUTION = 5


def _write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(header)
        for row in rows:
            wr.writerow([f"{v:.17g}" if isinstance(v, float) else v for v in row])


def _write_json(path, payload):
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _angles_jsonable(ang):
    return {
        "phi1_rad": ang.phi1, "phi1_deg": math.degrees(ang.phi1),
        "phi1_raw_rad": ang.phi1_raw, "phi1_raw_deg": math.degrees(ang.phi1_raw),
        "phi2_rad": ang.phi2, "phi2_deg": math.degrees(ang.phi2),
        "phi_x_rad": ang.phi_x, "phi_x_deg": math.degrees(ang.phi_x),
        "phi1_arg": ang.phi1_arg, "phi2_arg": ang.phi2_arg,
        "phi_x_arg": ang.phi_x_arg,
        "phi1_valid": ang.phi1_valid, "phi2_valid": ang.phi2_valid,
        "phi_x_valid": ang.phi_x_valid,
        "phi_x_note": "triode-envelope closed forms were derived assuming "
                      "the output DC level, amplitude, and supply are "
                      "roughly equal; phi_x here is evaluated verbatim "
                      "without that substitution",
    }


def cmd_regions(cfg: ToolConfig, out: Path) -> dict:
    ang = regions_mod.boundary_angles(cfg.steady_state, cfg.device)
    s1 = regions_mod.schedule(ang, regions_mod.M1)
    s2 = regions_mod.schedule(ang, regions_mod.M2)
    regions_mod.write_schedule_csv(out / "schedule.csv", [s1, s2])
    _write_json(out / "angles.json", _angles_jsonable(ang))
    metrics = {
        "phi1_deg": math.degrees(ang.phi1),
        "phi1_raw_deg": math.degrees(ang.phi1_raw),
        "phi2_deg": math.degrees(ang.phi2),
        "phi_x_deg": math.degrees(ang.phi_x),
        "angles_valid": float(ang.all_valid),
    }
    for region in ("CUTOFF", "SATURATION", "TRIODE"):
        metrics[f"m1_{region.lower()}_fraction"] = s1.fraction(
            regions_mod.OperatingRegion[region])
    return metrics


def _build_effective(cfg: ToolConfig, grid: int):
    """Closed-form and first-principles effective ISFs for M1."""
    ang = regions_mod.boundary_angles(cfg.steady_state, cfg.device)
    sched = regions_mod.schedule(ang, regions_mod.M1)
    out = {"angles": ang, "schedule": sched, "analytic": {}, "sampled": {}}
    for kind in ("flicker", "thermal"):
        out["analytic"][kind] = isf_mod.effective_isf_closed_form(ang, kind, sched)
        nmf = isf_mod.nmf_first_principles(cfg.steady_state, cfg.device, kind,
                                           regions_mod.M1, n=grid)
        out["sampled"][kind] = isf_mod.effective_isf("-cos", nmf, sched, kind=kind)
        out["sampled"][f"nmf_{kind}"] = nmf
    return out


def cmd_isf(cfg: ToolConfig, out: Path, grid: int = 4096) -> dict:
    eff = _build_effective(cfg, grid)
    theta = np.arange(grid) * (2.0 * math.pi / grid)
    isf_mod.write_curve_csv(out / "isf_gamma_o1.csv",
                            isf_mod.SampledCurve(-np.cos(theta), "gamma_o1"))
    isf_mod.write_curve_csv(out / "isf_gamma_o2.csv",
                            isf_mod.SampledCurve(np.cos(theta), "gamma_o2"))
    metrics = {}
    for kind in ("flicker", "thermal"):
        nmf = eff["sampled"][f"nmf_{kind}"]
        isf_mod.write_curve_csv(out / f"nmf_{kind}_first_principles.csv", nmf)
        ana = eff["analytic"][kind]
        samp = eff["sampled"][kind]
        isf_mod.write_curve_csv(out / f"gamma_eff_{kind}_closed_form.csv",
                                ana.sampled(grid))
        isf_mod.write_curve_csv(out / f"gamma_eff_{kind}_first_principles.csv",
                                samp.samples)
        # closed-form envelope on non-cutoff intervals, zero elsewhere
        vals = np.zeros(grid)
        for start, end, region in eff["schedule"].intervals:
            mask = (theta >= start) & (theta < end)
            if region != regions_mod.OperatingRegion.CUTOFF and mask.any():
                vals[mask] = isf_mod.nmf_closed_form(eff["angles"], region, kind,
                                               theta[mask], ana.clips)
        isf_mod.write_curve_csv(out / f"nmf_{kind}_closed_form.csv",
                                isf_mod.SampledCurve(vals, f"nmf_{kind}_cf"))
        metrics[f"max_abs_gamma_eff_{kind}_closed_form"] = float(
            np.max(np.abs(ana.sampled(grid).values)))
        metrics[f"max_abs_gamma_eff_{kind}_first_principles"] = float(
            np.max(np.abs(samp.samples.values)))
        metrics[f"clip_count_{kind}"] = float(ana.clips.count)
    return metrics


def compute_metrics(cfg: ToolConfig, offsets_hz) -> metrics_mod.IsfMetrics:
    """The metrics pipeline: quadrature over the first-principles effective
    ISFs (authoritative), closed forms verbatim, and the two phase-noise
    formulas evaluated with the peak-over-period device PSDs."""
    eff = _build_effective(cfg, 4096)
    ang = eff["angles"]
    c0_quad = metrics_mod.c0(eff["sampled"]["flicker"])
    rms2_quad = metrics_mod.rms2(eff["sampled"]["thermal"])
    closed = metrics_mod.rms2_closed_form(ang)

    theta = np.arange(4096) * (2.0 * math.pi / 4096)
    bias = regions_mod.waveforms_at(cfg.steady_state, theta, regions_mod.M1)
    psd_fl = float(np.max(noise_psd(cfg.device, bias, "flicker",
                                    f=cfg.flicker_corner_hz)))
    psd_th = float(np.max(noise_psd(cfg.device, bias, "thermal")))
    omega_corner = 2.0 * math.pi * cfg.flicker_corner_hz
    a = cfg.steady_state.a

    points = []
    for off in offsets_hz:
        d_omega = 2.0 * math.pi * off
        points.append(metrics_mod.PhaseNoisePoint(
            offset=d_omega, source="flicker",
            value=metrics_mod.phase_noise_flicker(
                c0_quad, cfg.tank, psd_fl, omega_corner, d_omega, a)))
        points.append(metrics_mod.PhaseNoisePoint(
            offset=d_omega, source="thermal",
            value=metrics_mod.phase_noise_thermal(
                rms2_quad, cfg.tank, psd_th, d_omega, a)))
    return metrics_mod.IsfMetrics(
        c0_quadrature=c0_quad,
        c0_closed_form=metrics_mod.c0_closed_form(ang),
        rms2_quadrature=rms2_quad,
        rms2_closed_form=closed.value,
        rms2_closed_form_negative=closed.negative,
        phase_noise=points)


def cmd_metrics(cfg: ToolConfig, out: Path, offsets_hz) -> dict:
    report = compute_metrics(cfg, offsets_hz)
    _write_json(out / "metrics.json", report.to_jsonable())
    metrics = {
        "c0_quadrature": report.c0_quadrature,
        "c0_closed_form": report.c0_closed_form,
        "rms2_quadrature": report.rms2_quadrature,
        "rms2_closed_form": report.rms2_closed_form,
    }
    for p in report.phase_noise:
        metrics[f"{p.source}_dbc_{p.offset_hz:g}hz"] = p.value
    return metrics


def cmd_design(cfg: ToolConfig, out: Path, k: float | None) -> dict:
    sol = design_mod.body_bias_design(cfg.steady_state.a, cfg.steady_state.vdc0,
                                      cfg.device)
    vdd = cfg.sim.vdd if cfg.sim else cfg.steady_state.vdc0
    ratio = design_mod.design_ratio(cfg.device.vth0, vdd)
    k = k if k is not None else (cfg.sim_k if cfg.sim_k is not None else 0.33)
    fb = design_mod.feedback_synthesize(k, cfg.device.vth0, vdd)
    residual = design_mod.feedback_check(fb, cfg.device.vth0, vdd)
    payload = sol.to_jsonable()
    payload.update({
        "design_ratio": ratio,
        "k": k,
        "vb_synthesized": fb.vb,
        "feedback_residual": residual,
    })
    _write_json(out / "design.json", payload)

    rows = [
        ("phi1*", f"{math.degrees(sol.phi1_star):.5f} deg"),
        ("a1", f"{sol.a1:.6g} V"),
        ("vdc1", f"{sol.vdc1:.6g} V"),
        ("|vdc1/a1|", f"{sol.ratio:.6f}"),
        ("target |vth0/vdd - 1|", f"{ratio:.6f}"),
        ("attenuation k", f"{k:.4f}"),
        ("synthesized vb", f"{fb.vb:.6g} V"),
        ("feedback residual", f"{residual:.6g}"),
        ("degenerate (a == vdc0)", str(sol.degenerate)),
    ]
    width = max(len(r[0]) for r in rows)
    for name, val in rows:
        print(f"{name:<{width}}  {val}")
    return {"phi1_star_deg": math.degrees(sol.phi1_star), "a1": sol.a1,
            "vdc1": sol.vdc1, "ratio": sol.ratio, "design_ratio": ratio,
            "vb_synthesized": fb.vb, "feedback_residual": residual}


def _spectrum_rows(spec):
    for p in spec.points:
        yield (p.offset_hz,
               p.l_dbc_hz if p.available else "",
               "ok" if p.available else "unavailable")


def cmd_simulate(cfg: ToolConfig, out: Path, seed: int | None,
                 offsets_hz=None) -> dict:
    if cfg.sim is None:
        raise ConfigError("the simulate subcommand needs a [sim] section")
    sim_cfg = cfg.sim if seed is None else dataclasses.replace(cfg.sim, seed=seed)
    trace = sim_mod.simulate(sim_cfg)
    offsets_hz = offsets_hz or cfg.offsets

    stride = max(1, trace.t.size // 100000)
    _write_csv(out / "trace.csv", ["t", "v_o1", "v_o2", "v_b1", "v_b2"],
               zip(trace.t[::stride], trace.v_o1[::stride], trace.v_o2[::stride],
                   trace.v_b1[::stride], trace.v_b2[::stride]))

    spec = sim_mod.phase_noise_spectrum(trace, offsets_hz)
    _write_csv(out / "spectrum.csv", ["offset_hz", "l_dbc_hz", "flag"],
               _spectrum_rows(spec))

    amp = sim_mod.measure_amplitude(trace)
    freq = sim_mod.measure_frequency(trace)
    summary = {
        "seed": sim_cfg.seed,
        "amplitude": amp,
        "frequency_hz": freq,
        "dc_level": sim_mod.measure_dc_level(trace),
        "occupancy_m1": {"cutoff": trace.occupancy[0, 0],
                         "saturation": trace.occupancy[0, 1],
                         "triode": trace.occupancy[0, 2]},
        "occupancy_m2": {"cutoff": trace.occupancy[1, 0],
                         "saturation": trace.occupancy[1, 1],
                         "triode": trace.occupancy[1, 2]},
        "spectrum": spec.to_jsonable(),
    }
    _write_json(out / "simulate.json", summary)
    metrics = {"amplitude": amp, "frequency_hz": freq}
    for p in spec.points:
        if p.available:
            metrics[f"l_dbc_{p.offset_hz:g}hz"] = p.l_dbc_hz
    return metrics


def cmd_compare(cfg: ToolConfig, out: Path, seeds, offsets_hz=None) -> dict:
    if cfg.sim is None or cfg.sim.feedback is None:
        raise ConfigError(
            "the compare subcommand needs a [sim] section with feedback = on")
    offsets_hz = offsets_hz or cfg.offsets
    base = dataclasses.replace(cfg.sim, feedback=None)
    report = sim_mod.compare_configs(base, cfg.sim, offsets_hz, seeds)
    _write_json(out / "compare.json", report.to_jsonable())
    mean = report.mean_delta()
    spread = report.spread_delta()
    rows = []
    metrics = {}
    for j, off in enumerate(offsets_hz):
        n_avail = int(report.available[:, j].sum())
        m = float(mean[j]) if n_avail else ""
        s = float(spread[j]) if n_avail else ""
        rows.append((off, m, s, n_avail))
        if n_avail:
            metrics[f"mean_improvement_db_{off:g}hz"] = float(mean[j])
    _write_csv(out / "compare.csv",
               ["offset_hz", "mean_improvement_db", "spread_db", "runs"], rows)
    return metrics


# ---------------------------------------------------------------------------
# sweep

def _apply_param(cfg: ToolConfig, dotted: str, value: float) -> ToolConfig:
    section, _, key = dotted.partition(".")
    if not key:
        raise ConfigError(f"sweep parameter must be section.key, got {dotted!r}")
    try:
        if section == "device":
            new = dataclasses.replace(cfg.device, **{key: value})
            sim = dataclasses.replace(cfg.sim, device=new) if cfg.sim else None
            return dataclasses.replace(cfg, device=new, sim=sim)
        if section == "steady_state":
            new = dataclasses.replace(cfg.steady_state, **{key: value})
            return dataclasses.replace(cfg, steady_state=new)
        if section == "tank":
            new = dataclasses.replace(cfg.tank, **{key: value})
            sim = dataclasses.replace(cfg.sim, tank=new) if cfg.sim else None
            return dataclasses.replace(cfg, tank=new, sim=sim)
        if section == "sim":
            if cfg.sim is None:
                raise ConfigError("cannot sweep [sim] keys without a [sim] section")
            if key == "seed":
                value = int(round(value))
            sim = dataclasses.replace(cfg.sim, **{key: value})
            return dataclasses.replace(cfg, sim=sim)
    except TypeError as exc:
        raise ConfigError(f"unknown sweep key {dotted!r}") from exc
    raise ConfigError(f"unknown sweep section {section!r}")


def _parse_sweep_spec(spec: str):
    name, _, grid = spec.partition("=")
    if not grid:
        raise ConfigError(f"sweep spec must be section.key=lo:hi:n[:log], "
                          f"got {spec!r}")
    parts = grid.split(":")
    logspace = False
    if len(parts) == 4 and parts[3] == "log":
        logspace = True
        parts = parts[:3]
    if len(parts) != 3:
        raise ConfigError(f"sweep grid must be lo:hi:n[:log], got {grid!r}")
    lo, hi = parse_quantity(parts[0]), parse_quantity(parts[1])
    count = int(parts[2])
    if count < 1:
        raise ConfigError("sweep point count must be >= 1")
    if logspace:
        values = np.geomspace(lo, hi, count)
    else:
        values = np.linspace(lo, hi, count)
    return name.strip(), [float(v) for v in values]


def cmd_sweep(cfg: ToolConfig, out: Path, command: str, specs, seeds,
              offsets) -> dict:
    if command not in ("regions", "isf", "metrics", "design", "simulate",
                       "compare"):
        raise ConfigError(f"cannot sweep subcommand {command!r}")
    parsed = [_parse_sweep_spec(s) for s in specs]
    if not 1 <= len(parsed) <= 2:
        raise ConfigError("sweep takes one or two --param specs")

    grids = [[(name, v) for v in values] for name, values in parsed]
    points = [(a, b) for a in grids[0] for b in (grids[1] if len(grids) > 1
                                                 else [None])]
    rows = []
    scratch = out / "sweep_points"
    scratch.mkdir(parents=True, exist_ok=True)
    for a, b in points:
        point_cfg = _apply_param(cfg, a[0], a[1])
        if b is not None:
            point_cfg = _apply_param(point_cfg, b[0], b[1])
        try:
            metrics = _run_command(command, point_cfg, scratch, seeds, offsets,
                                   None, None)
            status = "ok"
        except LcvcoError as exc:
            metrics = {"error": f"{type(exc).__name__}"}
            status = "error"
        for key, val in metrics.items():
            rows.append((a[0], a[1], b[0] if b else "", b[1] if b else "",
                         key, val if isinstance(val, (int, float)) else str(val),
                         status))
    _write_csv(out / "sweep.csv",
               ["param1", "value1", "param2", "value2", "metric", "value",
                "status"], rows)
    return {"points": float(len(points))}


def _run_command(command, cfg, out, seeds, offsets, k, grid):
    if command == "regions":
        return cmd_regions(cfg, out)
    if command == "isf":
        return cmd_isf(cfg, out, grid or 4096)
    if command == "metrics":
        return cmd_metrics(cfg, out, offsets or cfg.offsets)
    if command == "design":
        return cmd_design(cfg, out, k)
    if command == "simulate":
        return cmd_simulate(cfg, out, seeds[0] if seeds else None,
                            offsets or None)
    if command == "compare":
        return cmd_compare(cfg, out, seeds or [1, 2, 3, 4], offsets or None)
    raise ConfigError(f"unknown subcommand {command!r}")


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="lcvco-isf",
        description="Phase-noise analysis and body-bias design for "
                    "NMOS-only cross-coupled LC oscillators")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("regions", "isf", "metrics", "design", "simulate", "compare",
                 "sweep"):
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="config file path")
        p.add_argument("--out", default="out", help="output directory")
        p.add_argument("--offsets",
                       help="comma-separated offset list overriding [offsets]")
        p.add_argument("--seed", help="seed (simulate) or comma-separated "
                                      "seed list (compare)")
        if name == "design":
            p.add_argument("--k", type=float, default=None,
                           help="attenuation factor for feedback synthesis")
        if name == "isf":
            p.add_argument("--grid", type=int, default=4096)
        if name == "sweep":
            p.add_argument("--command", dest="sweep_command", required=True,
                           help="subcommand to evaluate per grid point")
            p.add_argument("--param", action="append", required=True,
                           help="section.key=lo:hi:n[:log] (repeat for 2-D)")
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        cfg = parse_config(args.config)
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        cfg.output_dir = out
        offsets = None
        if args.offsets:
            offsets = sorted(parse_quantity(t)
                             for t in args.offsets.split(",") if t.strip())
        seeds = None
        if args.seed:
            seeds = [int(t) for t in args.seed.split(",") if t.strip()]
        if args.command == "sweep":
            cmd_sweep(cfg, out, args.sweep_command, args.param, seeds, offsets)
        else:
            _run_command(args.command, cfg, out, seeds, offsets,
                         getattr(args, "k", None), getattr(args, "grid", None))
        return EXIT_OK
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ResolutionError as exc:
        print(f"resolution error: {exc}", file=sys.stderr)
        return EXIT_RESOLUTION
    except SimulationError as exc:
        print(f"simulation error: {exc}", file=sys.stderr)
        return EXIT_SIMULATION
    except LcvcoError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ANALYSIS
    except Exception as exc:  # pragma: no cover - last resort
        print(f"unexpected error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_UNEXPECTED


if __name__ == "__main__":
    sys.exit(main())
