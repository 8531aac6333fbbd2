"""Stochastic time-domain simulation of the cross-coupled oscillator and
phase-noise extraction from its traces.

The deterministic core integrates the two tank nodes (parallel L, C and
loss to the supply rail) with the cross-coupled square-law drain currents
by fixed-step RK4; device noise enters as per-step additive voltage
increments (thermal: white Gaussian scaled by the instantaneous sqrt(gm);
flicker: a pre-generated 1/f stream scaled by the instantaneous gm), so a
run is bitwise reproducible from its seed.  The optional body feedback
applies an attenuated, high-pass-filtered copy of each output to its own
transistor's bulk on top of a fixed negative bias.

Phase noise is estimated by demodulating the differential output against
the fitted carrier and Welch-averaging the phase-fluctuation PSD.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.signal import hilbert, welch

from .design import FeedbackRealization
from .device import BOLTZMANN, DeviceParams
from .errors import (InstabilityError, NoOscillationError, ResolutionError,
                     SimulationError)
from .flicker import _SPAN_HIGH, FlickerSynth
from .metrics import TankParams

try:
    from numba import njit
except ImportError:  # pragma: no cover - numba is a hard dep but stay runnable
    def njit(*args, **kwargs):
        if args and callable(args[0]):
            return args[0]
        return lambda f: f

_STATUS_OK = 0
_STATUS_DIVERGED = 1
_CHUNK_STEPS = 1 << 22


@dataclass(frozen=True)
class SimConfig:
    """Everything one oscillator run needs.

    feedback None means the conventional oscillator (bodies grounded).
    hp_corner_hz of None picks f0/100, low enough that the fundamental
    passes the body coupling essentially unattenuated.  store_decim of
    None keeps roughly 12 stored samples per carrier period (boxcar
    averaged), plenty above the carrier Nyquist rate.
    """

    tank: TankParams
    device: DeviceParams
    feedback: FeedbackRealization | None
    dt: float
    duration: float
    seed: int
    thermal: bool = True
    flicker: bool = True
    flicker_stages: int = 12
    flicker_corner_hz: float | None = None
    hp_corner_hz: float | None = None
    vdd: float = 1.8
    init_kick: float = 1e-3
    store_decim: int | None = None

    def __post_init__(self):
        f0 = self.tank.f0
        if not self.dt > 0 or self.dt >= 1.0 / (50.0 * f0):
            raise SimulationError(
                f"dt must satisfy 0 < dt < 1/(50*f0) = {1.0 / (50.0 * f0):.3e} s")
        if self.duration < 2000.0 / f0:
            raise SimulationError(
                f"duration must cover >= 2000 periods ({2000.0 / f0:.3e} s)")

    @property
    def f0(self) -> float:
        return self.tank.f0

    @property
    def n_steps(self) -> int:
        return int(round(self.duration / self.dt))

    @property
    def decim(self) -> int:
        if self.store_decim is not None:
            return max(1, int(self.store_decim))
        return max(1, int(round(1.0 / (12.0 * self.f0 * self.dt))))

    @property
    def effective_flicker_corner_hz(self) -> float:
        return self.flicker_corner_hz if self.flicker_corner_hz else self.f0 / 10.0

    @property
    def effective_hp_corner_hz(self) -> float:
        return self.hp_corner_hz if self.hp_corner_hz else self.f0 / 100.0


@dataclass
class SimTrace:
    """Decimated node/body voltages plus run diagnostics."""

    config: SimConfig
    fs: float                 # stored sample rate (Hz)
    t: np.ndarray
    v_o1: np.ndarray
    v_o2: np.ndarray
    v_b1: np.ndarray
    v_b2: np.ndarray
    occupancy: np.ndarray     # (2 transistors, 3 regions), fractions
    initial_state: tuple
    final_state: tuple
    n_steps: int


@njit(cache=True)
def _integrate(n_steps, step0, dt, vdd, l_tank, c_tank, g_loss,
               beta, n_body, vth0,
               fb_on, k_att, vb, w_hp,
               thermal_on, th_scale, flicker_on, fl_scale, fl_decim,
               eps1, eps2, x1, x2,
               v1, v2, il1, il2, lp1, lp2,
               decim, out_v1, out_v2, out_b1, out_b2, occ, v_abort):
    acc1 = 0.0
    acc2 = 0.0
    accb1 = 0.0
    accb2 = 0.0
    for i in range(n_steps):
        g = step0 + i  # global step index
        # bias-dependent quantities at the step start
        if fb_on:
            vb1 = -vb + k_att * (v1 - lp1)
            vb2 = -vb + k_att * (v2 - lp2)
        else:
            vb1 = 0.0
            vb2 = 0.0

        # transistor 1: gate at node 2, drain at node 1
        vov1 = v2 - (vth0 - n_body * vb1)
        if vov1 <= 0.0:
            gm1 = 0.0
            code1 = 0
        elif v1 >= vov1:
            gm1 = beta * (n_body + 1.0) * vov1
            code1 = 1
        else:
            gm1 = beta * (vov1 + n_body * v1)
            code1 = 2
        vov2 = v1 - (vth0 - n_body * vb2)
        if vov2 <= 0.0:
            gm2 = 0.0
            code2 = 0
        elif v2 >= vov2:
            gm2 = beta * (n_body + 1.0) * vov2
            code2 = 1
        else:
            gm2 = beta * (vov2 + n_body * v2)
            code2 = 2
        occ[0, code1] += 1
        occ[1, code2] += 1

        # RK4 on (v1, v2, il1, il2, lp1, lp2)
        a1 = v1
        a2 = v2
        a3 = il1
        a4 = il2
        a5 = lp1
        a6 = lp2
        k1_1 = 0.0
        k1_2 = 0.0
        k1_3 = 0.0
        k1_4 = 0.0
        k1_5 = 0.0
        k1_6 = 0.0
        s1 = v1
        s2 = v2
        s3 = il1
        s4 = il2
        s5 = lp1
        s6 = lp2
        for stage in range(4):
            if fb_on:
                b1 = -vb + k_att * (s1 - s5)
                b2 = -vb + k_att * (s2 - s6)
            else:
                b1 = 0.0
                b2 = 0.0
            ov1 = s2 - (vth0 - n_body * b1)
            if ov1 <= 0.0:
                id1 = 0.0
            elif s1 >= ov1:
                id1 = 0.5 * beta * ov1 * ov1
            else:
                id1 = beta * (ov1 - 0.5 * s1) * s1
            ov2 = s1 - (vth0 - n_body * b2)
            if ov2 <= 0.0:
                id2 = 0.0
            elif s2 >= ov2:
                id2 = 0.5 * beta * ov2 * ov2
            else:
                id2 = beta * (ov2 - 0.5 * s2) * s2
            d1 = (s3 + (vdd - s1) * g_loss - id1) / c_tank
            d2 = (s4 + (vdd - s2) * g_loss - id2) / c_tank
            d3 = (vdd - s1) / l_tank
            d4 = (vdd - s2) / l_tank
            d5 = w_hp * (s1 - s5)
            d6 = w_hp * (s2 - s6)
            if stage == 0:
                k1_1 = d1
                k1_2 = d2
                k1_3 = d3
                k1_4 = d4
                k1_5 = d5
                k1_6 = d6
                s1 = a1 + 0.5 * dt * d1
                s2 = a2 + 0.5 * dt * d2
                s3 = a3 + 0.5 * dt * d3
                s4 = a4 + 0.5 * dt * d4
                s5 = a5 + 0.5 * dt * d5
                s6 = a6 + 0.5 * dt * d6
            elif stage == 1:
                k1_1 += 2.0 * d1
                k1_2 += 2.0 * d2
                k1_3 += 2.0 * d3
                k1_4 += 2.0 * d4
                k1_5 += 2.0 * d5
                k1_6 += 2.0 * d6
                s1 = a1 + 0.5 * dt * d1
                s2 = a2 + 0.5 * dt * d2
                s3 = a3 + 0.5 * dt * d3
                s4 = a4 + 0.5 * dt * d4
                s5 = a5 + 0.5 * dt * d5
                s6 = a6 + 0.5 * dt * d6
            elif stage == 2:
                k1_1 += 2.0 * d1
                k1_2 += 2.0 * d2
                k1_3 += 2.0 * d3
                k1_4 += 2.0 * d4
                k1_5 += 2.0 * d5
                k1_6 += 2.0 * d6
                s1 = a1 + dt * d1
                s2 = a2 + dt * d2
                s3 = a3 + dt * d3
                s4 = a4 + dt * d4
                s5 = a5 + dt * d5
                s6 = a6 + dt * d6
            else:
                k1_1 += d1
                k1_2 += d2
                k1_3 += d3
                k1_4 += d4
                k1_5 += d5
                k1_6 += d6
        v1 = a1 + dt / 6.0 * k1_1
        v2 = a2 + dt / 6.0 * k1_2
        il1 = a3 + dt / 6.0 * k1_3
        il2 = a4 + dt / 6.0 * k1_4
        lp1 = a5 + dt / 6.0 * k1_5
        lp2 = a6 + dt / 6.0 * k1_6

        # additive noise increments (Euler-Maruyama, start-of-step bias)
        if thermal_on:
            v1 += th_scale * math.sqrt(gm1) * eps1[i]
            v2 += th_scale * math.sqrt(gm2) * eps2[i]
        if flicker_on:
            v1 += fl_scale * gm1 * x1[g // fl_decim]
            v2 += fl_scale * gm2 * x2[g // fl_decim]

        if abs(v1) > v_abort or abs(v2) > v_abort:
            return _STATUS_DIVERGED, g, v1, v2, il1, il2, lp1, lp2

        acc1 += v1
        acc2 += v2
        accb1 += vb1
        accb2 += vb2
        if (g + 1) % decim == 0:
            j = (g + 1) // decim - 1
            if j < out_v1.shape[0]:
                out_v1[j] = acc1 / decim
                out_v2[j] = acc2 / decim
                out_b1[j] = accb1 / decim
                out_b2[j] = accb2 / decim
            acc1 = 0.0
            acc2 = 0.0
            accb1 = 0.0
            accb2 = 0.0
    return _STATUS_OK, step0 + n_steps, v1, v2, il1, il2, lp1, lp2


def simulate(config: SimConfig) -> SimTrace:
    """Integrate one oscillator run; deterministic for a given config."""
    dev = config.device
    tank = config.tank
    n = config.n_steps
    dt = config.dt
    vdd = config.vdd
    rng = np.random.default_rng(config.seed)

    # pre-drawn noise streams keep the inner loop branch-free and the run
    # reproducible regardless of the accelerated/fallback code path; the
    # 1/f stream has no content above ~10x its corner, so it is generated
    # once at a reduced rate and held between samples
    if config.flicker:
        corner = config.effective_flicker_corner_hz
        fl_decim = max(1, int(1.0 / (4.0 * _SPAN_HIGH * corner * dt)))
        synth = FlickerSynth(corner_hz=corner, dt=dt * fl_decim,
                             num_stages=config.flicker_stages)
        n_x = n // fl_decim + 1
        x1 = synth.generate(n_x, rng)
        x2 = synth.generate(n_x, rng)
    else:
        fl_decim = 1
        x1 = np.zeros(1)
        x2 = np.zeros(1)

    th_scale = math.sqrt(2.0 * BOLTZMANN * dev.temperature * dev.gamma_ch * dt) / tank.c
    fl_scale = math.sqrt(dev.kf / (dev.w * dev.l)) * dt / tank.c

    fb = config.feedback
    fb_on = fb is not None
    k_att = fb.k if fb_on else 0.0
    vb = fb.vb if fb_on else 0.0
    w_hp = 2.0 * math.pi * config.effective_hp_corner_hz if fb_on else 0.0

    # start at the symmetric point with a small differential kick; the
    # inductor currents carry the initial drain currents so dv/dt = 0
    v1 = vdd + config.init_kick
    v2 = vdd - config.init_kick
    lp1, lp2 = v1, v2
    vb0 = -vb if fb_on else 0.0
    n_body = dev.n
    beta = dev.beta

    def dc_current(vgs, vds, vbs):
        vov = vgs - (dev.vth0 - n_body * vbs)
        if vov <= 0:
            return 0.0
        if vds >= vov:
            return 0.5 * beta * vov * vov
        return beta * (vov - 0.5 * vds) * vds

    il1 = dc_current(v2, v1, vb0)
    il2 = dc_current(v1, v2, vb0)
    initial_state = (v1, v2, il1, il2, lp1, lp2)

    decim = config.decim
    n_store = n // decim
    out_v1 = np.empty(n_store)
    out_v2 = np.empty(n_store)
    out_b1 = np.empty(n_store)
    out_b2 = np.empty(n_store)
    occ = np.zeros((2, 3), dtype=np.int64)

    # integrate in chunks so the per-step Gaussian draws never hold more
    # than one chunk of memory; chunk edges align with the decimator
    chunk = max(decim, (_CHUNK_STEPS // decim) * decim)
    g_loss = 0.0 if math.isinf(tank.rp) else 1.0 / tank.rp
    empty = np.zeros(1)
    state = (v1, v2, il1, il2, lp1, lp2)
    step0 = 0
    while step0 < n:
        m = min(chunk, n - step0)
        if config.thermal:
            eps1 = rng.standard_normal(m)
            eps2 = rng.standard_normal(m)
        else:
            eps1 = eps2 = empty
        status, step, *state = _integrate(
            m, step0, dt, vdd, tank.l, tank.c, g_loss,
            beta, n_body, dev.vth0,
            fb_on, k_att, vb, w_hp,
            config.thermal, th_scale, config.flicker, fl_scale, fl_decim,
            eps1, eps2, x1, x2,
            *state,
            decim, out_v1, out_v2, out_b1, out_b2, occ, 10.0 * vdd)
        if status == _STATUS_DIVERGED:
            raise InstabilityError(
                f"node voltage exceeded {10.0 * vdd:.3g} V at step {step}",
                step=step)
        step0 += m
    final_state = state

    trace = SimTrace(
        config=config,
        fs=1.0 / (dt * decim),
        t=np.arange(n_store) * (dt * decim),
        v_o1=out_v1, v_o2=out_v2, v_b1=out_b1, v_b2=out_b2,
        occupancy=occ / max(1, n),
        initial_state=tuple(initial_state),
        final_state=tuple(final_state),
        n_steps=n,
    )

    # startup check: amplitude of the differential output in the window
    # just before 25% of the run
    i0, i1 = int(0.20 * n_store), max(int(0.25 * n_store), int(0.20 * n_store) + 8)
    seg = trace.v_o1[i0:i1]
    if seg.size and 0.5 * (seg.max() - seg.min()) < 0.01 * vdd:
        raise NoOscillationError(
            "oscillation failed to start (amplitude below 1% of the supply "
            "after a quarter of the run)")
    return trace


# ---------------------------------------------------------------------------
# spectral estimation

@dataclass(frozen=True)
class SpectrumPoint:
    offset_hz: float
    l_dbc_hz: float        # nan when unavailable
    available: bool


@dataclass
class PhaseNoiseSpectrum:
    points: list
    window: str
    n_segments: int
    rbw_hz: float
    carrier_hz: float
    min_offset_hz: float
    max_offset_hz: float

    def value_at(self, offset_hz: float):
        for p in self.points:
            if p.offset_hz == offset_hz:
                return p
        raise KeyError(offset_hz)

    def to_jsonable(self) -> dict:
        return {
            "window": self.window,
            "n_segments": self.n_segments,
            "rbw_hz": self.rbw_hz,
            "carrier_hz": self.carrier_hz,
            "min_offset_hz": self.min_offset_hz,
            "max_offset_hz": self.max_offset_hz,
            "points": [
                {"offset_hz": p.offset_hz,
                 "l_dbc_hz": p.l_dbc_hz if p.available else "unavailable",
                 "available": p.available}
                for p in self.points],
        }


def fit_carrier_hz(x: np.ndarray, fs: float) -> float:
    """Carrier frequency from the windowed FFT peak, refined by parabolic
    interpolation of the log magnitude."""
    x = x - np.mean(x)
    w = np.hanning(x.size)
    spec = np.abs(np.fft.rfft(x * w))
    k = int(np.argmax(spec[1:])) + 1
    if 1 <= k < spec.size - 1:
        la, lb, lc = np.log(spec[k - 1] + 1e-300), np.log(spec[k] + 1e-300), \
            np.log(spec[k + 1] + 1e-300)
        denom = la - 2.0 * lb + lc
        delta = 0.5 * (la - lc) / denom if denom != 0 else 0.0
        delta = float(np.clip(delta, -0.5, 0.5))
    else:
        delta = 0.0
    return (k + delta) * fs / x.size


def instantaneous_phase(x: np.ndarray, fs: float, carrier_hz: float) -> np.ndarray:
    """Phase fluctuation of x around the given carrier, linearly detrended
    (removes residual frequency error)."""
    analytic = hilbert(x - np.mean(x))
    t = np.arange(x.size) / fs
    phase = np.unwrap(np.angle(analytic)) - 2.0 * math.pi * carrier_hz * t
    coeff = np.polyfit(t, phase, 1)
    return phase - np.polyval(coeff, t)


def estimate_psd(x: np.ndarray, fs: float, nperseg: int):
    """One-sided Welch PSD with a hann window and 50% overlap."""
    f, pxx = welch(x, fs=fs, window="hann", nperseg=nperseg,
                   noverlap=nperseg // 2, detrend="linear")
    return f, pxx


def phase_noise_spectrum(trace: SimTrace, offsets_hz) -> PhaseNoiseSpectrum:
    """Single-sideband phase noise at the requested offsets (Hz).

    The first 10% of the trace is discarded; offsets below twice the
    resolution bandwidth or above a quarter of the stored rate are
    flagged unavailable.  Raises ResolutionError when the trace cannot
    support at least 8 averaged segments of useful length.
    """
    offsets_hz = list(offsets_hz)
    if not offsets_hz:
        raise ValueError("no offsets requested")
    if sorted(offsets_hz) != offsets_hz:
        raise ValueError("offsets must be strictly increasing")

    start = int(0.1 * trace.v_o1.size)
    vd = (trace.v_o1 - trace.v_o2)[start:]
    fs = trace.fs
    n = vd.size

    # longest segment that still yields >= 8 averaged 50%-overlap segments
    cap = 1
    while cap * 2 <= max(1, 2 * n // 9):
        cap *= 2
    if cap < 256:
        min_hz = 2.0 * fs / 256 * (9 / 2)
        raise ResolutionError(
            f"trace too short for spectral estimation; minimum resolvable "
            f"offset would need > {min_hz:.3g} Hz", min_offset_hz=min_hz)
    # use just enough resolution for the smallest offset the trace can
    # resolve at all, maximizing the segment count (estimator variance)
    nperseg = cap
    for off in offsets_hz:
        need = 1
        while need < 2.0 * fs / off:
            need *= 2
        if need <= cap:
            nperseg = need
            break

    carrier = fit_carrier_hz(vd, fs)
    phase = instantaneous_phase(vd, fs, carrier)
    f, s_phi = estimate_psd(phase, fs, nperseg)
    n_segments = 2 * n // nperseg - 1

    rbw = fs / nperseg
    lo = 2.0 * rbw
    hi = fs / 4.0
    logf = np.log10(f[1:])
    logs = np.log10(np.maximum(s_phi[1:], 1e-300))

    points = []
    for off in offsets_hz:
        if lo <= off <= hi:
            s = 10.0 ** float(np.interp(math.log10(off), logf, logs))
            points.append(SpectrumPoint(offset_hz=off,
                                        l_dbc_hz=10.0 * math.log10(s / 2.0),
                                        available=True))
        else:
            points.append(SpectrumPoint(offset_hz=off, l_dbc_hz=float("nan"),
                                        available=False))
    return PhaseNoiseSpectrum(points=points, window="hann",
                              n_segments=n_segments, rbw_hz=rbw,
                              carrier_hz=carrier,
                              min_offset_hz=lo, max_offset_hz=hi)


def measure_amplitude(trace: SimTrace) -> float:
    """Single-ended steady-state amplitude (half peak-to-peak of one node
    over the last 60% of the run)."""
    seg = trace.v_o1[int(0.4 * trace.v_o1.size):]
    return 0.5 * float(seg.max() - seg.min())


def measure_frequency(trace: SimTrace) -> float:
    """Oscillation frequency of the differential output (Hz)."""
    start = int(0.1 * trace.v_o1.size)
    return fit_carrier_hz((trace.v_o1 - trace.v_o2)[start:], trace.fs)


def measure_dc_level(trace: SimTrace) -> float:
    """Mean single-ended output level over the last 60% of the run."""
    seg = trace.v_o1[int(0.4 * trace.v_o1.size):]
    return float(seg.mean())


# ---------------------------------------------------------------------------
# conventional-vs-proposed comparison

@dataclass
class ComparisonReport:
    offsets_hz: list
    seeds: list
    base_l: np.ndarray        # (n_seeds, n_offsets), nan when unavailable
    proposed_l: np.ndarray
    available: np.ndarray     # bool mask, offset resolvable in both runs
    base_amplitude: list
    proposed_amplitude: list
    base_freq: list
    proposed_freq: list

    @property
    def delta_l(self) -> np.ndarray:
        """Improvement in dB (positive = proposed is quieter)."""
        return self.base_l - self.proposed_l

    def mean_delta(self) -> np.ndarray:
        cnt = self.available.sum(axis=0)
        total = np.where(self.available, self.delta_l, 0.0).sum(axis=0)
        return np.where(cnt > 0, total / np.maximum(cnt, 1), np.nan)

    def spread_delta(self) -> np.ndarray:
        cnt = self.available.sum(axis=0)
        mean = self.mean_delta()
        sq = np.where(self.available,
                      (self.delta_l - np.where(np.isnan(mean), 0.0, mean)) ** 2,
                      0.0).sum(axis=0)
        return np.where(cnt > 0, np.sqrt(sq / np.maximum(cnt, 1)), np.nan)

    def to_jsonable(self) -> dict:
        def enc(v):
            return None if (isinstance(v, float) and math.isnan(v)) else v
        mean = self.mean_delta()
        spread = self.spread_delta()
        rows = []
        for j, off in enumerate(self.offsets_hz):
            rows.append({
                "offset_hz": off,
                "available_runs": int(np.sum(self.available[:, j])),
                "mean_improvement_db": enc(float(mean[j])),
                "spread_improvement_db": enc(float(spread[j])),
                "per_seed_improvement_db": [
                    enc(float(self.delta_l[i, j])) if self.available[i, j] else None
                    for i in range(len(self.seeds))],
            })
        return {
            "seeds": list(self.seeds),
            "base_amplitude": self.base_amplitude,
            "proposed_amplitude": self.proposed_amplitude,
            "base_freq_hz": self.base_freq,
            "proposed_freq_hz": self.proposed_freq,
            "offsets": rows,
        }


def compare_configs(base: SimConfig, proposed: SimConfig, offsets_hz,
                    seeds) -> ComparisonReport:
    """Run both configurations for every seed and report the per-offset
    phase-noise improvement.  The configs must differ only in feedback."""
    if replace(base, feedback=None, seed=0) != replace(proposed, feedback=None, seed=0):
        raise ValueError("configs must differ only in feedback (and seed)")
    offsets_hz = list(offsets_hz)
    seeds = list(seeds)
    nb = np.full((len(seeds), len(offsets_hz)), np.nan)
    pr = np.full_like(nb, np.nan)
    avail = np.zeros(nb.shape, dtype=bool)
    base_amp, prop_amp, base_f, prop_f = [], [], [], []
    for i, seed in enumerate(seeds):
        tb = simulate(replace(base, seed=seed))
        tp = simulate(replace(proposed, seed=seed))
        sb = phase_noise_spectrum(tb, offsets_hz)
        sp = phase_noise_spectrum(tp, offsets_hz)
        base_amp.append(measure_amplitude(tb))
        prop_amp.append(measure_amplitude(tp))
        base_f.append(measure_frequency(tb))
        prop_f.append(measure_frequency(tp))
        for j in range(len(offsets_hz)):
            pb, pp = sb.points[j], sp.points[j]
            if pb.available and pp.available:
                nb[i, j] = pb.l_dbc_hz
                pr[i, j] = pp.l_dbc_hz
                avail[i, j] = True
    return ComparisonReport(offsets_hz=offsets_hz, seeds=seeds,
                            base_l=nb, proposed_l=pr, available=avail,
                            base_amplitude=base_amp, proposed_amplitude=prop_amp,
                            base_freq=base_f, proposed_freq=prop_f)
