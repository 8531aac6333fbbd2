"""Impulse-sensitivity and noise-modulating functions, and their product
(the effective ISF) on a region schedule.

Two constructions are provided side by side:

* ``closed_form``: the trigonometric envelopes
  sin((phi - theta)/2) * cos((phi + theta)/2) (= (sin(phi) - sin(theta))/2)
  on saturation/triode intervals, with the thermal variant their square
  root (negative arguments clipped to zero and counted);
* ``first_principles``: the device noise PSD sampled along the steady-state
  waveforms and max-normalized, so the envelope is nonnegative, <= 1, and
  exactly zero in cutoff.

The first-principles route is the authoritative one; the closed forms are
kept verbatim for comparison and are never asserted against it (their
normalization provably differs; see the metrics discrepancy report).
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .device import DeviceParams, OperatingRegion, noise_psd
from .errors import DegenerateWaveformError, GridMismatchError
from .regions import RegionSchedule, SteadyStateConfig, waveforms_at

# reference frequency for sampling the flicker PSD; cancels in the
# max-normalization, chosen only to keep magnitudes sane
FLICKER_REF_HZ = 1e3

CLOSED_FORM = "closed_form"
FIRST_PRINCIPLES = "first_principles"


class ClipCounter:
    """Counts negative square-root arguments clipped to zero."""

    def __init__(self):
        self.count = 0

    def add(self, k: int):
        self.count += int(k)


@dataclass(frozen=True)
class SampledCurve:
    """Values on the uniform angle grid theta_k = 2*pi*k/n, k = 0..n-1."""

    values: np.ndarray
    label: str = ""

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "values", vals)
        n = vals.size
        if n < 256 or (n & (n - 1)) != 0:
            raise ValueError("sample count must be a power of two >= 256")
        if not np.all(np.isfinite(vals)):
            raise ValueError("curve values must be finite")

    @property
    def n(self) -> int:
        return self.values.size

    @property
    def theta(self) -> np.ndarray:
        return np.arange(self.n) * (2.0 * math.pi / self.n)

    def interp(self, theta):
        """Periodic linear interpolation at arbitrary angles."""
        th = np.asarray(theta, dtype=float) % (2.0 * math.pi)
        x = th / (2.0 * math.pi) * self.n
        i0 = np.floor(x).astype(int) % self.n
        i1 = (i0 + 1) % self.n
        frac = x - np.floor(x)
        return self.values[i0] * (1.0 - frac) + self.values[i1] * frac


def isf_numeric(output_waveform: SampledCurve) -> SampledCurve:
    """Impulse sensitivity of a periodic output waveform.

    The waveform is first normalized to unit amplitude (zero mean, half
    peak-to-peak of one), then gamma = v' / (v'^2 + v''^2) is evaluated
    with spectral differentiation, so a pure sinusoid returns exactly a
    unit cosine at the matching phase.
    """
    v = output_waveform.values
    vc = v - np.mean(v)
    amp = 0.5 * (np.max(vc) - np.min(vc))
    if amp <= 0.0:
        raise DegenerateWaveformError("constant waveform has no sensitivity")
    vn = vc / amp

    n = vn.size
    k = np.fft.rfftfreq(n, d=1.0 / n)  # harmonic index
    spec = np.fft.rfft(vn)
    d1 = np.fft.irfft(spec * (1j * k), n=n)
    d2 = np.fft.irfft(spec * -(k ** 2), n=n)
    denom = d1 ** 2 + d2 ** 2
    if np.min(denom) < 1e-12:
        raise DegenerateWaveformError(
            "waveform derivative norm vanishes; sensitivity undefined")
    return SampledCurve(values=d1 / denom,
                        label=f"isf({output_waveform.label})")


def nmf_closed_form(angles, region: OperatingRegion, kind: str, theta,
              clip_counter: ClipCounter | None = None):
    """Closed-form noise envelope at angle(s) ``theta``.

    Saturation uses phi1, triode uses phi_x; the thermal variant is the
    square root of the flicker one with negative arguments clipped to 0
    (counted on ``clip_counter`` when given).  Cutoff has no envelope;
    callers consult the schedule.
    """
    if region == OperatingRegion.CUTOFF:
        raise ValueError("closed-form envelope undefined in cutoff; it is 0")
    phi = angles.phi1 if region == OperatingRegion.SATURATION else angles.phi_x
    th = np.asarray(theta, dtype=float)
    val = np.sin(0.5 * (phi - th)) * np.cos(0.5 * (phi + th))
    if kind == "flicker":
        out = val
    elif kind == "thermal":
        neg = val < 0.0
        if clip_counter is not None:
            clip_counter.add(np.count_nonzero(neg))
        out = np.sqrt(np.where(neg, 0.0, val))
    else:
        raise ValueError(f"unknown noise kind {kind!r}")
    return out if out.ndim else float(out)


def nmf_first_principles(config: SteadyStateConfig, params: DeviceParams,
                         kind: str, transistor: str, n: int = 4096) -> SampledCurve:
    """Max-normalized noise envelope sampled from the device PSD.

    Flicker: psd/max(psd); thermal: sqrt(psd/max(psd)).  The flicker PSD
    is sampled at a fixed reference frequency, which cancels in the
    normalization.  Values lie in [0, 1] and are exactly 0 in cutoff.
    """
    theta = np.arange(n) * (2.0 * math.pi / n)
    bias = waveforms_at(config, theta, transistor)
    f = FLICKER_REF_HZ if kind == "flicker" else None
    psd = np.asarray(noise_psd(params, bias, kind, f=f))
    peak = np.max(psd)
    if peak <= 0.0:
        raise DegenerateWaveformError(
            "device generates no noise anywhere over the period")
    ratio = psd / peak
    vals = ratio if kind == "flicker" else np.sqrt(ratio)
    return SampledCurve(values=vals, label=f"nmf_{kind}_{transistor}")


@dataclass
class EffectiveIsf:
    """Effective ISF on [0, 2pi): sensitivity times noise envelope,
    zero on cutoff intervals.

    Either analytic (closed-form tags per schedule interval) or backed by
    a sampled curve; ``construction`` records which.  ``clips`` counts
    square-root clippings performed while evaluating the closed form.
    """

    schedule: RegionSchedule
    construction: str
    kind: str = ""
    angles: object = None
    samples: SampledCurve | None = None
    clips: ClipCounter = field(default_factory=ClipCounter)

    def __call__(self, theta):
        th = np.asarray(theta, dtype=float) % (2.0 * math.pi)
        scalar = th.ndim == 0
        th = np.atleast_1d(th)
        if self.construction == FIRST_PRINCIPLES:
            out = self.samples.interp(th)
            out = out * self._cutoff_mask(th)
        else:
            out = np.zeros_like(th)
            for start, end, region in self.schedule.intervals:
                m = (th >= start) & (th < end)
                if region == OperatingRegion.CUTOFF or not np.any(m):
                    continue
                out[m] = np.cos(th[m]) * nmf_closed_form(
                    self.angles, region, self.kind, th[m], self.clips)
        return float(out[0]) if scalar else out

    def _cutoff_mask(self, th):
        mask = np.ones_like(th)
        for start, end, region in self.schedule.intervals:
            if region == OperatingRegion.CUTOFF:
                mask[(th >= start) & (th < end)] = 0.0
        return mask

    def sampled(self, n: int = 4096) -> SampledCurve:
        theta = np.arange(n) * (2.0 * math.pi / n)
        return SampledCurve(values=self(theta),
                            label=f"gamma_eff_{self.kind}_{self.construction}")


def effective_isf(gamma, nmf: SampledCurve, schedule: RegionSchedule,
                  kind: str = "") -> EffectiveIsf:
    """Pointwise product of a sensitivity and a sampled noise envelope,
    zeroed on the schedule's cutoff intervals.

    ``gamma`` is a SampledCurve on the same grid, or one of "+cos"/"-cos"
    for the analytic sensitivities of the two output nodes.
    """
    if isinstance(gamma, str):
        if gamma not in ("+cos", "-cos"):
            raise ValueError("analytic sensitivity must be '+cos' or '-cos'")
        sign = 1.0 if gamma == "+cos" else -1.0
        theta = nmf.theta
        gvals = sign * np.cos(theta)
    else:
        if gamma.n != nmf.n:
            raise GridMismatchError(
                f"sensitivity grid {gamma.n} != envelope grid {nmf.n}")
        gvals = gamma.values
    prod = SampledCurve(values=gvals * nmf.values,
                        label=f"gamma_eff_{kind or nmf.label}")
    eff = EffectiveIsf(schedule=schedule, construction=FIRST_PRINCIPLES,
                       kind=kind, samples=prod)
    # bake the cutoff zeroing into the stored samples
    theta = prod.theta
    eff.samples = SampledCurve(values=prod.values * eff._cutoff_mask(theta),
                               label=prod.label)
    return eff


def effective_isf_closed_form(angles, kind: str,
                              schedule: RegionSchedule) -> EffectiveIsf:
    """Verbatim closed-form effective ISF: cos(theta) times the
    closed-form envelope of each non-cutoff interval."""
    if kind not in ("flicker", "thermal"):
        raise ValueError(f"unknown noise kind {kind!r}")
    return EffectiveIsf(schedule=schedule, construction=CLOSED_FORM,
                        kind=kind, angles=angles)


def write_curve_csv(path, curve: SampledCurve) -> None:
    """Export a sampled curve as CSV rows (theta_rad, value)."""
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(["theta_rad", "value"])
        for th, val in zip(curve.theta, curve.values):
            wr.writerow([f"{th:.17g}", f"{val:.17g}"])
