"""1/f noise synthesis: a sum of independently driven first-order
low-pass stages with log-spaced corner frequencies.

Each stage is a discrete AR(1) process; weighting the stage plateaus
inversely with their corner frequency makes the summed spectrum fall as
1/f between the lowest and highest pole.  The stage gains are calibrated
against the analytic AR(1) spectra so the one-sided PSD of the summed
process is 1/f (per-unit) at the nominal corner; multiplying the sample
stream by sqrt(kf/(w*l))*gm then reproduces the device flicker PSD.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.signal import lfilter

# pole span relative to the nominal corner
_SPAN_LOW = 1e-3
_SPAN_HIGH = 10.0


@dataclass
class FlickerSynth:
    """Generator of a unit-calibrated 1/f process at sample step ``dt``."""

    corner_hz: float
    dt: float
    num_stages: int = 12
    poles_hz: np.ndarray = field(init=False)
    rho: np.ndarray = field(init=False)
    beta: np.ndarray = field(init=False)

    def __post_init__(self):
        if not self.corner_hz > 0 or not self.dt > 0:
            raise ValueError("corner_hz and dt must be > 0")
        if self.num_stages < 2:
            raise ValueError("need at least 2 stages")
        lo = self.corner_hz * _SPAN_LOW
        hi = self.corner_hz * _SPAN_HIGH
        self.poles_hz = np.geomspace(lo, hi, self.num_stages)
        self.rho = np.exp(-2.0 * math.pi * self.poles_hz * self.dt)
        # plateau of stage k proportional to 1/f_k gives the 1/f sum
        raw = (1.0 - self.rho) * np.sqrt(1.0 / (2.0 * self.dt * self.poles_hz))
        self.beta = raw
        scale = math.sqrt((1.0 / self.corner_hz) / self.analytic_psd(self.corner_hz))
        self.beta = raw * scale

    def analytic_psd(self, f) -> np.ndarray | float:
        """One-sided PSD of the summed process at frequency f (Hz)."""
        f = np.asarray(f, dtype=float)
        scalar = f.ndim == 0
        w = 2.0 * math.pi * np.atleast_1d(f) * self.dt
        num = 2.0 * self.beta[:, None] ** 2 * self.dt
        den = 1.0 - 2.0 * self.rho[:, None] * np.cos(w)[None, :] + self.rho[:, None] ** 2
        out = np.sum(num / den, axis=0)
        return float(out[0]) if scalar else out

    def generate(self, n: int, rng: np.random.Generator) -> np.ndarray:
        """n samples of the summed process; stages start from their
        stationary distribution so there is no warm-up transient."""
        x = np.zeros(n)
        for k in range(self.num_stages):
            eps = rng.standard_normal(n)
            y0 = rng.standard_normal() * self.beta[k] / math.sqrt(1.0 - self.rho[k] ** 2)
            y, _ = lfilter([self.beta[k]], [1.0, -self.rho[k]], eps,
                           zi=[self.rho[k] * y0])
            x += y
        return x
