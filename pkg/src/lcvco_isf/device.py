"""Square-law model of a three-terminal (body-driven) NMOS transistor.

Threshold shifts with the bulk-source voltage through the body effect;
drain current, transconductance and the flicker/thermal noise PSDs are
evaluated per operating region.  Region classification always uses the
linearized threshold (vth0 - n*vbs), which is the model the steady-state
region algebra of :mod:`lcvco_isf.regions` is built on.

All functions accept scalars or equal-shaped numpy arrays for the bias
voltages and are pure: safe to call concurrently.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import IntEnum

import numpy as np

from .errors import DomainError

BOLTZMANN = 1.380649e-23  # J/K


class OperatingRegion(IntEnum):
    CUTOFF = 0
    SATURATION = 1
    TRIODE = 2


@dataclass(frozen=True)
class DeviceParams:
    """Process/device constants.

    mu_cox      mobility-oxide product (A/V^2)
    w, l        channel width / length (m)
    vth0        zero-body-bias threshold (V)
    gamma_body  body-effect coefficient (V^1/2)
    phi_s       surface potential (V)
    kf          flicker coefficient, oxide-capacitance folded in (V^2*m^2);
                flicker PSD = kf/(w*l) * gm^2 / f
    gamma_ch    channel thermal-noise coefficient (dimensionless)
    temperature absolute temperature (K)
    """

    mu_cox: float
    w: float
    l: float
    vth0: float
    gamma_body: float
    phi_s: float
    kf: float
    gamma_ch: float
    temperature: float

    def __post_init__(self):
        for name in ("mu_cox", "w", "l", "phi_s", "gamma_ch", "temperature"):
            if not getattr(self, name) > 0:
                raise DomainError(f"DeviceParams.{name} must be > 0")
        if self.gamma_body < 0:
            raise DomainError("DeviceParams.gamma_body must be >= 0")
        if not math.isfinite(self.kf) or self.kf < 0:
            raise DomainError("DeviceParams.kf must be finite and >= 0")

    @property
    def n(self) -> float:
        """Linearized body factor gamma_body / sqrt(phi_s)."""
        return body_factor(self)

    @property
    def beta(self) -> float:
        """Square-law prefactor mu_cox * (w/l)."""
        return self.mu_cox * self.w / self.l


@dataclass(frozen=True)
class BiasPoint:
    """Terminal voltages relative to the grounded source."""

    vgs: float
    vds: float
    vbs: float


def body_factor(params: DeviceParams) -> float:
    """Slope of the linearized threshold-vs-body characteristic."""
    if not params.phi_s > 0:
        raise DomainError("phi_s must be > 0")
    return params.gamma_body / math.sqrt(params.phi_s)


def threshold_voltage(params: DeviceParams, vbs, model: str = "linear",
                      order: int | None = None):
    """Threshold voltage at bulk-source voltage ``vbs``.

    model:
      "exact"     vth0 + gamma*(sqrt(phi_s - vbs) - sqrt(phi_s)); needs vbs < phi_s
      "maclaurin" series expansion around vbs = 0, truncated at ``order`` >= 1
      "linear"    vth0 - n*vbs  (identical to maclaurin at order 1)
    """
    vbs = np.asarray(vbs, dtype=float)
    if model == "exact":
        if np.any(vbs >= params.phi_s):
            raise DomainError("exact threshold model requires vbs < phi_s")
        out = params.vth0 + params.gamma_body * (
            np.sqrt(params.phi_s - vbs) - math.sqrt(params.phi_s))
    elif model == "maclaurin":
        if order is None or order < 1:
            raise ValueError("maclaurin model needs order >= 1")
        out = np.full_like(vbs, float(params.vth0))
        for k in range(1, order + 1):
            coeff = ((-1.0) ** k / math.factorial(k)
                     * params.gamma_body / math.sqrt(params.phi_s ** (2 * k - 1)))
            out = out + coeff * vbs ** k
    elif model == "linear":
        out = params.vth0 - body_factor(params) * vbs
    else:
        raise ValueError(f"unknown threshold model {model!r}")
    return out if out.ndim else float(out)


def _region_code(params: DeviceParams, vgs, vds, vbs):
    """Vectorized region classification (linear threshold model).

    Ties at the saturation/triode border (vds == overdrive) classify as
    saturation; vgs exactly at threshold counts as on.
    """
    vth = params.vth0 - body_factor(params) * np.asarray(vbs, dtype=float)
    vov = np.asarray(vgs, dtype=float) - vth
    on = vov >= 0
    sat = on & (np.asarray(vds, dtype=float) >= vov)
    code = np.where(sat, int(OperatingRegion.SATURATION),
                    np.where(on, int(OperatingRegion.TRIODE),
                             int(OperatingRegion.CUTOFF)))
    return code


def classify_region(params: DeviceParams, bias: BiasPoint) -> OperatingRegion:
    for v in (bias.vgs, bias.vds, bias.vbs):
        if not np.all(np.isfinite(v)):
            raise DomainError("bias voltages must be finite")
    return OperatingRegion(int(_region_code(params, bias.vgs, bias.vds, bias.vbs)))


def drain_current(params: DeviceParams, bias: BiasPoint):
    """Drain current (A) with the region picked by the linear threshold."""
    vgs = np.asarray(bias.vgs, dtype=float)
    vds = np.asarray(bias.vds, dtype=float)
    vbs = np.asarray(bias.vbs, dtype=float)
    if not (np.all(np.isfinite(vgs)) and np.all(np.isfinite(vds))
            and np.all(np.isfinite(vbs))):
        raise DomainError("bias voltages must be finite")
    n = body_factor(params)
    beta = params.beta
    vov = vgs - params.vth0 + n * vbs
    i_sat = 0.5 * beta * vov ** 2
    i_tri = beta * (vov - 0.5 * vds) * vds
    code = _region_code(params, vgs, vds, vbs)
    out = np.where(code == OperatingRegion.SATURATION, i_sat,
                   np.where(code == OperatingRegion.TRIODE, i_tri, 0.0))
    return out if out.ndim else float(out)


def transconductance(params: DeviceParams, bias: BiasPoint):
    """Transconductance (S): beta*(n+1)*vov in saturation,
    beta*(vov + n*vds) in triode, 0 in cutoff."""
    vgs = np.asarray(bias.vgs, dtype=float)
    vds = np.asarray(bias.vds, dtype=float)
    vbs = np.asarray(bias.vbs, dtype=float)
    n = body_factor(params)
    beta = params.beta
    vov = vgs + n * vbs - params.vth0
    gm_sat = beta * (n + 1.0) * vov
    gm_tri = beta * (vov + n * vds)
    code = _region_code(params, vgs, vds, vbs)
    out = np.where(code == OperatingRegion.SATURATION, gm_sat,
                   np.where(code == OperatingRegion.TRIODE, gm_tri, 0.0))
    return out if out.ndim else float(out)


def noise_psd(params: DeviceParams, bias: BiasPoint, kind: str,
              f: float | None = None):
    """One-sided current-noise PSD (A^2/Hz) at the given bias.

    kind "flicker": kf/(w*l) * gm^2 / f  (requires f > 0)
    kind "thermal": 4*k_B*T*gamma_ch*gm
    Cutoff contributes no noise (gm = 0 there).
    """
    gm = transconductance(params, bias)
    if kind == "flicker":
        if f is None or not f > 0:
            raise DomainError("flicker PSD needs a frequency f > 0")
        out = params.kf / (params.w * params.l) / f * np.asarray(gm) ** 2
    elif kind == "thermal":
        out = 4.0 * BOLTZMANN * params.temperature * params.gamma_ch * np.asarray(gm)
    else:
        raise ValueError(f"unknown noise kind {kind!r}")
    return out if out.ndim else float(out)
