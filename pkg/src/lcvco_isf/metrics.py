"""DC and RMS metrics of effective ISFs, and the two phase-noise formulas.

Quadrature is composite Gauss-Legendre applied per schedule interval
(splitting additionally at the clip angles of the thermal envelope), with
the panel count doubled until the result settles below the requested
absolute tolerance, so region borders and square-root kinks never sit
inside a smooth panel.  Sampled first-principles curves are integrated as
the exact integral of their periodic linear interpolant.

Closed-form counterparts are evaluated verbatim and reported next to the
quadrature values; they are reporting features, not ground truth, and the
discrepancy between the two is part of the output.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .errors import DomainError
from .isf import FIRST_PRINCIPLES, EffectiveIsf

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class TankParams:
    """Parallel resonator: inductance (H), capacitance (F), loss (ohm)."""

    l: float
    c: float
    rp: float

    def __post_init__(self):
        if not (self.l > 0 and self.c > 0 and self.rp > 0):
            raise DomainError("tank L, C, Rp must all be > 0")

    @property
    def omega0(self) -> float:
        return 1.0 / math.sqrt(self.l * self.c)

    @property
    def f0(self) -> float:
        return self.omega0 / TWO_PI

    def q_max(self, amplitude: float) -> float:
        """Peak tank charge swing C*A normalizing injected charge."""
        return self.c * amplitude


@dataclass(frozen=True)
class PhaseNoisePoint:
    offset: float        # rad/s from carrier
    value: float         # dBc/Hz; -inf when the source cannot up-convert
    source: str          # "flicker" | "thermal"

    @property
    def offset_hz(self) -> float:
        return self.offset / TWO_PI


# ---------------------------------------------------------------------------
# quadrature engine

_GL_ORDER = 20
_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(_GL_ORDER)


def composite_gauss(func, a: float, b: float, panels: int) -> float:
    """Fixed-resolution composite Gauss-Legendre integral of func on [a, b]."""
    if b <= a:
        return 0.0
    edges = np.linspace(a, b, panels + 1)
    mid = 0.5 * (edges[:-1] + edges[1:])
    half = 0.5 * (edges[1] - edges[0])
    pts = (mid[:, None] + half * _GL_NODES[None, :]).ravel()
    vals = np.asarray(func(pts), dtype=float).reshape(panels, _GL_ORDER)
    return float(half * np.sum(vals @ _GL_WEIGHTS))


def integrate_adaptive(func, a: float, b: float, tol: float = 1e-9,
                       min_panels: int = 2, max_panels: int = 4096) -> float:
    """Composite Gauss-Legendre with panel doubling until successive
    refinements agree within ``tol`` (absolute)."""
    panels = max(1, min_panels)
    prev = composite_gauss(func, a, b, panels)
    while panels < max_panels:
        panels *= 2
        cur = composite_gauss(func, a, b, panels)
        if abs(cur - prev) < tol:
            return cur
        prev = cur
    return prev


def _split_points(angles, start: float, end: float):
    """Angles inside (start, end) where the closed-form envelope argument
    sin(phi) - sin(theta) crosses zero (square-root clip points)."""
    pts = []
    for phi in (angles.phi1, angles.phi_x):
        for cand in (phi, math.pi - phi, TWO_PI + phi):
            if start < cand < end:
                pts.append(cand)
    return sorted(set(pts))


def _integrate_effective(gamma_eff: EffectiveIsf, transform, tol: float,
                         min_panels: int) -> float:
    """Integral over [0, 2pi) of transform(gamma_eff(theta))."""
    if gamma_eff.construction == FIRST_PRINCIPLES:
        # exact integral of the periodic linear interpolant
        vals = transform(gamma_eff.samples.values)
        return float(np.sum(vals) * (TWO_PI / vals.size))
    total = 0.0
    for start, end, _region in gamma_eff.schedule.intervals:
        edges = [start] + _split_points(gamma_eff.angles, start, end) + [end]
        for lo, hi in zip(edges[:-1], edges[1:]):
            total += integrate_adaptive(
                lambda th: transform(gamma_eff(th)), lo, hi,
                tol=tol, min_panels=min_panels)
    return total


def c0(gamma_eff: EffectiveIsf, tol: float = 1e-9, min_panels: int = 2) -> float:
    """DC measure of the effective ISF: (1/pi) * integral over one period."""
    return _integrate_effective(gamma_eff, lambda v: v, tol, min_panels) / math.pi


def rms2(gamma_eff: EffectiveIsf, tol: float = 1e-9, min_panels: int = 2) -> float:
    """Mean-square of the effective ISF: (1/2pi) * integral of |.|^2."""
    return _integrate_effective(gamma_eff, lambda v: np.abs(v) ** 2,
                                tol, min_panels) / TWO_PI


# ---------------------------------------------------------------------------
# closed forms

def c0_closed_form(angles) -> float:
    """Verbatim closed form (sin^2(phi2) - sin(phi1)*sin(phi_x)) / 2pi."""
    return (math.sin(angles.phi2) ** 2
            - math.sin(angles.phi1) * math.sin(angles.phi_x)) / TWO_PI


class FlickerNull(NamedTuple):
    sin_phi_x: float
    feasible: bool


def flicker_null_phi_x(angles) -> FlickerNull:
    """sin(phi_x) that zeroes the closed-form DC value: sin^2(phi2)/sin(phi1).

    Flagged infeasible when the magnitude exceeds 1 (no real angle)."""
    s1 = math.sin(angles.phi1)
    if s1 == 0.0:
        raise DomainError("flicker-null condition undefined at phi1 = 0")
    val = math.sin(angles.phi2) ** 2 / s1
    return FlickerNull(sin_phi_x=val, feasible=abs(val) <= 1.0)


def rms2_f(phi1: float, phi2: float) -> float:
    """Saturation-side factor of the closed-form mean-square."""
    if math.sin(phi1) == 0.0:
        raise DomainError("closed-form mean-square singular at phi1 = 0")
    return (2.0 * phi1 + 2.0 * phi2 + (5.0 / 3.0) * math.sin(2.0 * phi1)
            + math.sin(2.0 * phi2) - (4.0 / 3.0) / math.tan(phi1))


def rms2_g(phi2: float) -> float:
    """Triode-side factor of the closed-form mean-square."""
    return math.pi - 2.0 * phi2 - math.sin(2.0 * phi2)


@dataclass(frozen=True)
class Rms2ClosedForm:
    value: float
    negative: bool  # a squared RMS cannot be negative; kept verbatim, flagged


def rms2_closed_form(angles) -> Rms2ClosedForm:
    """Verbatim closed form (sin(phi1)*f + sin(phi_x)*g) / 8pi."""
    val = (math.sin(angles.phi1) * rms2_f(angles.phi1, angles.phi2)
           + math.sin(angles.phi_x) * rms2_g(angles.phi2)) / (8.0 * math.pi)
    return Rms2ClosedForm(value=val, negative=val < 0.0)


# ---------------------------------------------------------------------------
# phase-noise formulas

def phase_noise_flicker(c0_value: float, tank: TankParams, psd: float,
                        omega_corner: float, offset: float,
                        amplitude: float) -> float:
    """Up-converted flicker sideband level (dBc/Hz) at ``offset`` rad/s.

    10*log10(c0^2/(8*q_max^2) * psd * omega_corner / offset^3); returns
    -inf when the DC measure is zero (flicker cannot up-convert).
    """
    if not offset > 0:
        raise DomainError("offset must be > 0")
    q = tank.q_max(amplitude)
    if not q > 0:
        raise DomainError("q_max must be > 0")
    arg = (c0_value ** 2 / (8.0 * q ** 2)) * psd * omega_corner / offset ** 3
    if arg <= 0.0:
        return float("-inf")
    return 10.0 * math.log10(arg)


def phase_noise_thermal(rms2_value: float, tank: TankParams, psd: float,
                        offset: float, amplitude: float) -> float:
    """Thermal sideband level (dBc/Hz):
    10*log10(rms2/(4*q_max^2) * psd / offset^2)."""
    if not offset > 0:
        raise DomainError("offset must be > 0")
    q = tank.q_max(amplitude)
    if not q > 0:
        raise DomainError("q_max must be > 0")
    arg = (rms2_value / (4.0 * q ** 2)) * psd / offset ** 2
    if arg <= 0.0:
        return float("-inf")
    return 10.0 * math.log10(arg)


# ---------------------------------------------------------------------------
# combined report

@dataclass
class IsfMetrics:
    c0_quadrature: float
    c0_closed_form: float
    rms2_quadrature: float
    rms2_closed_form: float
    rms2_closed_form_negative: bool
    phase_noise: list = field(default_factory=list)

    def discrepancy(self) -> dict:
        out = {}
        for name, quad, closed in (
                ("c0", self.c0_quadrature, self.c0_closed_form),
                ("rms2", self.rms2_quadrature, self.rms2_closed_form)):
            abs_diff = abs(quad - closed)
            denom = max(abs(quad), abs(closed))
            out[name] = {"abs_diff": abs_diff,
                         "rel_diff": abs_diff / denom if denom > 0 else 0.0}
        return out

    def to_jsonable(self) -> dict:
        disc = self.discrepancy()

        def enc(x):
            return "-inf" if x == float("-inf") else x

        rows = {}
        for p in self.phase_noise:
            row = rows.setdefault(p.offset_hz, {"offset_hz": p.offset_hz})
            row[f"{p.source}_dbc"] = enc(p.value)
        return {
            "c0": {"quadrature": self.c0_quadrature,
                   "closed_form": self.c0_closed_form,
                   "abs_diff": disc["c0"]["abs_diff"],
                   "rel_diff": disc["c0"]["rel_diff"]},
            "rms2": {"quadrature": self.rms2_quadrature,
                     "closed_form": self.rms2_closed_form,
                     "closed_form_negative": self.rms2_closed_form_negative,
                     "abs_diff": disc["rms2"]["abs_diff"],
                     "rel_diff": disc["rms2"]["rel_diff"]},
            "phase_noise": [rows[k] for k in sorted(rows)],
        }
