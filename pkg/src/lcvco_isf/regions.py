"""Steady-state waveforms, boundary angles, and per-transistor region
schedules of the cross-coupled pair over one oscillation period.

Both transistors see the two output nodes plus their own body drive; the
second transistor's waveforms are those of the first shifted by half a
period.  The border angles follow from requiring the linearized on/overdrive
conditions on those waveforms; arcsine arguments that leave [-1, 1] are
clamped and flagged rather than rejected so parameter sweeps can traverse
infeasible corners.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .device import BiasPoint, DeviceParams, OperatingRegion, body_factor
from .errors import DegenerateConfigError, InconsistentAnglesError

M1 = "M1"
M2 = "M2"

# tolerance on |arcsine argument| - 1 before a clamped angle is flagged invalid
_ARG_TOL = 1e-9
# angles this close to 0 or pi/2 snap onto them, so float rounding of the
# arcsine cannot leave sliver intervals in the schedule
_SNAP_TOL = 1e-7


@dataclass(frozen=True)
class SteadyStateConfig:
    """Output-swing and body-drive parameters of the steady oscillation.

    a, vdc0   AC amplitude / DC level of the output nodes (V)
    a1, vdc1  AC amplitude / DC level of the body signals (V)
    omega     oscillation frequency (rad/s)
    """

    a: float
    vdc0: float
    a1: float
    vdc1: float
    omega: float

    def __post_init__(self):
        if not self.a > 0:
            raise DegenerateConfigError("output amplitude a must be > 0")
        if not self.omega > 0:
            raise DegenerateConfigError("omega must be > 0")
        if self.a1 < 0:
            raise DegenerateConfigError("body amplitude a1 must be >= 0")


def waveforms_at(config: SteadyStateConfig, theta, transistor: str) -> BiasPoint:
    """Instantaneous (vgs, vds, vbs) of one transistor at angle ``theta``."""
    s = np.sin(np.asarray(theta, dtype=float))
    if transistor == M1:
        vgs = config.vdc0 + config.a * s
        vds = config.vdc0 - config.a * s
        vbs = config.vdc1 - config.a1 * s
    elif transistor == M2:
        vgs = config.vdc0 - config.a * s
        vds = config.vdc0 + config.a * s
        vbs = config.vdc1 + config.a1 * s
    else:
        raise ValueError(f"unknown transistor {transistor!r}")
    if s.ndim:
        return BiasPoint(vgs=vgs, vds=vds, vbs=vbs)
    return BiasPoint(vgs=float(vgs), vds=float(vds), vbs=float(vbs))


def _clamped_asin(arg: float):
    valid = abs(arg) <= 1.0 + _ARG_TOL
    return math.asin(max(-1.0, min(1.0, arg))), valid


@dataclass(frozen=True)
class BoundaryAngles:
    """Border angles of the region schedule (radians).

    phi1   on/off switching angle, stored positive (magnitude convention);
           the signed value from the verbatim arcsine is phi1_raw
    phi2   saturation/triode crossover angle
    phi_x  auxiliary angle of the triode noise envelope
    *_arg  unclamped arcsine arguments, kept for diagnostics
    """

    phi1: float
    phi2: float
    phi_x: float
    phi1_raw: float
    phi1_arg: float
    phi2_arg: float
    phi_x_arg: float
    phi1_valid: bool
    phi2_valid: bool
    phi_x_valid: bool

    @property
    def all_valid(self) -> bool:
        return self.phi1_valid and self.phi2_valid and self.phi_x_valid


def boundary_angles(config: SteadyStateConfig, params: DeviceParams) -> BoundaryAngles:
    """Border angles for the given steady state and device.

    Raises DegenerateConfigError when one of the three denominators
    vanishes (the arcsine argument would be undefined).
    """
    return boundary_angles_from(config.a, config.vdc0, config.a1, config.vdc1,
                                params)


def boundary_angles_from(a: float, vdc0: float, a1: float, vdc1: float,
                         params: DeviceParams) -> BoundaryAngles:
    """Border angles from raw waveform parameters.

    Unlike SteadyStateConfig this accepts a1 < 0 (a phase-flipped body
    drive), which the design equations can produce; the arcsine algebra
    is sign-agnostic even though the schedule machinery never sees such
    configurations.
    """
    n = body_factor(params)
    vth0 = params.vth0

    d1 = a - n * a1
    d2 = 2.0 * a - n * a1
    dx = (1.0 - n) * a - n * a1
    for name, d in (("a - n*a1", d1), ("2a - n*a1", d2), ("(1-n)a - n*a1", dx)):
        if d == 0.0:
            raise DegenerateConfigError(f"boundary angles degenerate: {name} = 0")

    arg1_raw = (vth0 - n * vdc1 - vdc0) / d1
    arg2 = (vth0 - n * vdc1) / d2
    argx = (vth0 - n * vdc1 - (n + 1.0) * vdc0) / dx

    phi1_raw, v1 = _clamped_asin(arg1_raw)
    phi2, v2 = _clamped_asin(arg2)
    phi_x, vx = _clamped_asin(argx)

    return BoundaryAngles(
        phi1=abs(phi1_raw),
        phi2=phi2,
        phi_x=phi_x,
        phi1_raw=phi1_raw,
        phi1_arg=arg1_raw,
        phi2_arg=arg2,
        phi_x_arg=argx,
        phi1_valid=v1,
        phi2_valid=v2,
        phi_x_valid=vx,
    )


@dataclass(frozen=True)
class RegionSchedule:
    """Ordered half-open partition of [0, 2pi) into operating regions.

    intervals: tuple of (start, end, OperatingRegion); sorted, non-empty,
    non-overlapping, adjacent regions distinct, union exactly [0, 2pi).
    A boundary point belongs to the interval that starts there.
    """

    transistor: str
    intervals: tuple = field(default_factory=tuple)

    def region_at(self, theta) -> OperatingRegion:
        th = float(theta) % (2.0 * math.pi)
        for start, end, region in self.intervals:
            if start <= th < end:
                return region
        # th can only fall through on rounding at 2*pi
        return self.intervals[-1][2]

    def fraction(self, region: OperatingRegion) -> float:
        """Fraction of the period spent in ``region``."""
        total = sum(end - start for start, end, r in self.intervals if r == region)
        return total / (2.0 * math.pi)


def _merge(segments):
    """Drop empty segments and merge adjacent equal-region ones."""
    out = []
    for start, end, region in segments:
        if end - start <= 0.0:
            continue
        if out and out[-1][2] == region and out[-1][1] == start:
            out[-1] = (out[-1][0], end, region)
        else:
            out.append((start, end, region))
    return tuple(out)


def schedule(angles: BoundaryAngles, transistor: str) -> RegionSchedule:
    """Region schedule of one transistor from its boundary angles.

    Requires valid angles with 0 <= phi1 <= phi2 <= pi/2 (positive-magnitude
    convention for phi1).
    """
    if not (angles.phi1_valid and angles.phi2_valid):
        raise InconsistentAnglesError("cannot build a schedule from invalid angles")

    def snap(p):
        if abs(p) < _SNAP_TOL:
            return 0.0
        if abs(p - math.pi / 2.0) < _SNAP_TOL:
            return math.pi / 2.0
        return p

    p1, p2 = snap(angles.phi1), snap(angles.phi2)
    if p2 < 0:
        raise InconsistentAnglesError(f"phi2 = {p2:.6g} rad is negative")
    if p1 > p2:
        raise InconsistentAnglesError(
            f"phi1 = {p1:.6g} rad exceeds phi2 = {p2:.6g} rad")
    pi = math.pi
    if transistor == M1:
        segs = [
            (0.0, p2, OperatingRegion.SATURATION),
            (p2, pi - p2, OperatingRegion.TRIODE),
            (pi - p2, pi + p1, OperatingRegion.SATURATION),
            (pi + p1, 2 * pi - p1, OperatingRegion.CUTOFF),
            (2 * pi - p1, 2 * pi, OperatingRegion.SATURATION),
        ]
    elif transistor == M2:
        segs = [
            (0.0, p1, OperatingRegion.SATURATION),
            (p1, pi - p1, OperatingRegion.CUTOFF),
            (pi - p1, pi + p2, OperatingRegion.SATURATION),
            (pi + p2, 2 * pi - p2, OperatingRegion.TRIODE),
            (2 * pi - p2, 2 * pi, OperatingRegion.SATURATION),
        ]
    else:
        raise ValueError(f"unknown transistor {transistor!r}")
    return RegionSchedule(transistor=transistor, intervals=_merge(segs))


def region_at(sched: RegionSchedule, theta) -> OperatingRegion:
    """Region of the interval containing theta (mod 2pi)."""
    return sched.region_at(theta)


def write_schedule_csv(path, schedules) -> None:
    """Export one or more schedules as CSV rows
    (transistor, start_rad, end_rad, region, start_deg, end_deg)."""
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(["transistor", "start_rad", "end_rad", "region",
                     "start_deg", "end_deg"])
        for sched in schedules:
            for start, end, region in sched.intervals:
                wr.writerow([sched.transistor,
                             f"{start:.17g}", f"{end:.17g}", region.name,
                             f"{math.degrees(start):.17g}",
                             f"{math.degrees(end):.17g}"])
