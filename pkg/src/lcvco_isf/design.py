"""Body-bias design: the optimal switching angle, the closed-form body
signal parameters that realize it, and the attenuator/bias feedback rule.

Setting the saturation/triode crossover to 90 degrees removes the triode
intervals; the remaining mean-square factor has exactly one root in
(0, pi/2), which fixes the on/off angle.  Back-substituting both angles
into the border-angle definitions yields the body AC amplitude and DC
level in closed form.  The angle root is always recomputed, never
hard-coded.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

from scipy.optimize import brentq, minimize_scalar

from .device import DeviceParams, body_factor
from .errors import DomainError
from .metrics import rms2 as rms2_quadrature
from .metrics import rms2_f
from .regions import M1, BoundaryAngles, schedule as build_schedule
from .isf import effective_isf_closed_form


def phi1_equation(phi1: float) -> float:
    """Mean-square factor at a 90-degree crossover:
    pi + 2*phi1 + (5/3)*sin(2*phi1) - (4/3)*cot(phi1)."""
    return rms2_f(phi1, math.pi / 2.0)


def solve_phi1_star(tolerance: float = 1e-13) -> float:
    """Unique root of the mean-square factor on (0, pi/2), radians.

    The factor tends to -inf at 0+ and is positive at pi/2-, so a sign
    change is always bracketed; solved by a guaranteed bracketing method.
    """
    if not tolerance > 0:
        raise ValueError("tolerance must be > 0")
    lo, hi = 1e-9, math.pi / 2.0 - 1e-12
    flo, fhi = phi1_equation(lo), phi1_equation(hi)
    if flo * fhi >= 0:  # cannot happen for this function; guarded anyway
        raise DomainError("no sign change bracketed for the angle equation")
    return float(brentq(phi1_equation, lo, hi, xtol=tolerance, rtol=8.9e-16))


@dataclass(frozen=True)
class FeedbackRealization:
    """Attenuate-and-shift body drive: body = -vb + k * (AC of output),
    coupled through capacitance cc."""

    k: float
    vb: float
    cc: float

    def __post_init__(self):
        if not 0.0 <= self.k < 1.0:
            raise DomainError("attenuation factor k must satisfy 0 <= k < 1")
        if not self.cc > 0:
            raise DomainError("coupling capacitance cc must be > 0")


@dataclass(frozen=True)
class DesignSolution:
    """Body-signal parameters realizing the optimal angles.

    a1 / vdc1 carry the surface-potential form; a1_n_form / vdc1_n_form the
    algebraically identical body-factor form.  ratio is |vdc1/a1|.
    phi1_residual is the angle equation evaluated at the solved root;
    ratio_residual compares the ratio against the supply-referred rule
    |vth0/vdc0 - 1| (a diagnostic; exact only when a = vdc0 = supply).
    degenerate marks a = vdc0, where the border-angle back-substitution
    becomes 0/0.
    """

    phi1_star: float
    a1: float
    vdc1: float
    a1_n_form: float
    vdc1_n_form: float
    ratio: float
    phi1_residual: float
    ratio_residual: float
    degenerate: bool

    def to_jsonable(self) -> dict:
        return {
            "phi1_star_rad": self.phi1_star,
            "phi1_star_deg": math.degrees(self.phi1_star),
            "a1": self.a1,
            "vdc1": self.vdc1,
            "ratio": self.ratio,
            "phi1_residual": self.phi1_residual,
            "ratio_residual": self.ratio_residual,
            "degenerate": self.degenerate,
        }


def body_bias_design(a: float, vdc0: float, params: DeviceParams) -> DesignSolution:
    """Body AC amplitude and DC level that place the on/off angle at the
    solved optimum and the crossover at 90 degrees.

    Requires a nonzero body-effect coefficient; a = vdc0 is flagged as
    degenerate (the back-substituted border angle becomes 0/0).
    """
    if not a > 0:
        raise DomainError("output amplitude a must be > 0")
    if params.gamma_body == 0:
        raise DomainError("body control impossible: gamma_body = 0")
    phi1_star = solve_phi1_star()
    s = math.sin(phi1_star)
    n = body_factor(params)
    inv_n = 1.0 / n
    sp_form = math.sqrt(params.phi_s) / params.gamma_body

    a1_n = inv_n * (a + (a - vdc0) / (1.0 - s))
    vdc1_n = inv_n * (params.vth0 + (a * s - vdc0) / (1.0 - s))
    a1 = sp_form * (a + (a - vdc0) / (1.0 - s))
    vdc1 = sp_form * (params.vth0 + (a * s - vdc0) / (1.0 - s))

    ratio = abs(vdc1 / a1) if a1 != 0 else float("inf")
    return DesignSolution(
        phi1_star=phi1_star,
        a1=a1,
        vdc1=vdc1,
        a1_n_form=a1_n,
        vdc1_n_form=vdc1_n,
        ratio=ratio,
        phi1_residual=abs(phi1_equation(phi1_star)),
        ratio_residual=abs(ratio - design_ratio(params.vth0, vdc0)),
        degenerate=(a == vdc0),
    )


def design_ratio(vth0: float, vdd: float) -> float:
    """Target |vdc1/a1| for a supply-rail oscillation: |vth0/vdd - 1|."""
    if not vdd > 0:
        raise DomainError("vdd must be > 0")
    return abs(vth0 / vdd - 1.0)


def feedback_synthesize(k: float, vth0: float, vdd: float,
                        cc: float = 1e-9) -> FeedbackRealization:
    """Bias shift that makes an attenuate-and-shift feedback satisfy the
    design ratio exactly: vb = k * vdd * |vth0/vdd - 1|."""
    return FeedbackRealization(k=k, vb=k * vdd * design_ratio(vth0, vdd), cc=cc)


def feedback_check(real: FeedbackRealization, vth0: float, vdd: float) -> float:
    """Residual | |vb/(k*vdd)| - |vth0/vdd - 1| |; zero when the
    realization satisfies the design ratio."""
    if real.k == 0:
        raise DomainError("feedback residual undefined at k = 0")
    return abs(abs(real.vb / (real.k * vdd)) - design_ratio(vth0, vdd))


def minimize_rms2_numeric(tol: float = 1e-10) -> float:
    """Numeric argmin over phi1 of the quadrature mean-square of the
    closed-form thermal effective ISF at a 90-degree crossover.

    Diagnostic only: the quadrature integrand clips negative envelope
    arguments, so its minimizer need not coincide with the analytic root.
    """
    half_pi = math.pi / 2.0

    def objective(phi1):
        ang = BoundaryAngles(
            phi1=phi1, phi2=half_pi, phi_x=0.0,
            phi1_raw=-phi1, phi1_arg=-math.sin(phi1),
            phi2_arg=1.0, phi_x_arg=0.0,
            phi1_valid=True, phi2_valid=True, phi_x_valid=True)
        eff = effective_isf_closed_form(ang, "thermal", build_schedule(ang, M1))
        return rms2_quadrature(eff, tol=1e-10)

    res = minimize_scalar(objective, bounds=(1e-3, half_pi - 1e-3),
                          method="bounded", options={"xatol": tol})
    return float(res.x)
