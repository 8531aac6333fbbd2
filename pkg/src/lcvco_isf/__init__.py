"""Phase-noise analysis and body-bias design toolkit for NMOS-only
cross-coupled LC oscillators."""

from .design import (DesignSolution, FeedbackRealization, body_bias_design,
                     design_ratio, feedback_check, feedback_synthesize,
                     solve_phi1_star)
from .device import (BOLTZMANN, BiasPoint, DeviceParams, OperatingRegion,
                     body_factor, classify_region, drain_current, noise_psd,
                     threshold_voltage, transconductance)
from .isf import (EffectiveIsf, SampledCurve, effective_isf,
                  effective_isf_closed_form, isf_numeric, nmf_first_principles,
                  nmf_closed_form)
from .metrics import (IsfMetrics, PhaseNoisePoint, TankParams, c0,
                      c0_closed_form, flicker_null_phi_x, phase_noise_flicker,
                      phase_noise_thermal, rms2, rms2_closed_form)
from .regions import (M1, M2, BoundaryAngles, RegionSchedule,
                      SteadyStateConfig, boundary_angles, region_at, schedule,
                      waveforms_at)
from .sim import (PhaseNoiseSpectrum, SimConfig, SimTrace, compare_configs,
                  measure_amplitude, measure_frequency, phase_noise_spectrum,
                  simulate)

__version__ = "0.1.0"

__all__ = [
    "BOLTZMANN", "BiasPoint", "BoundaryAngles", "DesignSolution",
    "DeviceParams", "EffectiveIsf", "FeedbackRealization", "IsfMetrics",
    "M1", "M2", "OperatingRegion", "PhaseNoisePoint", "PhaseNoiseSpectrum",
    "RegionSchedule", "SampledCurve", "SimConfig", "SimTrace",
    "SteadyStateConfig", "TankParams", "body_bias_design", "body_factor",
    "boundary_angles", "c0", "c0_closed_form", "classify_region",
    "compare_configs", "design_ratio", "drain_current", "effective_isf",
    "effective_isf_closed_form", "feedback_check", "feedback_synthesize",
    "flicker_null_phi_x", "isf_numeric", "measure_amplitude",
    "measure_frequency", "nmf_first_principles", "nmf_closed_form", "noise_psd",
    "phase_noise_flicker", "phase_noise_spectrum", "phase_noise_thermal",
    "region_at", "rms2", "rms2_closed_form", "schedule", "simulate",
    "solve_phi1_star", "threshold_voltage", "transconductance",
    "waveforms_at",
]
