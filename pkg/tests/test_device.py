import math

import numpy as np
import pytest

from lcvco_isf.device import (BiasPoint, DeviceParams, OperatingRegion,
                              body_factor, classify_region, drain_current,
                              noise_psd, threshold_voltage, transconductance)
from lcvco_isf.errors import DomainError


def make_params(**kw):
    base = dict(mu_cox=2e-4, w=1e-4, l=1e-5, vth0=0.5, gamma_body=0.5,
                phi_s=0.7, kf=1e-24, gamma_ch=1.0, temperature=300.0)
    base.update(kw)
    return DeviceParams(**base)


def test_body_factor_values():
    assert body_factor(make_params(gamma_body=0.0)) == 0.0
    assert body_factor(make_params(gamma_body=0.5, phi_s=0.7)) == \
        pytest.approx(0.5976143046671968, rel=1e-14)
    assert body_factor(make_params(gamma_body=1.0, phi_s=1.0)) == 1.0


def test_bad_params_rejected():
    with pytest.raises(DomainError):
        make_params(phi_s=0.0)
    with pytest.raises(DomainError):
        make_params(mu_cox=-1.0)
    with pytest.raises(DomainError):
        make_params(gamma_body=-0.1)


def test_threshold_zero_bias_all_models():
    p = make_params()
    for model, order in (("exact", None), ("linear", None), ("maclaurin", 3)):
        assert threshold_voltage(p, 0.0, model, order) == pytest.approx(0.5, abs=0)


def test_threshold_maclaurin_order_one_is_linear():
    p = make_params()
    for vbs in (-0.3, 0.2):
        assert threshold_voltage(p, vbs, "maclaurin", 1) == \
            pytest.approx(threshold_voltage(p, vbs, "linear"), rel=1e-15)


def test_threshold_exact_value():
    # hand-evaluated: 0.5 + 0.5*(sqrt(0.5) - sqrt(0.7))
    p = make_params()
    assert threshold_voltage(p, 0.2, "exact") == \
        pytest.approx(0.435223377326236, rel=1e-12)


def test_threshold_exact_domain():
    p = make_params()
    with pytest.raises(DomainError):
        threshold_voltage(p, 0.7, "exact")
    with pytest.raises(ValueError):
        threshold_voltage(p, 0.1, "maclaurin", 0)


def test_maclaurin_converges_to_its_series_limit():
    # the printed series sums to vth0 + gamma*sqrt(phi_s)*(exp(-v/phi_s) - 1),
    # which is what increasing truncation orders must approach
    p = make_params()
    for vbs in (-0.3, -0.1, 0.1, 0.3):
        limit = p.vth0 + p.gamma_body * math.sqrt(p.phi_s) * (
            math.exp(-vbs / p.phi_s) - 1.0)
        errs = [abs(threshold_voltage(p, vbs, "maclaurin", k) - limit)
                for k in (1, 2, 4, 8, 16)]
        assert errs[-1] < 1e-12
        assert errs[0] > errs[-1]


def test_linear_threshold_error_band():
    # with the body factor gamma/sqrt(phi_s), the worst-case error of the
    # linear model against the exact one over |vbs| <= 0.3 V is ~0.098 V;
    # the halved (true first-order Taylor) slope stays below 0.02 V
    p = make_params()
    vbs = np.linspace(-0.3, 0.3, 4001)
    exact = threshold_voltage(p, vbs, "exact")
    lin = threshold_voltage(p, vbs, "linear")
    worst = np.max(np.abs(lin - exact))
    assert 0.05 < worst < 0.1
    taylor = p.vth0 - (p.gamma_body / (2 * math.sqrt(p.phi_s))) * vbs
    assert np.max(np.abs(taylor - exact)) < 0.02


def test_drain_current_zero_overdrive():
    p = make_params()
    assert drain_current(p, BiasPoint(vgs=p.vth0, vds=1.0, vbs=0.0)) == 0.0
    # with body bias the cancellation is only as exact as the rounding
    vbs = -0.2
    vgs = p.vth0 - p.n * vbs
    assert drain_current(p, BiasPoint(vgs=vgs, vds=1.0, vbs=vbs)) == \
        pytest.approx(0.0, abs=1e-30)


def test_drain_current_saturation_value():
    # 0.5 * 1e-4 * 10 * 0.3^2 = 4.5e-5 A
    p = make_params(mu_cox=1e-4, w=1e-5, l=1e-6, gamma_body=0.0)
    i = drain_current(p, BiasPoint(vgs=0.8, vds=1.5, vbs=0.0))
    assert i == pytest.approx(4.5e-5, rel=1e-12)


def test_drain_current_continuous_at_boundary():
    p = make_params()
    vgs, vbs = 1.2, -0.1
    vov = vgs - p.vth0 + p.n * vbs
    i_sat = drain_current(p, BiasPoint(vgs=vgs, vds=vov, vbs=vbs))
    i_tri = drain_current(p, BiasPoint(vgs=vgs, vds=vov * (1 - 1e-12), vbs=vbs))
    assert i_tri == pytest.approx(i_sat, rel=1e-10)
    assert classify_region(p, BiasPoint(vgs=vgs, vds=vov, vbs=vbs)) is \
        OperatingRegion.SATURATION


def test_transconductance_values():
    p = make_params()
    assert transconductance(p, BiasPoint(vgs=0.0, vds=1.0, vbs=0.0)) == 0.0
    # no body effect: beta * (vgs - vth0)
    p0 = make_params(gamma_body=0.0)
    gm = transconductance(p0, BiasPoint(vgs=1.0, vds=1.5, vbs=0.3))
    assert gm == pytest.approx(p0.beta * 0.5, rel=1e-14)
    # beta = 1e-3, n = 0.6, overdrive sum 0.5 -> 8e-4 S
    p6 = make_params(mu_cox=1e-4, w=1e-5, l=1e-6, gamma_body=0.6, phi_s=1.0)
    gm = transconductance(p6, BiasPoint(vgs=1.0, vds=2.0, vbs=0.0))
    assert gm == pytest.approx(8e-4, rel=1e-12)


def test_noise_psd_cutoff_and_errors():
    p = make_params()
    off = BiasPoint(vgs=0.0, vds=1.0, vbs=0.0)
    assert noise_psd(p, off, "flicker", f=1e3) == 0.0
    assert noise_psd(p, off, "thermal") == 0.0
    with pytest.raises(DomainError):
        noise_psd(p, off, "flicker", f=0.0)
    with pytest.raises(ValueError):
        noise_psd(p, off, "shot")


def test_noise_psd_gm_scaling():
    p = make_params(gamma_body=0.0)
    b1 = BiasPoint(vgs=0.7, vds=1.5, vbs=0.0)   # vov = 0.2
    b2 = BiasPoint(vgs=0.9, vds=1.5, vbs=0.0)   # vov = 0.4, gm doubles
    assert noise_psd(p, b2, "flicker", f=1e3) == \
        pytest.approx(4 * noise_psd(p, b1, "flicker", f=1e3), rel=1e-12)
    assert noise_psd(p, b2, "thermal") == \
        pytest.approx(2 * noise_psd(p, b1, "thermal"), rel=1e-12)


def test_noise_psd_expanded_form_matches():
    # saturation-mode flicker written out from the substituted expressions,
    # independent of the generic psd code path
    p = make_params()
    rng = np.random.default_rng(11)
    for _ in range(20):
        vbs = rng.uniform(-0.3, 0.3)
        vgs = p.vth0 - p.n * vbs + rng.uniform(0.1, 0.8)
        vov = vgs + p.n * vbs - p.vth0
        bias = BiasPoint(vgs=vgs, vds=vov + rng.uniform(0.0, 1.0), vbs=vbs)
        f = 1e3
        expanded = (p.kf * p.mu_cox ** 2 * p.w * (p.n + 1) ** 2
                    / (p.l ** 3 * f) * vov ** 2)
        assert noise_psd(p, bias, "flicker", f=f) == \
            pytest.approx(expanded, rel=1e-12)


def test_noise_proportionality_random_biases():
    p = make_params()
    rng = np.random.default_rng(5)
    vgs = rng.uniform(0.0, 3.0, 1000)
    vds = rng.uniform(0.0, 3.0, 1000)
    vbs = rng.uniform(-0.5, 0.3, 1000)
    bias = BiasPoint(vgs=vgs, vds=vds, vbs=vbs)
    gm = np.asarray(transconductance(p, bias))
    fl = np.asarray(noise_psd(p, bias, "flicker", f=1e3))
    th = np.asarray(noise_psd(p, bias, "thermal"))
    on = gm > 0
    assert np.all(np.abs(fl[on] / gm[on] ** 2
                         - p.kf / (p.w * p.l) / 1e3) <
                  1e-12 * p.kf / (p.w * p.l) / 1e3)
    ratio_th = th[on] / gm[on]
    assert np.all(np.abs(ratio_th - ratio_th[0]) < 1e-12 * ratio_th[0])
    assert np.all(fl[~on] == 0.0) and np.all(th[~on] == 0.0)


def test_classification_total_and_consistent():
    p = make_params()
    rng = np.random.default_rng(17)
    for _ in range(200):
        b = BiasPoint(vgs=rng.uniform(-1, 3), vds=rng.uniform(-1, 3),
                      vbs=rng.uniform(-1, 0.5))
        region = classify_region(p, b)
        vth = p.vth0 - p.n * b.vbs
        if b.vgs < vth:
            assert region is OperatingRegion.CUTOFF
        elif b.vds >= b.vgs - vth:
            assert region is OperatingRegion.SATURATION
        else:
            assert region is OperatingRegion.TRIODE
