import math

import pytest

from lcvco_isf.design import body_bias_design
from lcvco_isf.device import DeviceParams
from lcvco_isf.metrics import TankParams
from lcvco_isf.regions import SteadyStateConfig


@pytest.fixture(scope="session")
def device():
    return DeviceParams(mu_cox=2e-4, w=1e-4, l=1e-5, vth0=0.5, gamma_body=0.5,
                        phi_s=0.7, kf=1e-24, gamma_ch=1.0, temperature=300.0)


@pytest.fixture(scope="session")
def tank():
    return TankParams(l=2.533e-6, c=1e-10, rp=12000.0)


@pytest.fixture(scope="session")
def design_point(device):
    """Steady state at the analytic optimum for a = 1.7 V, vdc0 = 1.8 V."""
    sol = body_bias_design(1.7, 1.8, device)
    cfg = SteadyStateConfig(a=1.7, vdc0=1.8, a1=sol.a1, vdc1=sol.vdc1,
                            omega=2.0 * math.pi * 1e7)
    return cfg, sol
