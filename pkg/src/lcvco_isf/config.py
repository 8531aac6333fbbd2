"""Strict parsing of the toolkit's INI-style config files.

Sections [device], [steady_state], [tank], [offsets] are mandatory and
fully specified (no silent defaults for physical constants); [sim] is
optional and carries documented desk-scale defaults.  Unknown sections,
unknown keys, duplicates, and malformed numbers are all fatal, with the
offending line number in the message.  Numeric values accept SI-prefixed
unit suffixes ("1.8V", "10MHz", "4nH", "100um", "62.832M"); the unit
letters themselves are not dimension-checked, only stripped.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass
from pathlib import Path

from .design import FeedbackRealization, feedback_synthesize
from .device import DeviceParams
from .errors import ConfigError
from .metrics import TankParams
from .regions import SteadyStateConfig
from .sim import SimConfig

_PREFIXES = {"f": 1e-15, "p": 1e-12, "n": 1e-9, "u": 1e-6, "µ": 1e-6,
             "m": 1e-3, "k": 1e3, "M": 1e6, "G": 1e9, "T": 1e12}
_UNITS = {"V", "Hz", "H", "F", "A", "K", "s", "m", "Ohm", "ohm", "rad"}

_NUM_RE = re.compile(
    r"^([+-]?(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)\s*([a-zA-Zµ]*)$")


def parse_quantity(text: str) -> float:
    """Float from a number with an optional SI prefix and/or unit suffix.

    A suffix that names a unit outright counts as bare ("m" is metres,
    "K" kelvin); otherwise the first character must be an SI prefix and
    the rest, if any, a unit ("mV", "k", "MHz").
    """
    m = _NUM_RE.match(text.strip())
    if not m:
        raise ValueError(f"malformed number {text!r}")
    value = float(m.group(1))
    suffix = m.group(2)
    if not suffix or suffix in _UNITS:
        return value
    if suffix[0] in _PREFIXES and (len(suffix) == 1 or suffix[1:] in _UNITS):
        return value * _PREFIXES[suffix[0]]
    raise ValueError(f"unrecognized unit suffix {suffix!r} in {text!r}")


def _parse_bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("on", "true", "yes", "1"):
        return True
    if t in ("off", "false", "no", "0"):
        return False
    raise ValueError(f"expected a boolean (on/off), got {text!r}")


_SECTIONS = {
    "device": {"mu_cox", "w", "l", "vth0", "gamma_body", "phi_s", "kf",
               "gamma_ch", "temperature", "flicker_corner"},
    "steady_state": {"a", "vdc0", "a1", "vdc1", "omega"},
    "tank": {"l", "c", "rp"},
    "sim": {"feedback", "k", "vb", "cc", "dt", "duration", "seed", "thermal",
            "flicker", "flicker_stages", "flicker_corner", "hp_corner",
            "vdd", "init_kick", "store_decim"},
    "offsets": {"values"},
}
_MANDATORY = {"device", "steady_state", "tank", "offsets"}


@dataclass
class ToolConfig:
    """Validated configuration of the whole toolkit."""

    device: DeviceParams
    steady_state: SteadyStateConfig
    tank: TankParams
    sim: SimConfig | None
    offsets: list
    flicker_corner_hz: float
    output_dir: Path = Path("out")
    sim_k: float | None = None


def _read_sections(path):
    """Raw (section -> key -> (value, line)) mapping with strict checks."""
    sections = {}
    current = None
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].split(";", 1)[0].strip()
            if not line:
                continue
            if line.startswith("[") and line.endswith("]"):
                name = line[1:-1].strip()
                if name not in _SECTIONS:
                    raise ConfigError(f"unknown section [{name}]",
                                      path=path, line=lineno)
                if name in sections:
                    raise ConfigError(f"duplicate section [{name}]",
                                      path=path, line=lineno)
                sections[name] = {}
                current = name
                continue
            if "=" not in line:
                raise ConfigError(f"expected 'key = value', got {line!r}",
                                  path=path, line=lineno)
            if current is None:
                raise ConfigError("key outside of any section",
                                  path=path, line=lineno)
            key, value = (s.strip() for s in line.split("=", 1))
            if key not in _SECTIONS[current]:
                raise ConfigError(f"unknown key {key!r} in [{current}]",
                                  path=path, line=lineno)
            if key in sections[current]:
                raise ConfigError(f"duplicate key {key!r} in [{current}]",
                                  path=path, line=lineno)
            sections[current][key] = (value, lineno)
    return sections


class _Section:
    def __init__(self, path, name, data):
        self.path = path
        self.name = name
        self.data = data

    def quantity(self, key, default=None):
        if key not in self.data:
            if default is not None:
                return default
            raise ConfigError(f"missing mandatory key {key!r} in [{self.name}]",
                              path=self.path)
        value, lineno = self.data[key]
        try:
            return parse_quantity(value)
        except ValueError as exc:
            raise ConfigError(str(exc), path=self.path, line=lineno) from exc

    def boolean(self, key, default):
        if key not in self.data:
            return default
        value, lineno = self.data[key]
        try:
            return _parse_bool(value)
        except ValueError as exc:
            raise ConfigError(str(exc), path=self.path, line=lineno) from exc

    def integer(self, key, default):
        if key not in self.data:
            return default
        return int(round(self.quantity(key)))

    def has(self, key):
        return key in self.data


def parse_config(path) -> ToolConfig:
    """Parse and validate a config file into a ToolConfig."""
    path = Path(path)
    if not path.exists():
        raise ConfigError("config file not found", path=path)
    raw = _read_sections(path)
    for name in _MANDATORY:
        if name not in raw:
            raise ConfigError(f"missing mandatory section [{name}]", path=path)

    dev_s = _Section(path, "device", raw["device"])
    device = DeviceParams(
        mu_cox=dev_s.quantity("mu_cox"),
        w=dev_s.quantity("w"),
        l=dev_s.quantity("l"),
        vth0=dev_s.quantity("vth0"),
        gamma_body=dev_s.quantity("gamma_body"),
        phi_s=dev_s.quantity("phi_s"),
        kf=dev_s.quantity("kf"),
        gamma_ch=dev_s.quantity("gamma_ch"),
        temperature=dev_s.quantity("temperature"),
    )
    flicker_corner_hz = dev_s.quantity("flicker_corner")

    ss_s = _Section(path, "steady_state", raw["steady_state"])
    steady = SteadyStateConfig(
        a=ss_s.quantity("a"), vdc0=ss_s.quantity("vdc0"),
        a1=ss_s.quantity("a1"), vdc1=ss_s.quantity("vdc1"),
        omega=ss_s.quantity("omega"))

    tank_s = _Section(path, "tank", raw["tank"])
    tank = TankParams(l=tank_s.quantity("l"), c=tank_s.quantity("c"),
                      rp=tank_s.quantity("rp"))

    off_s = _Section(path, "offsets", raw["offsets"])
    if not off_s.has("values"):
        raise ConfigError("missing mandatory key 'values' in [offsets]", path=path)
    text, lineno = off_s.data["values"]
    offsets = []
    for tok in re.split(r"[,\s]+", text.strip()):
        if not tok:
            continue
        try:
            offsets.append(parse_quantity(tok))
        except ValueError as exc:
            raise ConfigError(str(exc), path=path, line=lineno) from exc
    if not offsets or sorted(offsets) != offsets or min(offsets) <= 0:
        raise ConfigError("offsets must be positive and strictly increasing",
                          path=path, line=lineno)

    sim = None
    sim_k = None
    if "sim" in raw:
        sim_s = _Section(path, "sim", raw["sim"])
        vdd = sim_s.quantity("vdd", steady.vdc0)
        f0 = tank.f0
        feedback = None
        if sim_s.has("k"):
            sim_k = sim_s.quantity("k")
        if sim_s.boolean("feedback", False):
            if sim_k is None:
                raise ConfigError("feedback = on requires key 'k' in [sim]",
                                  path=path)
            cc = sim_s.quantity("cc", 1e-9)
            if sim_s.has("vb"):
                feedback = FeedbackRealization(k=sim_k, vb=sim_s.quantity("vb"),
                                               cc=cc)
            else:
                feedback = feedback_synthesize(sim_k, device.vth0, vdd, cc=cc)
        sim = SimConfig(
            tank=tank,
            device=device,
            feedback=feedback,
            dt=sim_s.quantity("dt", 1.0 / (200.0 * f0)),
            duration=sim_s.quantity("duration", 4e-3),
            seed=sim_s.integer("seed", 1),
            thermal=sim_s.boolean("thermal", True),
            flicker=sim_s.boolean("flicker", True),
            flicker_stages=sim_s.integer("flicker_stages", 12),
            flicker_corner_hz=sim_s.quantity("flicker_corner", flicker_corner_hz),
            hp_corner_hz=sim_s.quantity("hp_corner", 0.0) or None,
            vdd=vdd,
            init_kick=sim_s.quantity("init_kick", 1e-3),
            store_decim=sim_s.integer("store_decim", 0) or None,
        )

    if not math.isclose(steady.omega, tank.omega0, rel_tol=0.5):
        # loose sanity tie between the analytic chain and the tank
        raise ConfigError(
            "steady_state.omega is more than 50% away from the tank "
            "resonance 1/sqrt(LC); check the config", path=path)

    return ToolConfig(device=device, steady_state=steady, tank=tank, sim=sim,
                      offsets=offsets, flicker_corner_hz=flicker_corner_hz,
                      sim_k=sim_k)
