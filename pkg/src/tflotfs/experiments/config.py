"""Experiment configuration: a flat, versioned JSON document.

Every field has a default, so ``{}`` is a valid config.  ``--override
key=value`` on the command line sets one field; the value is parsed as JSON
when possible (``snr_db=[0,10,20]``, ``speed_kmh=300``) and kept as a string
otherwise (``pulse=tfl``).
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
from dataclasses import dataclass, fields
from pathlib import Path

from ..pulses import DEFAULT_Q, DEFAULT_SPAN, TFL_DEFAULT_COEFFS

SCHEMA_VERSION = 1

PULSES = ("rc", "tfl")
CSI_MODES = ("perfect", "estimated")
CHANNEL_KINDS = ("ltv", "awgn")
CHAINS = ("waveform", "dd")


@dataclass(frozen=True)
class ExperimentConfig:
    schema_version: int = SCHEMA_VERSION

    # modem
    M: int = 32
    N: int = 16
    delta_f: float = 15e3
    f_c: float = 5.9e9
    M_cp: int = 16
    M_cs: int = 8

    # pulses
    pulses: tuple = PULSES
    rolloff: float = 0.22
    tfl_coeffs: tuple = TFL_DEFAULT_COEFFS
    tfl_scale: float | None = None
    Q: int = DEFAULT_Q
    span: int = DEFAULT_SPAN

    # channel
    channel: str = "ltv"
    P: int = 6
    pdp_decay: float = 1.0
    speed_kmh: float = 500.0
    fractional_delay: bool = True

    # pilot and estimator
    pilot: bool = True
    pcp_len: int = 9
    pilot_power_db: float = 30.0
    pilot_doppler_bin: int = 0
    basis: str = "dps"
    basis_size: int | None = None
    genie_noise: bool = True

    # simulation
    chain: str = "waveform"
    csi: tuple = CSI_MODES
    snr_db: tuple = (0.0, 5.0, 10.0, 15.0, 20.0)
    speeds_kmh: tuple = (0.0, 100.0, 200.0, 300.0, 400.0, 500.0)
    to_frac: tuple = (0.0, 0.1, 0.2, 0.3, 0.4)
    fixed_snr_db: float = 15.0
    min_trials: int = 100
    max_trials: int = 1000
    target_errors: int = 200
    batch: int = 20
    seed: int = 1

    # dumps
    dump_delays: tuple = (0.0, 0.3, 1.0)
    dump_window: float = 6.0
    spread_rolloffs: tuple = (0.0, 0.2, 0.5, 1.0)
    spread_delay: float = 0.4
    spread_doppler: float = 0.3
    spread_bin: tuple = (16, 8)

    def __post_init__(self):
        for name in ("pulses", "tfl_coeffs", "csi", "snr_db", "speeds_kmh", "to_frac",
                     "dump_delays", "spread_rolloffs", "spread_bin"):
            value = getattr(self, name)
            if isinstance(value, (str, int, float)):
                value = (value,)
            object.__setattr__(self, name, tuple(value))
        if self.schema_version != SCHEMA_VERSION:
            raise ValueError(f"config schema {self.schema_version} != supported {SCHEMA_VERSION}")
        bad = set(self.pulses) - set(PULSES)
        if bad or not self.pulses:
            raise ValueError(f"unknown pulse(s) {sorted(bad)}; choose from {PULSES}")
        if set(self.csi) - set(CSI_MODES) or not self.csi:
            raise ValueError(f"csi modes must be drawn from {CSI_MODES}")
        if self.channel not in CHANNEL_KINDS:
            raise ValueError(f"channel must be one of {CHANNEL_KINDS}")
        if self.chain not in CHAINS:
            raise ValueError(f"chain must be one of {CHAINS}")
        if not 1 <= self.min_trials <= self.max_trials:
            raise ValueError("need 1 <= min_trials <= max_trials")
        if self.batch < 1:
            raise ValueError("batch must be positive")
        if "estimated" in self.csi and not self.pilot:
            raise ValueError("estimated CSI needs the pilot")

    def to_dict(self) -> dict:
        return {f.name: _jsonable(getattr(self, f.name)) for f in fields(self)}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def hash(self) -> str:
        """Short digest of the canonical JSON; independent of output paths."""
        text = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(text.encode()).hexdigest()[:16]

    def replace(self, **changes) -> "ExperimentConfig":
        return dataclasses.replace(self, **changes)

    @property
    def Ts(self) -> float:
        return 1.0 / (self.M * self.delta_f)


def _jsonable(value):
    if isinstance(value, tuple):
        return [_jsonable(v) for v in value]
    return value


def from_dict(data: dict) -> ExperimentConfig:
    known = {f.name for f in fields(ExperimentConfig)}
    unknown = set(data) - known
    if unknown:
        raise ValueError(f"unknown config keys: {sorted(unknown)}")
    return ExperimentConfig(**data)


def load_config(path: str | Path | None) -> ExperimentConfig:
    if path is None:
        return ExperimentConfig()
    with open(path) as fh:
        return from_dict(json.load(fh))


def parse_override(text: str) -> tuple[str, object]:
    if "=" not in text:
        raise ValueError(f"override {text!r} is not key=value")
    key, raw = text.split("=", 1)
    key = key.strip()
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    return key, value


def apply_overrides(cfg: ExperimentConfig, overrides) -> ExperimentConfig:
    data = cfg.to_dict()
    for item in overrides or ():
        key, value = parse_override(item)
        if key not in data:
            raise ValueError(f"unknown config key {key!r}")
        data[key] = value
    return from_dict(data)


# sweep defaults for the figure-style runs
BER_SNR = ExperimentConfig(min_trials=500, max_trials=500)
BER_SPEED = ExperimentConfig(csi=("estimated",), min_trials=100, max_trials=400)
BER_TO_AWGN = ExperimentConfig(channel="awgn", pilot=False, csi=("perfect",), fixed_snr_db=20.0,
                               min_trials=100, max_trials=1000)
BER_TO_LTV = ExperimentConfig(csi=("perfect",), fractional_delay=False, fixed_snr_db=20.0,
                              min_trials=100, max_trials=400)
