"""Pump configuration: identity, geometry, timing and the noise model.

The two noise knobs are run-level systematic errors, drawn once per run
from a truncated normal:

* ``step_volume_sigma_pct`` — std dev (%) of the measurement-chain scale
  factor: the recorded mass of what was delivered reads (1+eps) times the
  true mass before quantization. Models syringe/scale calibration error.
* ``timer_jitter_pct`` — std dev (%) of the step timer's rate error: all
  step periods stretch by a common (1+eta). Models oscillator tolerance.

Per-step independent jitter averages out over the thousands of steps in
any real plan and cannot shift run-level volume or rate errors, which is
why both knobs are systematic; zero (the default) disables them.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, fields
from pathlib import Path


@dataclass(frozen=True)
class NoiseConfig:
    step_volume_sigma_pct: float = 0.0
    timer_jitter_pct: float = 0.0

    def __post_init__(self):
        if self.step_volume_sigma_pct < 0 or self.timer_jitter_pct < 0:
            raise ValueError("noise sigmas must be non-negative")


@dataclass
class PumpConfig:
    server_url: str = "http://127.0.0.1:8470"
    username: str = "patient001"
    password: str = "demo-password"
    mac: str = "02:00:00:00:00:01"
    patient_id: str = "p001"
    polling_interval_s: float = 5.0
    syringe_inner_diameter_mm: float = 14.5
    travel_per_step_mm: float = 0.0018
    density_g_per_ml: float = 1.0
    scale_resolution_g: float = 0.01
    drop_volume_ml: float = 0.05
    max_consecutive_failures: int = 3
    noise: NoiseConfig = field(default_factory=NoiseConfig)

    def __post_init__(self):
        positive = (
            "polling_interval_s",
            "syringe_inner_diameter_mm",
            "travel_per_step_mm",
            "density_g_per_ml",
            "scale_resolution_g",
            "drop_volume_ml",
        )
        for name in positive:
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.max_consecutive_failures < 1:
            raise ValueError("max_consecutive_failures must be at least 1")
        if isinstance(self.noise, dict):
            self.noise = NoiseConfig(**self.noise)

    @classmethod
    def load(cls, path: str | Path) -> "PumpConfig":
        raw = json.loads(Path(path).read_text())
        if not isinstance(raw, dict):
            raise ValueError(f"{path}: config must be a JSON object")
        known = {f.name for f in fields(cls)}
        unknown = set(raw) - known
        if unknown:
            raise ValueError(f"{path}: unknown config key(s): {', '.join(sorted(unknown))}")
        return cls(**raw)
