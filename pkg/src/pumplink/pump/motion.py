"""Electromechanical motion model: prescriptions to stepper plans.

Pure geometry and arithmetic; the only unit subtlety is that the bore
area times travel gives mm³ and 1 mm³ = 1e-3 mL exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from pumplink.protocol import RATE_MAX_ML_H, RATE_MIN_ML_H, InfusionIndex

from pumplink.pump.config import PumpConfig


def volume_per_step(config: PumpConfig) -> float:
    """Liquid displaced by one full step, in mL: pi*(d/2)^2*travel."""
    radius_mm = config.syringe_inner_diameter_mm / 2.0
    return math.pi * radius_mm * radius_mm * config.travel_per_step_mm * 1e-3


@dataclass(frozen=True)
class InfusionPlan:
    total_steps: int
    step_period_s: float

    @property
    def duration_s(self) -> float:
        return self.total_steps * self.step_period_s


def plan_infusion(index: InfusionIndex, config: PumpConfig) -> InfusionPlan:
    """Step count and cadence realizing (volume, rate).

    total_steps rounds volume to the nearest whole step, so the planned
    volume is within half a step of the request; the period realizes the
    requested rate exactly, leaving duration within one period of
    volume/rate.
    """
    vps = volume_per_step(config)
    if vps <= 0:
        raise ValueError("volume per step must be positive; check pump geometry")
    rate_ml_h = float(index.rate_ml_h)
    if not (float(RATE_MIN_ML_H) <= rate_ml_h <= float(RATE_MAX_ML_H)):
        raise ValueError(f"rate {rate_ml_h} mL/h outside deliverable range")
    total_steps = int(round(float(index.volume_ml) / vps))
    step_period_s = vps / (rate_ml_h / 3600.0)
    return InfusionPlan(total_steps=total_steps, step_period_s=step_period_s)
