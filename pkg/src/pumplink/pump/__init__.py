"""Body-worn syringe-pump simulator: the device-side authentication and
polling state machine plus the electromechanical motion model that turns
prescriptions into timed stepper steps and measured drops."""

from pumplink.pump.config import NoiseConfig, PumpConfig
from pumplink.pump.device import DropEvent, PumpPhase, PumpSimulator, TraceEvent
from pumplink.pump.motion import InfusionPlan, plan_infusion, volume_per_step
from pumplink.pump.transport import ClientTransport, HttpTransport, Transport, TransportError

__all__ = [
    "ClientTransport",
    "DropEvent",
    "HttpTransport",
    "InfusionPlan",
    "NoiseConfig",
    "PumpConfig",
    "PumpPhase",
    "PumpSimulator",
    "TraceEvent",
    "Transport",
    "TransportError",
    "plan_infusion",
    "volume_per_step",
]
