"""Pump simulator CLI."""

from __future__ import annotations

import argparse
import csv
import sys

from pumplink.clock import SystemClock, VirtualClock
from pumplink.pump.config import PumpConfig
from pumplink.pump.device import PumpPhase, PumpSimulator
from pumplink.pump.transport import HttpTransport

EVENT_CSV_FIELDS = [
    "t_s",
    "event_type",
    "steps_emitted",
    "volume_ml",
    "measured_mass_g",
    "token_suffix",
    "note",
]


def write_events_csv(path: str, sim: PumpSimulator) -> None:
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(EVENT_CSV_FIELDS)
        for e in sim.trace:
            writer.writerow(
                [
                    f"{e.t_s:.3f}",
                    e.kind,
                    e.steps_emitted,
                    f"{e.volume_ml:.6f}",
                    f"{e.measured_mass_g:.2f}",
                    e.token_suffix,
                    e.note,
                ]
            )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pump-sim", description="Syringe pump device simulator")
    sub = parser.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="run one device lifecycle against a server")
    run.add_argument("--config", help="JSON pump config file")
    run.add_argument("--server", help="server base URL override")
    run.add_argument("--seed", type=int, default=None, help="noise RNG seed")
    run.add_argument(
        "--accelerate",
        type=float,
        default=None,
        metavar="X",
        help="run against real time sped up X-fold (wall sleeps shrink by X)",
    )
    run.add_argument("--events-out", help="write the event trace to this CSV")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    config = PumpConfig.load(args.config) if args.config else PumpConfig()
    if args.server:
        config.server_url = args.server

    if args.accelerate and args.accelerate != 1.0:
        import time

        clock = VirtualClock(start=time.time(), mode="realtime", speedup=args.accelerate)
    else:
        clock = SystemClock()

    transport = HttpTransport(config.server_url)
    sim = PumpSimulator(config, transport, clock=clock, seed=args.seed)
    try:
        sim.run()
    finally:
        transport.close()
        if args.events_out:
            write_events_csv(args.events_out, sim)

    delivered = sim.measured_volume_ml
    print(
        f"phase={sim.phase.value} steps={sim.steps_emitted} "
        f"true_volume={sim.volume_delivered:.4f} mL measured={delivered:.2f} mL "
        f"drops={len(sim.drops)} polls={sim.totals.polls_succeeded}/{sim.totals.polls_scheduled} "
        f"logins={sim.totals.logins}"
    )
    return 0 if sim.phase is not PumpPhase.FAULT else 1


if __name__ == "__main__":
    sys.exit(main())
