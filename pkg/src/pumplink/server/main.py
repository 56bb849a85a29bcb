"""Server CLI: run the HTTP server or generate seed fixtures."""

from __future__ import annotations

import argparse
import logging
import sys

import uvicorn

from pumplink.server.app import create_app
from pumplink.server.config import ServerConfig
from pumplink.server.core import ServerCore
from pumplink.server.fixtures import Fixture, make_fixture


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pump-server", description="Infusion auth/index server")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="start the HTTP server")
    run.add_argument("--config", help="JSON config file (env PUMPLINK_* overrides apply on top)")
    run.add_argument("--fixture", help="fixture file; overrides the config's fixture_path")
    run.add_argument("--host", help="bind address override")
    run.add_argument("--port", type=int, help="bind port override")
    run.add_argument("--quiet", action="store_true", help="suppress per-request access logs")

    gen = sub.add_parser("make-fixture", help="write a reproducible seed fixture")
    gen.add_argument("--patients", type=int, default=3, help="number of patient/device pairs")
    gen.add_argument("--out", required=True, help="output fixture path")
    gen.add_argument("--password", default=None, help="shared demo password")

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)

    if args.command == "make-fixture":
        kwargs = {} if args.password is None else {"password": args.password}
        make_fixture(args.patients, **kwargs).save(args.out)
        print(f"wrote fixture with {args.patients} patient(s) to {args.out}")
        return 0

    config = ServerConfig.load(args.config)
    if args.host:
        config.host = args.host
    if args.port:
        config.port = args.port
    fixture_path = args.fixture or config.fixture_path
    if not fixture_path:
        print("no fixture: pass --fixture or set fixture_path in the config", file=sys.stderr)
        return 2
    fixture = Fixture.load(fixture_path)

    core = ServerCore(config, fixture)
    app = create_app(core)
    logging.getLogger("uvicorn.error").setLevel(logging.WARNING)
    try:
        uvicorn.run(
            app,
            host=config.host,
            port=config.port,
            log_level="warning" if args.quiet else "info",
            access_log=not args.quiet,
        )
    finally:
        core.close()
    return 0


if __name__ == "__main__":
    sys.exit(main())
