"""
``talbot`` command line.

    talbot run <config.toml> [--output DIR] [--parallelism N] [--no-ledger]
    talbot validate <config.toml>
    talbot inspect <snapshot.qsnap>
    talbot diff <manifest.json> <manifest.json>
    talbot serve [--host HOST] [--port PORT]

Exit codes: 0 all points ok, 1 some points failed (or diff found differences),
2 the scenario was refused before any integration started.
"""

import argparse
import json
import logging
import sys

from talbot import __version__
from talbot.config import get_settings
from talbot.exceptions import ConfigParseError, ConfigurationError, OutputDirectoryError, SnapshotFormatError
from talbot.services.runner import diff_manifests, load_manifest, run_scenario
from talbot.services.scenario import describe, load_config
from talbot.services.snapshots import inspect_snapshot

logger = logging.getLogger("talbot")

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_INVALID = 2


def _print(payload: dict) -> None:
    print(json.dumps(payload, indent=2, sort_keys=True, default=str))


def cmd_run(args) -> int:
    try:
        cfg = load_config(args.config)
        manifest = run_scenario(
            cfg,
            output_dir=args.output,
            parallelism=args.parallelism,
            record=not args.no_ledger,
        )
    except (ConfigParseError, ConfigurationError, OutputDirectoryError) as exc:
        logger.error("%s: %s", args.config, exc)
        return EXIT_INVALID
    _print(
        {
            "name": manifest.name,
            "status": manifest.status,
            "output_dir": manifest.output_dir,
            "points": len(manifest.points),
            "failed": manifest.failed_count,
            "artifacts": len(manifest.artifacts),
        }
    )
    return manifest.exit_code


def cmd_validate(args) -> int:
    try:
        cfg = load_config(args.config)
    except (ConfigParseError, ConfigurationError) as exc:
        logger.error("%s: %s", args.config, exc)
        return EXIT_INVALID
    summary = describe(cfg)
    limit = get_settings().max_lattice_points
    summary["runnable"] = cfg.grid.size <= limit
    if not summary["runnable"]:
        logger.warning("lattice of %d points exceeds max_lattice_points=%d", cfg.grid.size, limit)
    _print(summary)
    return EXIT_OK


def cmd_inspect(args) -> int:
    try:
        header = inspect_snapshot(args.snapshot)
    except (OSError, SnapshotFormatError) as exc:
        logger.error("%s: %s", args.snapshot, exc)
        return EXIT_INVALID
    _print(header.as_dict())
    return EXIT_OK


def cmd_diff(args) -> int:
    try:
        first, second = load_manifest(args.first), load_manifest(args.second)
    except (OSError, ValueError) as exc:
        logger.error("cannot read manifest: %s", exc)
        return EXIT_INVALID
    report = diff_manifests(first, second)
    _print(report)
    return EXIT_OK if report["identical"] else EXIT_FAILED


def cmd_serve(args) -> int:
    import uvicorn

    uvicorn.run("talbot.main:app", host=args.host, port=args.port)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="talbot", description="Time-domain matter-wave Talbot simulator")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--log-level", default=None, help="overrides TALBOT_LOG_LEVEL")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="integrate every sweep point of a scenario")
    run.add_argument("config")
    run.add_argument("--output", default=None, help="output directory (default: <output_root>/<name>)")
    run.add_argument("--parallelism", type=int, default=None, help="concurrent sweep points")
    run.add_argument("--no-ledger", action="store_true", help="do not record the run in the ledger database")
    run.set_defaults(handler=cmd_run)

    validate = sub.add_parser("validate", help="parse a scenario and print the resolved setup")
    validate.add_argument("config")
    validate.set_defaults(handler=cmd_validate)

    inspect = sub.add_parser("inspect", help="print a snapshot header")
    inspect.add_argument("snapshot")
    inspect.set_defaults(handler=cmd_inspect)

    diff = sub.add_parser("diff", help="compare the artifact checksums of two manifests")
    diff.add_argument("first")
    diff.add_argument("second")
    diff.set_defaults(handler=cmd_diff)

    serve = sub.add_parser("serve", help="serve the run ledger over HTTP")
    serve.add_argument("--host", default="127.0.0.1")
    serve.add_argument("--port", type=int, default=8000)
    serve.set_defaults(handler=cmd_serve)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    level = args.log_level or get_settings().log_level
    logging.basicConfig(level=level.upper(), format="%(asctime)s %(levelname)s %(name)s: %(message)s")
    return args.handler(args)


if __name__ == "__main__":
    sys.exit(main())
