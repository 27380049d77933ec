"""Demo/verification front end for the target emulator.

Spawns a fleet from a manifest, prints the bound endpoints and the oracle
report (the findings a correct scan must produce) for diffing.
"""

from __future__ import annotations

import argparse
import asyncio
import sys
from typing import Optional, Sequence

from .fleet import spawn_fleet
from .manifest import FleetManifest, example_manifest, oracle_report_csv


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="roborecon-mocknet",
        description=(
            "Hermetic target emulator: spawns ROS masters, SROS nodes, router "
            "consoles and decoys from a fleet manifest and prints the oracle "
            "report every correct scan must reproduce."
        ),
    )
    parser.add_argument("manifest", nargs="?", help="fleet manifest (JSON)")
    parser.add_argument("--oracle", action="store_true", help="print the oracle report without spawning")
    parser.add_argument("--serve", action="store_true", help="spawn and keep serving until interrupted")
    parser.add_argument("--write-example", metavar="PATH", help="write a sample manifest and exit")
    return parser


def entrypoint(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    if args.write_example:
        example_manifest().save(args.write_example)
        print(f"example manifest written to {args.write_example}")
        return 0
    if not args.manifest:
        build_parser().print_help()
        return 1
    try:
        manifest = FleetManifest.load(args.manifest)
    except (OSError, ValueError, KeyError) as exc:
        print(f"cannot load manifest: {exc}", file=sys.stderr)
        return 2
    if args.oracle:
        sys.stdout.write(oracle_report_csv(manifest).decode("utf-8"))
        return 0
    return asyncio.run(_spawn_and_report(manifest, serve=args.serve))


async def _spawn_and_report(manifest: FleetManifest, serve: bool) -> int:
    fleet = await spawn_fleet(manifest)
    try:
        print("# endpoints")
        for host in fleet.hosts:
            print(f"{host.spec.kind} {host.spec.address}:{host.spec.port}")
        print("# oracle")
        sys.stdout.write(oracle_report_csv(fleet.manifest).decode("utf-8"))
        if serve:
            print("# serving; interrupt to stop", flush=True)
            try:
                await asyncio.Event().wait()
            except (KeyboardInterrupt, asyncio.CancelledError):
                pass
    finally:
        await fleet.aclose()
    return 0


if __name__ == "__main__":
    raise SystemExit(entrypoint())
