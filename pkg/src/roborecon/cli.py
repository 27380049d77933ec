"""Command-line front end: wires target acquisition, the scan engine, the
adapters, enrichment and reporting together.

Exit codes: 0 completed scan (zero findings included), 1 usage error,
2 fatal runtime error.
"""

from __future__ import annotations

import argparse
import asyncio
import dataclasses
import sys
from dataclasses import dataclass
from datetime import datetime, timezone
from typing import Optional, Sequence

from . import __version__, report
from .adapters import get_adapter
from .adapters.routers import RouterFinding, RouterFlowConfig, Vendor
from .engine import (
    PortParseError,
    PortSet,
    ScanOptions,
    TargetParseError,
    TargetSpec,
    collect_findings,
    parse_ports,
    parse_targets,
)
from .enrichment import ProviderError, ShodanIndexProvider, WhoisFixture, build_query, query_index

DESCRIPTION = """\
Reconnaissance toolkit for robot-related network endpoints.

Scan types (-t):
  ROS       probe for ROS masters over XML-RPC; -e footprints the full
            node/topic/service communication graph.
  SROS      harvest TLS certificates from SROS nodes without completing the
            handshake, decode access policies and flag demo-CA setups; -e
            sweeps every port of each confirmed host (slow and loud; meant
            for a low number of targets).
  IROUTERS  identify industrial router web consoles (Westermo, eWON, Moxa,
            Sierra Wireless) by their HTTP headers and audit factory
            credentials, splitting devices into secure / not secure.

Targets come from -a (address or CIDR block), -i (file, one address per
line) or, when neither is given, newline-delimited addresses on stdin so
the tool composes with ZMap/nmap pipes. IROUTERS targets can also be pulled
from an internet index with --shodan VENDOR (key via SHODAN_API_KEY).
"""

DEFAULT_PORTS = {"ROS": "11311", "SROS": "11311", "IROUTERS": "80,443"}


class CliUsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # type: ignore[override]
        raise CliUsageError(message)


@dataclass
class CliInvocation:
    adapter: str
    address: Optional[str]
    ports: Optional[str]
    extended: bool
    input_file: Optional[str]
    output: Optional[str]
    fmt: str
    rate: int
    concurrency: int
    timeout: float
    shodan: Optional[str]
    limit: int
    whois: Optional[str]
    aggregate: Optional[str]
    sros_ports: Optional[str]
    attempt_delay: float


def build_parser() -> _Parser:
    parser = _Parser(
        prog="roborecon",
        description=DESCRIPTION,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    parser.add_argument("-t", "--type", dest="adapter", choices=["ROS", "SROS", "IROUTERS"],
                        help="scan type / robot adapter")
    parser.add_argument("-a", "--address", help="target address or CIDR block")
    parser.add_argument("-p", "--ports", help="port, range (N-M) or comma list")
    parser.add_argument("-e", "--extended", action="store_true", help="extended (phase 2) footprinting")
    parser.add_argument("-i", "--input", dest="input_file", help="file with one target address per line")
    parser.add_argument("-o", "--output", help="write the structured report here")
    parser.add_argument("--format", dest="fmt", choices=["csv", "json"], default="csv",
                        help="report format for -o (default csv)")
    parser.add_argument("--rate", type=int, default=800, help="max probe initiations per second (default 800)")
    parser.add_argument("--concurrency", type=int, default=256, help="max simultaneous probes (default 256)")
    parser.add_argument("--timeout", type=float, default=3.0, help="connect timeout seconds (default 3)")
    parser.add_argument("--shodan", metavar="VENDOR", choices=[v.value for v in Vendor],
                        help="acquire IROUTERS targets from the Shodan index for this vendor")
    parser.add_argument("--limit", type=int, default=100, help="max index-provider results (default 100)")
    parser.add_argument("--whois", nargs="?", const="", default=None, metavar="TABLE",
                        help="enrich router findings with country/ASN (optional fixture table path)")
    parser.add_argument("--aggregate", choices=["vendor", "country"],
                        help="print an aggregate table after the scan")
    parser.add_argument("--sros-ports", dest="sros_ports",
                        help="narrow the SROS extended sweep (default: all 65535 ports)")
    parser.add_argument("--attempt-delay", dest="attempt_delay", type=float, default=1.0,
                        help="seconds between router login attempts per host (default 1)")
    parser.add_argument("--version", action="version", version=f"roborecon {__version__}")
    return parser


def parse_cli(argv: Sequence[str]) -> Optional[CliInvocation]:
    """Validated invocation, or None when the behavior description was
    printed (bare call). Raises CliUsageError on conflicts."""
    parser = build_parser()
    if not argv:
        parser.print_help()
        return None
    args = parser.parse_args(argv)
    if not args.adapter:
        raise CliUsageError("a scan type is required (-t ROS|SROS|IROUTERS)")
    if args.address and args.input_file:
        raise CliUsageError("-a and -i are mutually exclusive (stdin is used when both are absent)")
    if args.shodan and (args.address or args.input_file):
        raise CliUsageError("--shodan replaces -a/-i target acquisition")
    if args.shodan and args.adapter != "IROUTERS":
        raise CliUsageError("--shodan target acquisition applies to -t IROUTERS")
    return CliInvocation(
        adapter=args.adapter,
        address=args.address,
        ports=args.ports,
        extended=args.extended,
        input_file=args.input_file,
        output=args.output,
        fmt=args.fmt,
        rate=args.rate,
        concurrency=args.concurrency,
        timeout=args.timeout,
        shodan=args.shodan,
        limit=args.limit,
        whois=args.whois,
        aggregate=args.aggregate,
        sros_ports=args.sros_ports,
        attempt_delay=args.attempt_delay,
    )


def _acquire_targets(invocation: CliInvocation) -> TargetSpec:
    if invocation.shodan:
        provider = ShodanIndexProvider()
        results = query_index(provider, build_query(Vendor(invocation.shodan)), invocation.limit)
        addresses = tuple(dict.fromkeys(address for address, _ in results))
        return TargetSpec(addresses=addresses, source="stream")
    if invocation.address:
        return parse_targets(invocation.address, mode="auto")
    if invocation.input_file:
        return parse_targets(invocation.input_file, mode="file")
    return parse_targets(sys.stdin, mode="stream")


def _build_adapter(invocation: CliInvocation):
    if invocation.adapter == "SROS":
        sweep = parse_ports(invocation.sros_ports).ports if invocation.sros_ports else None
        return get_adapter("SROS", sweep_ports=sweep)
    if invocation.adapter == "IROUTERS":
        return get_adapter("IROUTERS", flow_config=RouterFlowConfig(attempt_delay=invocation.attempt_delay))
    return get_adapter(invocation.adapter)


async def _run_scan(invocation: CliInvocation) -> int:
    options = ScanOptions(
        concurrency=invocation.concurrency,
        rate=invocation.rate,
        connect_timeout=invocation.timeout,
        extended=invocation.extended,
    )
    adapter = _build_adapter(invocation)
    targets = _acquire_targets(invocation)
    port_spec = invocation.ports or DEFAULT_PORTS[invocation.adapter]
    ports = parse_ports(port_spec)

    started_at = datetime.now(timezone.utc)
    findings = await collect_findings(
        adapter, targets, ports, options,
        on_finding=lambda f: print(report.render_finding_text(f), flush=True),
    )
    finished_at = datetime.now(timezone.utc)

    if invocation.whois is not None:
        fixture = WhoisFixture.from_file(invocation.whois or None)
        findings = [_enrich(f, fixture) for f in findings]

    scan_report = report.ScanReport(
        findings=findings,
        metadata=report.ReportMetadata.for_scan(invocation.adapter, started_at, finished_at, options),
    )
    if invocation.output:
        written = report.write_report(scan_report, invocation.fmt, invocation.output)
        print(f"report written to {invocation.output} ({written} bytes, {invocation.fmt})")
    if invocation.aggregate:
        rows = report.aggregate(findings, invocation.aggregate)
        sys.stdout.write(report.render_aggregate_csv(rows).decode("utf-8"))
    positives = sum(1 for f in findings if report.render_finding_text(f).startswith("[+]"))
    print(f"scan complete: {len(findings)} findings, {positives} positive")
    return 0


def _enrich(finding, fixture: WhoisFixture):
    payload = finding.payload
    if not isinstance(payload, RouterFinding):
        return finding
    record = fixture.lookup(payload.address)
    return dataclasses.replace(finding, payload=dataclasses.replace(payload, enrichment=record))


def main(argv: Optional[Sequence[str]] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        invocation = parse_cli(argv)
    except CliUsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except (TargetParseError, PortParseError) as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    if invocation is None:
        return 0
    try:
        return asyncio.run(_run_scan(invocation))
    except (TargetParseError, PortParseError) as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except (ProviderError, OSError, ValueError) as exc:
        print(f"fatal: {exc}", file=sys.stderr)
        return 2
    except KeyboardInterrupt:
        print("interrupted", file=sys.stderr)
        return 2


def entrypoint() -> None:
    raise SystemExit(main())


if __name__ == "__main__":
    entrypoint()
