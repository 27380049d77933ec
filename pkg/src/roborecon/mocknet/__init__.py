"""Hermetic emulation of every target class the scanner understands:
ROS masters, SROS TLS nodes, the four router families and assorted decoys.
A fleet manifest is the single source of truth; the oracle derives every
expected finding from it."""

from .certs import MockCertSpec, PolicyBlock, build_certificate, build_chain  # noqa: F401
from .manifest import FleetManifest, HostSpec, expected_findings, oracle_report_csv  # noqa: F401
from .fleet import RunningFleet, spawn_fleet  # noqa: F401
