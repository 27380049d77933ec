"""roborecon: reconnaissance toolkit for robot middleware endpoints.

Detects and footprints ROS masters, SROS-protected nodes and industrial
router web consoles, classifies their security posture and emits structured
reports. Ships with a hermetic target emulator (`roborecon.mocknet`) so
every procedure is verifiable without touching a real network.
"""

__version__ = "0.1.0"

from .engine import (  # noqa: F401
    Finding,
    NegativeProbe,
    PortSet,
    PortParseError,
    ScanOptions,
    Target,
    TargetParseError,
    TargetSpec,
    collect_findings,
    parse_ports,
    parse_targets,
    run_scan,
)
