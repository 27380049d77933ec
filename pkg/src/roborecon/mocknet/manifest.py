"""Fleet manifests: a versioned host list that is the single source of
truth for an emulated fleet. The oracle derives every finding a correct
scan must produce, so fleets double as ground truth for tests and demos."""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence, Union

from ..adapters.routers import Vendor, load_default_credentials

MANIFEST_VERSION = 1

KIND_ROS_MASTER = "ros_master"
KIND_SROS_NODE = "sros_node"
KIND_ROUTER = "router"
KIND_DECOY = "decoy"
KNOWN_KINDS = (KIND_ROS_MASTER, KIND_SROS_NODE, KIND_ROUTER, KIND_DECOY)

DECOY_BEHAVIORS = ("closed", "plain_http", "echo", "faulting_xmlrpc", "acceptor")


@dataclass(frozen=True)
class HostSpec:
    address: str
    port: int  # 0 requests an ephemeral port, resolved at spawn
    kind: str
    config: dict = field(default_factory=dict)


@dataclass(frozen=True)
class FleetManifest:
    hosts: tuple[HostSpec, ...]
    version: int = MANIFEST_VERSION

    def __post_init__(self) -> None:
        if self.version != MANIFEST_VERSION:
            raise ValueError(f"unsupported manifest version {self.version}")
        for host in self.hosts:
            if host.kind not in KNOWN_KINDS:
                raise ValueError(f"unknown host kind {host.kind!r}")
            if host.kind == KIND_DECOY:
                behavior = host.config.get("behavior", "")
                if behavior not in DECOY_BEHAVIORS:
                    raise ValueError(f"unknown decoy behavior {behavior!r}")
            if host.kind == KIND_ROUTER:
                vendor = host.config.get("vendor", "")
                Vendor(vendor)  # raises on junk

    @classmethod
    def from_hosts(cls, hosts: Sequence[HostSpec]) -> "FleetManifest":
        return cls(hosts=tuple(hosts))

    def dumps(self) -> str:
        return json.dumps(
            {
                "version": self.version,
                "hosts": [
                    {"address": h.address, "port": h.port, "kind": h.kind, "config": h.config}
                    for h in self.hosts
                ],
            },
            indent=2,
        ) + "\n"

    @classmethod
    def loads(cls, text: str) -> "FleetManifest":
        data = json.loads(text)
        return cls(
            version=data.get("version", 0),
            hosts=tuple(
                HostSpec(
                    address=h["address"],
                    port=int(h.get("port", 0)),
                    kind=h["kind"],
                    config=dict(h.get("config", {})),
                )
                for h in data["hosts"]
            ),
        )

    def save(self, path: str) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(self.dumps())

    @classmethod
    def load(cls, path: str) -> "FleetManifest":
        with open(path, "r", encoding="utf-8") as fh:
            return cls.loads(fh.read())


@dataclass(frozen=True)
class ExpectedFinding:
    address: str
    port: int
    adapter: str
    verdict: str
    attrs: tuple[tuple[str, str], ...] = ()

    def attr(self, name: str) -> Optional[str]:
        for key, value in self.attrs:
            if key == name:
                return value
        return None


def _router_security(config: dict) -> tuple[str, Optional[tuple[str, str]]]:
    """What a correct default-credential audit must conclude for this host."""
    vendor = Vendor(config["vendor"])
    if config.get("open_access", False):
        return "not_secure", None
    actual = (config.get("username", "admin"), config.get("password", "admin"))
    for pair in load_default_credentials().get(vendor, []):
        if pair == actual:
            return "not_secure", pair
    return "secure", None


def expected_findings(manifest: FleetManifest, adapter: str) -> list[ExpectedFinding]:
    """The exact findings a correct scan of this fleet yields per adapter.

    Covers one probe per manifest host (grid of the host's own port); the
    expected verdicts of cross-protocol probes follow from how each mock
    answers foreign protocols.
    """
    out: list[ExpectedFinding] = []
    for host in manifest.hosts:
        out.append(_expected_for_host(host, adapter))
    return out


def _expected_for_host(host: HostSpec, adapter: str) -> ExpectedFinding:
    base = dict(address=host.address, port=host.port, adapter=adapter)
    kind, config = host.kind, host.config

    if adapter == "ROS":
        if kind == KIND_ROS_MASTER:
            verdict = "xmlrpc_not_ros" if config.get("fault_all") else "ros_host"
            return ExpectedFinding(verdict=verdict, **base)
        if kind == KIND_DECOY:
            behavior = config["behavior"]
            if behavior == "closed":
                return ExpectedFinding(verdict="unreachable", **base)
            if behavior == "faulting_xmlrpc":
                return ExpectedFinding(verdict="xmlrpc_not_ros", **base)
            return ExpectedFinding(verdict="malformed", **base)
        # sros nodes and routers both fail to speak XML-RPC
        return ExpectedFinding(verdict="malformed", **base)

    if adapter == "SROS":
        if kind == KIND_SROS_NODE:
            return ExpectedFinding(
                verdict="sros_host",
                attrs=(
                    ("node_name", config.get("node_name", "")),
                    ("demo_ca", str(bool(config.get("demo_ca", True)))),
                ),
                **base,
            )
        if kind == KIND_DECOY:
            behavior = config["behavior"]
            if behavior == "closed":
                return ExpectedFinding(verdict="unreachable", **base)
            if behavior == "echo":
                return ExpectedFinding(verdict="not_tls", **base)
            if behavior == "acceptor":
                return ExpectedFinding(verdict="tls_error", **base)
            return ExpectedFinding(verdict="not_tls", **base)  # HTTP endpoints answer 400 in text
        return ExpectedFinding(verdict="not_tls", **base)  # ros master / router consoles speak HTTP

    if adapter == "IROUTERS":
        if kind == KIND_ROUTER:
            security, winning = _router_security(config)
            attrs = [("vendor", config["vendor"]), ("security", security)]
            if winning is not None:
                attrs.append(("credentials", ":".join(winning)))
            return ExpectedFinding(verdict="router", attrs=tuple(attrs), **base)
        if kind == KIND_DECOY:
            behavior = config["behavior"]
            if behavior == "closed":
                return ExpectedFinding(verdict="unreachable", **base)
            if behavior == "plain_http":
                return ExpectedFinding(verdict="unidentified", **base)
            if behavior == "faulting_xmlrpc":
                return ExpectedFinding(verdict="unidentified", **base)
            if behavior == "acceptor":
                return ExpectedFinding(verdict="not_http", **base)
            return ExpectedFinding(verdict="not_http", **base)  # echo
        if kind == KIND_ROS_MASTER:
            return ExpectedFinding(verdict="unidentified", **base)
        return ExpectedFinding(verdict="not_http", **base)  # sros node: TLS listener

    raise ValueError(f"unknown adapter {adapter!r}")


def oracle_not_secure_count(manifest: FleetManifest) -> int:
    return sum(
        1
        for host in manifest.hosts
        if host.kind == KIND_ROUTER and _router_security(host.config)[0] == "not_secure"
    )


def oracle_report_csv(manifest: FleetManifest, adapters: Sequence[str] = ("ROS", "SROS", "IROUTERS")) -> bytes:
    """Expected-findings table for diffing a scan against the manifest."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\r\n")
    writer.writerow(["adapter", "address", "port", "verdict", "attrs"])
    for adapter in adapters:
        for finding in expected_findings(manifest, adapter):
            attrs = ";".join(f"{k}={v}" for k, v in finding.attrs)
            writer.writerow([finding.adapter, finding.address, finding.port, finding.verdict, attrs])
    return buf.getvalue().encode("utf-8")


def example_manifest() -> FleetManifest:
    """A small three-technology fleet used by the demo command."""
    hosts = [
        HostSpec("127.0.0.1", 0, KIND_ROS_MASTER, {"graph": "rosout"}),
        HostSpec("127.0.0.1", 0, KIND_SROS_NODE, {"node_name": "master", "demo_ca": True}),
        HostSpec(
            "127.0.0.1", 0, KIND_SROS_NODE,
            {
                "node_name": "talker",
                "demo_ca": True,
                "policies": [
                    [1, 1, ["**"]],
                    [2, 1, ["/chatter", "/rosout"]],
                    [3, 2, ["**"]],
                    [4, 1, ["/talker/get_loggers", "/talker/set_logger_level"]],
                    [5, 1, ["/use_sim_time"]],
                ],
            },
        ),
        HostSpec("127.0.0.1", 0, KIND_ROUTER, {"vendor": "ewon", "username": "adm", "password": "adm"}),
        HostSpec("127.0.0.1", 0, KIND_ROUTER, {"vendor": "westermo", "username": "admin", "password": "s3cret!"}),
        HostSpec("127.0.0.1", 0, KIND_DECOY, {"behavior": "plain_http"}),
        HostSpec("127.0.0.1", 0, KIND_DECOY, {"behavior": "closed"}),
    ]
    return FleetManifest.from_hosts(hosts)
