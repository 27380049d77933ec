"""Spawn a manifest into live loopback endpoints with full rollback on
partial failure."""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Optional, Sequence

from . import certs
from .decoys import ClosedPort, EchoDecoy, InstrumentedAcceptor, PlainHttpDecoy
from .httpbase import MockHttpServer
from .manifest import (
    KIND_DECOY,
    KIND_ROS_MASTER,
    KIND_ROUTER,
    KIND_SROS_NODE,
    FleetManifest,
    HostSpec,
)
from .rosmaster import MockRosMaster, RosGraph, rosout_graph
from .routers import ROUTER_MOCKS
from .srosnode import MockSrosNode

from ..adapters.routers import Vendor


@dataclass
class FleetHost:
    spec: HostSpec  # with the resolved port
    server: object  # has .address/.port/.aclose()


class RunningFleet:
    def __init__(self, hosts: list[FleetHost], original: FleetManifest) -> None:
        self.hosts = hosts
        self.original = original

    @property
    def manifest(self) -> FleetManifest:
        """The manifest with every ephemeral port resolved."""
        return FleetManifest(hosts=tuple(h.spec for h in self.hosts), version=self.original.version)

    def servers_of_kind(self, kind: str) -> list[object]:
        return [h.server for h in self.hosts if h.spec.kind == kind]

    def host_at(self, address: str, port: int) -> Optional[FleetHost]:
        for host in self.hosts:
            if host.spec.address == address and host.spec.port == port:
                return host
        return None

    async def aclose(self) -> None:
        for host in self.hosts:
            await host.server.aclose()


async def spawn_fleet(manifest: FleetManifest) -> RunningFleet:
    """Bind every manifest host; tear down everything if any bind fails."""
    hosts: list[FleetHost] = []
    try:
        for spec in manifest.hosts:
            server = _build_server(spec)
            await server.start(spec.address, spec.port)
            hosts.append(FleetHost(spec=replace(spec, port=server.port), server=server))
    except Exception:
        for started in hosts:
            try:
                await started.server.aclose()
            except Exception:
                pass
        raise
    return RunningFleet(hosts, manifest)


def _build_server(spec: HostSpec):
    config = spec.config
    if spec.kind == KIND_ROS_MASTER:
        graph = config.get("graph", {})
        if graph == "rosout":
            graph_obj = rosout_graph()
        elif graph in ("", {}, None):
            graph_obj = RosGraph()
        else:
            graph_obj = RosGraph.from_config(graph)
        return MockRosMaster(
            graph_obj,
            fault_all=bool(config.get("fault_all", False)),
            drop_methods=frozenset(config.get("drop_methods", ())),
        )
    if spec.kind == KIND_SROS_NODE:
        return _build_sros_node(config)
    if spec.kind == KIND_ROUTER:
        vendor = Vendor(config["vendor"])
        mock_cls = ROUTER_MOCKS[vendor]
        return mock_cls(
            username=config.get("username", "admin"),
            password=config.get("password", "admin"),
            open_access=bool(config.get("open_access", False)),
        )
    if spec.kind == KIND_DECOY:
        behavior = config["behavior"]
        if behavior == "closed":
            return ClosedPort()
        if behavior == "plain_http":
            return PlainHttpDecoy()
        if behavior == "echo":
            return EchoDecoy()
        if behavior == "faulting_xmlrpc":
            return MockRosMaster(RosGraph(), fault_all=True)
        if behavior == "acceptor":
            return InstrumentedAcceptor(hold_seconds=float(config.get("hold_seconds", 0.0)))
    raise ValueError(f"cannot build server for kind {spec.kind!r}")


def _build_sros_node(config: dict) -> MockSrosNode:
    policies = tuple(
        certs.PolicyBlock(
            kind_arc=int(kind_arc),
            permission_arc=int(permission_arc),
            values=tuple(v.encode("ascii") if isinstance(v, str) else bytes(v) for v in values),
        )
        for kind_arc, permission_arc, values in config.get("policies", ())
    )
    node_name = config.get("node_name", "master")
    if config.get("demo_ca", True):
        spec = certs.demo_node_spec(node_name, policies)
    else:
        subject = tuple((k, v) for k, v in config.get("subject", [["CN", node_name]]))
        issuer_cfg = config.get("issuer")
        issuer = tuple((k, v) for k, v in issuer_cfg) if issuer_cfg else None
        spec = certs.MockCertSpec(subject=subject, issuer=issuer, policies=policies, demo_ca=False)
    chain_length = int(config.get("chain_length", 1))
    chain = certs.build_chain(spec, chain_length) if chain_length > 1 else [certs.build_certificate(spec)]
    return MockSrosNode(
        chain,
        request_client_cert=bool(config.get("request_client_cert", True)),
        fragment_certificate=bool(config.get("fragment_certificate", False)),
    )
