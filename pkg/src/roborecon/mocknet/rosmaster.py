"""Emulated ROS master: serves the read-only master API over XML-RPC from a
declarative graph, logging every call so tests can assert the scanner never
mutates anything."""

from __future__ import annotations

import xmlrpc.client
from dataclasses import dataclass, field
from typing import Optional

from .httpbase import HttpReply, HttpRequest, MockHttpServer

NOT_SUPPORTED_FAULT = 'method "{method}" is not supported'


@dataclass
class RosGraph:
    nodes: dict[str, str] = field(default_factory=dict)  # node name -> xmlrpc uri
    topics: dict[str, str] = field(default_factory=dict)  # topic -> message type
    publishers: dict[str, list[str]] = field(default_factory=dict)  # topic -> node names
    subscribers: dict[str, list[str]] = field(default_factory=dict)
    services: dict[str, list[str]] = field(default_factory=dict)  # service -> providers

    @classmethod
    def from_config(cls, config: dict) -> "RosGraph":
        return cls(
            nodes=dict(config.get("nodes", {})),
            topics=dict(config.get("topics", {})),
            publishers={k: list(v) for k, v in config.get("publishers", {}).items()},
            subscribers={k: list(v) for k, v in config.get("subscribers", {}).items()},
            services={k: list(v) for k, v in config.get("services", {}).items()},
        )


def rosout_graph(node_host: str = "127.0.0.1", node_port: int = 39719) -> RosGraph:
    """The graph a freshly started master exposes: just the log aggregator."""
    return RosGraph(
        nodes={"/rosout": f"http://{node_host}:{node_port}"},
        topics={"/rosout": "rosgraph_msgs/Log", "/rosout_agg": "rosgraph_msgs/Log"},
        publishers={"/rosout_agg": ["/rosout"]},
        subscribers={"/rosout": ["/rosout"]},
        services={
            "/rosout/set_logger_level": ["/rosout"],
            "/rosout/get_loggers": ["/rosout"],
        },
    )


class MockRosMaster(MockHttpServer):
    def __init__(
        self,
        graph: Optional[RosGraph] = None,
        *,
        fault_all: bool = False,
        drop_methods: frozenset[str] = frozenset(),
    ) -> None:
        super().__init__()
        self.graph = graph or RosGraph()
        self.fault_all = fault_all  # every method faults, like a non-ROS XML-RPC service
        self.drop_methods = set(drop_methods)  # close without answering: master died mid-call
        self.method_log: list[tuple[str, tuple]] = []

    @property
    def mutating_calls(self) -> list[str]:
        prefixes = ("register", "unregister", "set", "delete")
        return [m for m, _ in self.method_log if m.startswith(prefixes)]

    async def handle(self, request: HttpRequest) -> Optional[HttpReply]:
        try:
            params, method = xmlrpc.client.loads(request.body.decode("utf-8", errors="replace"))
        except Exception:
            return HttpReply(400, "Bad Request", [("Content-Type", "text/plain")], b"not xmlrpc")
        self.method_log.append((method or "", params))
        if method in self.drop_methods:
            return None
        if self.fault_all:
            return self._fault(NOT_SUPPORTED_FAULT.format(method=method))
        handler = getattr(self, f"_rpc_{method}", None)
        if handler is None:
            return self._fault(NOT_SUPPORTED_FAULT.format(method=method))
        return self._ok(handler(*params))

    def _ok(self, value) -> HttpReply:
        body = xmlrpc.client.dumps((value,), methodresponse=True).encode("utf-8")
        return HttpReply(200, "OK", [("Content-Type", "text/xml")], body)

    def _fault(self, message: str) -> HttpReply:
        body = xmlrpc.client.dumps(
            xmlrpc.client.Fault(1, message), methodresponse=True
        ).encode("utf-8")
        return HttpReply(200, "OK", [("Content-Type", "text/xml")], body)

    # --- read-only master API -------------------------------------------------

    def _rpc_getSystemState(self, caller_id: str):
        publishers = [[t, sorted(ns)] for t, ns in sorted(self.graph.publishers.items())]
        subscribers = [[t, sorted(ns)] for t, ns in sorted(self.graph.subscribers.items())]
        services = [[s, sorted(ns)] for s, ns in sorted(self.graph.services.items())]
        return [1, "current system state", [publishers, subscribers, services]]

    def _rpc_getTopicTypes(self, caller_id: str):
        return [1, "current topic types", [[t, ty] for t, ty in sorted(self.graph.topics.items())]]

    def _rpc_lookupNode(self, caller_id: str, node_name: str):
        uri = self.graph.nodes.get(node_name)
        if uri is None:
            return [-1, f"unknown node [{node_name}]", ""]
        return [1, f"node api for [{node_name}]", uri]
