"""ROS master detection and communication-graph footprinting.

Phase 1 asks the master API for its system state; phase 2 (extended mode)
resolves every node URI, fetches topic typing and joins publishers with
subscribers per topic. All calls are read-only master API methods.
"""

from __future__ import annotations

import asyncio
import xmlrpc.client
from dataclasses import dataclass
from enum import Enum
from typing import Optional, Sequence

from .. import httpio
from ..engine import NegativeProbe, ProbeContext, ScanOptions, Target
from . import register
from .base import Adapter

CALLER_ID = "/roborecon"
DEFAULT_SIMULATION_MARKERS = ("gazebo", "sim", "stage", "turtlesim")


class RosVerdict(str, Enum):
    ROS_HOST = "ros_host"
    XMLRPC_NOT_ROS = "xmlrpc_not_ros"
    UNREACHABLE = "unreachable"
    MALFORMED = "malformed"


class Nature(str, Enum):
    EMPTY = "empty"
    REAL = "real"
    SIMULATION = "simulation"


@dataclass(frozen=True)
class ROSMasterProbe:
    address: str
    port: int
    verdict: RosVerdict
    detail: str = ""


@dataclass(frozen=True)
class ROSNode:
    name: str
    uri: str  # empty when the master could not resolve it


@dataclass(frozen=True)
class ROSTopic:
    name: str
    msg_type: str


@dataclass(frozen=True)
class TopicCommunication:
    publishers: tuple[ROSNode, ...]
    topic: ROSTopic
    subscribers: tuple[ROSNode, ...]


@dataclass(frozen=True)
class ROSSystemState:
    nodes: tuple[ROSNode, ...]
    topics: tuple[ROSTopic, ...]
    services: tuple[str, ...]
    communications: tuple[TopicCommunication, ...]

    @property
    def published_topics(self) -> tuple[ROSTopic, ...]:
        return tuple(c.topic for c in self.communications if c.publishers)

    @property
    def subscribed_topics(self) -> tuple[ROSTopic, ...]:
        return tuple(c.topic for c in self.communications if c.subscribers)


class PartialFootprintError(Exception):
    """Master disappeared mid-footprint; carries whatever was gathered."""

    def __init__(self, message: str, partial: Optional[ROSSystemState]) -> None:
        super().__init__(message)
        self.partial = partial


async def _xmlrpc_call(ctx: ProbeContext, address: str, port: int, method: str, params: tuple, timeout: float):
    """One master API call. Returns the response value or raises:
    ConnectionError/OSError/TimeoutError for transport, xmlrpc Fault for
    faults, ValueError for responses that are not XML-RPC at all."""
    payload = xmlrpc.client.dumps(params, methodname=method).encode("utf-8")
    response = await httpio.request(
        ctx,
        address,
        port,
        "POST",
        "/",
        headers=[("Content-Type", "text/xml"), ("User-Agent", "roborecon-xmlrpc")],
        body=payload,
        timeout=timeout,
    )
    try:
        values, _ = xmlrpc.client.loads(response.body.decode("utf-8", errors="replace"))
    except xmlrpc.client.Fault:
        raise
    except Exception as exc:
        raise ValueError(f"response is not XML-RPC: {exc}") from exc
    return values[0]


async def check_ros_master(
    address: str,
    port: int,
    timeout: float = 3.0,
    *,
    ctx: Optional[ProbeContext] = None,
) -> ROSMasterProbe:
    """Phase 1: one getSystemState call decides whether a ROS master answers."""
    ctx = ctx or ProbeContext.standalone(ScanOptions(connect_timeout=timeout))
    try:
        value = await _xmlrpc_call(ctx, address, port, "getSystemState", (CALLER_ID,), timeout)
    except xmlrpc.client.Fault as fault:
        return ROSMasterProbe(address, port, RosVerdict.XMLRPC_NOT_ROS, fault.faultString)
    except (ConnectionError, TimeoutError, asyncio.TimeoutError, OSError) as exc:
        return ROSMasterProbe(address, port, RosVerdict.UNREACHABLE, _transport_detail(exc))
    except (ValueError, httpio.HttpError) as exc:
        return ROSMasterProbe(address, port, RosVerdict.MALFORMED, str(exc))
    if _well_formed_state(value):
        return ROSMasterProbe(address, port, RosVerdict.ROS_HOST, value[1] if len(value) > 1 else "")
    return ROSMasterProbe(address, port, RosVerdict.MALFORMED, f"unexpected getSystemState shape: {type(value).__name__}")


def _well_formed_state(value) -> bool:
    # status-code-1 response whose payload is the (publishers, subscribers, services) triple
    if not isinstance(value, (list, tuple)) or len(value) != 3:
        return False
    code, _, state = value
    if code != 1 or not isinstance(state, (list, tuple)) or len(state) != 3:
        return False
    return all(isinstance(part, (list, tuple)) for part in state)


def _transport_detail(exc: BaseException) -> str:
    if isinstance(exc, ConnectionRefusedError):
        return "Connection refused"
    if isinstance(exc, (TimeoutError, asyncio.TimeoutError)):
        return "Connection timed out"
    if "timed out" in str(exc).lower():
        return "Connection timed out"
    return str(exc) or type(exc).__name__


async def footprint_ros(
    address: str,
    port: int,
    timeout: float = 3.0,
    *,
    ctx: Optional[ProbeContext] = None,
) -> ROSSystemState:
    """Phase 2: rebuild the node/topic/service graph of a confirmed master.

    Node URIs that the master cannot resolve are kept with an empty uri.
    If the master vanishes mid-footprint a PartialFootprintError carries
    what was already gathered.
    """
    ctx = ctx or ProbeContext.standalone(ScanOptions(connect_timeout=timeout))
    try:
        value = await _xmlrpc_call(ctx, address, port, "getSystemState", (CALLER_ID,), timeout)
    except Exception as exc:
        raise PartialFootprintError(f"getSystemState failed: {exc}", None) from exc
    if not _well_formed_state(value):
        raise PartialFootprintError("master returned a malformed system state", None)
    publishers_raw, subscribers_raw, services_raw = value[2]

    node_names = sorted(
        {n for _, nodes in list(publishers_raw) + list(subscribers_raw) + list(services_raw) for n in nodes}
    )
    service_names = tuple(str(name) for name, _ in services_raw)

    nodes: dict[str, ROSNode] = {}
    for name in node_names:
        try:
            lookup = await _xmlrpc_call(ctx, address, port, "lookupNode", (CALLER_ID, name), timeout)
            uri = lookup[2] if _status_ok(lookup) else ""
        except xmlrpc.client.Fault:
            uri = ""
        except Exception as exc:
            raise PartialFootprintError(
                f"lookupNode({name}) failed: {exc}",
                _assemble_state(nodes, {}, service_names, publishers_raw, subscribers_raw),
            ) from exc
        nodes[name] = ROSNode(name=name, uri=str(uri))

    try:
        topics_value = await _xmlrpc_call(ctx, address, port, "getTopicTypes", (CALLER_ID,), timeout)
    except Exception as exc:
        raise PartialFootprintError(
            f"getTopicTypes failed: {exc}",
            _assemble_state(nodes, {}, service_names, publishers_raw, subscribers_raw),
        ) from exc
    topic_types = {}
    if _status_ok(topics_value):
        topic_types = {str(name): str(t) for name, t in topics_value[2]}

    return _assemble_state(nodes, topic_types, service_names, publishers_raw, subscribers_raw)


def _status_ok(value) -> bool:
    return isinstance(value, (list, tuple)) and len(value) == 3 and value[0] == 1


def _assemble_state(
    nodes: dict[str, ROSNode],
    topic_types: dict[str, str],
    services: tuple[str, ...],
    publishers_raw,
    subscribers_raw,
) -> ROSSystemState:
    pub_map = {str(t): [str(n) for n in ns] for t, ns in publishers_raw}
    sub_map = {str(t): [str(n) for n in ns] for t, ns in subscribers_raw}
    topic_names = sorted(set(pub_map) | set(sub_map) | set(topic_types))

    def topic_of(name: str) -> ROSTopic:
        return ROSTopic(name=name, msg_type=topic_types.get(name, "unknown/Unknown"))

    def node_of(name: str) -> ROSNode:
        return nodes.get(name, ROSNode(name=name, uri=""))

    communications = tuple(
        TopicCommunication(
            publishers=tuple(node_of(n) for n in pub_map.get(t, ())),
            topic=topic_of(t),
            subscribers=tuple(node_of(n) for n in sub_map.get(t, ())),
        )
        for t in topic_names
        if t in pub_map or t in sub_map
    )
    all_nodes = dict(nodes)
    for comm in communications:
        for node in comm.publishers + comm.subscribers:
            all_nodes.setdefault(node.name, node)
    return ROSSystemState(
        nodes=tuple(all_nodes[n] for n in sorted(all_nodes)),
        topics=tuple(topic_of(t) for t in topic_names),
        services=services,
        communications=communications,
    )


def classify_system(
    state: ROSSystemState, markers: Sequence[str] = DEFAULT_SIMULATION_MARKERS
) -> Nature:
    """Heuristic nature call: empty, simulation or real deployment.

    Empty is checked first (a bare master only carries /rosout), then any
    node or topic name containing a simulator marker flags a simulation.
    """
    names = {node.name for node in state.nodes}
    if names <= {"/rosout"}:
        return Nature.EMPTY
    haystack = [node.name.lower() for node in state.nodes] + [t.name.lower() for t in state.topics]
    if any(marker in name for name in haystack for marker in markers):
        return Nature.SIMULATION
    return Nature.REAL


@register
class RosAdapter(Adapter):
    name = "ROS"

    async def probe(self, target: Target, ctx: ProbeContext) -> list[tuple[Target, object]]:
        timeout = ctx.options.connect_timeout
        probe = await check_ros_master(target.address, target.port, timeout, ctx=ctx)
        if probe.verdict is not RosVerdict.ROS_HOST or not ctx.options.extended:
            return [(target, probe)]
        try:
            state = await footprint_ros(target.address, target.port, timeout, ctx=ctx)
        except PartialFootprintError as exc:
            if exc.partial is not None:
                return [(target, exc.partial)]
            return [(target, ROSMasterProbe(target.address, target.port, RosVerdict.ROS_HOST, f"footprint failed: {exc}"))]
        return [(target, state)]
