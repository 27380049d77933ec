"""Finding serialization (CSV/JSON), aggregation and console rendering.

Findings are sorted by (address, port) at serialization time regardless of
arrival order, so identical scan content produces byte-identical output.
JSON is lossless (payloads round-trip to equal objects); CSV is the flat
fixed-column view and round-trips at the schema level.
"""

from __future__ import annotations

import csv
import io
import ipaddress
import json
from dataclasses import dataclass, field
from datetime import datetime
from typing import BinaryIO, Iterable, Optional, Sequence, Union

from . import __version__
from .adapters import ros, sros
from .adapters.routers import (
    CredentialAttempt,
    RouterFinding,
    RouterModel,
    Security,
    Vendor,
)
from .engine import Finding, NegativeProbe, Target
from .enrichment import COUNTRY_UNKNOWN, EnrichmentRecord

CSV_COLUMNS = (
    "timestamp",
    "adapter",
    "address",
    "port",
    "verdict",
    "detail",
    "vendor",
    "security",
    "credentials",
    "country",
    "asn",
    "nature",
)

GRAND_TOTAL_KEY = "TOTAL"


@dataclass(frozen=True)
class ReportMetadata:
    tool_version: str
    started_at: datetime
    finished_at: datetime
    adapter: str
    options: dict

    @classmethod
    def for_scan(cls, adapter: str, started_at: datetime, finished_at: datetime, options) -> "ReportMetadata":
        return cls(
            tool_version=__version__,
            started_at=started_at,
            finished_at=finished_at,
            adapter=adapter,
            options={
                "concurrency": options.concurrency,
                "rate": options.rate,
                "connect_timeout": options.connect_timeout,
                "extended": options.extended,
            },
        )


@dataclass
class ScanReport:
    findings: list[Finding]
    metadata: Optional[ReportMetadata] = None


@dataclass(frozen=True)
class FlatRecord:
    """Payload reconstructed from a CSV row; echoes its columns verbatim."""

    verdict: str = ""
    detail: str = ""
    vendor: str = ""
    security: str = ""
    credentials: str = ""
    country: str = ""
    asn: str = ""
    nature: str = ""


@dataclass(frozen=True)
class AggregateRow:
    key: str
    total: int
    default_credentials: int
    changed_credentials: int
    proportion: float


def sort_findings(findings: Iterable[Finding]) -> list[Finding]:
    def sort_key(f: Finding):
        try:
            addr = int(ipaddress.IPv4Address(f.target.address))
        except ValueError:
            addr = -1
        return (addr, f.target.port, f.adapter, f.timestamp.isoformat(), _verdict_of(f.payload))

    return sorted(findings, key=sort_key)


# --- flat (CSV) view ---------------------------------------------------------

def _verdict_of(payload: object) -> str:
    if isinstance(payload, ros.ROSMasterProbe):
        return payload.verdict.value
    if isinstance(payload, ros.ROSSystemState):
        return "ros_host"
    if isinstance(payload, sros.SROSNodeIdentity):
        return "sros_host"
    if isinstance(payload, RouterFinding):
        return "router"
    if isinstance(payload, NegativeProbe):
        return payload.reason
    if isinstance(payload, FlatRecord):
        return payload.verdict
    return type(payload).__name__


def row_for_finding(finding: Finding) -> dict[str, str]:
    payload = finding.payload
    row = dict.fromkeys(CSV_COLUMNS, "")
    row["timestamp"] = finding.timestamp.isoformat()
    row["adapter"] = finding.adapter
    row["address"] = finding.target.address
    row["port"] = str(finding.target.port)
    row["verdict"] = _verdict_of(payload)

    if isinstance(payload, ros.ROSMasterProbe):
        row["detail"] = payload.detail
    elif isinstance(payload, ros.ROSSystemState):
        row["detail"] = (
            f"nodes={len(payload.nodes)} topics={len(payload.topics)} services={len(payload.services)}"
        )
        row["nature"] = ros.classify_system(payload).value
    elif isinstance(payload, sros.SROSNodeIdentity):
        row["detail"] = (
            f"node={payload.node_name} demo_ca={payload.demo_ca} policies={len(payload.policies)}"
        )
    elif isinstance(payload, RouterFinding):
        name, value = payload.model.signature_header
        row["detail"] = f"{name}: {value}"
        row["vendor"] = payload.model.vendor.value
        row["security"] = payload.security.value
        if payload.winning_credentials:
            row["credentials"] = ":".join(payload.winning_credentials)
        elif payload.open_access:
            row["credentials"] = "<open access>"
        if payload.enrichment:
            row["country"] = payload.enrichment.country
            row["asn"] = payload.enrichment.asn_description
    elif isinstance(payload, NegativeProbe):
        row["detail"] = payload.detail
    elif isinstance(payload, FlatRecord):
        row.update(
            verdict=payload.verdict, detail=payload.detail, vendor=payload.vendor,
            security=payload.security, credentials=payload.credentials,
            country=payload.country, asn=payload.asn, nature=payload.nature,
        )
    return row


def render_csv(report: ScanReport) -> bytes:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\r\n")
    writer.writerow(CSV_COLUMNS)
    for finding in sort_findings(report.findings):
        row = row_for_finding(finding)
        writer.writerow([row[col] for col in CSV_COLUMNS])
    return buf.getvalue().encode("utf-8")


def parse_csv(data: bytes) -> ScanReport:
    reader = csv.reader(io.StringIO(data.decode("utf-8")))
    rows = list(reader)
    if not rows or tuple(rows[0]) != CSV_COLUMNS:
        raise ValueError("not a roborecon CSV report (bad or missing header row)")
    findings = []
    for cells in rows[1:]:
        if not cells:
            continue
        row = dict(zip(CSV_COLUMNS, cells))
        findings.append(
            Finding(
                target=Target(row["address"], int(row["port"])),
                adapter=row["adapter"],
                payload=FlatRecord(
                    verdict=row["verdict"], detail=row["detail"], vendor=row["vendor"],
                    security=row["security"], credentials=row["credentials"],
                    country=row["country"], asn=row["asn"], nature=row["nature"],
                ),
                timestamp=datetime.fromisoformat(row["timestamp"]),
            )
        )
    return ScanReport(findings=findings, metadata=None)


# --- lossless (JSON) view ----------------------------------------------------

def _bytes_out(value: bytes) -> str:
    return value.decode("latin-1")


def _bytes_in(value: str) -> bytes:
    return value.encode("latin-1")


def payload_to_dict(payload: object) -> dict:
    if isinstance(payload, ros.ROSMasterProbe):
        return {
            "type": "ros_master_probe",
            "address": payload.address,
            "port": payload.port,
            "verdict": payload.verdict.value,
            "detail": payload.detail,
        }
    if isinstance(payload, ros.ROSSystemState):
        return {
            "type": "ros_system_state",
            "nodes": [{"name": n.name, "uri": n.uri} for n in payload.nodes],
            "topics": [{"name": t.name, "msg_type": t.msg_type} for t in payload.topics],
            "services": list(payload.services),
            "communications": [
                {
                    "publishers": [{"name": n.name, "uri": n.uri} for n in c.publishers],
                    "topic": {"name": c.topic.name, "msg_type": c.topic.msg_type},
                    "subscribers": [{"name": n.name, "uri": n.uri} for n in c.subscribers],
                }
                for c in payload.communications
            ],
        }
    if isinstance(payload, sros.SROSNodeIdentity):
        return {
            "type": "sros_node_identity",
            "address": payload.address,
            "port": payload.port,
            "node_name": payload.node_name,
            "demo_ca": payload.demo_ca,
            "policies": [
                {
                    "kind": p.kind.value,
                    "permission_arc": p.permission_arc,
                    "permission": p.permission,
                    "values": [_bytes_out(v) for v in p.values],
                }
                for p in payload.policies
            ],
            "subject": [list(pair) for pair in payload.subject],
            "issuer": [list(pair) for pair in payload.issuer],
        }
    if isinstance(payload, RouterFinding):
        return {
            "type": "router_finding",
            "address": payload.address,
            "port": payload.port,
            "vendor": payload.model.vendor.value,
            "signature_header": list(payload.model.signature_header),
            "security": payload.security.value,
            "winning_credentials": list(payload.winning_credentials) if payload.winning_credentials else None,
            "open_access": payload.open_access,
            "enrichment": (
                {
                    "address": payload.enrichment.address,
                    "country": payload.enrichment.country,
                    "asn_description": payload.enrichment.asn_description,
                }
                if payload.enrichment
                else None
            ),
        }
    if isinstance(payload, NegativeProbe):
        return {"type": "negative_probe", "reason": payload.reason, "detail": payload.detail}
    if isinstance(payload, FlatRecord):
        return {
            "type": "flat_record",
            "verdict": payload.verdict, "detail": payload.detail, "vendor": payload.vendor,
            "security": payload.security, "credentials": payload.credentials,
            "country": payload.country, "asn": payload.asn, "nature": payload.nature,
        }
    raise TypeError(f"unserializable payload type {type(payload).__name__}")


def payload_from_dict(data: dict) -> object:
    kind = data.get("type")
    if kind == "ros_master_probe":
        return ros.ROSMasterProbe(
            address=data["address"], port=data["port"],
            verdict=ros.RosVerdict(data["verdict"]), detail=data["detail"],
        )
    if kind == "ros_system_state":
        def node(d):
            return ros.ROSNode(name=d["name"], uri=d["uri"])

        def topic(d):
            return ros.ROSTopic(name=d["name"], msg_type=d["msg_type"])

        return ros.ROSSystemState(
            nodes=tuple(node(d) for d in data["nodes"]),
            topics=tuple(topic(d) for d in data["topics"]),
            services=tuple(data["services"]),
            communications=tuple(
                ros.TopicCommunication(
                    publishers=tuple(node(d) for d in c["publishers"]),
                    topic=topic(c["topic"]),
                    subscribers=tuple(node(d) for d in c["subscribers"]),
                )
                for c in data["communications"]
            ),
        )
    if kind == "sros_node_identity":
        return sros.SROSNodeIdentity(
            address=data["address"],
            port=data["port"],
            node_name=data["node_name"],
            demo_ca=data["demo_ca"],
            policies=tuple(
                sros.SROSPolicy(
                    kind=sros.PolicyKind(p["kind"]),
                    permission_arc=p["permission_arc"],
                    permission=p["permission"],
                    values=tuple(_bytes_in(v) for v in p["values"]),
                )
                for p in data["policies"]
            ),
            subject=tuple((k, v) for k, v in data["subject"]),
            issuer=tuple((k, v) for k, v in data["issuer"]),
        )
    if kind == "router_finding":
        winning = data["winning_credentials"]
        enrichment = data["enrichment"]
        return RouterFinding(
            address=data["address"],
            port=data["port"],
            model=RouterModel(
                vendor=Vendor(data["vendor"]),
                signature_header=tuple(data["signature_header"]),
            ),
            security=Security(data["security"]),
            winning_credentials=tuple(winning) if winning else None,
            open_access=data["open_access"],
            enrichment=EnrichmentRecord(**enrichment) if enrichment else None,
        )
    if kind == "negative_probe":
        return NegativeProbe(reason=data["reason"], detail=data["detail"])
    if kind == "flat_record":
        fields = {k: v for k, v in data.items() if k != "type"}
        return FlatRecord(**fields)
    raise ValueError(f"unknown payload type {kind!r}")


def render_json(report: ScanReport) -> bytes:
    meta = None
    if report.metadata is not None:
        meta = {
            "tool_version": report.metadata.tool_version,
            "started_at": report.metadata.started_at.isoformat(),
            "finished_at": report.metadata.finished_at.isoformat(),
            "adapter": report.metadata.adapter,
            "options": report.metadata.options,
        }
    document = {
        "metadata": meta,
        "findings": [
            {
                "address": f.target.address,
                "port": f.target.port,
                "adapter": f.adapter,
                "timestamp": f.timestamp.isoformat(),
                "payload": payload_to_dict(f.payload),
            }
            for f in sort_findings(report.findings)
        ],
    }
    return (json.dumps(document, sort_keys=True, indent=2) + "\n").encode("utf-8")


def parse_json(data: bytes) -> ScanReport:
    document = json.loads(data.decode("utf-8"))
    meta = document.get("metadata")
    metadata = None
    if meta is not None:
        metadata = ReportMetadata(
            tool_version=meta["tool_version"],
            started_at=datetime.fromisoformat(meta["started_at"]),
            finished_at=datetime.fromisoformat(meta["finished_at"]),
            adapter=meta["adapter"],
            options=meta["options"],
        )
    findings = [
        Finding(
            target=Target(entry["address"], entry["port"]),
            adapter=entry["adapter"],
            payload=payload_from_dict(entry["payload"]),
            timestamp=datetime.fromisoformat(entry["timestamp"]),
        )
        for entry in document["findings"]
    ]
    return ScanReport(findings=findings, metadata=metadata)


def write_report(report: ScanReport, fmt: str, destination: Union[str, BinaryIO]) -> int:
    """Serialize to CSV or JSON; returns the byte count written."""
    if fmt == "csv":
        blob = render_csv(report)
    elif fmt == "json":
        blob = render_json(report)
    else:
        raise ValueError(f"unknown report format {fmt!r}")
    if isinstance(destination, str):
        with open(destination, "wb") as fh:
            fh.write(blob)
    else:
        destination.write(blob)
    return len(blob)


def read_report(source: Union[str, bytes], fmt: str) -> ScanReport:
    if isinstance(source, str):
        with open(source, "rb") as fh:
            data = fh.read()
    else:
        data = source
    if fmt == "csv":
        return parse_csv(data)
    if fmt == "json":
        return parse_json(data)
    raise ValueError(f"unknown report format {fmt!r}")


# --- aggregation --------------------------------------------------------------

def aggregate(findings: Sequence[Finding], key: str) -> list[AggregateRow]:
    """Router counts grouped by country or vendor brand, descending by
    total, with a grand-total row appended. A device counts as
    default_credentials when its audit verdict was not secure."""
    if key not in ("country", "vendor"):
        raise ValueError(f"unknown aggregation key {key!r}")
    buckets: dict[str, list[RouterFinding]] = {}
    for finding in findings:
        payload = finding.payload
        if not isinstance(payload, RouterFinding):
            continue
        if key == "vendor":
            bucket = payload.model.vendor.brand
        else:
            bucket = payload.enrichment.country if payload.enrichment else COUNTRY_UNKNOWN
        buckets.setdefault(bucket, []).append(payload)

    rows = []
    for bucket, members in buckets.items():
        total = len(members)
        default = sum(1 for m in members if m.security is Security.NOT_SECURE)
        rows.append(_make_row(bucket, total, default))
    rows.sort(key=lambda r: (-r.total, r.key))

    grand_total = sum(r.total for r in rows)
    grand_default = sum(r.default_credentials for r in rows)
    rows.append(_make_row(GRAND_TOTAL_KEY, grand_total, grand_default))
    return rows


def _make_row(key: str, total: int, default: int) -> AggregateRow:
    return AggregateRow(
        key=key,
        total=total,
        default_credentials=default,
        changed_credentials=total - default,
        proportion=(default / total) if total else 0.0,
    )


def render_aggregate_csv(rows: Sequence[AggregateRow]) -> bytes:
    """Aggregate table with proportions at whole-percent precision (the
    JSON report keeps findings at full precision)."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\r\n")
    writer.writerow(["key", "total", "default_credentials", "changed_credentials", "proportion"])
    for row in rows:
        writer.writerow(
            [row.key, row.total, row.default_credentials, row.changed_credentials,
             f"{round(row.proportion * 100)}%"]
        )
    return buf.getvalue().encode("utf-8")


# --- console rendering ---------------------------------------------------------

def render_finding_text(finding: Finding) -> str:
    """Human-readable console block; positives prefixed [+], negatives [-]."""
    payload = finding.payload
    target = finding.target
    if isinstance(payload, ros.ROSMasterProbe):
        if payload.verdict is ros.RosVerdict.ROS_HOST:
            return f"[+] ROS host found at {target}"
        return f"[-] Error connecting to host {target} -> {payload.verdict.value}: {payload.detail}"
    if isinstance(payload, ros.ROSSystemState):
        return "\n".join([f"[+] ROS host found at {target}", _render_system_state(payload)])
    if isinstance(payload, sros.SROSNodeIdentity):
        return "\n".join([f"[+] SROS host found at {target}", _render_sros_identity(payload)])
    if isinstance(payload, RouterFinding):
        verdict = "not secure" if payload.security is Security.NOT_SECURE else "secure"
        name = payload.model.vendor.display_name
        return f"[+] {name} router in http://{target} is {verdict}"
    if isinstance(payload, NegativeProbe):
        detail = f": {payload.detail}" if payload.detail else ""
        return f"[-] Error connecting to host {target} -> {payload.reason}{detail}"
    return f"[?] {target}: {payload!r}"


def _render_system_state(state: ros.ROSSystemState) -> str:
    lines = []
    for node in state.nodes:
        lines.append(f"Node: {node.name} XMLRPCUri: {node.uri}")
    lines.append("")
    lines.append("    Published topics:")
    for topic in state.published_topics:
        lines.append(f"        * {topic.name} (Type: {topic.msg_type})")
    lines.append("")
    lines.append("    Subscribed topics:")
    for topic in state.subscribed_topics:
        lines.append(f"        * {topic.name} (Type: {topic.msg_type})")
    lines.append("")
    lines.append("    Services:")
    for service in state.services:
        lines.append(f"        * {service}")
    for index, comm in enumerate(state.communications):
        lines.append("")
        lines.append(f"    Communication {index}:")
        lines.append("        Publishers:")
        for node in comm.publishers:
            lines.append(f"            {node.name} {node.uri}".rstrip())
        lines.append(f"        Topic: {comm.topic.name} (Type: {comm.topic.msg_type})")
        lines.append("        Subscribers:")
        for node in comm.subscribers:
            lines.append(f"            {node.name} {node.uri}".rstrip())
    return "\n".join(lines)


_KIND_DISPLAY = {
    sros.PolicyKind.SUBSCRIPTABLE_TOPICS: "Subscriptable topics",
    sros.PolicyKind.PUBLISHABLE_TOPICS: "Publishable topics",
    sros.PolicyKind.EXECUTABLE_SERVICES: "Executable services",
    sros.PolicyKind.READABLE_PARAMETERS: "Readable parameters",
    sros.PolicyKind.UNKNOWN: "Unknown",
}


def _render_sros_identity(identity: sros.SROSNodeIdentity) -> str:
    lines = [
        f"    Node name: {identity.node_name}",
        f"    Port: {identity.port}",
        f"    Demo CA Used: {identity.demo_ca}",
    ]
    if identity.policies:
        lines.append("    Policies:")
        for policy in identity.policies:
            lines.append(f"        Type: {_KIND_DISPLAY[policy.kind]}")
            lines.append(f"        Permission: {policy.permission}")
            lines.append("        Values:")
            for value in policy.values:
                lines.append(f"            {value!r}")
            lines.append("")
    return "\n".join(lines).rstrip()
