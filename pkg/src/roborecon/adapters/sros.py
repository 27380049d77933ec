"""SROS node identification via aborted TLS handshakes.

SROS masters demand a client certificate, so joining the graph is off the
table; instead the server certificate is pulled straight out of the
cleartext handshake records (ClientHello out, read up to ServerHelloDone,
disconnect). Access policies ride in the x509 certificate-policies
extension and are decoded from raw DER here, independent of any x509
library's extension model.
"""

from __future__ import annotations

import asyncio
import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Mapping, Optional, Sequence

from cryptography import x509

from .. import tlswire
from ..engine import NegativeProbe, ProbeContext, ScanOptions, Target
from . import register
from .base import Adapter

log = logging.getLogger(__name__)

POLICY_OID_PREFIX = "1.2.3.4.5.6.7.8.9"
OID_CERTIFICATE_POLICIES = "2.5.29.32"
OID_QUALIFIER_CPS = "1.3.6.1.5.5.7.2.1"

# Issuer fields every certificate from the stock demo CA carries, typo included.
DEMO_ISSUER_SIGNATURE = (
    ("C", "ZZ"),
    ("ST", "Sate"),
    ("L", "Locality"),
    ("O", "Organization"),
    ("OU", "Organizational Unit"),
)

# Trailing-arc -> permission convention is undocumented upstream; this
# default is provisional and overridable via parse_policies(permission_map=).
DEFAULT_PERMISSION_BY_ARC: Mapping[int, bool] = {2: True, 1: False}


class PolicyKind(str, Enum):
    SUBSCRIPTABLE_TOPICS = "subscriptable_topics"
    PUBLISHABLE_TOPICS = "publishable_topics"
    EXECUTABLE_SERVICES = "executable_services"
    READABLE_PARAMETERS = "readable_parameters"
    UNKNOWN = "unknown"


KIND_BY_ARC: Mapping[int, PolicyKind] = {
    1: PolicyKind.SUBSCRIPTABLE_TOPICS,
    2: PolicyKind.PUBLISHABLE_TOPICS,
    4: PolicyKind.EXECUTABLE_SERVICES,
    5: PolicyKind.READABLE_PARAMETERS,
}


@dataclass(frozen=True)
class SROSPolicy:
    kind: PolicyKind
    permission_arc: int
    permission: bool
    values: tuple[bytes, ...]


@dataclass(frozen=True)
class HarvestedCertificate:
    subject: tuple[tuple[str, str], ...]
    issuer: tuple[tuple[str, str], ...]
    policies_raw: tuple[tuple[str, tuple[bytes, ...]], ...]
    der: bytes
    chain_length: int = 1

    @classmethod
    def from_der(cls, der: bytes, chain_length: int = 1) -> "HarvestedCertificate":
        cert = x509.load_der_x509_certificate(der)
        return cls(
            subject=_name_pairs(cert.subject),
            issuer=_name_pairs(cert.issuer),
            policies_raw=tuple(
                (oid, tuple(quals)) for oid, quals in extract_certificate_policies(der)
            ),
            der=der,
            chain_length=chain_length,
        )

    def subject_cn(self) -> str:
        for key, value in self.subject:
            if key == "CN":
                return value
        return ""


@dataclass(frozen=True)
class SROSNodeIdentity:
    address: str
    port: int
    node_name: str
    demo_ca: bool
    policies: tuple[SROSPolicy, ...]
    subject: tuple[tuple[str, str], ...]
    issuer: tuple[tuple[str, str], ...]


@dataclass(frozen=True)
class SrosPortResult:
    """One swept port: an identity when a certificate was served, else the
    harvest error class (matching the scanner's (host, port, None) rows)."""

    port: int
    identity: Optional[SROSNodeIdentity]
    error: str = ""


class HarvestError(Exception):
    reason = "tls_error"


class HarvestUnreachable(HarvestError):
    reason = "unreachable"


class NotTlsError(HarvestError):
    reason = "not_tls"


class Tls13UnsupportedError(HarvestError):
    # TLS 1.3 encrypts the certificate; out of scope for a passive grab.
    reason = "tls13_unsupported"


class HarvestProtocolError(HarvestError):
    reason = "tls_error"


def _name_pairs(name: x509.Name) -> tuple[tuple[str, str], ...]:
    pairs = []
    for attr in name:
        try:
            key = attr.rfc4514_attribute_name
        except Exception:
            key = attr.oid.dotted_string
        pairs.append((key, str(attr.value)))
    return tuple(pairs)


# --- DER walk for the certificate-policies extension -----------------------

class DerError(ValueError):
    pass


def _tlv(data: bytes, offset: int) -> tuple[int, bytes, int]:
    if offset + 2 > len(data):
        raise DerError("truncated TLV header")
    tag = data[offset]
    first = data[offset + 1]
    offset += 2
    if first < 0x80:
        length = first
    else:
        n = first & 0x7F
        if n == 0 or offset + n > len(data):
            raise DerError("bad long-form length")
        length = int.from_bytes(data[offset : offset + n], "big")
        offset += n
    if offset + length > len(data):
        raise DerError("TLV content overruns buffer")
    return tag, data[offset : offset + length], offset + length


def _children(content: bytes) -> list[tuple[int, bytes]]:
    out = []
    offset = 0
    while offset < len(content):
        tag, inner, offset = _tlv(content, offset)
        out.append((tag, inner))
    return out


def _decode_oid(content: bytes) -> str:
    if not content:
        raise DerError("empty OID")
    first = content[0]
    arcs = [first // 40, first % 40] if first < 80 else [2, first - 80]
    value = 0
    for byte in content[1:]:
        value = (value << 7) | (byte & 0x7F)
        if not byte & 0x80:
            arcs.append(value)
            value = 0
    return ".".join(str(a) for a in arcs)


def extract_certificate_policies(cert_der: bytes) -> list[tuple[str, list[bytes]]]:
    """Pull (policy OID, qualifier byte-strings) pairs out of a DER certificate.

    Returns [] when the certificate carries no certificate-policies
    extension. Raises DerError only for structurally broken certificates.
    """
    _, cert_body, _ = _tlv(cert_der, 0)
    tbs_tag, tbs, _ = _tlv(cert_body, 0)
    if tbs_tag != 0x30:
        raise DerError("TBSCertificate is not a SEQUENCE")
    extensions_blob = None
    for tag, content in _children(tbs):
        if tag == 0xA3:  # [3] EXPLICIT Extensions
            extensions_blob = content
            break
    if extensions_blob is None:
        return []
    ext_seq_tag, ext_seq, _ = _tlv(extensions_blob, 0)
    if ext_seq_tag != 0x30:
        raise DerError("Extensions is not a SEQUENCE")

    for _, extension in _children(ext_seq):
        parts = _children(extension)
        if not parts or parts[0][0] != 0x06:
            continue
        if _decode_oid(parts[0][1]) != OID_CERTIFICATE_POLICIES:
            continue
        octet = next((c for t, c in parts if t == 0x04), None)
        if octet is None:
            continue
        return _parse_policies_content(octet)
    return []


def _parse_policies_content(blob: bytes) -> list[tuple[str, list[bytes]]]:
    seq_tag, seq, _ = _tlv(blob, 0)
    if seq_tag != 0x30:
        raise DerError("certificatePolicies is not a SEQUENCE")
    policies = []
    for tag, info in _children(seq):
        if tag != 0x30:
            continue
        parts = _children(info)
        if not parts or parts[0][0] != 0x06:
            continue
        oid = _decode_oid(parts[0][1])
        qualifiers: list[bytes] = []
        if len(parts) > 1 and parts[1][0] == 0x30:
            for qtag, qualifier in _children(parts[1][1]):
                if qtag != 0x30:
                    continue
                qparts = _children(qualifier)
                if len(qparts) < 2 or qparts[0][0] != 0x06:
                    continue
                if _decode_oid(qparts[0][1]) != OID_QUALIFIER_CPS:
                    continue
                qualifiers.append(qparts[1][1])
        policies.append((oid, qualifiers))
    return policies


# --- operations -------------------------------------------------------------

async def harvest_certificate(
    address: str,
    port: int,
    timeout: float = 3.0,
    *,
    ctx: Optional[ProbeContext] = None,
) -> HarvestedCertificate:
    """Grab the leaf server certificate without completing the handshake.

    Sends one ClientHello, reads handshake records up to ServerHelloDone,
    then drops the transport. No client certificate, no key exchange, no
    application data ever leaves this side.
    """
    ctx = ctx or ProbeContext.standalone(ScanOptions(connect_timeout=timeout))
    try:
        async with ctx.connection(address, port, timeout=timeout) as (reader, writer):
            writer.write(tlswire.build_client_hello())
            await writer.drain()
            chain = await _read_until_hello_done(reader, timeout)
    except ConnectionRefusedError:
        raise HarvestUnreachable("Connection refused") from None
    except (TimeoutError, asyncio.TimeoutError):
        raise HarvestUnreachable("Connection timed out") from None
    except ConnectionError as exc:
        raise HarvestUnreachable(str(exc) or type(exc).__name__) from None
    if not chain:
        raise HarvestProtocolError("server finished hello phase without a certificate")
    return HarvestedCertificate.from_der(chain[0], chain_length=len(chain))


async def _read_until_hello_done(reader: asyncio.StreamReader, timeout: float) -> Optional[list[bytes]]:
    handshake = tlswire.HandshakeBuffer()
    chain: Optional[list[bytes]] = None
    saw_server_hello = False
    while True:
        try:
            record = await tlswire.read_record(reader, timeout)
        except tlswire.TlsWireError as exc:
            if chain:
                return chain  # lenient: certificate already in hand
            raise NotTlsError(f"not a TLS handshake: {exc}") from None
        except (TimeoutError, asyncio.TimeoutError):
            if chain:
                return chain
            raise
        if record is None:  # EOF
            if chain:
                return chain
            raise HarvestProtocolError("connection closed during handshake")
        if record.content_type == tlswire.CONTENT_ALERT:
            level, desc = tlswire.parse_alert(record.payload)
            if desc == tlswire.ALERT_PROTOCOL_VERSION:
                raise Tls13UnsupportedError(
                    "no common TLS version at or below 1.2 (certificate not harvestable)"
                )
            raise HarvestProtocolError(f"TLS alert level={level} description={desc}")
        if record.content_type != tlswire.CONTENT_HANDSHAKE:
            if not saw_server_hello:
                raise NotTlsError(f"unexpected record type {record.content_type} before ServerHello")
            continue
        for hs_type, body in handshake.feed(record.payload):
            if hs_type == tlswire.HS_SERVER_HELLO:
                saw_server_hello = True
                info = tlswire.parse_server_hello(body)
                if info["negotiated"] >= tlswire.TLS_1_3:
                    raise Tls13UnsupportedError("server negotiated TLS 1.3; certificate is encrypted")
            elif hs_type == tlswire.HS_CERTIFICATE:
                chain = tlswire.parse_certificate_message(body)
            elif hs_type == tlswire.HS_SERVER_HELLO_DONE:
                return chain
            elif hs_type == tlswire.HS_CLIENT_HELLO:
                # an echo service parroting our own hello back
                raise NotTlsError("peer echoed the ClientHello; not a TLS server")


def parse_policies(
    cert: HarvestedCertificate,
    *,
    permission_map: Mapping[int, bool] = DEFAULT_PERMISSION_BY_ARC,
) -> list[SROSPolicy]:
    """Decode access policies from the harvested certificate.

    The penultimate OID arc selects the policy kind, the trailing arc is
    kept raw as permission_arc plus its mapped boolean. Policies outside
    the recognized OID prefix are skipped with a diagnostic, never fatal.
    """
    policies: list[SROSPolicy] = []
    for oid, qualifiers in cert.policies_raw:
        if not oid.startswith(POLICY_OID_PREFIX + "."):
            log.debug("skipping policy with non-conforming OID %s", oid)
            continue
        arcs = [int(a) for a in oid.split(".")]
        kind = KIND_BY_ARC.get(arcs[-2], PolicyKind.UNKNOWN)
        permission_arc = arcs[-1]
        policies.append(
            SROSPolicy(
                kind=kind,
                permission_arc=permission_arc,
                permission=permission_map.get(permission_arc, False),
                values=tuple(qualifiers),
            )
        )
    return policies


def detect_demo_ca(cert: HarvestedCertificate) -> bool:
    """True iff the issuer carries the complete stock demo-CA signature."""
    issuer = set(cert.issuer)
    return all(pair in issuer for pair in DEMO_ISSUER_SIGNATURE)


async def probe_sros_master(
    address: str,
    port: int,
    timeout: float = 3.0,
    *,
    ctx: Optional[ProbeContext] = None,
) -> SROSNodeIdentity:
    """Harvest + demo-CA check for a master port. Masters carry no policy
    information, so the identity's policy list is empty by construction."""
    cert = await harvest_certificate(address, port, timeout, ctx=ctx)
    return SROSNodeIdentity(
        address=address,
        port=port,
        node_name=cert.subject_cn(),
        demo_ca=detect_demo_ca(cert),
        policies=(),
        subject=cert.subject,
        issuer=cert.issuer,
    )


async def extended_sros_scan(
    address: str,
    ports: Sequence[int],
    timeout: float = 3.0,
    *,
    ctx: Optional[ProbeContext] = None,
    parallelism: int = 64,
) -> list[SrosPortResult]:
    """Per-port certificate sweep of one confirmed SROS host.

    Every port is attempted; ports serving certificates yield identities
    with parsed policies, the rest are recorded with the error class. A
    full 1-65535 sweep is slow and loud; keep host counts low.
    """
    ctx = ctx or ProbeContext.standalone(ScanOptions(connect_timeout=timeout))
    gate = asyncio.Semaphore(parallelism)

    async def sweep(port: int) -> SrosPortResult:
        async with gate:
            try:
                cert = await harvest_certificate(address, port, timeout, ctx=ctx)
            except HarvestError as exc:
                return SrosPortResult(port=port, identity=None, error=exc.reason)
            identity = SROSNodeIdentity(
                address=address,
                port=port,
                node_name=cert.subject_cn(),
                demo_ca=detect_demo_ca(cert),
                policies=tuple(parse_policies(cert)),
                subject=cert.subject,
                issuer=cert.issuer,
            )
            return SrosPortResult(port=port, identity=identity)

    results = await asyncio.gather(*(sweep(p) for p in ports))
    return sorted(results, key=lambda r: r.port)


@register
class SrosAdapter(Adapter):
    name = "SROS"

    def __init__(self, sweep_ports: Optional[Sequence[int]] = None) -> None:
        # Extended mode sweeps the whole port space unless narrowed.
        self.sweep_ports = sweep_ports

    async def probe(self, target: Target, ctx: ProbeContext) -> list[tuple[Target, object]]:
        timeout = ctx.options.connect_timeout
        try:
            master = await probe_sros_master(target.address, target.port, timeout, ctx=ctx)
        except HarvestError as exc:
            return [(target, NegativeProbe(exc.reason, str(exc)))]
        results: list[tuple[Target, object]] = [(target, master)]
        if not ctx.options.extended:
            return results
        ports = self.sweep_ports if self.sweep_ports is not None else range(1, 65536)
        sweep_ports = [p for p in ports if p != target.port]
        for entry in await extended_sros_scan(target.address, sweep_ports, timeout, ctx=ctx):
            port_target = Target(target.address, entry.port)
            if entry.identity is not None:
                results.append((port_target, entry.identity))
            else:
                results.append((port_target, NegativeProbe("no_certificate", entry.error)))
        return results
