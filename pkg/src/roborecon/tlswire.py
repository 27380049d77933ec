"""TLS 1.2 record-layer framing shared by the certificate harvester and the
mock TLS endpoints (each side uses the opposite direction: the harvester
builds a ClientHello and parses server records, the mock parses the hello
and builds server records).

Only the cleartext handshake subset up to ServerHelloDone is modelled; no
key exchange, no encryption. That is all an aborted-handshake certificate
grab ever touches.
"""

from __future__ import annotations

import asyncio
import os
import struct
from dataclasses import dataclass
from typing import AsyncIterator, Iterator, Optional

CONTENT_CHANGE_CIPHER_SPEC = 20
CONTENT_ALERT = 21
CONTENT_HANDSHAKE = 22
CONTENT_APPLICATION_DATA = 23
CONTENT_TYPES = (20, 21, 22, 23, 24)

HS_CLIENT_HELLO = 1
HS_SERVER_HELLO = 2
HS_CERTIFICATE = 11
HS_SERVER_KEY_EXCHANGE = 12
HS_CERTIFICATE_REQUEST = 13
HS_SERVER_HELLO_DONE = 14
HS_CLIENT_KEY_EXCHANGE = 16
HS_FINISHED = 20

TLS_1_0 = (3, 1)
TLS_1_2 = (3, 3)
TLS_1_3 = (3, 4)

ALERT_PROTOCOL_VERSION = 70

# Broad TLS 1.2 cipher offer: ECDHE and plain-RSA suites, GCM and CBC, so
# both modern and ancient stacks find something acceptable.
CLIENT_CIPHER_SUITES = (
    0xC02C, 0xC02B,  # ECDHE-ECDSA AES-GCM
    0xC030, 0xC02F,  # ECDHE-RSA AES-GCM
    0xC028, 0xC027, 0xC014, 0xC013,  # ECDHE CBC
    0xC00A, 0xC009,  # ECDHE-ECDSA CBC
    0x009D, 0x009C,  # RSA AES-GCM
    0x003D, 0x003C, 0x0035, 0x002F,  # RSA AES-CBC
    0x000A,          # RSA 3DES
)

_SUPPORTED_GROUPS = (0x001D, 0x0017, 0x0018, 0x0019)  # x25519, secp256r1/384/521
_SIGNATURE_ALGORITHMS = (
    0x0401, 0x0403, 0x0501, 0x0503, 0x0601, 0x0603, 0x0804, 0x0805, 0x0201, 0x0203,
)


class TlsWireError(Exception):
    """Malformed or unexpected bytes at the record layer."""


@dataclass(frozen=True)
class Record:
    content_type: int
    version: tuple[int, int]
    payload: bytes


def build_record(content_type: int, payload: bytes, version: tuple[int, int] = TLS_1_2) -> bytes:
    return struct.pack("!BBBH", content_type, version[0], version[1], len(payload)) + payload


def build_handshake(hs_type: int, body: bytes) -> bytes:
    return struct.pack("!B", hs_type) + len(body).to_bytes(3, "big") + body


def build_client_hello() -> bytes:
    """Complete ClientHello record offering TLS 1.2 with a broad cipher list."""
    suites = b"".join(struct.pack("!H", s) for s in CLIENT_CIPHER_SUITES)
    groups = b"".join(struct.pack("!H", g) for g in _SUPPORTED_GROUPS)
    sigalgs = b"".join(struct.pack("!H", a) for a in _SIGNATURE_ALGORITHMS)
    extensions = b"".join(
        (
            _extension(0x000A, struct.pack("!H", len(groups)) + groups),
            _extension(0x000B, b"\x01\x00"),  # ec_point_formats: uncompressed
            _extension(0x000D, struct.pack("!H", len(sigalgs)) + sigalgs),
            _extension(0xFF01, b"\x00"),  # renegotiation_info, empty
        )
    )
    body = b"".join(
        (
            struct.pack("!BB", *TLS_1_2),
            os.urandom(32),
            b"\x00",  # empty session id
            struct.pack("!H", len(suites)) + suites,
            b"\x01\x00",  # null compression only
            struct.pack("!H", len(extensions)) + extensions,
        )
    )
    # Record-layer version 3.1 on the first flight keeps intolerant stacks happy.
    return build_record(CONTENT_HANDSHAKE, build_handshake(HS_CLIENT_HELLO, body), TLS_1_0)


def _extension(ext_type: int, data: bytes) -> bytes:
    return struct.pack("!HH", ext_type, len(data)) + data


async def read_record(reader: asyncio.StreamReader, timeout: float) -> Optional[Record]:
    """Read one record; None on clean EOF; TlsWireError on non-TLS bytes."""
    try:
        header = await asyncio.wait_for(reader.readexactly(5), timeout=timeout)
    except asyncio.IncompleteReadError as exc:
        if not exc.partial:
            return None
        raise TlsWireError(f"truncated record header: {exc.partial!r}") from None
    content_type, major, minor, length = struct.unpack("!BBBH", header)
    if content_type not in CONTENT_TYPES or major != 3 or minor > 4 or length > 18432:
        raise TlsWireError(f"not a TLS record header: {header!r}")
    try:
        payload = await asyncio.wait_for(reader.readexactly(length), timeout=timeout)
    except asyncio.IncompleteReadError:
        raise TlsWireError("record truncated mid-payload") from None
    return Record(content_type, (major, minor), payload)


class HandshakeBuffer:
    """Reassembles handshake messages that span or share records."""

    def __init__(self) -> None:
        self._buf = b""

    def feed(self, payload: bytes) -> Iterator[tuple[int, bytes]]:
        self._buf += payload
        while len(self._buf) >= 4:
            hs_type = self._buf[0]
            length = int.from_bytes(self._buf[1:4], "big")
            if len(self._buf) < 4 + length:
                return
            body = self._buf[4 : 4 + length]
            self._buf = self._buf[4 + length :]
            yield hs_type, body


def parse_server_hello(body: bytes) -> dict:
    """Extract version/cipher from a ServerHello, honoring supported_versions."""
    if len(body) < 38:
        raise TlsWireError("short ServerHello")
    version = (body[0], body[1])
    offset = 2 + 32
    sid_len = body[offset]
    offset += 1 + sid_len
    if len(body) < offset + 3:
        raise TlsWireError("truncated ServerHello")
    cipher = struct.unpack_from("!H", body, offset)[0]
    offset += 3  # cipher + compression
    negotiated = version
    if len(body) >= offset + 2:
        (ext_total,) = struct.unpack_from("!H", body, offset)
        offset += 2
        end = min(len(body), offset + ext_total)
        while offset + 4 <= end:
            ext_type, ext_len = struct.unpack_from("!HH", body, offset)
            offset += 4
            if ext_type == 0x002B and ext_len == 2:  # supported_versions
                negotiated = (body[offset], body[offset + 1])
            offset += ext_len
    return {"version": version, "cipher": cipher, "negotiated": negotiated}


def parse_certificate_message(body: bytes) -> list[bytes]:
    """Split a Certificate handshake body into its DER chain (leaf first)."""
    if len(body) < 3:
        raise TlsWireError("short Certificate message")
    total = int.from_bytes(body[0:3], "big")
    chain: list[bytes] = []
    offset = 3
    end = min(len(body), 3 + total)
    while offset + 3 <= end:
        length = int.from_bytes(body[offset : offset + 3], "big")
        offset += 3
        if offset + length > end:
            raise TlsWireError("certificate entry overruns message")
        chain.append(body[offset : offset + length])
        offset += length
    return chain


def build_certificate_message(chain: list[bytes]) -> bytes:
    entries = b"".join(len(der).to_bytes(3, "big") + der for der in chain)
    return len(entries).to_bytes(3, "big") + entries


def build_server_hello(cipher: int = 0x002F) -> bytes:
    body = b"".join(
        (
            struct.pack("!BB", *TLS_1_2),
            os.urandom(32),
            b"\x00",
            struct.pack("!H", cipher),
            b"\x00",
        )
    )
    return build_handshake(HS_SERVER_HELLO, body)


def build_certificate_request() -> bytes:
    # rsa_sign + ecdsa_sign client cert types, one signature algorithm, no CA names
    body = b"\x02\x01\x40" + b"\x00\x02\x04\x01" + b"\x00\x00"
    return build_handshake(HS_CERTIFICATE_REQUEST, body)


def build_server_hello_done() -> bytes:
    return build_handshake(HS_SERVER_HELLO_DONE, b"")


def parse_alert(payload: bytes) -> tuple[int, int]:
    if len(payload) < 2:
        raise TlsWireError("short alert record")
    return payload[0], payload[1]
