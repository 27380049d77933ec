"""Minimal async HTTP/1.1 client used by the adapters.

Hand-rolled on purpose: fingerprinting needs the response headers exactly as
the device sent them (ordered, case preserved, duplicates kept) and the
login flows need byte-exact request bodies and query strings. Embedded web
consoles are rarely RFC-strict, so parsing is lenient: anything that looks
like a status line is accepted and malformed header lines are skipped.
"""

from __future__ import annotations

import asyncio
import base64
from dataclasses import dataclass, field
from typing import Optional, Sequence
from urllib.parse import quote

from .engine import ProbeContext

MAX_BODY = 4 * 1024 * 1024


class HttpError(Exception):
    """Transport-level or framing failure while talking HTTP."""


@dataclass
class HttpResponse:
    status: int
    reason: str
    headers: list[tuple[str, str]] = field(default_factory=list)
    body: bytes = b""

    def header(self, name: str) -> Optional[str]:
        """First header value matching `name`, case-insensitive."""
        wanted = name.lower()
        for key, value in self.headers:
            if key.lower() == wanted:
                return value
        return None

    @property
    def text(self) -> str:
        return self.body.decode("utf-8", errors="replace")


def basic_auth_header(username: str, password: str) -> tuple[str, str]:
    token = base64.b64encode(f"{username}:{password}".encode("utf-8")).decode("ascii")
    return ("Authorization", f"Basic {token}")


def urlencode_fields(fields: Sequence[tuple[str, str]]) -> str:
    """Encode form/query fields preserving the given order."""
    return "&".join(f"{quote(k, safe='.')}={quote(v, safe='')}" for k, v in fields)


async def request(
    ctx: ProbeContext,
    address: str,
    port: int,
    method: str = "GET",
    path: str = "/",
    *,
    headers: Optional[Sequence[tuple[str, str]]] = None,
    body: bytes = b"",
    timeout: Optional[float] = None,
    tls=None,
) -> HttpResponse:
    """Issue one HTTP/1.1 request over a fresh connection and read the reply."""
    lines = [f"{method} {path} HTTP/1.1", f"Host: {address}:{port}"]
    for key, value in headers or ():
        lines.append(f"{key}: {value}")
    if body or method in ("POST", "PUT"):
        lines.append(f"Content-Length: {len(body)}")
    lines.append("Connection: close")
    payload = ("\r\n".join(lines) + "\r\n\r\n").encode("latin-1") + body

    effective = timeout if timeout is not None else ctx.options.connect_timeout
    async with ctx.connection(address, port, timeout=effective, ssl=tls) as (reader, writer):
        writer.write(payload)
        await writer.drain()
        try:
            return await asyncio.wait_for(_read_response(reader), timeout=effective)
        except asyncio.TimeoutError:
            raise HttpError("timed out reading HTTP response") from None


async def _read_response(reader: asyncio.StreamReader) -> HttpResponse:
    status_line = await reader.readline()
    if not status_line:
        raise HttpError("connection closed before status line")
    parts = status_line.decode("latin-1", errors="replace").rstrip("\r\n").split(None, 2)
    if len(parts) < 2 or not parts[0].startswith("HTTP/"):
        raise HttpError(f"not an HTTP response: {status_line[:64]!r}")
    try:
        status = int(parts[1])
    except ValueError:
        raise HttpError(f"bad status code in {status_line[:64]!r}") from None
    reason = parts[2] if len(parts) > 2 else ""

    headers: list[tuple[str, str]] = []
    while True:
        line = await reader.readline()
        if line in (b"\r\n", b"\n", b""):
            break
        raw = line.decode("latin-1", errors="replace").rstrip("\r\n")
        name, sep, value = raw.partition(":")
        if not sep:
            continue  # junk line; embedded servers do emit these
        headers.append((name.strip(), value.strip()))

    response = HttpResponse(status=status, reason=reason, headers=headers)
    response.body = await _read_body(reader, response)
    return response


async def _read_body(reader: asyncio.StreamReader, response: HttpResponse) -> bytes:
    encoding = (response.header("Transfer-Encoding") or "").lower()
    if "chunked" in encoding:
        return await _read_chunked(reader)
    length = response.header("Content-Length")
    if length is not None:
        try:
            n = min(int(length), MAX_BODY)
        except ValueError:
            n = 0
        return await reader.readexactly(n) if n else b""
    return await reader.read(MAX_BODY)


async def _read_chunked(reader: asyncio.StreamReader) -> bytes:
    chunks: list[bytes] = []
    total = 0
    while True:
        size_line = await reader.readline()
        if not size_line:
            break
        try:
            size = int(size_line.strip().split(b";")[0], 16)
        except ValueError:
            raise HttpError(f"bad chunk size line {size_line[:32]!r}") from None
        if size == 0:
            await reader.readline()  # trailing CRLF after last chunk
            break
        data = await reader.readexactly(size)
        await reader.readline()
        total += size
        if total <= MAX_BODY:
            chunks.append(data)
    return b"".join(chunks)
