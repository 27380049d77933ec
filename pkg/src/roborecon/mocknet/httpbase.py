"""Tiny asyncio HTTP server base for the emulated web consoles and the
plain-HTTP decoy. Subclasses implement `handle(request)`."""

from __future__ import annotations

import asyncio
import base64
from dataclasses import dataclass, field
from typing import Optional
from urllib.parse import parse_qsl, urlsplit


@dataclass
class HttpRequest:
    method: str
    target: str  # path?query exactly as received
    headers: list[tuple[str, str]] = field(default_factory=list)
    body: bytes = b""

    @property
    def path(self) -> str:
        return urlsplit(self.target).path

    @property
    def query_pairs(self) -> list[tuple[str, str]]:
        return parse_qsl(urlsplit(self.target).query, keep_blank_values=True)

    @property
    def query(self) -> dict[str, str]:
        return dict(self.query_pairs)

    @property
    def form_pairs(self) -> list[tuple[str, str]]:
        return parse_qsl(self.body.decode("utf-8", errors="replace"), keep_blank_values=True)

    @property
    def form(self) -> dict[str, str]:
        return dict(self.form_pairs)

    def header(self, name: str) -> Optional[str]:
        wanted = name.lower()
        for key, value in self.headers:
            if key.lower() == wanted:
                return value
        return None

    def basic_auth(self) -> Optional[tuple[str, str]]:
        value = self.header("Authorization")
        if not value or not value.startswith("Basic "):
            return None
        try:
            decoded = base64.b64decode(value[6:]).decode("utf-8")
        except Exception:
            return None
        username, _, password = decoded.partition(":")
        return username, password


@dataclass
class HttpReply:
    status: int
    reason: str
    headers: list[tuple[str, str]] = field(default_factory=list)
    body: bytes = b""


class MockHttpServer:
    """One emulated HTTP endpoint; handles each connection per-request."""

    def __init__(self) -> None:
        self.address = ""
        self.port = 0
        self.request_log: list[HttpRequest] = []
        self._server: Optional[asyncio.base_events.Server] = None

    async def start(self, address: str = "127.0.0.1", port: int = 0) -> tuple[str, int]:
        self._server = await asyncio.start_server(self._client, address, port)
        sockname = self._server.sockets[0].getsockname()
        self.address, self.port = sockname[0], sockname[1]
        return self.address, self.port

    async def aclose(self) -> None:
        if self._server is not None:
            self._server.close()
            await self._server.wait_closed()
            self._server = None

    async def handle(self, request: HttpRequest) -> HttpReply:
        raise NotImplementedError

    async def _client(self, reader: asyncio.StreamReader, writer: asyncio.StreamWriter) -> None:
        try:
            request = await asyncio.wait_for(self._read_request(reader), timeout=10)
            if request is None:
                reply = HttpReply(400, "Bad Request", [("Content-Type", "text/html")], b"<html>bad request</html>")
            else:
                self.request_log.append(request)
                reply = await self.handle(request)
                if reply is None:  # simulated mid-flight death: drop without answering
                    return
            lines = [f"HTTP/1.1 {reply.status} {reply.reason}"]
            lines.extend(f"{k}: {v}" for k, v in reply.headers)
            lines.append(f"Content-Length: {len(reply.body)}")
            lines.append("Connection: close")
            writer.write(("\r\n".join(lines) + "\r\n\r\n").encode("latin-1") + reply.body)
            await writer.drain()
        except (asyncio.TimeoutError, ConnectionError, OSError, asyncio.IncompleteReadError):
            pass
        finally:
            writer.close()
            try:
                await writer.wait_closed()
            except (OSError, asyncio.TimeoutError):
                pass

    async def _read_request(self, reader: asyncio.StreamReader) -> Optional[HttpRequest]:
        request_line = await reader.readline()
        parts = request_line.decode("latin-1", errors="replace").split()
        if len(parts) < 3 or not parts[2].startswith("HTTP/"):
            return None
        method, target = parts[0], parts[1]
        headers: list[tuple[str, str]] = []
        while True:
            line = await reader.readline()
            if line in (b"\r\n", b"\n", b""):
                break
            raw = line.decode("latin-1", errors="replace").rstrip("\r\n")
            name, sep, value = raw.partition(":")
            if sep:
                headers.append((name.strip(), value.strip()))
        request = HttpRequest(method=method, target=target, headers=headers)
        length = request.header("Content-Length")
        if length:
            try:
                request.body = await reader.readexactly(min(int(length), 1 << 20))
            except (ValueError, asyncio.IncompleteReadError):
                return None
        return request
