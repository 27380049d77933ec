"""Negative-space fixtures: closed ports, plain HTTP, echo services and the
instrumented acceptor that independently measures the engine's bounds."""

from __future__ import annotations

import asyncio
import socket
import time
from dataclasses import dataclass
from typing import Optional

from .httpbase import HttpReply, HttpRequest, MockHttpServer


class ClosedPort:
    """Reserves a port number with nothing listening on it."""

    def __init__(self) -> None:
        self.address = ""
        self.port = 0

    async def start(self, address: str = "127.0.0.1", port: int = 0) -> tuple[str, int]:
        sock = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
        sock.bind((address, port))
        self.address, self.port = sock.getsockname()
        sock.close()
        return self.address, self.port

    async def aclose(self) -> None:
        pass


class PlainHttpDecoy(MockHttpServer):
    """An ordinary web server with no router signature."""

    async def handle(self, request: HttpRequest) -> HttpReply:
        return HttpReply(
            200, "OK",
            [("Server", "GenericHttpd/0.1"), ("Content-Type", "text/html")],
            b"<html><body>It works</body></html>",
        )


class EchoDecoy:
    """Parrots every byte back; TCP-alive but protocol-less."""

    def __init__(self) -> None:
        self.address = ""
        self.port = 0
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

    async def _client(self, reader: asyncio.StreamReader, writer: asyncio.StreamWriter) -> None:
        try:
            while True:
                data = await asyncio.wait_for(reader.read(4096), timeout=5)
                if not data:
                    break
                writer.write(data)
                await writer.drain()
        except (asyncio.TimeoutError, ConnectionError, OSError):
            pass
        finally:
            writer.close()
            try:
                await writer.wait_closed()
            except (OSError, asyncio.TimeoutError):
                pass


@dataclass(frozen=True)
class AcceptedConnection:
    peer: tuple[str, int]
    local_address: str  # the address the client dialled (loopback-aliased)
    local_port: int
    accepted_at: float  # monotonic clock


class InstrumentedAcceptor:
    """Accepts anything, holds the socket briefly, logs every connection.

    Binding 0.0.0.0 lets one listener serve probes aimed at any loopback
    alias (127.x.y.z), with the dialled address recovered from the accepted
    socket's local name, so probe-set completeness and the concurrency bound
    are observable from outside the engine.
    """

    def __init__(self, hold_seconds: float = 0.0) -> None:
        self.hold_seconds = hold_seconds
        self.address = ""
        self.port = 0
        self.connections: list[AcceptedConnection] = []
        self.current_open = 0
        self.max_concurrent = 0
        self._server: Optional[asyncio.base_events.Server] = None

    async def start(self, address: str = "0.0.0.0", port: int = 0) -> tuple[str, int]:
        self._server = await asyncio.start_server(self._client, address, port)
        sockname = self._server.sockets[0].getsockname()
        self.address, self.port = sockname[0], sockname[1]
        return self.address, self.port

    async def aclose(self) -> None:
        if self._server is not None:
            self._server.close()
            await self._server.wait_closed()
            self._server = None

    async def _client(self, reader: asyncio.StreamReader, writer: asyncio.StreamWriter) -> None:
        self.current_open += 1
        self.max_concurrent = max(self.max_concurrent, self.current_open)
        peer = writer.get_extra_info("peername") or ("?", 0)
        local = writer.get_extra_info("sockname") or ("?", 0)
        self.connections.append(
            AcceptedConnection(
                peer=(peer[0], peer[1]),
                local_address=local[0],
                local_port=local[1],
                accepted_at=time.monotonic(),
            )
        )
        try:
            if self.hold_seconds > 0:
                # hold up to hold_seconds, but a client close ends the
                # connection (and its openness) immediately
                try:
                    await asyncio.wait_for(reader.read(1), timeout=self.hold_seconds)
                except (asyncio.TimeoutError, ConnectionError, OSError):
                    pass
        finally:
            self.current_open -= 1
            writer.close()
            try:
                await writer.wait_closed()
            except (OSError, asyncio.TimeoutError):
                pass

    def probed_pairs(self) -> list[tuple[str, int]]:
        return [(c.local_address, c.local_port) for c in self.connections]
