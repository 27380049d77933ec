"""Emulated SROS node: a record-layer TLS server that walks the handshake
exactly as far as the harvester needs (ServerHello, Certificate, optional
CertificateRequest, ServerHelloDone) and then watches what the peer does.

It never completes a handshake; what it records is which forbidden messages
a client sent afterwards (client certificate, key exchange, cipher-spec
change), giving tests message-level proof of handshake abstinence.
"""

from __future__ import annotations

import asyncio
from dataclasses import dataclass, field
from typing import Optional

from .. import tlswire


@dataclass
class ConnectionObservation:
    said_hello: bool = False
    client_sent_certificate: bool = False
    client_sent_key_exchange: bool = False
    client_continued_handshake: bool = False  # any CCS/handshake record after ServerHelloDone
    client_sent_application_data: bool = False
    clean_disconnect: bool = False
    finished: bool = False


class MockSrosNode:
    def __init__(
        self,
        chain: list[bytes],
        *,
        request_client_cert: bool = True,
        fragment_certificate: bool = False,
    ) -> None:
        self.chain = chain
        self.request_client_cert = request_client_cert
        self.fragment_certificate = fragment_certificate
        self.address = ""
        self.port = 0
        self.observations: list[ConnectionObservation] = []
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
        obs = ConnectionObservation()
        self.observations.append(obs)
        try:
            try:
                record = await tlswire.read_record(reader, timeout=10)
            except tlswire.TlsWireError:
                record = None
            if (
                record is None
                or record.content_type != tlswire.CONTENT_HANDSHAKE
                or not record.payload
                or record.payload[0] != tlswire.HS_CLIENT_HELLO
            ):
                return
            obs.said_hello = True
            writer.write(self._server_flight())
            await writer.drain()
            await self._observe_client(reader, obs)
        except (ConnectionError, OSError):
            pass
        finally:
            obs.finished = True
            writer.close()
            try:
                await writer.wait_closed()
            except (OSError, asyncio.TimeoutError):
                pass

    def _server_flight(self) -> bytes:
        messages = [tlswire.build_server_hello()]
        cert_msg = tlswire.build_certificate_message(self.chain)
        if self.request_client_cert:
            tail = [tlswire.build_certificate_request(), tlswire.build_server_hello_done()]
        else:
            tail = [tlswire.build_server_hello_done()]
        if self.fragment_certificate:
            # split the Certificate handshake message across two records to
            # exercise the client's reassembly path
            framed = tlswire.build_handshake(tlswire.HS_CERTIFICATE, cert_msg)
            half = len(framed) // 2
            return b"".join(
                (
                    tlswire.build_record(tlswire.CONTENT_HANDSHAKE, messages[0]),
                    tlswire.build_record(tlswire.CONTENT_HANDSHAKE, framed[:half]),
                    tlswire.build_record(tlswire.CONTENT_HANDSHAKE, framed[half:] + b"".join(tail)),
                )
            )
        payload = b"".join(
            messages + [tlswire.build_handshake(tlswire.HS_CERTIFICATE, cert_msg)] + tail
        )
        return tlswire.build_record(tlswire.CONTENT_HANDSHAKE, payload)

    async def _observe_client(self, reader: asyncio.StreamReader, obs: ConnectionObservation) -> None:
        handshake = tlswire.HandshakeBuffer()
        while True:
            try:
                record = await tlswire.read_record(reader, timeout=5)
            except (tlswire.TlsWireError, asyncio.TimeoutError, TimeoutError):
                return
            if record is None:
                obs.clean_disconnect = True
                return
            if record.content_type == tlswire.CONTENT_CHANGE_CIPHER_SPEC:
                obs.client_continued_handshake = True
            elif record.content_type == tlswire.CONTENT_APPLICATION_DATA:
                obs.client_sent_application_data = True
            elif record.content_type == tlswire.CONTENT_HANDSHAKE:
                obs.client_continued_handshake = True
                for hs_type, _ in handshake.feed(record.payload):
                    if hs_type == tlswire.HS_CERTIFICATE:
                        obs.client_sent_certificate = True
                    elif hs_type == tlswire.HS_CLIENT_KEY_EXCHANGE:
                        obs.client_sent_key_exchange = True

    # --- test conveniences ------------------------------------------------------

    async def settle(self, timeout: float = 2.0) -> None:
        """Wait until every accepted connection has been fully observed."""
        deadline = asyncio.get_event_loop().time() + timeout
        while any(not obs.finished for obs in self.observations):
            if asyncio.get_event_loop().time() > deadline:
                return
            await asyncio.sleep(0.01)

    @property
    def handshake_violations(self) -> list[str]:
        """Messages a certificate harvester must never have sent."""
        out = []
        for index, obs in enumerate(self.observations):
            if obs.client_sent_certificate:
                out.append(f"connection {index}: client certificate")
            if obs.client_sent_key_exchange:
                out.append(f"connection {index}: ClientKeyExchange")
            if obs.client_continued_handshake:
                out.append(f"connection {index}: handshake continued past ServerHelloDone")
            if obs.client_sent_application_data:
                out.append(f"connection {index}: application data")
        return out

    @property
    def completed_handshakes(self) -> int:
        return sum(1 for obs in self.observations if obs.client_continued_handshake)
