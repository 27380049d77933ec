"""Emulated industrial-router web consoles: Westermo and eWON speak HTTP
basic auth, the two Moxa generations run their FakeChallenge + MD5 form
flows, Sierra Wireless answers its XML login endpoint. Each mock counts
login attempts and keeps raw request dumps for protocol assertions."""

from __future__ import annotations

import hashlib
import secrets
from typing import Optional

from ..adapters.routers import (
    MOXA_FAILURE_MARKER,
    MOXA_SUCCESS_MARKER,
    SIERRA_FAILURE_MARKER,
    SIERRA_SUCCESS_MARKER,
    EWON_AUTH_PATH,
    SIERRA_LOGIN_PATH,
    Vendor,
)
from .httpbase import HttpReply, HttpRequest, MockHttpServer

_HTML = [("Content-Type", "text/html")]


class MockRouterBase(MockHttpServer):
    vendor: Vendor

    def __init__(self, username: str = "admin", password: str = "admin", open_access: bool = False) -> None:
        super().__init__()
        self.username = username
        self.password = password
        self.open_access = open_access
        self.login_attempts = 0
        self.recorded_logins: list[HttpRequest] = []


class WestermoMock(MockRouterBase):
    vendor = Vendor.WESTERMO

    async def handle(self, request: HttpRequest) -> HttpReply:
        creds = request.basic_auth()
        if creds is not None:
            self.login_attempts += 1
            self.recorded_logins.append(request)
        if creds == (self.username, self.password):
            return HttpReply(200, "OK", [("Server", "GoAhead-Webs")] + _HTML, b"<html>device status</html>")
        return HttpReply(
            401,
            "Unauthorized",
            [
                ("Server", "GoAhead-Webs"),
                ("WWW-Authenticate", 'Basic realm="Westermo ADSL-350"'),
            ]
            + _HTML,
            b"<html>401</html>",
        )


class EwonMock(MockRouterBase):
    vendor = Vendor.EWON

    async def handle(self, request: HttpRequest) -> HttpReply:
        headers = [("Server", "eWON")] + _HTML
        if request.path == EWON_AUTH_PATH:
            creds = request.basic_auth()
            if creds is not None:
                self.login_attempts += 1
                self.recorded_logins.append(request)
            if creds == (self.username, self.password):
                return HttpReply(200, "OK", headers, b"<html>main view</html>")
            return HttpReply(
                401, "Unauthorized", headers + [("WWW-Authenticate", 'Basic realm="eWON"')], b"<html>401</html>"
            )
        if request.path == "/":
            return HttpReply(302, "Redirect", headers + [("Location", "/Ast/MainAst.shtm")], b"")
        return HttpReply(200, "OK", headers, b"<html>status page (no auth)</html>")


class _MoxaCommon(MockRouterBase):
    server_value = ""

    def __init__(self, username: str = "admin", password: str = "admin", open_access: bool = False) -> None:
        super().__init__(username, password, open_access)
        self.issued_challenges: set[str] = set()

    def _new_challenge(self) -> str:
        challenge = secrets.token_hex(16).upper()
        self.issued_challenges.add(challenge)
        return challenge

    def _headers(self) -> list[tuple[str, str]]:
        return [("Server", self.server_value)] + _HTML

    def _judge(self, fields: dict[str, str], digest_field: str) -> bytes:
        self.login_attempts += 1
        expected = hashlib.md5(self.password.encode("utf-8")).hexdigest()
        challenge_ok = fields.get("FakeChallenge", "") in self.issued_challenges
        if challenge_ok and fields.get(digest_field, "") == expected:
            return f"<html><script>{MOXA_SUCCESS_MARKER}</script></html>".encode()
        return f"<html>{MOXA_FAILURE_MARKER}</html>".encode()


class MoxaV1Mock(_MoxaCommon):
    vendor = Vendor.MOXA_V1
    server_value = "MoxaHttp/1.0"

    async def handle(self, request: HttpRequest) -> HttpReply:
        if request.method == "GET" and request.path == "/home.htm" and "Password" in request.query:
            self.recorded_logins.append(request)
            return HttpReply(200, "OK", self._headers(), self._judge(request.query, "Password"))
        # login page sets the challenge in a script variable
        body = (
            "<html><script>\n"
            f'var FakeChallenge = "{self._new_challenge()}";\n'
            "</script><form>password form</form></html>"
        ).encode()
        return HttpReply(200, "OK", self._headers(), body)


class MoxaV2Mock(_MoxaCommon):
    vendor = Vendor.MOXA_V2
    server_value = "MoxaHttp/2.2"

    async def handle(self, request: HttpRequest) -> HttpReply:
        if request.method == "POST" and request.path == "/":
            self.recorded_logins.append(request)
            return HttpReply(200, "OK", self._headers(), self._judge(request.form, "MD5Password"))
        if self.open_access:
            # no password configured: straight to the console
            body = f"<html><script>{MOXA_SUCCESS_MARKER}</script>console</html>".encode()
            return HttpReply(200, "OK", self._headers(), body)
        body = (
            "<html><form method=post action=/>\n"
            '<input type=text name=Username>\n'
            f'<input type=hidden name=FakeChallenge value={self._new_challenge()}>\n'
            '<input type=image name=Submit src=login.gif>\n'
            "</form></html>"
        ).encode()
        return HttpReply(200, "OK", self._headers(), body)


class SierraMock(MockRouterBase):
    vendor = Vendor.SIERRA_WIRELESS

    async def handle(self, request: HttpRequest) -> HttpReply:
        headers = [("Server", "ACEmanager")] + _HTML
        if request.method == "POST" and request.path == SIERRA_LOGIN_PATH:
            self.login_attempts += 1
            self.recorded_logins.append(request)
            login, password = _parse_sierra_login(request.body)
            if login == self.username and password == self.password:
                body = f'<reply xmlns="urn:acemanager"><connect><result>{SIERRA_SUCCESS_MARKER}</result></connect></reply>'
            else:
                body = f'<reply xmlns="urn:acemanager"><connect><result>{SIERRA_FAILURE_MARKER}</result></connect></reply>'
            return HttpReply(200, "OK", [("Server", "ACEmanager"), ("Content-Type", "text/xml")], body.encode())
        return HttpReply(200, "OK", headers, b"<html>ACEmanager login</html>")


def _parse_sierra_login(body: bytes) -> tuple[Optional[str], Optional[str]]:
    import xml.etree.ElementTree as ET

    try:
        root = ET.fromstring(body.decode("utf-8"))
    except ET.ParseError:
        return None, None
    ns = "{urn:acemanager}"
    login = root.findtext(f"{ns}connect/{ns}login")
    password = root.findtext(f"{ns}connect/{ns}password")
    return login, password


ROUTER_MOCKS = {
    Vendor.WESTERMO: WestermoMock,
    Vendor.EWON: EwonMock,
    Vendor.MOXA_V1: MoxaV1Mock,
    Vendor.MOXA_V2: MoxaV2Mock,
    Vendor.SIERRA_WIRELESS: SierraMock,
}
