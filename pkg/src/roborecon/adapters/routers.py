"""Industrial-router web console identification and default-credential audit.

Identification reads the HTTP response headers (Server / WWW-Authenticate
signatures); the audit then walks each vendor's login flow with documented
factory credentials and splits devices into secure / not secure.
"""

from __future__ import annotations

import asyncio
import hashlib
import json
import re
import ssl
from dataclasses import dataclass
from enum import Enum
from importlib import resources
from typing import TYPE_CHECKING, Optional, Sequence

from .. import httpio
from ..engine import NegativeProbe, ProbeContext, Target
from . import register
from .base import Adapter

if TYPE_CHECKING:
    from ..enrichment import EnrichmentRecord


class Vendor(str, Enum):
    WESTERMO = "westermo"
    EWON = "ewon"
    MOXA_V1 = "moxa_v1"
    MOXA_V2 = "moxa_v2"
    SIERRA_WIRELESS = "sierra_wireless"

    @property
    def brand(self) -> str:
        if self in (Vendor.MOXA_V1, Vendor.MOXA_V2):
            return "moxa"
        return self.value

    @property
    def display_name(self) -> str:
        return {
            Vendor.WESTERMO: "Westermo",
            Vendor.EWON: "eWON",
            Vendor.MOXA_V1: "Moxa",
            Vendor.MOXA_V2: "Moxa",
            Vendor.SIERRA_WIRELESS: "Sierra Wireless",
        }[self]


class Security(str, Enum):
    SECURE = "secure"
    NOT_SECURE = "not_secure"


class AttemptOutcome(str, Enum):
    ACCEPTED = "accepted"
    REJECTED = "rejected"
    INDETERMINATE = "indeterminate"


@dataclass(frozen=True)
class RouterModel:
    vendor: Vendor
    signature_header: tuple[str, str]


@dataclass(frozen=True)
class CredentialAttempt:
    username: str
    password: str
    outcome: AttemptOutcome


@dataclass(frozen=True)
class RouterFinding:
    address: str
    port: int
    model: RouterModel
    security: Security
    winning_credentials: Optional[tuple[str, str]]
    open_access: bool
    enrichment: Optional["EnrichmentRecord"] = None

    def __post_init__(self) -> None:
        insecure = self.open_access or self.winning_credentials is not None
        if (self.security is Security.NOT_SECURE) != insecure:
            raise ValueError("security verdict inconsistent with open_access/winning_credentials")


@dataclass(frozen=True)
class CredentialCheck:
    attempts: tuple[CredentialAttempt, ...]
    open_access: bool
    winning: Optional[tuple[str, str]]


# Login-response body markers are deployment-specific; these defaults match
# the bundled emulator and are overridable per scan.
MOXA_SUCCESS_MARKER = "location.replace('/main.htm')"
MOXA_FAILURE_MARKER = "Invalid username or password"
SIERRA_SUCCESS_MARKER = "Login OK"
SIERRA_FAILURE_MARKER = "Login failed"

EWON_AUTH_PATH = "/Ast/MainAst.shtm"
SIERRA_LOGIN_PATH = "/xml/Connect.xml"

SIERRA_LOGIN_TEMPLATE = (
    '<request xmlns="urn:acemanager">'
    "<connect>"
    "<login>{login}</login>"
    "<password><![CDATA[{password}]]></password>"
    "</connect>"
    "</request>"
)


@dataclass(frozen=True)
class RouterFlowConfig:
    attempt_delay: float = 1.0  # per-host pause between login attempts; avoids lockouts
    moxa_success_marker: str = MOXA_SUCCESS_MARKER
    moxa_failure_marker: str = MOXA_FAILURE_MARKER
    sierra_success_marker: str = SIERRA_SUCCESS_MARKER
    sierra_failure_marker: str = SIERRA_FAILURE_MARKER


def build_sierra_login_body(login: str, password: str) -> bytes:
    return SIERRA_LOGIN_TEMPLATE.format(login=login, password=password).encode("utf-8")


def load_default_credentials() -> dict[Vendor, list[tuple[str, str]]]:
    """Factory credential lists (vendor docs and public default-password
    collections), shipped as a data file so deployments can swap their own."""
    raw = resources.files("roborecon").joinpath("data/default_credentials.json").read_text()
    table = json.loads(raw)
    return {
        Vendor(vendor): [(u, p) for u, p in pairs] for vendor, pairs in table.items()
    }


def identify_router(headers: Sequence[tuple[str, str]]) -> Optional[RouterModel]:
    """Match response headers against vendor signatures.

    Total function; fixed precedence Westermo -> eWON -> Moxa -> Sierra
    (Westermo keys on WWW-Authenticate, everything else on Server, so the
    realm check goes first to dodge Server-header collisions).
    """
    def first(name: str) -> Optional[tuple[str, str]]:
        wanted = name.lower()
        for key, value in headers:
            if key.lower() == wanted:
                return key, value
        return None

    www = first("WWW-Authenticate")
    if www and "Westermo" in www[1]:
        return RouterModel(Vendor.WESTERMO, www)
    server = first("Server")
    if server is None:
        return None
    value = server[1].strip()
    if value == "eWON":
        return RouterModel(Vendor.EWON, server)
    if value == "MoxaHttp/1.0":
        return RouterModel(Vendor.MOXA_V1, server)
    if value == "MoxaHttp/2.2":
        return RouterModel(Vendor.MOXA_V2, server)
    # The published Sierra signature is ambiguous; ACEmanager is its web
    # console name. Real-world coverage needs field validation.
    if "ACEmanager" in value or "Sierra" in value:
        return RouterModel(Vendor.SIERRA_WIRELESS, server)
    return None


def classify_security(attempts: Sequence[CredentialAttempt], open_access: bool) -> Security:
    """Not secure iff open access or any accepted attempt; indeterminate
    attempts never count as accepted."""
    if open_access or any(a.outcome is AttemptOutcome.ACCEPTED for a in attempts):
        return Security.NOT_SECURE
    return Security.SECURE


async def check_default_credentials(
    address: str,
    port: int,
    model: RouterModel,
    credential_list: Sequence[tuple[str, str]],
    *,
    ctx: ProbeContext,
    timeout: Optional[float] = None,
    config: RouterFlowConfig = RouterFlowConfig(),
    tls=None,
) -> CredentialCheck:
    """Run the vendor login flow per credential, stopping at the first
    accepted pair. Transport failures mid-flow mark that attempt
    indeterminate rather than aborting the audit."""
    flow = _FLOWS[model.vendor]
    if model.vendor is Vendor.MOXA_V2:
        open_access = await _moxa_console_is_open(address, port, ctx, timeout, config, tls)
        if open_access:
            return CredentialCheck(attempts=(), open_access=True, winning=None)

    attempts: list[CredentialAttempt] = []
    winning: Optional[tuple[str, str]] = None
    for index, (username, password) in enumerate(credential_list):
        if index and config.attempt_delay > 0:
            await asyncio.sleep(config.attempt_delay)
        try:
            outcome = await flow(address, port, username, password, ctx, timeout, config, tls)
        except (httpio.HttpError, ConnectionError, OSError, TimeoutError, asyncio.TimeoutError):
            outcome = AttemptOutcome.INDETERMINATE
        attempts.append(CredentialAttempt(username, password, outcome))
        if outcome is AttemptOutcome.ACCEPTED:
            winning = (username, password)
            break
    return CredentialCheck(attempts=tuple(attempts), open_access=False, winning=winning)


async def _basic_auth_flow(address, port, username, password, ctx, timeout, config, tls, path="/"):
    response = await httpio.request(
        ctx, address, port, "GET", path,
        headers=[httpio.basic_auth_header(username, password)],
        timeout=timeout, tls=tls,
    )
    if response.status == 200:
        return AttemptOutcome.ACCEPTED
    if response.status == 401:
        return AttemptOutcome.REJECTED
    return AttemptOutcome.INDETERMINATE


async def _westermo_flow(address, port, username, password, ctx, timeout, config, tls):
    # no unauthenticated pages on these; the base url is the auth check
    return await _basic_auth_flow(address, port, username, password, ctx, timeout, config, tls, path="/")


async def _ewon_flow(address, port, username, password, ctx, timeout, config, tls):
    # status pages are open; this path requires auth across tested models
    return await _basic_auth_flow(address, port, username, password, ctx, timeout, config, tls, path=EWON_AUTH_PATH)


_CHALLENGE_PATTERNS = (
    re.compile(r"FakeChallenge\s*=\s*\"([^\"]*)\""),  # JS variable (v1 login page)
    re.compile(r"name=\"?FakeChallenge\"?[^>]*value=\"?([^\"\s>]*)\"?", re.IGNORECASE),  # hidden input (v2)
)


def _extract_challenge(body: str) -> Optional[str]:
    for pattern in _CHALLENGE_PATTERNS:
        match = pattern.search(body)
        if match:
            return match.group(1)
    return None


def _judge_moxa(body: str, config: RouterFlowConfig) -> AttemptOutcome:
    if config.moxa_success_marker in body:
        return AttemptOutcome.ACCEPTED
    if config.moxa_failure_marker in body:
        return AttemptOutcome.REJECTED
    return AttemptOutcome.INDETERMINATE


async def _moxa_v1_flow(address, port, username, password, ctx, timeout, config, tls):
    page = await httpio.request(ctx, address, port, "GET", "/", timeout=timeout, tls=tls)
    challenge = _extract_challenge(page.text)
    if challenge is None:
        return AttemptOutcome.INDETERMINATE
    digest = hashlib.md5(password.encode("utf-8")).hexdigest()
    query = httpio.urlencode_fields(
        [
            ("Password", digest),
            ("Submit", "Submit"),
            ("token_text", ""),
            ("FakeChallenge", challenge),
        ]
    )
    response = await httpio.request(
        ctx, address, port, "GET", f"/home.htm?{query}", timeout=timeout, tls=tls
    )
    return _judge_moxa(response.text, config)


async def _moxa_console_is_open(address, port, ctx, timeout, config, tls) -> bool:
    # password-less consoles skip the form and serve the console directly
    try:
        page = await httpio.request(ctx, address, port, "GET", "/", timeout=timeout, tls=tls)
    except (httpio.HttpError, ConnectionError, OSError, TimeoutError, asyncio.TimeoutError):
        return False
    return config.moxa_success_marker in page.text


async def _moxa_v2_flow(address, port, username, password, ctx, timeout, config, tls):
    page = await httpio.request(ctx, address, port, "GET", "/", timeout=timeout, tls=tls)
    challenge = _extract_challenge(page.text)
    if challenge is None:
        return AttemptOutcome.INDETERMINATE
    digest = hashlib.md5(password.encode("utf-8")).hexdigest()
    fields = [
        ("Username", username),
        ("Password", ""),
        ("MD5Password", digest),
        ("FakeChallenge", challenge),
        ("Submit.x", "0"),
        ("Submit.y", "0"),
    ]
    response = await httpio.request(
        ctx, address, port, "POST", "/",
        headers=[("Content-Type", "application/x-www-form-urlencoded")],
        body=httpio.urlencode_fields(fields).encode("ascii"),
        timeout=timeout, tls=tls,
    )
    return _judge_moxa(response.text, config)


async def _sierra_flow(address, port, username, password, ctx, timeout, config, tls):
    response = await httpio.request(
        ctx, address, port, "POST", SIERRA_LOGIN_PATH,
        headers=[("Content-Type", "text/xml")],
        body=build_sierra_login_body(username, password),
        timeout=timeout, tls=tls,
    )
    if config.sierra_success_marker in response.text:
        return AttemptOutcome.ACCEPTED
    if config.sierra_failure_marker in response.text:
        return AttemptOutcome.REJECTED
    return AttemptOutcome.INDETERMINATE


_FLOWS = {
    Vendor.WESTERMO: _westermo_flow,
    Vendor.EWON: _ewon_flow,
    Vendor.MOXA_V1: _moxa_v1_flow,
    Vendor.MOXA_V2: _moxa_v2_flow,
    Vendor.SIERRA_WIRELESS: _sierra_flow,
}


def _unverified_tls() -> ssl.SSLContext:
    context = ssl.create_default_context()
    context.check_hostname = False
    context.verify_mode = ssl.CERT_NONE
    return context


@register
class RoutersAdapter(Adapter):
    """Identification always runs; the credential audit always follows, since
    the secure/not-secure split is this adapter's entire output."""

    name = "IROUTERS"

    def __init__(
        self,
        credentials: Optional[dict[Vendor, list[tuple[str, str]]]] = None,
        flow_config: Optional[RouterFlowConfig] = None,
    ) -> None:
        self.credentials = credentials if credentials is not None else load_default_credentials()
        self.flow_config = flow_config or RouterFlowConfig()

    async def probe(self, target: Target, ctx: ProbeContext) -> list[tuple[Target, object]]:
        timeout = ctx.options.connect_timeout
        tls = _unverified_tls() if target.port == 443 else None
        try:
            response = await httpio.request(
                ctx, target.address, target.port, "GET", "/", timeout=timeout, tls=tls
            )
        except (ConnectionError, OSError, TimeoutError, asyncio.TimeoutError) as exc:
            return [(target, NegativeProbe("unreachable", _describe(exc)))]
        except httpio.HttpError as exc:
            return [(target, NegativeProbe("not_http", str(exc)))]

        model = identify_router(response.headers)
        if model is None:
            server = next((v for k, v in response.headers if k.lower() == "server"), "")
            return [(target, NegativeProbe("unidentified", f"no router signature (Server: {server or 'absent'})"))]

        check = await check_default_credentials(
            target.address,
            target.port,
            model,
            self.credentials.get(model.vendor, []),
            ctx=ctx,
            timeout=timeout,
            config=self.flow_config,
            tls=tls,
        )
        finding = RouterFinding(
            address=target.address,
            port=target.port,
            model=model,
            security=classify_security(check.attempts, check.open_access),
            winning_credentials=check.winning,
            open_access=check.open_access,
        )
        return [(target, finding)]


def _describe(exc: BaseException) -> str:
    if isinstance(exc, ConnectionRefusedError):
        return "Connection refused"
    if isinstance(exc, (TimeoutError, asyncio.TimeoutError)):
        return "Connection timed out"
    return str(exc) or type(exc).__name__
