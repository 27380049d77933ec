"""Scan engine: target/port enumeration, paced probe scheduling, result streaming.

The engine owns all parallelism. Adapters expose per-target probe coroutines
that open every socket through the engine-supplied :class:`ProbeContext`, so
one semaphore bounds simultaneous connections and one rate limiter paces
connection initiations across the whole scan, no matter how many extra
connections an extended probe fans out to.
"""

from __future__ import annotations

import asyncio
import ipaddress
import os
import time
from collections import deque
from contextlib import asynccontextmanager
from dataclasses import dataclass, field
from datetime import datetime, timezone
from typing import AsyncIterator, Callable, Iterable, Optional, TextIO, Union

ADAPTER_ROS = "ROS"
ADAPTER_SROS = "SROS"
ADAPTER_IROUTERS = "IROUTERS"
ADAPTER_NAMES = (ADAPTER_ROS, ADAPTER_SROS, ADAPTER_IROUTERS)


class TargetParseError(ValueError):
    """Raised for malformed addresses, CIDR expressions or list entries."""


class PortParseError(ValueError):
    """Raised for malformed port specs (out of range, inverted range)."""


@dataclass(frozen=True)
class Target:
    """One (address, port) probe destination."""

    address: str
    port: int

    def __str__(self) -> str:
        return f"{self.address}:{self.port}"


@dataclass(frozen=True)
class TargetSpec:
    """Deterministic, duplicate-free enumeration of scan addresses."""

    addresses: tuple[str, ...]
    source: str  # cidr | single | file | stream


@dataclass(frozen=True)
class PortSet:
    """Strictly ascending, de-duplicated port list."""

    ports: tuple[int, ...]


@dataclass(frozen=True)
class ScanOptions:
    concurrency: int = 256
    rate: int = 800  # probe initiations per second; drops were observed above this in the wild
    connect_timeout: float = 3.0
    extended: bool = False

    def __post_init__(self) -> None:
        if self.concurrency < 1:
            raise ValueError(f"concurrency must be >= 1, got {self.concurrency}")
        if self.rate < 1:
            raise ValueError(f"rate must be >= 1, got {self.rate}")
        if self.connect_timeout <= 0:
            raise ValueError(f"connect_timeout must be > 0, got {self.connect_timeout}")


@dataclass(frozen=True)
class NegativeProbe:
    """Negative-probe record: why a target yielded nothing."""

    reason: str
    detail: str = ""


@dataclass(frozen=True)
class Finding:
    target: Target
    adapter: str
    payload: object
    timestamp: datetime


def parse_targets(spec: Union[str, TextIO], mode: str = "auto") -> TargetSpec:
    """Enumerate scan addresses from a dotted quad, CIDR block, file or stream.

    CIDR enumeration covers every address in the block including the network
    and broadcast addresses, matching what a raw ZMap-style list would hold.
    File/stream input is one address per line; blank lines are skipped and
    duplicates dropped while preserving first-seen order.
    """
    if mode not in ("auto", "cidr", "single", "file", "stream"):
        raise ValueError(f"unknown target mode: {mode!r}")

    if hasattr(spec, "read"):
        if mode not in ("auto", "stream"):
            raise ValueError(f"mode {mode!r} incompatible with a stream handle")
        return _parse_address_lines(spec, source="stream")

    assert isinstance(spec, str)
    text = spec.strip()

    if mode == "single" or (mode == "auto" and _is_ipv4(text)):
        if not _is_ipv4(text):
            raise TargetParseError(f"malformed IPv4 address: {text!r}")
        return TargetSpec(addresses=(text,), source="single")

    if mode == "cidr" or (mode == "auto" and "/" in text and _is_cidr(text)):
        if not _is_cidr(text):
            raise TargetParseError(f"malformed CIDR expression: {text!r}")
        net = ipaddress.IPv4Network(text, strict=False)
        return TargetSpec(
            addresses=tuple(str(a) for a in net), source="cidr"
        )

    if mode == "file" or (mode == "auto" and os.path.isfile(text)):
        try:
            with open(text, "r", encoding="utf-8") as fh:
                return _parse_address_lines(fh, source="file")
        except OSError as exc:
            raise IOError(f"cannot read target file {text!r}: {exc}") from exc

    if mode == "file":
        raise IOError(f"cannot read target file {text!r}: no such file")
    raise TargetParseError(
        f"cannot interpret target spec {text!r}: not an address, CIDR block or readable file"
    )


def _parse_address_lines(handle: TextIO, source: str) -> TargetSpec:
    seen: dict[str, None] = {}
    for lineno, line in enumerate(handle, start=1):
        token = line.strip()
        if not token:
            continue
        if not _is_ipv4(token):
            raise TargetParseError(f"malformed IPv4 address {token!r} on line {lineno}")
        seen.setdefault(token)
    return TargetSpec(addresses=tuple(seen), source=source)


def _is_ipv4(text: str) -> bool:
    try:
        ipaddress.IPv4Address(text)
    except (ipaddress.AddressValueError, ValueError):
        return False
    return True


def _is_cidr(text: str) -> bool:
    try:
        ipaddress.IPv4Network(text, strict=False)
    except (ipaddress.AddressValueError, ipaddress.NetmaskValueError, ValueError):
        return False
    return True


def parse_ports(spec: str) -> PortSet:
    """Parse "N", "N-M" or a comma-separated mixture into an ascending PortSet."""
    ports: set[int] = set()
    for part in spec.split(","):
        part = part.strip()
        if not part:
            raise PortParseError(f"empty port entry in {spec!r}")
        if "-" in part:
            lo_s, _, hi_s = part.partition("-")
            lo, hi = _parse_port(lo_s), _parse_port(hi_s)
            if lo > hi:
                raise PortParseError(f"inverted port range {part!r}")
            ports.update(range(lo, hi + 1))
        else:
            ports.add(_parse_port(part))
    return PortSet(ports=tuple(sorted(ports)))


def _parse_port(text: str) -> int:
    try:
        value = int(text.strip())
    except ValueError:
        raise PortParseError(f"malformed port {text!r}") from None
    if not 1 <= value <= 65535:
        raise PortParseError(f"port {value} out of range 1-65535")
    return value


class RateLimiter:
    """Sliding-window pacer: at most `rate` acquisitions in any 1 s window.

    `acquire` returns the timestamp it stamped for the caller, measured with
    the injected clock, so callers can log provably-compliant initiation
    times. Clock and sleep are injectable for deterministic tests.
    """

    def __init__(
        self,
        rate: Optional[int],
        *,
        time_fn: Callable[[], float] = time.monotonic,
        sleep_fn: Callable[[float], "asyncio.Future[None]"] = None,  # type: ignore[assignment]
    ) -> None:
        self.rate = rate
        self._time = time_fn
        self._sleep = sleep_fn or asyncio.sleep
        self._window: deque[float] = deque()

    async def acquire(self) -> float:
        if self.rate is None:
            return self._time()
        while True:
            now = self._time()
            while self._window and self._window[0] <= now - 1.0:
                self._window.popleft()
            if len(self._window) < self.rate:
                self._window.append(now)
                return now
            await self._sleep(self._window[0] + 1.0 - now)


class ProbeContext:
    """Connection factory handed to adapters; enforces the engine's bounds.

    Every adapter socket must be opened through :meth:`connection` so the
    shared semaphore caps simultaneous connections at `concurrency` and the
    shared limiter paces initiations at `rate` per sliding second.
    """

    def __init__(
        self,
        options: ScanOptions,
        limiter: RateLimiter,
        slots: asyncio.Semaphore,
        on_connect: Optional[Callable[[str, int, float], None]] = None,
    ) -> None:
        self.options = options
        self._limiter = limiter
        self._slots = slots
        self._on_connect = on_connect

    @classmethod
    def standalone(cls, options: Optional[ScanOptions] = None) -> "ProbeContext":
        """Context for direct adapter use outside a scan (no rate pacing)."""
        opts = options or ScanOptions()
        return cls(opts, RateLimiter(None), asyncio.Semaphore(opts.concurrency))

    @asynccontextmanager
    async def connection(self, address: str, port: int, *, timeout: Optional[float] = None, ssl=None):
        effective = timeout if timeout is not None else self.options.connect_timeout
        async with self._slots:
            stamp = await self._limiter.acquire()
            if self._on_connect is not None:
                self._on_connect(address, port, stamp)
            reader, writer = await asyncio.wait_for(
                asyncio.open_connection(address, port, ssl=ssl), timeout=effective
            )
            try:
                yield reader, writer
            finally:
                writer.close()
                try:
                    await writer.wait_closed()
                except (OSError, asyncio.TimeoutError):
                    pass


async def run_scan(
    adapter,
    targets: TargetSpec,
    ports: PortSet,
    options: ScanOptions,
    *,
    on_connect: Optional[Callable[[str, int, float], None]] = None,
) -> AsyncIterator[Finding]:
    """Probe every (address, port) pair exactly once, streaming findings.

    Findings are yielded in completion order. Per-probe failures become
    negative-probe findings and never abort the scan; cancelling or closing
    the stream tears down all in-flight workers.
    """
    pairs = [(a, p) for a in targets.addresses for p in ports.ports]
    if not pairs:
        return

    limiter = RateLimiter(options.rate)
    slots = asyncio.Semaphore(options.concurrency)
    ctx = ProbeContext(options, limiter, slots, on_connect=on_connect)
    queue: asyncio.Queue = asyncio.Queue()
    pair_iter = iter(pairs)

    async def worker() -> None:
        while True:
            try:
                address, port = next(pair_iter)
            except StopIteration:
                return
            target = Target(address, port)
            try:
                results = await adapter.probe(target, ctx)
            except asyncio.CancelledError:
                raise
            except Exception as exc:  # fault isolation: one bad target never kills the scan
                results = [(target, NegativeProbe("error", f"{type(exc).__name__}: {exc}"))]
            stamp = datetime.now(timezone.utc)
            for tgt, payload in results:
                await queue.put(Finding(tgt, adapter.name, payload, stamp))

    workers = [asyncio.create_task(worker()) for _ in range(min(options.concurrency, len(pairs)))]

    async def closer() -> None:
        await asyncio.gather(*workers)
        await queue.put(None)

    closer_task = asyncio.create_task(closer())
    try:
        while True:
            item = await queue.get()
            if item is None:
                break
            yield item
    finally:
        for task in workers:
            task.cancel()
        closer_task.cancel()
        await asyncio.gather(*workers, closer_task, return_exceptions=True)


async def collect_findings(
    adapter,
    targets: TargetSpec,
    ports: PortSet,
    options: ScanOptions,
    *,
    on_connect: Optional[Callable[[str, int, float], None]] = None,
    on_finding: Optional[Callable[[Finding], None]] = None,
) -> list[Finding]:
    """Drain :func:`run_scan` into a list, invoking `on_finding` as results land."""
    findings: list[Finding] = []
    async for finding in run_scan(adapter, targets, ports, options, on_connect=on_connect):
        findings.append(finding)
        if on_finding is not None:
            on_finding(finding)
    return findings
