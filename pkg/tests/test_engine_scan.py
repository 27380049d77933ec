"""Engine scheduling properties: completeness, bounds, fault isolation."""

import asyncio
from collections import Counter

import pytest

from roborecon.adapters import get_adapter
from roborecon.engine import (
    NegativeProbe,
    PortSet,
    RateLimiter,
    ScanOptions,
    TargetSpec,
    collect_findings,
)
from roborecon.mocknet.decoys import InstrumentedAcceptor
from roborecon.mocknet.rosmaster import MockRosMaster, rosout_graph

from util import TouchAdapter


def loopback_addresses(count, start=1):
    # 127.0.0.x aliases resolve to the same host but count as distinct targets
    out = []
    value = start
    while len(out) < count:
        out.append(f"127.0.0.{value % 254 + 1}" if count > 253 else f"127.0.0.{value}")
        value += 1
    return out


def test_probe_set_completeness_multiset():
    async def run():
        acceptor_a = InstrumentedAcceptor()
        acceptor_b = InstrumentedAcceptor()
        await acceptor_a.start("0.0.0.0", 0)
        await acceptor_b.start("0.0.0.0", 0)
        try:
            addresses = tuple(f"127.0.0.{i}" for i in range(1, 6))
            ports = (acceptor_a.port, acceptor_b.port)
            findings = await collect_findings(
                TouchAdapter(),
                TargetSpec(addresses=addresses, source="stream"),
                PortSet(ports=ports),
                ScanOptions(concurrency=4, rate=1000, connect_timeout=2.0),
            )
            assert len(findings) == 10
            observed = Counter(acceptor_a.probed_pairs() + acceptor_b.probed_pairs())
            expected = Counter((a, p) for a in addresses for p in ports)
            assert observed == expected  # every pair probed exactly once
        finally:
            await acceptor_a.aclose()
            await acceptor_b.aclose()

    asyncio.run(run())


def test_three_hosts_one_master():
    async def run():
        master = MockRosMaster(rosout_graph())
        await master.start("127.0.0.1", 0)
        acceptor = InstrumentedAcceptor()
        await acceptor.start("127.0.0.1", 0)
        try:
            # one port refused: reserve by binding nothing there
            from roborecon.mocknet.decoys import ClosedPort

            closed = ClosedPort()
            await closed.start("127.0.0.1", 0)
            ports = (master.port, acceptor.port, closed.port)
            findings = await collect_findings(
                get_adapter("ROS"),
                TargetSpec(addresses=("127.0.0.1",), source="single"),
                PortSet(ports=ports),
                ScanOptions(connect_timeout=2.0),
            )
            by_port = {f.target.port: f for f in findings}
            assert len(findings) == 3
            assert by_port[master.port].payload.verdict.value == "ros_host"
            assert by_port[closed.port].payload.verdict.value == "unreachable"
            assert by_port[acceptor.port].payload.verdict.value == "malformed"
        finally:
            await master.aclose()
            await acceptor.aclose()

    asyncio.run(run())


def test_empty_port_set_terminates_immediately():
    async def run():
        findings = await collect_findings(
            TouchAdapter(),
            TargetSpec(addresses=("127.0.0.1",), source="single"),
            PortSet(ports=()),
            ScanOptions(),
        )
        assert findings == []

    asyncio.run(run())


def test_concurrency_bound_observed_at_acceptor():
    async def run():
        acceptor = InstrumentedAcceptor(hold_seconds=0.05)
        await acceptor.start("0.0.0.0", 0)
        try:
            addresses = tuple(f"127.0.1.{i}" for i in range(1, 101))
            findings = await collect_findings(
                TouchAdapter(),
                TargetSpec(addresses=addresses, source="stream"),
                PortSet(ports=(acceptor.port,)),
                ScanOptions(concurrency=8, rate=10000, connect_timeout=2.0),
            )
            assert len(findings) == 100
            assert acceptor.max_concurrent <= 8
            assert acceptor.max_concurrent >= 2  # parallelism actually happened
        finally:
            await acceptor.aclose()

    asyncio.run(run())


def test_fault_isolation():
    async def run():
        acceptor = InstrumentedAcceptor()
        await acceptor.start("0.0.0.0", 0)
        try:
            addresses = tuple(f"127.0.2.{i}" for i in range(1, 11))
            adapter = TouchAdapter(fail_addresses={"127.0.2.5"})
            findings = await collect_findings(
                adapter,
                TargetSpec(addresses=addresses, source="stream"),
                PortSet(ports=(acceptor.port,)),
                ScanOptions(concurrency=4, connect_timeout=2.0),
            )
            assert len(findings) == 10
            by_address = {f.target.address: f.payload for f in findings}
            assert isinstance(by_address["127.0.2.5"], NegativeProbe)
            assert by_address["127.0.2.5"].reason == "error"
            others = [p for a, p in by_address.items() if a != "127.0.2.5"]
            assert all(p.reason == "touched" for p in others)
        finally:
            await acceptor.aclose()

    asyncio.run(run())


class FakeClock:
    """Deterministic clock + sleep pair for limiter property tests."""

    def __init__(self):
        self.now = 0.0

    def time(self):
        return self.now

    async def sleep(self, seconds):
        self.now += max(seconds, 0.0)


def _max_window_count(times, window=1.0):
    worst = 0
    for i, start in enumerate(times):
        count = sum(1 for t in times[i:] if t - start < window)
        worst = max(worst, count)
    return worst


def test_rate_limiter_sliding_window_property():
    async def run():
        clock = FakeClock()
        limiter = RateLimiter(10, time_fn=clock.time, sleep_fn=clock.sleep)
        stamps = [await limiter.acquire() for _ in range(95)]
        assert stamps == sorted(stamps)
        assert _max_window_count(stamps) <= 10
        # and the pace is not pathologically slow: 95 probes at 10/s < 11s
        assert stamps[-1] - stamps[0] <= 10.5

    asyncio.run(run())


def test_rate_limiter_concurrent_acquirers():
    async def run():
        clock = FakeClock()
        limiter = RateLimiter(7, time_fn=clock.time, sleep_fn=clock.sleep)
        stamps = []

        async def worker():
            for _ in range(10):
                stamps.append(await limiter.acquire())

        await asyncio.gather(*(worker() for _ in range(5)))
        assert _max_window_count(sorted(stamps)) <= 7

    asyncio.run(run())


def test_unlimited_rate_limiter_never_sleeps():
    async def run():
        limiter = RateLimiter(None)
        for _ in range(100):
            await limiter.acquire()

    asyncio.run(run())
