"""Shared test helpers: deterministic random findings and tiny adapters."""

import random
from datetime import datetime, timedelta, timezone

from roborecon.adapters import ros, sros
from roborecon.adapters.base import Adapter
from roborecon.adapters.routers import RouterFinding, RouterModel, Security, Vendor
from roborecon.engine import Finding, NegativeProbe, Target
from roborecon.enrichment import EnrichmentRecord


class TouchAdapter(Adapter):
    """Opens one connection per target, waits for the server to close, and
    reports whether it connected."""

    name = "ROS"  # any registered tag; payload is a NegativeProbe either way

    def __init__(self, fail_addresses=frozenset()):
        self.fail_addresses = set(fail_addresses)

    async def probe(self, target: Target, ctx):
        if target.address in self.fail_addresses:
            raise RuntimeError(f"injected failure for {target.address}")
        import asyncio

        try:
            async with ctx.connection(target.address, target.port) as (reader, writer):
                try:
                    await asyncio.wait_for(reader.read(1), timeout=ctx.options.connect_timeout)
                except asyncio.TimeoutError:
                    pass
            return [(target, NegativeProbe("touched", "connected"))]
        except OSError as exc:
            return [(target, NegativeProbe("unreachable", str(exc)))]


def random_policy(rng: random.Random) -> sros.SROSPolicy:
    kind_arc = rng.choice([1, 2, 3, 4, 5, 6])
    permission_arc = rng.choice([1, 2])
    values = tuple(
        rng.choice([b"**", b"/chatter", b"/rosout", b"/ns/topic_%d" % rng.randrange(100)])
        for _ in range(rng.randrange(1, 4))
    )
    return sros.SROSPolicy(
        kind=sros.KIND_BY_ARC.get(kind_arc, sros.PolicyKind.UNKNOWN),
        permission_arc=permission_arc,
        permission=sros.DEFAULT_PERMISSION_BY_ARC.get(permission_arc, False),
        values=values,
    )


def random_finding(rng: random.Random) -> Finding:
    address = f"{rng.randrange(1, 224)}.{rng.randrange(256)}.{rng.randrange(256)}.{rng.randrange(1, 255)}"
    port = rng.randrange(1, 65536)
    timestamp = datetime(2025, 6, 1, tzinfo=timezone.utc) + timedelta(
        seconds=rng.randrange(0, 100000), microseconds=rng.randrange(0, 1000000)
    )
    kind = rng.randrange(5)
    if kind == 0:
        adapter = "ROS"
        payload = ros.ROSMasterProbe(
            address, port,
            rng.choice(list(ros.RosVerdict)),
            rng.choice(["", "Connection refused", 'method "getSystemState" is not supported']),
        )
    elif kind == 1:
        adapter = "ROS"
        node = ros.ROSNode("/talker", f"http://{address}:{rng.randrange(1024, 65536)}")
        topic = ros.ROSTopic("/chatter", "std_msgs/String")
        payload = ros.ROSSystemState(
            nodes=(node,),
            topics=(topic,),
            services=("/talker/get_loggers",),
            communications=(ros.TopicCommunication((node,), topic, ()),),
        )
    elif kind == 2:
        adapter = "SROS"
        payload = sros.SROSNodeIdentity(
            address=address,
            port=port,
            node_name=rng.choice(["master", "talker", "listener"]),
            demo_ca=rng.random() < 0.5,
            policies=tuple(random_policy(rng) for _ in range(rng.randrange(0, 4))),
            subject=(("CN", "talker"), ("O", "Organization")),
            issuer=(("CN", "master"), ("ST", "Sate")),
        )
    elif kind == 3:
        adapter = "IROUTERS"
        vendor = rng.choice(list(Vendor))
        open_access = rng.random() < 0.2
        winning = None if open_access or rng.random() < 0.5 else ("admin", "admin")
        security = Security.NOT_SECURE if (open_access or winning) else Security.SECURE
        payload = RouterFinding(
            address=address,
            port=port,
            model=RouterModel(vendor, ("Server", "eWON")),
            security=security,
            winning_credentials=winning,
            open_access=open_access,
            enrichment=EnrichmentRecord(address, rng.choice(["US", "DE", "??"]), "EXAMPLE-ASN")
            if rng.random() < 0.5
            else None,
        )
    else:
        adapter = rng.choice(["ROS", "SROS", "IROUTERS"])
        payload = NegativeProbe(
            rng.choice(["unreachable", "not_tls", "unidentified"]), "Connection refused"
        )
    return Finding(Target(address, port), adapter, payload, timestamp)


def random_findings(seed: int, count: int) -> list[Finding]:
    rng = random.Random(seed)
    return [random_finding(rng) for _ in range(count)]
