"""x509 fixtures: certificates with access-policy extensions, demo-CA style
issuers and multi-certificate chains. Built with `cryptography`'s encoder,
which keeps the round trip against the scanner's hand-rolled DER parser a
genuine two-implementation check."""

from __future__ import annotations

import datetime
from dataclasses import dataclass
from functools import lru_cache
from typing import Optional, Sequence

from cryptography import x509
from cryptography.hazmat.primitives import hashes, serialization
from cryptography.hazmat.primitives.asymmetric import ec
from cryptography.x509.oid import NameOID, ObjectIdentifier

POLICY_OID_PREFIX = "1.2.3.4.5.6.7.8.9"

DEMO_ISSUER = (
    ("C", "ZZ"),
    ("ST", "Sate"),
    ("L", "Locality"),
    ("O", "Organization"),
    ("OU", "Organizational Unit"),
    ("CN", "master"),
)

_ATTR_OIDS = {
    "C": NameOID.COUNTRY_NAME,
    "ST": NameOID.STATE_OR_PROVINCE_NAME,
    "L": NameOID.LOCALITY_NAME,
    "O": NameOID.ORGANIZATION_NAME,
    "OU": NameOID.ORGANIZATIONAL_UNIT_NAME,
    "CN": NameOID.COMMON_NAME,
}


@dataclass(frozen=True)
class PolicyBlock:
    """One certificate-policy entry: OID prefix + kind arc + permission arc,
    qualifier values verbatim (wildcards like ** included)."""

    kind_arc: int
    permission_arc: int
    values: tuple[bytes, ...]

    @property
    def oid(self) -> str:
        return f"{POLICY_OID_PREFIX}.{self.kind_arc}.{self.permission_arc}"


@dataclass(frozen=True)
class MockCertSpec:
    subject: tuple[tuple[str, str], ...]
    issuer: Optional[tuple[tuple[str, str], ...]] = None  # None: demo issuer if demo_ca, else self-signed
    policies: tuple[PolicyBlock, ...] = ()
    demo_ca: bool = False

    @property
    def node_name(self) -> str:
        for key, value in self.subject:
            if key == "CN":
                return value
        return ""


def demo_node_spec(node_name: str, policies: Sequence[PolicyBlock] = ()) -> MockCertSpec:
    """Certificate spec shaped like the stock demo-CA setup for one node."""
    subject = tuple(pair for pair in DEMO_ISSUER if pair[0] != "CN") + (("CN", node_name),)
    return MockCertSpec(subject=subject, policies=tuple(policies), demo_ca=True)


@lru_cache(maxsize=1)
def _signing_key():
    # one shared EC key: fixtures need structure, not key hygiene
    return ec.generate_private_key(ec.SECP256R1())


def _name(pairs: Sequence[tuple[str, str]]) -> x509.Name:
    attributes = []
    for key, value in pairs:
        oid = _ATTR_OIDS.get(key)
        if oid is None:
            oid = ObjectIdentifier(key)
        attributes.append(x509.NameAttribute(oid, value))
    return x509.Name(attributes)


def build_certificate(spec: MockCertSpec) -> bytes:
    """DER certificate for the spec; policy blocks become CPS qualifiers."""
    issuer = spec.issuer
    if issuer is None:
        issuer = DEMO_ISSUER if spec.demo_ca else spec.subject
    key = _signing_key()
    builder = (
        x509.CertificateBuilder()
        .subject_name(_name(spec.subject))
        .issuer_name(_name(issuer))
        .public_key(key.public_key())
        .serial_number(x509.random_serial_number())
        .not_valid_before(datetime.datetime(2018, 1, 1, tzinfo=datetime.timezone.utc))
        .not_valid_after(datetime.datetime(2038, 1, 1, tzinfo=datetime.timezone.utc))
    )
    if spec.policies:
        infos = [
            x509.PolicyInformation(
                ObjectIdentifier(block.oid),
                [value.decode("ascii") for value in block.values],
            )
            for block in spec.policies
        ]
        builder = builder.add_extension(x509.CertificatePolicies(infos), critical=True)
    return builder.sign(key, hashes.SHA256()).public_bytes(serialization.Encoding.DER)


def build_chain(leaf: MockCertSpec, length: int = 3) -> list[bytes]:
    """Leaf-first chain: leaf, intermediates, root; demo-style issuers."""
    chain = [build_certificate(leaf)]
    issuer = leaf.issuer or (DEMO_ISSUER if leaf.demo_ca else leaf.subject)
    for depth in range(1, length):
        parent = tuple(pair for pair in DEMO_ISSUER if pair[0] != "CN") + (
            ("CN", "root" if depth == length - 1 else f"intermediate-{depth}"),
        )
        chain.append(build_certificate(MockCertSpec(subject=issuer, issuer=parent)))
        issuer = parent
    return chain
