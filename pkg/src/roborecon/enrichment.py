"""Target acquisition via an internet-index provider and whois-style
address metadata. Offline-first: the bundled mock provider and fixture
table drive all tests; the live provider is opt-in via its API key."""

from __future__ import annotations

import ipaddress
import json
import os
import urllib.error
import urllib.parse
import urllib.request
from dataclasses import dataclass
from importlib import resources
from typing import Iterable, Optional, Protocol, Sequence

from .adapters.routers import Vendor

SHODAN_KEY_ENV = "SHODAN_API_KEY"
COUNTRY_UNKNOWN = "??"

# Reconstructions of the per-vendor index queries from the same header
# signatures the identifier keys on; the originals were never published.
VENDOR_QUERIES: dict[Vendor, str] = {
    Vendor.WESTERMO: 'realm="Westermo',
    Vendor.EWON: "Server: eWON",
    Vendor.MOXA_V1: "Server: MoxaHttp/1.0",
    Vendor.MOXA_V2: "Server: MoxaHttp/2.2",
    Vendor.SIERRA_WIRELESS: "ACEmanager",
}


class ProviderError(Exception):
    """Index provider failure (auth, quota, transport) as opposed to zero hits."""


@dataclass(frozen=True)
class IndexQuery:
    vendor: Vendor
    query_string: str


@dataclass(frozen=True)
class EnrichmentRecord:
    address: str
    country: str  # ISO-3166 alpha-2, or "??" when unknown
    asn_description: str


def build_query(vendor: Vendor) -> IndexQuery:
    return IndexQuery(vendor=vendor, query_string=VENDOR_QUERIES[vendor])


class IndexProvider(Protocol):
    def search(self, query: IndexQuery, limit: int) -> list[tuple[str, int]]: ...


class MockIndexProvider:
    """Fixture-backed provider: seeded (address, port) endpoints per vendor."""

    def __init__(self, seeded: dict[Vendor, Sequence[tuple[str, int]]]) -> None:
        self._seeded = {vendor: list(endpoints) for vendor, endpoints in seeded.items()}

    def search(self, query: IndexQuery, limit: int) -> list[tuple[str, int]]:
        return list(self._seeded.get(query.vendor, ()))[:limit]


class ShodanIndexProvider:
    """Thin client for the Shodan search API. Requires a key via argument
    or the SHODAN_API_KEY environment variable; never used by tests."""

    base_url = "https://api.shodan.io/shodan/host/search"

    def __init__(self, api_key: Optional[str] = None, timeout: float = 15.0) -> None:
        self.api_key = api_key if api_key is not None else os.environ.get(SHODAN_KEY_ENV)
        self.timeout = timeout

    def search(self, query: IndexQuery, limit: int) -> list[tuple[str, int]]:
        if not self.api_key:
            raise ProviderError(
                f"no index-provider key configured (set {SHODAN_KEY_ENV})"
            )
        params = urllib.parse.urlencode({"key": self.api_key, "query": query.query_string})
        try:
            with urllib.request.urlopen(f"{self.base_url}?{params}", timeout=self.timeout) as fh:
                payload = json.load(fh)
        except urllib.error.HTTPError as exc:
            raise ProviderError(f"provider rejected the query: HTTP {exc.code}") from exc
        except (urllib.error.URLError, OSError, ValueError) as exc:
            raise ProviderError(f"provider unreachable: {exc}") from exc
        matches = payload.get("matches", [])
        results: list[tuple[str, int]] = []
        for entry in matches[:limit]:
            address, port = entry.get("ip_str"), entry.get("port")
            if address and isinstance(port, int):
                results.append((address, port))
        return results


def query_index(provider: IndexProvider, query: IndexQuery, limit: int) -> list[tuple[str, int]]:
    """Up to `limit` candidate (address, port) targets for one vendor query."""
    return provider.search(query, limit)


class WhoisLookup(Protocol):
    def lookup(self, address: str) -> EnrichmentRecord: ...


class WhoisFixture:
    """Offline prefix table: (address-prefix, country, ASN description) rows,
    longest-prefix match, sentinel record on miss."""

    def __init__(self, rows: Iterable[tuple[str, str, str]]) -> None:
        self._table = [
            (ipaddress.IPv4Network(prefix), country, asn) for prefix, country, asn in rows
        ]
        self._table.sort(key=lambda row: row[0].prefixlen, reverse=True)

    @classmethod
    def from_file(cls, path: Optional[str] = None) -> "WhoisFixture":
        if path is None:
            text = resources.files("roborecon").joinpath("data/whois_fixture.csv").read_text()
        else:
            with open(path, "r", encoding="utf-8") as fh:
                text = fh.read()
        rows = []
        for line in text.splitlines():
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            prefix, country, asn = (part.strip() for part in line.split(",", 2))
            rows.append((prefix, country, asn))
        return cls(rows)

    def lookup(self, address: str) -> EnrichmentRecord:
        try:
            ip = ipaddress.IPv4Address(address)
        except ValueError:
            return EnrichmentRecord(address=address, country=COUNTRY_UNKNOWN, asn_description="")
        for network, country, asn in self._table:
            if ip in network:
                return EnrichmentRecord(address=address, country=country, asn_description=asn)
        return EnrichmentRecord(address=address, country=COUNTRY_UNKNOWN, asn_description="")


def lookup_whois(address: str, database: WhoisLookup) -> EnrichmentRecord:
    """Country + ASN description for one address; sentinel values on a miss,
    never a failure."""
    return database.lookup(address)
