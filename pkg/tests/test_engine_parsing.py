"""Target and port enumeration: determinism, normalization, error naming."""

import io

import pytest

from roborecon.engine import (
    PortParseError,
    ScanOptions,
    TargetParseError,
    parse_ports,
    parse_targets,
)


class TestParseTargets:
    def test_single_address(self):
        spec = parse_targets("127.0.0.1")
        assert spec.addresses == ("127.0.0.1",)
        assert spec.source == "single"

    def test_cidr_includes_network_and_broadcast(self):
        spec = parse_targets("192.168.1.0/30")
        assert spec.addresses == ("192.168.1.0", "192.168.1.1", "192.168.1.2", "192.168.1.3")
        assert spec.source == "cidr"

    def test_cidr_slash_32(self):
        assert parse_targets("10.1.2.3/32").addresses == ("10.1.2.3",)

    def test_stream(self):
        spec = parse_targets(io.StringIO("10.0.0.1\n10.0.0.2\n"))
        assert spec.addresses == ("10.0.0.1", "10.0.0.2")
        assert spec.source == "stream"

    def test_stream_blank_lines_skipped(self):
        spec = parse_targets(io.StringIO("\n10.0.0.1\n\n   \n10.0.0.2\n\n"))
        assert spec.addresses == ("10.0.0.1", "10.0.0.2")

    def test_stream_duplicates_removed_first_seen_order(self):
        spec = parse_targets(io.StringIO("10.0.0.2\n10.0.0.1\n10.0.0.2\n"))
        assert spec.addresses == ("10.0.0.2", "10.0.0.1")

    def test_empty_stream_gives_empty_spec(self):
        assert parse_targets(io.StringIO("")).addresses == ()

    def test_file(self, tmp_path):
        path = tmp_path / "targets.txt"
        path.write_text("192.0.2.1\n192.0.2.2\n")
        spec = parse_targets(str(path))
        assert spec.addresses == ("192.0.2.1", "192.0.2.2")
        assert spec.source == "file"

    def test_file_mode_forced(self, tmp_path):
        path = tmp_path / "targets.txt"
        path.write_text("192.0.2.9\n")
        assert parse_targets(str(path), mode="file").addresses == ("192.0.2.9",)

    def test_malformed_line_names_token_and_line(self):
        with pytest.raises(TargetParseError) as err:
            parse_targets(io.StringIO("10.0.0.1\nnot-an-ip\n"))
        assert "not-an-ip" in str(err.value)
        assert "line 2" in str(err.value)

    def test_malformed_single(self):
        with pytest.raises(TargetParseError) as err:
            parse_targets("999.1.2.3")
        assert "999.1.2.3" in str(err.value)

    def test_ipv6_rejected(self):
        with pytest.raises(TargetParseError):
            parse_targets("::1")

    def test_unreadable_file(self):
        with pytest.raises(IOError):
            parse_targets("/nonexistent/targets.txt", mode="file")

    def test_bad_cidr(self):
        with pytest.raises(TargetParseError):
            parse_targets("192.168.1.0/33", mode="cidr")

    def test_deterministic(self):
        assert parse_targets("203.0.113.0/29") == parse_targets("203.0.113.0/29")

    def test_unknown_mode(self):
        with pytest.raises(ValueError):
            parse_targets("127.0.0.1", mode="bogus")


class TestParsePorts:
    def test_range(self):
        spec = parse_ports("11311-11320")
        assert spec.ports == tuple(range(11311, 11321))
        assert len(spec.ports) == 10

    def test_comma_list(self):
        assert parse_ports("80,5001").ports == (80, 5001)

    def test_dedup_and_sort(self):
        assert parse_ports("443,443,80").ports == (80, 443)

    def test_single(self):
        assert parse_ports("11311").ports == (11311,)

    def test_mixture(self):
        assert parse_ports("80,8000-8002,443").ports == (80, 443, 8000, 8001, 8002)

    def test_inverted_range(self):
        with pytest.raises(PortParseError):
            parse_ports("9-5")

    @pytest.mark.parametrize("bad", ["0", "65536", "70000", "-1", "x", "", "1,,2"])
    def test_out_of_range_or_malformed(self, bad):
        with pytest.raises(PortParseError):
            parse_ports(bad)

    def test_deterministic(self):
        assert parse_ports("1-100,50") == parse_ports("1-100,50")


class TestScanOptions:
    def test_defaults(self):
        options = ScanOptions()
        assert options.rate == 800
        assert options.connect_timeout == 3.0
        assert options.concurrency >= 1
        assert options.extended is False

    @pytest.mark.parametrize(
        "kwargs", [{"concurrency": 0}, {"rate": 0}, {"connect_timeout": 0}, {"connect_timeout": -1}]
    )
    def test_validation(self, kwargs):
        with pytest.raises(ValueError):
            ScanOptions(**kwargs)
