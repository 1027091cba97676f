import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from bigmacsim.addressing import (
    BadFanout,
    BigMac,
    DeltaByte,
    FanoutParams,
    MalformedAddress,
    PortRange,
    TierOverflow,
    ZeroPort,
    common_prefix_len,
    expected_addresses,
    extend_address,
    format_mac,
    pack_delta,
    parse_mac,
    unpack_delta,
)


def mac(text: str) -> BigMac:
    return BigMac.parse(text)


class TestExtend:
    def test_extends_root_by_port(self):
        assert extend_address(mac("01:00:00:00:00:00"), 2) == mac("01:02:00:00:00:00")

    def test_extends_two_levels(self):
        assert extend_address(mac("01:02:00:00:00:00"), 1) == mac("01:02:01:00:00:00")

    def test_full_address_overflows(self):
        with pytest.raises(TierOverflow):
            extend_address(mac("01:02:03:04:05:06"), 1)

    def test_zero_port_rejected(self):
        with pytest.raises(ZeroPort):
            extend_address(mac("01:00:00:00:00:00"), 0)

    def test_port_above_byte_rejected(self):
        with pytest.raises(PortRange):
            extend_address(mac("01:00:00:00:00:00"), 256)


class TestCommonPrefix:
    def test_two_byte_match(self):
        assert common_prefix_len(mac("01:02:01:00:00:00"), mac("01:02:02:00:00:00")) == 2

    def test_no_match(self):
        assert common_prefix_len(mac("01:00:00:00:00:00"), mac("02:00:00:00:00:00")) == 0

    def test_identity_matches_to_tier(self):
        a = mac("01:02:03:00:00:00")
        assert common_prefix_len(a, a) == a.tier

    def test_capped_at_shorter_tier(self):
        assert common_prefix_len(mac("01:02:00:00:00:00"), mac("01:02:03:00:00:00")) == 2


class TestDeltaByte:
    def test_uplink0_port1(self):
        assert pack_delta(0, 1) == 0x01

    def test_uplink2_port5(self):
        assert pack_delta(2, 5) == 0x45

    def test_unpack_zero_low_bits(self):
        with pytest.raises(ZeroPort):
            unpack_delta(0x20)

    def test_pack_port_out_of_range(self):
        with pytest.raises(PortRange):
            pack_delta(0, 32)

    def test_pack_uplink_out_of_range(self):
        with pytest.raises(PortRange):
            pack_delta(8, 1)

    def test_round_trip_exhaustive(self):
        for uplink in range(8):
            for port in range(1, 32):
                assert unpack_delta(pack_delta(uplink, port)) == DeltaByte(uplink, port)

    def test_unpack_pack_identity(self):
        for octet in range(256):
            if octet & 0x1F == 0:
                continue
            d = unpack_delta(octet)
            assert pack_delta(d.uplink_index, d.downlink_port) == octet


class TestExpectedAddresses:
    def test_reference_fanouts_fourth_root(self):
        assert expected_addresses(FanoutParams(65536, 2, 32)) == pytest.approx(16.0)

    def test_single_uplink_is_one(self):
        assert expected_addresses(FanoutParams(12345, 1, 8)) == 1.0

    def test_square_root_case(self):
        # exponent log2(2)/(log2(8)-log2(2)) = 1/2; oracle: sqrt(1024) = 32
        assert expected_addresses(FanoutParams(1024, 2, 8)) == pytest.approx(math.sqrt(1024))

    def test_bad_fanout(self):
        with pytest.raises(BadFanout):
            FanoutParams(100, 8, 8)

    @pytest.mark.parametrize("u,d", [(2, 8), (2, 32), (4, 32), (7, 31)])
    def test_monotone_in_n(self, u, d):
        values = [expected_addresses(FanoutParams(n, u, d)) for n in (16, 256, 4096)]
        assert values == sorted(values)

    def test_monotone_in_u_and_antitone_in_d(self):
        n = 4096
        by_u = [expected_addresses(FanoutParams(n, u, 32)) for u in (1, 2, 4, 8)]
        assert by_u == sorted(by_u)
        by_d = [expected_addresses(FanoutParams(n, 2, d)) for d in (8, 16, 32, 64)]
        assert by_d == sorted(by_d, reverse=True)


wellformed = st.builds(
    lambda tier, vals: BigMac(bytes(vals[:tier] + [0] * (6 - tier)), tier),
    st.integers(min_value=1, max_value=5),
    st.lists(st.integers(min_value=1, max_value=255), min_size=5, max_size=5),
)


class TestProperties:
    @given(wellformed, st.integers(min_value=1, max_value=255))
    def test_extension_is_monotone(self, addr, port):
        child = extend_address(addr, port)
        assert child.tier == addr.tier + 1
        assert common_prefix_len(addr, child) == addr.tier

    @given(wellformed, st.integers(min_value=1, max_value=255))
    def test_extension_preserves_wellformedness(self, addr, port):
        child = extend_address(addr, port)
        assert all(child.packed[i] != 0 for i in range(child.tier))
        assert all(child.packed[i] == 0 for i in range(child.tier, 6))

    @given(wellformed)
    def test_text_round_trip(self, addr):
        assert BigMac.parse(str(addr)) == addr


class TestParsing:
    def test_format_parse_round_trip(self):
        raw = bytes([1, 2, 3, 0, 0, 0])
        assert parse_mac(format_mac(raw)) == raw

    def test_rejects_short_text(self):
        with pytest.raises(MalformedAddress):
            parse_mac("01:02:03")

    def test_rejects_gap_in_prefix(self):
        with pytest.raises(MalformedAddress):
            BigMac.from_bytes(bytes([1, 0, 3, 0, 0, 0]))

    def test_rejects_all_zero(self):
        with pytest.raises(MalformedAddress):
            BigMac.from_bytes(bytes(6))

    def test_prefix_view(self):
        assert mac("01:02:03:00:00:00").prefix(2) == mac("01:02:00:00:00:00")
