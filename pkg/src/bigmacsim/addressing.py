"""Six-byte locator addresses for tiered layer-2 switching.

A locator packs the downward path to a device into the leading bytes of a
MAC-shaped value: a device hanging ``i`` levels below a top switch is named
by ``i`` nonzero bytes followed by ``6 - i`` zero padding bytes.  Byte 1
identifies the top switch, byte ``k+1`` the downlink port taken at level
``k``.  Forwarding on these addresses is a single byte test, so per-switch
work never grows with the network.

Two related pieces live here as well:

* "delta" byte packing, which steals the 3 high bits of a port byte to name
  the uplink a frame should climb, leaving 5 bits for the downlink port;
* the closed-form estimate of how many addresses a host accumulates on a
  regular fabric with uplink fanout ``u`` and downlink fanout ``d``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

ADDRESS_LEN = 6
BROADCAST = b"\xff" * ADDRESS_LEN
MAX_TIER = 6
MAX_UPLINKS = 8       # uplink index must fit in 3 bits
MAX_DELTA_PORT = 31   # downlink port must fit in 5 bits under delta packing


class AddressError(ValueError):
    """Base class for address construction and parsing failures."""


class TierOverflow(AddressError):
    """Extending an address that already has 6 meaningful bytes."""


class ZeroPort(AddressError):
    """Port number 0 is reserved as padding and never names a downlink."""


class PortRange(AddressError):
    """Port or uplink index outside the representable range."""


class MalformedAddress(AddressError):
    """Raw bytes that do not follow the nonzero-prefix / zero-padding shape."""


class BadFanout(ValueError):
    """Fanout parameters with d <= u; the estimate is undefined there."""


def format_mac(raw: bytes) -> str:
    """Render 6 raw bytes as colon-separated lowercase hex."""
    if len(raw) != ADDRESS_LEN:
        raise MalformedAddress(f"expected {ADDRESS_LEN} bytes, got {len(raw)}")
    return ":".join(f"{b:02x}" for b in raw)


def parse_mac(text: str) -> bytes:
    """Parse colon-separated hex (the format_mac output) back to 6 bytes."""
    parts = text.strip().split(":")
    if len(parts) != ADDRESS_LEN:
        raise MalformedAddress(f"expected 6 colon-separated octets: {text!r}")
    try:
        raw = bytes(int(p, 16) for p in parts)
    except ValueError as exc:
        raise MalformedAddress(f"bad octet in {text!r}") from exc
    if any(int(p, 16) > 0xFF for p in parts):
        raise MalformedAddress(f"octet out of range in {text!r}")
    return raw


def meaningful_len(raw: bytes) -> int | None:
    """Tier of a raw 6-byte value, or None if it is not a valid locator.

    Valid means: one or more nonzero leading bytes, all-zero tail.
    """
    if len(raw) != ADDRESS_LEN:
        return None
    tier = 0
    for b in raw:
        if b == 0:
            break
        tier += 1
    if tier == 0:
        return None
    if any(raw[i] for i in range(tier, ADDRESS_LEN)):
        return None
    return tier


@dataclass(frozen=True, order=True)
class BigMac:
    """A locator: ``tier`` meaningful leading bytes, zero padding after.

    Instances sort lexicographically by their packed bytes, which is the
    ordering used everywhere a deterministic "least address" is needed.
    """

    packed: bytes
    tier: int

    def __post_init__(self) -> None:
        got = meaningful_len(self.packed)
        if got is None or got != self.tier:
            raise MalformedAddress(
                f"bytes {self.packed.hex()} do not form a tier-{self.tier} address"
            )

    @classmethod
    def from_bytes(cls, raw: bytes) -> "BigMac":
        tier = meaningful_len(raw)
        if tier is None:
            raise MalformedAddress(f"not a locator: {raw.hex()}")
        return cls(bytes(raw), tier)

    @classmethod
    def parse(cls, text: str) -> "BigMac":
        return cls.from_bytes(parse_mac(text))

    @classmethod
    def root(cls, root_byte: int) -> "BigMac":
        """Tier-1 address of a top switch."""
        if not 1 <= root_byte <= 0xFF:
            raise PortRange(f"root byte {root_byte} outside 1..255")
        return cls(bytes([root_byte]) + b"\x00" * (ADDRESS_LEN - 1), 1)

    def prefix(self, length: int) -> "BigMac":
        """The first ``length`` meaningful bytes as an address of their own."""
        if not 1 <= length <= self.tier:
            raise PortRange(f"prefix length {length} outside 1..{self.tier}")
        return BigMac(self.packed[:length] + b"\x00" * (ADDRESS_LEN - length), length)

    def __str__(self) -> str:
        return format_mac(self.packed)


def extend_address(parent: BigMac, downlink_port: int) -> BigMac:
    """Append one downlink-port byte to a parent address.

    The child hanging off port ``c`` of the switch named by ``parent``
    is named by ``parent`` followed by ``c``.
    """
    if parent.tier >= MAX_TIER:
        raise TierOverflow(f"{parent} already has {MAX_TIER} meaningful bytes")
    if downlink_port == 0:
        raise ZeroPort("downlink port 0 collides with padding")
    if not 0 < downlink_port <= 0xFF:
        raise PortRange(f"downlink port {downlink_port} outside 1..255")
    raw = bytearray(parent.packed)
    raw[parent.tier] = downlink_port
    return BigMac(bytes(raw), parent.tier + 1)


def common_prefix_len(a: BigMac, b: BigMac) -> int:
    """Number of leading bytes equal in both, capped at the shorter tier."""
    limit = min(a.tier, b.tier)
    n = 0
    while n < limit and a.packed[n] == b.packed[n]:
        n += 1
    return n


@dataclass(frozen=True)
class DeltaByte:
    """A port byte split into an uplink index (3 bits) and a port (5 bits)."""

    uplink_index: int
    downlink_port: int


def pack_delta(uplink_index: int, downlink_port: int) -> int:
    """Pack (uplink index, downlink port) into one octet: index*32 + port."""
    if not 0 <= uplink_index < MAX_UPLINKS:
        raise PortRange(f"uplink index {uplink_index} outside 0..7")
    if downlink_port == 0:
        raise ZeroPort("downlink port 0 collides with padding")
    if downlink_port > MAX_DELTA_PORT:
        raise PortRange(f"downlink port {downlink_port} exceeds {MAX_DELTA_PORT}")
    return uplink_index * 32 + downlink_port


def unpack_delta(octet: int) -> DeltaByte:
    """Inverse of pack_delta."""
    if not 0 <= octet <= 0xFF:
        raise PortRange(f"octet {octet} outside 0..255")
    port = octet & 0x1F
    if port == 0:
        raise ZeroPort(f"octet {octet:#04x} has zero low bits; not a packed port")
    return DeltaByte(uplink_index=octet >> 5, downlink_port=port)


@dataclass(frozen=True)
class FanoutParams:
    """Regular-fabric parameters: N hosts, u uplinks and d downlinks per switch."""

    n_hosts: int
    uplink_fanout: int
    downlink_fanout: int

    def __post_init__(self) -> None:
        if self.n_hosts < 1:
            raise ValueError("n_hosts must be positive")
        if self.uplink_fanout < 1:
            raise ValueError("uplink_fanout must be >= 1")
        if self.downlink_fanout <= self.uplink_fanout:
            raise BadFanout(
                f"downlink fanout {self.downlink_fanout} must exceed "
                f"uplink fanout {self.uplink_fanout}"
            )


def expected_addresses(p: FanoutParams) -> float:
    """Estimated mean addresses per host: N ** (log2 u / (log2 d - log2 u)).

    A single uplink means a unique upward path, so u == 1 yields exactly 1.
    """
    if p.uplink_fanout == 1:
        return 1.0
    exponent = math.log2(p.uplink_fanout) / (
        math.log2(p.downlink_fanout) - math.log2(p.uplink_fanout)
    )
    return p.n_hosts**exponent
