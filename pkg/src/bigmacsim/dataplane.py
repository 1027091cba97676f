"""Per-switch forwarding: byte-check descent, four climb strategies, edge rewrite.

A frame below its destination's branch climbs; a frame above it descends by
reading one byte.  The climb strategies:

* alpha -- send to the uplink that owns the frame's source prefix, so the
  frame retraces the source address's own path upward.
* beta  -- send to any uplink (deterministic rotation) and rewrite the
  source prefix to one owned by that uplink, keeping the frame on-path.
* gamma -- longest prefix match of the destination against the prefixes this
  switch owns; a full-length match means the destination hangs below this
  switch, and the frame turns straight down without touching the top tier.
* delta -- read the uplink index packed into the 3 high bits of the source
  address's port byte; climbing becomes the same byte test as descending.

Downlink-to-downlink turns (hairpin) happen where source and destination
prefixes coincide.  Edge switches translate between a host's genuine MAC
and its locator addresses, remembering which source to use per destination.

Switch state here is configuration only: prefixes and port numbers.  Except
for edge learning tables it never grows with traffic or network size.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from enum import Enum

from .addressing import BROADCAST, BigMac, meaningful_len, pack_delta
from .frames import ETHERTYPE_ARP, ArpReply, Frame


class Strategy(str, Enum):
    ALPHA = "alpha"
    BETA = "beta"
    GAMMA = "gamma"
    DELTA = "delta"


class UnknownHostMac(LookupError):
    """Delivery to a host port before any frame taught us its genuine MAC."""


class NoHostAddress(LookupError):
    """A host port with no assigned addresses cannot source frames."""


# Egress selectors the engine resolves to links:
#   ("down", port) | ("up", index) | ("mesh", root_byte) | ("server",)
Egress = tuple


@dataclass
class EdgeState:
    """Customer-edge tables: learned genuine MACs and per-destination sources."""

    host_addrs: dict[int, tuple[BigMac, ...]]
    genuine_by_port: dict[int, bytes] = field(default_factory=dict)
    src_for_dst: dict[tuple[int, bytes], BigMac] = field(default_factory=dict)


@dataclass
class SwitchState:
    node_id: str
    tier: int
    strategy: Strategy
    root_byte: int | None
    uplinks: tuple[int, ...]  # sorted uplink indexes
    uplink_prefixes: dict[int, tuple[BigMac, ...]]
    downlink_ports: frozenset[int]
    edge: EdgeState | None = None
    beta_cursor: int = 0  # rotation scratch for beta, not forwarding state

    def __post_init__(self) -> None:
        # raw-byte views of the owned prefixes, for the hot path
        self.prefix_owner: dict[bytes, int] = {}
        self.least_prefix: dict[int, bytes] = {}
        for k in self.uplinks:
            prefs = self.uplink_prefixes.get(k, ())
            for p in prefs:
                self.prefix_owner[p.packed[: self.tier]] = k
            if prefs:
                self.least_prefix[k] = prefs[0].packed[: self.tier]


@dataclass
class ForwardDecision:
    actions: list[tuple[Egress, Frame]] = field(default_factory=list)
    drop: str | None = None


def state_fingerprint(s: SwitchState) -> bytes:
    """Canonical serialization of the forwarding-relevant configuration.

    Excludes edge learning tables and the beta rotation scratch: the claim
    under test is that what a switch needs in order to forward depends only
    on its own ports and prefixes, never on traffic or host count.
    """
    parts = [
        f"tier={s.tier}",
        f"strategy={s.strategy.value}",
        f"root={s.root_byte}",
        "uplinks="
        + ";".join(
            f"{k}:" + ",".join(str(p) for p in s.uplink_prefixes.get(k, ()))
            for k in s.uplinks
        ),
        "ports=" + ",".join(str(p) for p in sorted(s.downlink_ports)),
    ]
    return "|".join(parts).encode()


def _port_byte(s: SwitchState, raw: bytes) -> int:
    byte = raw[s.tier]
    return byte & 0x1F if s.strategy is Strategy.DELTA else byte


def _descend(s: SwitchState, f: Frame) -> ForwardDecision:
    """Byte-check descent: the byte after this switch's prefix names the port."""
    tier = meaningful_len(f.dst)
    if tier is None:
        return ForwardDecision(drop="not_locator")
    if tier <= s.tier:
        return ForwardDecision(drop="dst_too_shallow")
    port = _port_byte(s, f.dst)
    if port not in s.downlink_ports:
        return ForwardDecision(drop="no_such_port")
    if s.edge and port in s.edge.host_addrs:
        if f.ethertype == ETHERTYPE_ARP and isinstance(f.payload, ArpReply):
            # Replies travel to a chosen requester address; remember it as the
            # source to use toward the advertised destination.
            s.edge.src_for_dst[(port, f.payload.target_addr)] = BigMac.from_bytes(f.dst)
        f = edge_egress(s, f, port)  # may raise UnknownHostMac
    return ForwardDecision(actions=[(("down", port), f)])


def forward_down(s: SwitchState, f: Frame) -> ForwardDecision:
    """Handle a frame that arrived on an uplink: always a byte-check descent."""
    try:
        return _descend(s, f)
    except UnknownHostMac:
        return ForwardDecision(drop="unknown_host_mac")


def forward_up(s: SwitchState, f: Frame) -> ForwardDecision:
    """Pick the egress uplink for a frame heading toward the top tier."""
    if not s.uplinks:
        return ForwardDecision(drop="empty_uplinks")

    if s.strategy is Strategy.ALPHA:
        k = s.prefix_owner.get(f.src[: s.tier])
        if k is None:
            return ForwardDecision(drop="no_owning_uplink")
        return ForwardDecision(actions=[(("up", k), f)])

    if s.strategy is Strategy.BETA:
        k = s.uplinks[s.beta_cursor % len(s.uplinks)]
        s.beta_cursor += 1
        prefix = s.least_prefix.get(k)
        if prefix is None:
            return ForwardDecision(drop="no_owning_uplink")
        src = prefix + f.src[s.tier :]
        return ForwardDecision(actions=[(("up", k), replace(f, src=src))])

    if s.strategy is Strategy.GAMMA:
        best_k, best_len = None, -1
        for k in s.uplinks:
            for p in s.uplink_prefixes.get(k, ()):
                n = 0
                while n < p.tier and p.packed[n] == f.dst[n]:
                    n += 1
                if n > best_len:
                    best_k, best_len = k, n
        if best_k is None:
            return ForwardDecision(drop="no_owning_uplink")
        return ForwardDecision(actions=[(("up", best_k), f)])

    # delta: the uplink index rides in the high bits of the port byte
    k = f.src[s.tier] >> 5
    if k not in s.uplinks:
        return ForwardDecision(drop="no_owning_uplink")
    return ForwardDecision(actions=[(("up", k), f)])


def hairpin_check(s: SwitchState, f: Frame) -> int | None:
    """Downlink-to-downlink criterion: equal source/destination prefixes.

    Returns the destination's port byte at this switch (delta-masked), or
    None when the prefixes differ or either address is not a locator.
    """
    src_tier = meaningful_len(f.src)
    dst_tier = meaningful_len(f.dst)
    if src_tier is None or dst_tier is None or dst_tier <= s.tier:
        return None
    if f.src[: s.tier] != f.dst[: s.tier]:
        return None
    return _port_byte(s, f.dst)


def edge_ingress(s: SwitchState, f: Frame, port: int) -> Frame:
    """Rewrite a host's genuine source MAC to one of its locator addresses.

    The address is the remembered one for this destination when present;
    otherwise the host's lexicographically least address is chosen and
    remembered.  Broadcasts keep the least address as a placeholder: the
    upward flood substitutes the per-path source on every copy.
    """
    assert s.edge is not None
    s.edge.genuine_by_port[port] = f.src
    addrs = s.edge.host_addrs.get(port, ())
    if not addrs:
        raise NoHostAddress(f"{s.node_id} port {port} has no assigned addresses")
    if f.dst == BROADCAST or meaningful_len(f.dst) is None:
        return replace(f, src=addrs[0].packed)
    chosen = s.edge.src_for_dst.get((port, f.dst))
    if chosen is None:
        chosen = addrs[0]
        s.edge.src_for_dst[(port, f.dst)] = chosen
    return replace(f, src=chosen.packed)


def edge_egress(s: SwitchState, f: Frame, port: int) -> Frame:
    """Restore the receiving host's genuine MAC as destination.

    The source is left as the sender's locator address: hosts cache peer
    addresses, never peer genuine MACs.
    """
    assert s.edge is not None
    genuine = s.edge.genuine_by_port.get(port)
    if genuine is None:
        raise UnknownHostMac(f"{s.node_id} port {port}: no genuine MAC learned")
    return replace(f, dst=genuine)


def flood_broadcast(s: SwitchState, f: Frame, ingress: tuple) -> ForwardDecision:
    """Send one copy per uplink, each carrying a source valid for that path.

    The copy for uplink k takes k's least owned prefix; under delta packing
    the following byte's high bits are set to k so the surviving address
    stays consistent with the path the copy climbs.  At the top tier the
    flood terminates at the control-server attachment.
    """
    if s.tier == 1:
        return ForwardDecision(actions=[(("server",), f)])
    actions: list[tuple[Egress, Frame]] = []
    for k in s.uplinks:
        prefix = s.least_prefix.get(k)
        if prefix is None:
            continue  # uplink leads nowhere addressable; the path oracle skips it too
        src = bytearray(f.src)
        src[: s.tier] = prefix
        if s.strategy is Strategy.DELTA:
            src[s.tier] = pack_delta(k, src[s.tier] & 0x1F)
        actions.append(((("up", k)), replace(f, src=bytes(src))))
    if not actions:
        return ForwardDecision(drop="flood_dead_end")
    return ForwardDecision(actions=actions)


def switch_handle(s: SwitchState, f: Frame, ingress: tuple) -> ForwardDecision:
    """Dispatch one frame: edge rewrite, then hairpin / climb / descend / flood.

    ``ingress`` is ("down", port), ("up", index), ("mesh",) or ("inject",);
    the latter two occur only at top-tier switches (peer-mesh transfers and
    control-server replies).
    """
    kind = ingress[0]

    if kind in ("up", "mesh", "inject"):
        if f.dst == BROADCAST:
            return ForwardDecision(drop="broadcast_downward")
        if s.tier == 1:
            return _top_handle(s, f, from_downlink=False)
        return forward_down(s, f)

    port = ingress[1]
    if s.edge and port in s.edge.host_addrs:
        f = edge_ingress(s, f, port)

    if f.dst == BROADCAST:
        return flood_broadcast(s, f, ingress)

    if meaningful_len(f.dst) is None or meaningful_len(f.src) is None:
        return ForwardDecision(drop="not_locator")

    if s.tier == 1:
        return _top_handle(s, f, from_downlink=True)

    if s.strategy is Strategy.GAMMA:
        # A full-length prefix match means the destination is in this
        # switch's own subtree: turn down here, whatever the source says.
        if (
            meaningful_len(f.dst) > s.tier
            and f.dst[: s.tier] in s.prefix_owner
        ):
            try:
                return _descend(s, f)
            except UnknownHostMac:
                return ForwardDecision(drop="unknown_host_mac")
    else:
        if hairpin_check(s, f) is not None:
            try:
                return _descend(s, f)
            except UnknownHostMac:
                return ForwardDecision(drop="unknown_host_mac")

    return forward_up(s, f)


def _top_handle(s: SwitchState, f: Frame, *, from_downlink: bool) -> ForwardDecision:
    """Top-tier logic: descend into the owned root, or hand across the mesh."""
    if f.dst[0] == s.root_byte:
        try:
            return _descend(s, f)
        except UnknownHostMac:
            return ForwardDecision(drop="unknown_host_mac")
    if from_downlink:
        return ForwardDecision(actions=[(("mesh", f.dst[0]), f)])
    # Mesh/injected arrivals are already addressed to their owner; a root
    # mismatch here would bounce forever, so it is dropped instead.
    return ForwardDecision(drop="mesh_mismatch")
