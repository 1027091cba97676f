"""Centralized ARP&DHCP server fed by upward-flooded broadcasts.

Every broadcast a host sends reaches the server once per upward path, each
copy carrying a different source address of the host.  Collecting those
copies teaches the server the host's complete address set without any
active probing.  Replies are unicast to a single chosen address, and the
choice of (requester address, target address) per ARP answer is the
traffic-engineering knob: it decides the path later data frames take.
Unsolicited replies re-point existing associations after link failures.
"""

from __future__ import annotations

import hashlib
import ipaddress
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Iterable, Sequence

from .addressing import BigMac, common_prefix_len
from .frames import (
    ETHERTYPE_ARP,
    ETHERTYPE_IPV4,
    ArpReply,
    ArpRequest,
    DhcpAck,
    DhcpNak,
    DhcpRequest,
    Frame,
)
from .topology import AddressTable, Topology, address_is_live

SERVER_MAC = bytes([0x02, 0x53, 0x52, 0x56, 0x00, 0x01])


class EmptySet(ValueError):
    """Pair selection over an empty address set."""


class PolicyMode(str, Enum):
    FIRST = "first"
    ROUND_ROBIN = "round_robin"
    COMMON_ROOT = "common_root"


def _stable_offset(seed: int, key: object) -> int:
    digest = hashlib.blake2b(f"{seed}|{key!r}".encode(), digest_size=8).digest()
    return int.from_bytes(digest, "big")


@dataclass
class TePolicy:
    mode: PolicyMode = PolicyMode.FIRST
    seed: int = 0
    counters: dict[object, int] = field(default_factory=dict)


def select_pair(
    policy: TePolicy,
    requester_addrs: Iterable[BigMac],
    target_addrs: Iterable[BigMac],
    key: object = None,
) -> tuple[BigMac, BigMac]:
    """Choose the (requester, target) address pair an ARP reply advertises.

    first       -- lexicographically least of each set.
    round_robin -- walk the cross product with a per-key counter whose
                   starting offset is derived from the seed.
    common_root -- prefer pairs under the same top switch, maximizing the
                   shared prefix; ties fall back to lexicographic order.
    """
    req = sorted(requester_addrs)
    tgt = sorted(target_addrs)
    if not req or not tgt:
        raise EmptySet("pair selection needs nonempty address sets")

    if policy.mode is PolicyMode.FIRST:
        return req[0], tgt[0]

    if policy.mode is PolicyMode.ROUND_ROBIN:
        if key is None:
            key = (req[0], tgt[0])
        size = len(req) * len(tgt)
        count = policy.counters.get(key)
        if count is None:
            count = _stable_offset(policy.seed, key) % size
        policy.counters[key] = count + 1
        idx = count % size
        return req[idx // len(tgt)], tgt[idx % len(tgt)]

    best: tuple[int, BigMac, BigMac] | None = None
    for s in req:
        for d in tgt:
            cpl = common_prefix_len(s, d)
            cand = (-cpl, s, d)
            if best is None or cand < (best[0], best[1], best[2]):
                best = cand
    assert best is not None
    return best[1], best[2]


@dataclass
class Lease:
    ip: str
    expiry: int | None = None  # tick; None means never


@dataclass
class Binding:
    mac: bytes
    addrs: tuple[BigMac, ...]


@dataclass
class ControlDb:
    bindings: dict[str, Binding] = field(default_factory=dict)  # ip -> binding
    edge_of: dict[bytes, str] = field(default_factory=dict)  # genuine mac -> edge id
    leases: dict[bytes, Lease] = field(default_factory=dict)  # genuine mac -> lease
    ip_of: dict[bytes, str] = field(default_factory=dict)  # genuine mac -> ip
    # (requester mac, target ip) -> advertised (requester addr, target addr)
    assoc: dict[tuple[bytes, str], tuple[BigMac, BigMac]] = field(default_factory=dict)
    copy_counter: int = 0


@dataclass(frozen=True)
class ServerCopy:
    """One flooded copy as it reached the server, tagged with its top switch."""

    frame: Frame
    via_top: str


class ControlServer:
    """Single logical actor; the engine hands it copy batches serially."""

    def __init__(
        self,
        topology: Topology,
        table: AddressTable,
        *,
        policy: TePolicy | None = None,
        pool: str = "10.0.0.0/24",
        lease_ticks: int | None = None,
        count: Callable[[str], None] | None = None,
    ):
        self.topology = topology
        self.table = table
        self.policy = policy or TePolicy()
        self.pool = ipaddress.IPv4Network(pool)
        self.lease_ticks = lease_ticks
        self.db = ControlDb()
        self.dead: set[frozenset[str]] = set()
        self._count = count or (lambda name: None)

    # -- learning ----------------------------------------------------------

    def _learn(self, mac: bytes, copies: Sequence[ServerCopy]) -> tuple[BigMac, ...]:
        addrs = tuple(sorted({BigMac.from_bytes(c.frame.src) for c in copies}))
        self.db.copy_counter += len(copies)
        if addrs:
            # The next-to-last node of any address path is the host's edge switch.
            try:
                owner_path = self._path_of(addrs[0])
            except KeyError:
                owner_path = []
            if len(owner_path) >= 2:
                self.db.edge_of[mac] = owner_path[-2]
        return addrs

    def _path_of(self, addr: BigMac) -> list[str]:
        from .topology import path_of_address

        return path_of_address(self.topology, addr, delta_packed=self.table.delta_packed)

    def _live(self, addrs: Iterable[BigMac]) -> list[BigMac]:
        return [
            a
            for a in addrs
            if address_is_live(
                self.topology, a, self.dead, delta_packed=self.table.delta_packed
            )
        ]

    def _bind(self, ip: str, mac: bytes, addrs: tuple[BigMac, ...]) -> None:
        self.db.bindings[ip] = Binding(mac=mac, addrs=addrs)
        self.db.ip_of[mac] = ip

    def _reply_frame(
        self, client_addrs: Sequence[BigMac], payload: object, ethertype: int
    ) -> Frame:
        """Unicast to one client address, preferring live ones; single-path reply."""
        live = self._live(client_addrs)
        dst = (live or sorted(client_addrs))[0]
        return Frame(dst=dst.packed, src=SERVER_MAC, ethertype=ethertype, payload=payload)

    # -- DHCP ----------------------------------------------------------------

    def handle_dhcp(self, copies: Sequence[ServerCopy], now: int = 0) -> list[Frame]:
        """Lease an address to the client and answer along a single live path."""
        request = copies[0].frame.payload
        assert isinstance(request, DhcpRequest)
        mac = request.client_mac
        addrs = self._learn(mac, copies)

        lease = self.db.leases.get(mac)
        if lease is None or (lease.expiry is not None and lease.expiry < now):
            ip = self._allocate(now)
            if ip is None:
                self._count("dhcp_pool_exhausted")
                return [self._reply_frame(addrs, DhcpNak(mac, request.seq), ETHERTYPE_IPV4)]
            expiry = None if self.lease_ticks is None else now + self.lease_ticks
            lease = Lease(ip=ip, expiry=expiry)
            self.db.leases[mac] = lease
        self._bind(lease.ip, mac, addrs)
        self._count("dhcp_acks")
        return [self._reply_frame(addrs, DhcpAck(mac, lease.ip, request.seq), ETHERTYPE_IPV4)]

    def _allocate(self, now: int) -> str | None:
        used = {
            lease.ip
            for lease in self.db.leases.values()
            if lease.expiry is None or lease.expiry >= now
        }
        for host in self.pool.hosts():
            ip = str(host)
            if ip not in used:
                return ip
        return None

    # -- ARP -------------------------------------------------------------------

    def handle_arp(self, copies: Sequence[ServerCopy], now: int = 0) -> list[Frame]:
        """Answer who-has with a policy-chosen address pair.

        The requester's own addresses are refreshed from the copies, so any
        transmitting host is learned whether or not it used DHCP.
        """
        request = copies[0].frame.payload
        assert isinstance(request, ArpRequest)
        requester_addrs = self._learn(request.sender_mac, copies)
        if request.sender_ip:
            self._bind(request.sender_ip, request.sender_mac, requester_addrs)

        binding = self.db.bindings.get(request.target_ip)
        if binding is None:
            self._count("arp_unknown_target")
            return []
        req_live = self._live(requester_addrs)
        tgt_live = self._live(binding.addrs)
        if not req_live or not tgt_live:
            self._count("arp_no_live_address")
            return []
        pair_key = (request.sender_mac, request.target_ip)
        chosen_src, chosen_tgt = select_pair(self.policy, req_live, tgt_live, pair_key)
        self.db.assoc[pair_key] = (chosen_src, chosen_tgt)
        self._count("arp_replies")
        reply = ArpReply(request.target_ip, chosen_tgt.packed, request.seq)
        return [Frame(dst=chosen_src.packed, src=chosen_tgt.packed, ethertype=ETHERTYPE_ARP, payload=reply)]

    # -- failover ----------------------------------------------------------------

    def on_link_change(self, a: str, b: str, up: bool) -> None:
        pair = frozenset((a, b))
        if up:
            self.dead.discard(pair)
        else:
            self.dead.add(pair)

    def failover_announce(
        self, failed: tuple[str, str]
    ) -> tuple[list[Frame], list[tuple[bytes, str]]]:
        """Re-point every association whose advertised pair crossed the dead link.

        Surviving pairs are chosen root-first: among live addresses the pair
        sharing the longest prefix wins, so repaired traffic stays on one
        side of the top tier whenever both ends still reach a common root.
        Returns the unsolicited replies to send plus the (requester mac,
        target ip) pairs left without any surviving path.
        """
        self.on_link_change(failed[0], failed[1], up=False)
        surviving = TePolicy(PolicyMode.COMMON_ROOT, self.policy.seed)
        frames: list[Frame] = []
        unreachable: list[tuple[bytes, str]] = []
        for pair_key in sorted(self.db.assoc, key=lambda k: (k[0], k[1])):
            chosen_src, chosen_tgt = self.db.assoc[pair_key]
            if self._live([chosen_src]) and self._live([chosen_tgt]):
                continue
            mac, target_ip = pair_key
            requester_ip = self.db.ip_of.get(mac)
            requester = self.db.bindings.get(requester_ip) if requester_ip else None
            target = self.db.bindings.get(target_ip)
            req_live = self._live(requester.addrs) if requester else []
            tgt_live = self._live(target.addrs) if target else []
            if not req_live or not tgt_live:
                self._count("failover_unreachable")
                unreachable.append(pair_key)
                continue
            new_src, new_tgt = select_pair(surviving, req_live, tgt_live, pair_key)
            self.db.assoc[pair_key] = (new_src, new_tgt)
            self._count("failover_announcements")
            reply = ArpReply(target_ip, new_tgt.packed, seq=0, announcement=True)
            frames.append(
                Frame(dst=new_src.packed, src=new_tgt.packed, ethertype=ETHERTYPE_ARP, payload=reply)
            )
        return frames, unreachable
