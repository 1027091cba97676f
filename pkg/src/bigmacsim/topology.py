"""Tiered switch/host topologies and path-derived address assignment.

Tier 1 is the top of the fabric.  Every switch link connects a tier-i
parent's downlink port to a tier-(i+1) child's uplink; hosts hang off
downlink ports of their edge switch.  Addresses are assigned by walking
every downward path from the top: each node collects one address per path,
so the whole network forms a multi-rooted bunch of overlapping branches
rather than a single tree.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

from .addressing import (
    ADDRESS_LEN,
    BROADCAST,
    MAX_DELTA_PORT,
    MAX_UPLINKS,
    BigMac,
    extend_address,
    pack_delta,
)


class MergeConflict(ValueError):
    """Stack merge or shortcut rewrite that cannot produce a legal switch."""


class InvalidTopology(ValueError):
    """Raised when an operation requires a clean validate() result."""

    def __init__(self, violations: list["Violation"]):
        self.violations = violations
        super().__init__("; ".join(str(v) for v in violations))


@dataclass(frozen=True)
class Violation:
    code: str
    message: str

    def __str__(self) -> str:
        return f"{self.code}: {self.message}"


@dataclass(frozen=True)
class Uplink:
    """One upward link: this switch's index for it, plus the parent-side end."""

    index: int
    parent: str
    parent_port: int


@dataclass
class SwitchNode:
    id: str
    tier: int
    uplinks: list[Uplink] = field(default_factory=list)
    downlinks: dict[int, str] = field(default_factory=dict)  # port -> peer node id
    stack_group: str | None = None


@dataclass
class HostNode:
    id: str
    mac: bytes
    ip: str | None = None


@dataclass
class Topology:
    switches: dict[str, SwitchNode] = field(default_factory=dict)
    hosts: dict[str, HostNode] = field(default_factory=dict)
    root_bytes: dict[str, int] = field(default_factory=dict)  # top switch -> 1..255
    shortcuts: list[tuple[str, str]] = field(default_factory=list)

    # -- builder helpers -------------------------------------------------

    def add_switch(
        self,
        sid: str,
        tier: int,
        root: int | None = None,
        stack: str | None = None,
    ) -> SwitchNode:
        if sid in self.switches or sid in self.hosts:
            raise ValueError(f"duplicate node id {sid!r}")
        node = SwitchNode(id=sid, tier=tier, stack_group=stack)
        self.switches[sid] = node
        if root is not None:
            self.root_bytes[sid] = root
        return node

    def add_link(
        self, parent: str, port: int, child: str, uplink_index: int | None = None
    ) -> None:
        """Wire a parent downlink port to a child switch uplink."""
        pnode = self.switches[parent]
        cnode = self.switches[child]
        if port in pnode.downlinks:
            raise ValueError(f"{parent} port {port} already wired")
        if uplink_index is None:
            taken = {u.index for u in cnode.uplinks}
            uplink_index = next(i for i in range(MAX_UPLINKS + 1) if i not in taken)
        pnode.downlinks[port] = child
        cnode.uplinks.append(Uplink(uplink_index, parent, port))
        cnode.uplinks.sort(key=lambda u: u.index)

    def add_host(
        self, hid: str, at: tuple[str, int], mac: bytes, ip: str | None = None
    ) -> HostNode:
        if hid in self.hosts or hid in self.switches:
            raise ValueError(f"duplicate node id {hid!r}")
        sid, port = at
        snode = self.switches[sid]
        if port in snode.downlinks:
            raise ValueError(f"{sid} port {port} already wired")
        host = HostNode(id=hid, mac=bytes(mac), ip=ip)
        self.hosts[hid] = host
        snode.downlinks[port] = hid
        return host

    def add_shortcut(self, a: str, b: str) -> None:
        self.shortcuts.append((a, b))

    # -- queries ----------------------------------------------------------

    def top_switches(self) -> list[str]:
        return sorted(s.id for s in self.switches.values() if s.tier == 1)

    def attachments(self) -> dict[str, tuple[str, int]]:
        """host id -> (edge switch id, port)."""
        out: dict[str, tuple[str, int]] = {}
        for sid in sorted(self.switches):
            for port, peer in sorted(self.switches[sid].downlinks.items()):
                if peer in self.hosts:
                    out[peer] = (sid, port)
        return out

    def link_pairs(self) -> set[frozenset[str]]:
        """Every physical link as an unordered node-id pair (includes host links)."""
        pairs: set[frozenset[str]] = set()
        for sid, node in self.switches.items():
            for peer in node.downlinks.values():
                pairs.add(frozenset((sid, peer)))
        return pairs

    def clone(self) -> "Topology":
        out = Topology()
        for sid, node in self.switches.items():
            out.switches[sid] = SwitchNode(
                id=node.id,
                tier=node.tier,
                uplinks=list(node.uplinks),
                downlinks=dict(node.downlinks),
                stack_group=node.stack_group,
            )
        for hid, host in self.hosts.items():
            out.hosts[hid] = HostNode(id=host.id, mac=host.mac, ip=host.ip)
        out.root_bytes = dict(self.root_bytes)
        out.shortcuts = list(self.shortcuts)
        return out


# -- validation ------------------------------------------------------------


def validate(t: Topology, strategy: str | None = None) -> list[Violation]:
    """Structural checks; an empty list means the topology is usable.

    Pass strategy="delta" to additionally enforce the packing bounds
    (ports <= 31) that the delta byte-check relies on.
    """
    out: list[Violation] = []

    def bad(code: str, message: str) -> None:
        out.append(Violation(code, message))

    tops = t.top_switches()
    seen_roots: dict[int, str] = {}
    for sid in tops:
        root = t.root_bytes.get(sid)
        if root is None:
            bad("MissingRootByte", f"top switch {sid} has no root byte")
        elif not 1 <= root <= 0xFF:
            bad("RootByteRange", f"{sid} root byte {root} outside 1..255")
        elif root in seen_roots:
            bad("DuplicateRootByte", f"{sid} and {seen_roots[root]} share {root:#04x}")
        else:
            seen_roots[root] = sid
    if len(tops) > 0xFF:
        bad("TooManyRoots", f"{len(tops)} top switches exceed the 255 root bytes")
    for sid in sorted(set(t.root_bytes) - set(tops)):
        bad("RootByteBelowTop", f"{sid} carries a root byte but is not tier 1")

    for gid in sorted({s.stack_group for s in t.switches.values() if s.stack_group}):
        bad("UnmergedStackGroup", f"stack group {gid!r} present; run normalize first")
    for a, b in t.shortcuts:
        bad("UnresolvedShortcut", f"shortcut {a}--{b} present; run normalize first")

    for sid in sorted(t.switches):
        node = t.switches[sid]
        if node.tier < 1:
            bad("TierRange", f"{sid} has tier {node.tier}")
        indexes = [u.index for u in node.uplinks]
        if len(set(indexes)) != len(indexes):
            bad("DuplicateUplinkIndex", f"{sid} reuses an uplink index")
        if any(not 0 <= i < MAX_UPLINKS for i in indexes):
            bad("UplinkIndexRange", f"{sid} uplink index outside 0..7")
        if node.tier == 1 and node.uplinks:
            bad("TopTierUplink", f"top switch {sid} has uplinks")
        for up in node.uplinks:
            parent = t.switches.get(up.parent)
            if parent is None:
                bad("DanglingUplink", f"{sid} uplinks to unknown {up.parent}")
                continue
            if parent.tier != node.tier - 1:
                bad(
                    "NonLayeredLink",
                    f"{up.parent} (tier {parent.tier}) -> {sid} (tier {node.tier})",
                )
            if parent.downlinks.get(up.parent_port) != sid:
                bad(
                    "InconsistentLink",
                    f"{sid} claims {up.parent}:{up.parent_port} but is not wired there",
                )
        for port in sorted(node.downlinks):
            peer = node.downlinks[port]
            if not 1 <= port <= 0xFF:
                bad("PortRange", f"{sid} port {port} outside 1..255")
            if strategy == "delta" and port > MAX_DELTA_PORT:
                bad("DeltaPortRange", f"{sid} port {port} exceeds {MAX_DELTA_PORT}")
            if peer in t.switches:
                child = t.switches[peer]
                if child.tier != node.tier + 1:
                    bad(
                        "NonLayeredLink",
                        f"{sid} (tier {node.tier}) -> {peer} (tier {child.tier})",
                    )
                if not any(
                    u.parent == sid and u.parent_port == port for u in child.uplinks
                ):
                    bad("InconsistentLink", f"{sid}:{port} -> {peer} has no uplink entry")
            elif peer not in t.hosts:
                bad("DanglingDownlink", f"{sid}:{port} -> unknown node {peer}")

    attach_count: dict[str, int] = {h: 0 for h in t.hosts}
    deepest = 0
    for sid, node in t.switches.items():
        deepest = max(deepest, node.tier)
        for port, peer in node.downlinks.items():
            if peer in attach_count:
                attach_count[peer] += 1
                if node.tier + 1 > ADDRESS_LEN:
                    bad("TooDeep", f"host {peer} would sit at tier {node.tier + 1}")
    if deepest > ADDRESS_LEN - 1:
        bad("TooDeep", f"switch tier {deepest} leaves no room for host bytes")
    for hid in sorted(attach_count):
        if attach_count[hid] != 1:
            bad("HostAttachment", f"host {hid} attached {attach_count[hid]} times")

    seen_macs: dict[bytes, str] = {}
    for hid in sorted(t.hosts):
        mac = t.hosts[hid].mac
        if len(mac) != ADDRESS_LEN:
            bad("MacLength", f"host {hid} mac has {len(mac)} bytes")
            continue
        if mac == BROADCAST:
            bad("BroadcastMac", f"host {hid} uses the broadcast address")
        if mac in seen_macs:
            bad("DuplicateMac", f"hosts {hid} and {seen_macs[mac]} share a mac")
        seen_macs[mac] = hid

    # Hosts with no path to a top switch can never be addressed or served.
    reach: dict[str, bool] = {}

    def reaches_top(sid: str) -> bool:
        if sid in reach:
            return reach[sid]
        node = t.switches[sid]
        reach[sid] = False  # cycle guard; layered graphs have none
        ok = node.tier == 1 or any(
            u.parent in t.switches and reaches_top(u.parent) for u in node.uplinks
        )
        reach[sid] = ok
        return ok

    if not out:
        for hid, (sid, _port) in sorted(t.attachments().items()):
            if not reaches_top(sid):
                bad("UnaddressableHost", f"host {hid} has no path to the top tier")

    if not out:
        table = assign_addresses(t)
        for hid in sorted(t.hosts):
            mac = t.hosts[hid].mac
            if mac in table.owner_raw:
                bad(
                    "GenuineMacCollision",
                    f"host {hid} mac equals assigned address of {table.owner_raw[mac]}",
                )
        if BROADCAST in table.owner_raw:
            bad("BroadcastAddressAssigned", "an assigned address equals ff:ff:ff:ff:ff:ff")

    return out


# -- normalization -----------------------------------------------------------


def normalize(t: Topology) -> Topology:
    """Fold stack groups into single switches and rewrite shortcuts.

    Switches sharing a stack group become one logical switch carrying the
    union of both port maps; its uplinks are renumbered 0.. in sorted
    (parent, parent port) order.  A shortcut between two tier-i switches
    becomes a fictive tier-(i-1) switch uplinked by both; if that lands on
    the top tier the fictive switch is given the next free root byte.
    Shortcuts between top switches are dropped: the top tier already behaves
    as a full mesh.  Idempotent; raises MergeConflict on port collisions.
    """
    out = t.clone()

    groups: dict[str, list[str]] = {}
    for sid in sorted(out.switches):
        g = out.switches[sid].stack_group
        if g is not None:
            groups.setdefault(g, []).append(sid)

    remap: dict[str, str] = {}
    for gid in sorted(groups):
        members = groups[gid]
        if len(members) < 2:
            out.switches[members[0]].stack_group = None
            continue
        tiers = {out.switches[m].tier for m in members}
        if len(tiers) != 1:
            raise MergeConflict(f"stack group {gid!r} spans tiers {sorted(tiers)}")
        if tiers == {1}:
            raise MergeConflict(
                f"stack group {gid!r} merges top switches; the top tier is already a mesh"
            )
        merged_id = "+".join(members)
        merged = SwitchNode(id=merged_id, tier=tiers.pop())
        for m in members:
            node = out.switches[m]
            for port, peer in sorted(node.downlinks.items()):
                if port in merged.downlinks:
                    raise MergeConflict(
                        f"stack group {gid!r}: port {port} used by several members"
                    )
                merged.downlinks[port] = peer
            merged.uplinks.extend(node.uplinks)
            remap[m] = merged_id
            del out.switches[m]
        merged.uplinks.sort(key=lambda u: (u.parent, u.parent_port))
        if len(merged.uplinks) > MAX_UPLINKS:
            raise MergeConflict(
                f"stack group {gid!r}: {len(merged.uplinks)} uplinks exceed {MAX_UPLINKS}"
            )
        merged.uplinks = [
            Uplink(i, u.parent, u.parent_port) for i, u in enumerate(merged.uplinks)
        ]
        out.switches[merged_id] = merged

    if remap:
        for node in out.switches.values():
            node.downlinks = {
                port: remap.get(peer, peer) for port, peer in node.downlinks.items()
            }
            node.uplinks = [
                replace(u, parent=remap.get(u.parent, u.parent)) for u in node.uplinks
            ]
        out.shortcuts = [(remap.get(a, a), remap.get(b, b)) for a, b in out.shortcuts]

    used_roots = set(out.root_bytes.values())

    def next_root() -> int:
        for b in range(1, 0x100):
            if b not in used_roots:
                used_roots.add(b)
                return b
        raise MergeConflict("no free root bytes left for a fictive top switch")

    for a, b in sorted(tuple(sorted(s)) for s in out.shortcuts):
        if a == b:
            continue
        na, nb = out.switches[a], out.switches[b]
        if na.tier != nb.tier:
            raise MergeConflict(f"shortcut {a}--{b} spans tiers {na.tier} and {nb.tier}")
        if na.tier == 1:
            continue  # top switches are already fully interconnected
        fid = f"{a}~{b}"
        if fid in out.switches:
            raise MergeConflict(f"fictive switch id {fid!r} already taken")
        fict = SwitchNode(id=fid, tier=na.tier - 1)
        for port, child in ((1, na), (2, nb)):
            fict.downlinks[port] = child.id
            taken = {u.index for u in child.uplinks}
            free = next(i for i in range(MAX_UPLINKS) if i not in taken)
            child.uplinks.append(Uplink(free, fid, port))
            child.uplinks.sort(key=lambda u: u.index)
            if len(child.uplinks) > MAX_UPLINKS:
                raise MergeConflict(f"{child.id} exceeds {MAX_UPLINKS} uplinks")
        out.switches[fid] = fict
        if fict.tier == 1:
            out.root_bytes[fid] = next_root()
    out.shortcuts = []

    return out


# -- address assignment -------------------------------------------------------


@dataclass
class AddressTable:
    """Bidirectional node/address mapping plus per-switch uplink ownership."""

    by_node: dict[str, tuple[BigMac, ...]]
    owner: dict[BigMac, str]
    owning_uplink: dict[str, dict[BigMac, int | None]]
    delta_packed: bool

    @property
    def owner_raw(self) -> dict[bytes, str]:
        return {a.packed: n for a, n in self.owner.items()}

    def addresses_of(self, node_id: str) -> tuple[BigMac, ...]:
        return self.by_node.get(node_id, ())

    def mean_host_addresses(self, t: Topology) -> float:
        if not t.hosts:
            return 0.0
        return sum(len(self.by_node.get(h, ())) for h in t.hosts) / len(t.hosts)


def assign_addresses(t: Topology, *, delta_packed: bool = False) -> AddressTable:
    """Enumerate every downward path from the top tier and record its address.

    With delta_packed, each port byte additionally carries the assigning
    switch's owning-uplink index in its 3 high bits (top switches pack
    index 0), which is what the delta forwarding strategy byte-checks.
    """
    by_node: dict[str, list[BigMac]] = {}
    owner: dict[BigMac, str] = {}
    owning: dict[str, dict[BigMac, int | None]] = {}

    def record(node_id: str, addr: BigMac, uplink: int | None) -> None:
        by_node.setdefault(node_id, []).append(addr)
        owner[addr] = node_id
        owning.setdefault(node_id, {})[addr] = uplink

    # (node, address, node's uplink index the address arrived through)
    frontier: list[tuple[str, BigMac, int | None]] = []
    for sid in t.top_switches():
        root = t.root_bytes.get(sid)
        if root is None:
            continue
        addr = BigMac.root(root)
        record(sid, addr, None)
        frontier.append((sid, addr, None))

    while frontier:
        nxt: list[tuple[str, BigMac, int | None]] = []
        for sid, addr, via in frontier:
            node = t.switches[sid]
            for port in sorted(node.downlinks):
                peer = node.downlinks[port]
                byte = pack_delta(via or 0, port) if delta_packed else port
                child_addr = extend_address(addr, byte)
                if peer in t.hosts:
                    record(peer, child_addr, None)
                    continue
                child = t.switches[peer]
                child_via = next(
                    u.index
                    for u in child.uplinks
                    if u.parent == sid and u.parent_port == port
                )
                record(peer, child_addr, child_via)
                nxt.append((peer, child_addr, child_via))
        frontier = nxt

    return AddressTable(
        by_node={n: tuple(sorted(a)) for n, a in sorted(by_node.items())},
        owner=owner,
        owning_uplink=owning,
        delta_packed=delta_packed,
    )


# -- path oracles ---------------------------------------------------------------


def enumerate_upward_paths(
    t: Topology,
    host_id: str,
    dead: frozenset[frozenset[str]] | set[frozenset[str]] = frozenset(),
) -> list[list[str]]:
    """All uplink-following switch paths from a host's edge to the top tier.

    One path per address of the host; paths skip links listed in ``dead``.
    """
    edge, _port = t.attachments()[host_id]
    paths: list[list[str]] = []

    def walk(sid: str, trail: list[str]) -> None:
        node = t.switches[sid]
        if node.tier == 1:
            paths.append(trail)
            return
        for up in sorted(node.uplinks, key=lambda u: u.index):
            if frozenset((sid, up.parent)) in dead:
                continue
            if up.parent in t.switches:
                walk(up.parent, trail + [up.parent])

    walk(edge, [edge])
    return paths


def path_of_address(
    t: Topology, addr: BigMac, *, delta_packed: bool = False
) -> list[str]:
    """Decode an address back into its downward node path [top, ..., owner]."""
    root_owner = {b: sid for sid, b in t.root_bytes.items()}
    cur = root_owner.get(addr.packed[0])
    if cur is None:
        raise KeyError(f"no top switch owns root byte {addr.packed[0]:#04x}")
    path = [cur]
    for i in range(1, addr.tier):
        byte = addr.packed[i]
        port = byte & 0x1F if delta_packed else byte
        node = t.switches.get(cur)
        if node is None or port not in node.downlinks:
            raise KeyError(f"{addr} does not decode at {cur} byte {i + 1}")
        cur = node.downlinks[port]
        path.append(cur)
    return path


def address_is_live(
    t: Topology,
    addr: BigMac,
    dead: set[frozenset[str]],
    *,
    delta_packed: bool = False,
) -> bool:
    """True when no link on the address's downward path has failed."""
    if not dead:
        return True
    path = path_of_address(t, addr, delta_packed=delta_packed)
    return all(
        frozenset((path[i], path[i + 1])) not in dead for i in range(len(path) - 1)
    )
