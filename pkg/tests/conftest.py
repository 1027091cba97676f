"""Shared fixtures and independent oracles.

The oracles here re-derive expectations from first principles (brute-force
walks over the raw topology) so the tests never trust the code paths they
check.
"""

from __future__ import annotations

import pytest

from bigmacsim import Topology
from bigmacsim.addressing import common_prefix_len
from bigmacsim.topology import path_of_address

T1_TEXT = """\
# reference fabric: two roots, two edge switches, full bipartite mesh
switch R1 tier 1 root 0x01
switch R2 tier 1 root 0x02
switch S1 tier 2
switch S2 tier 2
link R1:1 S1:0
link R2:1 S1:1
link R1:2 S2:0
link R2:2 S2:1
host H1 at S1:1 mac 02:00:00:00:00:01
host H2 at S2:1 mac 02:00:00:00:00:02
"""


def build_t1() -> Topology:
    t = Topology()
    t.add_switch("R1", 1, root=0x01)
    t.add_switch("R2", 1, root=0x02)
    t.add_switch("S1", 2)
    t.add_switch("S2", 2)
    t.add_link("R1", 1, "S1", uplink_index=0)
    t.add_link("R2", 1, "S1", uplink_index=1)
    t.add_link("R1", 2, "S2", uplink_index=0)
    t.add_link("R2", 2, "S2", uplink_index=1)
    t.add_host("H1", at=("S1", 1), mac=bytes.fromhex("020000000001"))
    t.add_host("H2", at=("S2", 1), mac=bytes.fromhex("020000000002"))
    return t


@pytest.fixture
def t1() -> Topology:
    return build_t1()


# -- oracles -------------------------------------------------------------------


def oracle_downward_paths(topo: Topology, node_id: str) -> list[list[str]]:
    """Every top-to-node path, found by exhaustive walk over downlinks."""
    found: list[list[str]] = []

    def walk(sid: str, trail: list[str]) -> None:
        if sid == node_id:
            found.append(trail)
        node = topo.switches.get(sid)
        if node is None:
            return
        for port in sorted(node.downlinks):
            walk(node.downlinks[port], trail + [node.downlinks[port]])

    for top in topo.top_switches():
        walk(top, [top])
    return found


def oracle_addresses(topo: Topology, node_id: str) -> list[bytes]:
    """Address bytes per downward path: root byte then each port taken."""
    found: list[bytes] = []

    def walk(sid: str, acc: list[int]) -> None:
        if sid == node_id:
            found.append(bytes(acc + [0] * (6 - len(acc))))
        node = topo.switches.get(sid)
        if node is None:
            return
        for port in sorted(node.downlinks):
            walk(node.downlinks[port], acc + [port])

    for top in topo.top_switches():
        walk(top, [topo.root_bytes[top]])
    return sorted(found)


def oracle_upward_paths(
    topo: Topology, host_id: str, dead: set[frozenset[str]] = frozenset()
) -> list[tuple[str, ...]]:
    """Edge-to-top switch paths following uplinks, exhaustively."""
    edge, _ = topo.attachments()[host_id]
    found: list[tuple[str, ...]] = []

    def walk(sid: str, trail: tuple[str, ...]) -> None:
        node = topo.switches[sid]
        if node.tier == 1:
            found.append(trail)
            return
        for up in node.uplinks:
            if frozenset((sid, up.parent)) in dead:
                continue
            walk(up.parent, trail + (up.parent,))

    walk(edge, (edge,))
    return sorted(found)


def oracle_source_owner_path(topo, table, src_addr, dst_addr) -> tuple[str, ...]:
    """Expected switch-visit sequence when climbing the source's own path.

    The frame retraces src's path upward until the tier where src and dst
    prefixes coincide, then descends dst's path; with no shared prefix it
    tops out at src's root and crosses the mesh to dst's root.
    """
    packed = table.delta_packed
    src_sw = path_of_address(topo, src_addr, delta_packed=packed)[:-1]
    dst_sw = path_of_address(topo, dst_addr, delta_packed=packed)[:-1]
    cpl = common_prefix_len(src_addr, dst_addr)
    if cpl >= 1:
        up = list(reversed(src_sw[cpl - 1 :]))
        down = dst_sw[cpl:]
        return tuple(up + down)
    return tuple(list(reversed(src_sw)) + dst_sw)


def oracle_shortest_path_len(topo, table, src_host: str, dst_addr) -> int:
    """Fewest switch visits that can deliver toward dst_addr from src_host.

    A frame may climb uplinks freely, must descend along dst's own path, and
    may cross the top-tier mesh once.  BFS over the climb graph, then the
    best entry point onto the destination path wins.
    """
    packed = table.delta_packed
    dst_path = path_of_address(topo, dst_addr, delta_packed=packed)
    dst_sw = dst_path[:-1]
    edge, _ = topo.attachments()[src_host]

    dist = {edge: 1}  # visits including the starting edge switch
    frontier = [edge]
    while frontier:
        nxt = []
        for sid in frontier:
            for up in topo.switches[sid].uplinks:
                if up.parent not in dist:
                    dist[up.parent] = dist[sid] + 1
                    nxt.append(up.parent)
        frontier = nxt

    best = None
    on_path = {sid: depth for depth, sid in enumerate(dst_sw)}
    for sid, k in dist.items():
        if sid in on_path:
            cost = k + (len(dst_sw) - 1 - on_path[sid])
            best = cost if best is None else min(best, cost)
        elif topo.switches[sid].tier == 1:
            # mesh hop to dst's root, then the full descent
            cost = k + 1 + (len(dst_sw) - 1)
            best = cost if best is None else min(best, cost)
    assert best is not None, f"no route from {src_host} toward {dst_addr}"
    return best
