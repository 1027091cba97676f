"""Regular tiered fabric generator.

Tier counts follow the fanouts: with L switch tiers, u uplinks per non-top
switch and d downlinks per switch, tier t holds u^(L-t) * d^(t-1) switches,
so every downlink port is used and every non-top switch has exactly u
parents.  Asking for a specific host count instead produces a slice: edge
switches are sized to the hosts, upper tiers shrink to ceil(children*u/d)
but never below u, and interior downlink counts may then be below d.

Child j wires uplink k to parent (j*u + k) mod n_parents, which spreads
children evenly and keeps the u parents of one child distinct.
"""

from __future__ import annotations

import math

from .addressing import MAX_UPLINKS, BadFanout
from .topology import Topology


def build_regular(
    tiers: int,
    uplink_fanout: int,
    downlink_fanout: int,
    hosts: int | None = None,
    hosts_per_edge: int | None = None,
) -> Topology:
    """Build the regular family member for (L, u, d).

    Default host count is d^L (full fabric, d hosts per edge switch).
    ``hosts`` selects slice mode; ``hosts_per_edge`` keeps the full switch
    fabric but changes only how many hosts hang off each edge switch.
    """
    u, d = uplink_fanout, downlink_fanout
    if tiers < 1 or tiers > 5:
        raise ValueError(f"tiers {tiers} outside 1..5")
    if u < 1 or u > MAX_UPLINKS:
        raise ValueError(f"uplink fanout {u} outside 1..{MAX_UPLINKS}")
    if d < 2 or d > 0xFF:
        raise ValueError(f"downlink fanout {d} outside 2..255")
    if u > d:
        # u == d is allowed (the smallest instance needs it); the closed-form
        # address estimate is the only thing that demands strictly d > u.
        raise BadFanout(f"uplink fanout {u} must not exceed downlink fanout {d}")
    if hosts is not None and hosts_per_edge is not None:
        raise ValueError("give hosts or hosts_per_edge, not both")

    if hosts is None:
        counts = [u ** (tiers - t) * d ** (t - 1) for t in range(1, tiers + 1)]
        per_edge = hosts_per_edge if hosts_per_edge is not None else d
        if not 1 <= per_edge <= d:
            raise ValueError(f"hosts per edge {per_edge} outside 1..{d}")
        n_hosts = counts[-1] * per_edge
    else:
        if hosts < 1:
            raise ValueError("host count must be positive")
        n_hosts = hosts
        counts = [0] * tiers
        counts[-1] = math.ceil(n_hosts / d)
        for t in range(tiers - 2, -1, -1):
            counts[t] = max(math.ceil(counts[t + 1] * u / d), u)
        per_edge = d

    topo = Topology()
    names: list[list[str]] = []
    for t in range(1, tiers + 1):
        row = [f"t{t}s{i}" for i in range(counts[t - 1])]
        names.append(row)
        for i, sid in enumerate(row):
            topo.add_switch(sid, t, root=(i + 1) if t == 1 else None)

    for t in range(1, tiers):
        parents, children = names[t - 1], names[t]
        next_port = {p: 0 for p in parents}
        for j, child in enumerate(children):
            for k in range(u):
                parent = parents[(j * u + k) % len(parents)]
                next_port[parent] += 1
                topo.add_link(parent, next_port[parent], child, uplink_index=k)

    edge_row = names[-1]
    for i in range(n_hosts):
        edge = edge_row[i // per_edge] if hosts is None else edge_row[i // d]
        port = (i % per_edge if hosts is None else i % d) + 1
        idx = i + 1
        mac = bytes([0x02, 0x00, 0x00, (idx >> 16) & 0xFF, (idx >> 8) & 0xFF, idx & 0xFF])
        topo.add_host(f"h{idx}", at=(edge, port), mac=mac)

    return topo
