import pytest

from bigmacsim import build_regular, parse_topology, render_topology
from bigmacsim.addressing import BadFanout
from bigmacsim.topology import assign_addresses, validate

from conftest import oracle_upward_paths


class TestShape:
    def test_smallest_instance_matches_reference_fabric(self):
        # (L=2, u=2, d=2): two roots, two edge switches, full bipartite mesh
        t = build_regular(2, 2, 2)
        tops = t.top_switches()
        edges = [s for s in t.switches.values() if s.tier == 2]
        assert len(tops) == 2 and len(edges) == 2
        for edge in edges:
            assert {u.parent for u in edge.uplinks} == set(tops)
        assert len(t.hosts) == 4

    def test_full_fabric_counts(self):
        t = build_regular(3, 2, 8)
        per_tier = [sum(1 for s in t.switches.values() if s.tier == k) for k in (1, 2, 3)]
        assert per_tier == [4, 16, 64]
        assert len(t.hosts) == 512
        table = assign_addresses(t)
        assert table.mean_host_addresses(t) == 4.0  # u^(L-1)

    def test_every_nontop_switch_has_u_uplinks(self):
        t = build_regular(3, 2, 4)
        for s in t.switches.values():
            if s.tier > 1:
                assert len(s.uplinks) == 2
                assert len({u.parent for u in s.uplinks}) == 2

    def test_slice_mode_counts(self):
        t = build_regular(3, 2, 32, hosts=1024)
        per_tier = [sum(1 for s in t.switches.values() if s.tier == k) for k in (1, 2, 3)]
        assert per_tier == [2, 2, 32]
        assert len(t.hosts) == 1024

    def test_hosts_per_edge_keeps_fabric(self):
        lean = build_regular(3, 2, 4, hosts_per_edge=1)
        full = build_regular(3, 2, 4, hosts_per_edge=4)
        assert set(lean.switches) == set(full.switches)
        assert len(lean.hosts) == 16 and len(full.hosts) == 64


class TestValidity:
    @pytest.mark.parametrize(
        "tiers,u,d",
        [(1, 1, 4), (2, 2, 2), (2, 2, 8), (3, 2, 4), (3, 3, 6), (4, 2, 3), (5, 2, 3)],
    )
    def test_generated_fabrics_validate_and_round_trip(self, tiers, u, d):
        t = build_regular(tiers, u, d)
        assert validate(t) == []
        assert parse_topology(render_topology(t)) == t

    @pytest.mark.parametrize("tiers,u,d", [(2, 2, 8), (3, 2, 8)])
    def test_delta_safe_when_ports_small(self, tiers, u, d):
        assert validate(build_regular(tiers, u, d), strategy="delta") == []

    def test_address_count_equals_upward_paths(self):
        t = build_regular(3, 2, 4)
        table = assign_addresses(t)
        for host in list(t.hosts)[:8]:
            assert len(table.by_node[host]) == len(oracle_upward_paths(t, host))


class TestRejections:
    def test_u_above_d(self):
        with pytest.raises(BadFanout):
            build_regular(2, 8, 4)

    def test_u_equal_d_allowed(self):
        # the smallest regular instance needs u == d
        assert validate(build_regular(2, 2, 2)) == []

    @pytest.mark.parametrize(
        "kwargs",
        [
            dict(tiers=0, uplink_fanout=1, downlink_fanout=4),
            dict(tiers=6, uplink_fanout=2, downlink_fanout=4),
            dict(tiers=2, uplink_fanout=9, downlink_fanout=16),
            dict(tiers=2, uplink_fanout=2, downlink_fanout=300),
            dict(tiers=2, uplink_fanout=2, downlink_fanout=4, hosts=8, hosts_per_edge=2),
        ],
    )
    def test_out_of_range_parameters(self, kwargs):
        with pytest.raises(ValueError):
            build_regular(**kwargs)
