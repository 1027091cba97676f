import pytest

from bigmacsim import BigMac, Simulation, Topology, build_regular
from bigmacsim.engine import NoSuchLink
from bigmacsim.topology import InvalidTopology

from conftest import (
    build_t1,
    oracle_shortest_path_len,
    oracle_source_owner_path,
    oracle_upward_paths,
)


def chain_topology() -> Topology:
    t = Topology()
    t.add_switch("R", 1, root=1)
    t.add_switch("A", 2)
    t.add_link("R", 1, "A")
    t.add_host("H1", at=("A", 1), mac=bytes.fromhex("020000000001"))
    t.add_host("H2", at=("A", 2), mac=bytes.fromhex("020000000002"))
    return t


class TestBasics:
    def test_invalid_topology_rejected(self, t1):
        t1.root_bytes["R2"] = 0x01
        with pytest.raises(InvalidTopology):
            Simulation(t1)

    def test_empty_run_has_no_events(self, t1):
        sim = Simulation(t1)
        sim.drain()
        assert sim.now == 0
        assert sim.metrics.counters == {}
        assert sim.log == []

    def test_dhcp_assigns_lowest_free_in_order(self, t1):
        sim = Simulation(t1)
        sim.dhcp()
        assert sim.hosts["H1"].ip == "10.0.0.1"
        assert sim.hosts["H2"].ip == "10.0.0.2"

    def test_ping_round_trip_matches_oracle(self, t1):
        sim = Simulation(t1)
        sim.dhcp()
        sim.arp("H1", sim.hosts["H2"].ip)
        sim.ping("H1", "H2")
        rec = sim.metrics.ping_records[("H1", 1)]
        assert rec.status == "ok"
        assert rec.request_path == ("S1", "R1", "S2")
        assert rec.hops == 3

    def test_broadcast_copy_count_equals_paths(self, t1):
        sim = Simulation(t1)
        sim.dhcp("H1")
        assert sim.metrics.broadcast_records[-1].copies == 2
        sim.dhcp("H2")
        sim.arp("H1", sim.hosts["H2"].ip)
        arp_rec = sim.metrics.broadcast_records[-1]
        assert arp_rec.kind == "arp" and arp_rec.copies == 2

    def test_chain_single_copy_end_to_end(self):
        sim = Simulation(chain_topology())
        sim.dhcp("H1")
        assert sim.metrics.broadcast_records[-1].copies == 1
        assert sim.metrics.unexpected_drops() == 0

    def test_same_edge_hairpin(self):
        sim = Simulation(chain_topology())
        sim.dhcp()
        sim.ping("H1", "H2")
        rec = sim.metrics.ping_records[("H1", 1)]
        assert rec.status == "ok"
        assert rec.request_path == ("A",)

    def test_tick_limit_guard(self, t1):
        sim = Simulation(t1, tick_limit=3)
        sim.dhcp()
        assert sim.metrics.tick_limit_hit
        assert sim.metrics.counters["tick_limit_exceeded"] == 1

    def test_learning_soundness(self):
        fabric = build_regular(3, 2, 4)
        sim = Simulation(fabric)
        sim.dhcp()
        for hid, host in sim.hosts.items():
            binding = sim.server.db.bindings[host.ip]
            assert binding.addrs == sim.table.by_node[hid]

    def test_delta_rejects_wide_ports(self):
        with pytest.raises(InvalidTopology):
            Simulation(build_regular(2, 2, 40), strategy="delta")

    def test_aggregate_flood_volume_bound(self):
        # one broadcast per host: total copies = N * u^(L-1), under 4 * N^1.25
        fabric = build_regular(3, 2, 4)
        sim = Simulation(fabric, record_log=False)
        sim.dhcp()
        total = sum(b.copies for b in sim.metrics.broadcast_records)
        n = len(fabric.hosts)
        assert total == n * 4
        assert total <= 4 * n**1.25
        for rec in sim.metrics.broadcast_records:
            assert rec.copies == len(oracle_upward_paths(fabric, rec.host))


class TestDeliveryMatrix:
    @pytest.mark.parametrize("strategy", ["alpha", "beta", "gamma", "delta"])
    def test_t1_all_pairs_all_strategies(self, strategy):
        sim = Simulation(build_t1(), strategy=strategy, record_log=False)
        sim.dhcp()
        for a, b in (("H1", "H2"), ("H2", "H1")):
            sim.ping(a, b)
        recs = sim.metrics.pings()
        assert all(r.status == "ok" for r in recs)
        assert sim.metrics.drops_total() == 0

    def test_alpha_and_delta_sequences_identical(self):
        paths = {}
        for strategy in ("alpha", "delta"):
            sim = Simulation(build_regular(3, 2, 4), strategy=strategy, record_log=False)
            sim.dhcp()
            sim.ping("h1", "h24")
            sim.ping("h5", "h6")
            paths[strategy] = [
                (r.request_path, r.reply_path) for r in sim.metrics.pings()
            ]
        assert paths["alpha"] == paths["delta"]

    def test_alpha_follows_the_advertised_pair_path(self):
        fabric = build_regular(3, 2, 4)
        sim = Simulation(fabric, record_log=False)
        sim.dhcp()
        sim.ping("h1", "h24")
        src_addr, dst_addr = sim.server.db.assoc[
            (fabric.hosts["h1"].mac, sim.hosts["h24"].ip)
        ]
        expected = oracle_source_owner_path(fabric, sim.table, src_addr, dst_addr)
        assert sim.metrics.ping_records[("h1", 1)].request_path == expected

    def test_gamma_takes_shortest_route(self):
        fabric = build_regular(3, 2, 4)
        sim = Simulation(fabric, strategy="gamma", record_log=False)
        sim.dhcp()
        targets = ["h2", "h8", "h24", "h64"]
        for tgt in targets:
            sim.ping("h1", tgt)
        for seq, tgt in enumerate(targets, start=1):
            rec = sim.metrics.ping_records[("h1", seq)]
            dst_addr = sim.hosts["h1"].arp_cache[sim.hosts[tgt].ip]
            best = oracle_shortest_path_len(
                fabric, sim.table, "h1", BigMac.from_bytes(dst_addr)
            )
            assert rec.status == "ok"
            assert rec.hops == best, f"{tgt}: took {rec.request_path}, best {best}"

    def test_common_root_policy_avoids_mesh(self):
        fabric = build_regular(3, 2, 4)
        sim = Simulation(fabric, policy="common_root", record_log=False)
        sim.dhcp()
        for tgt in ("h2", "h8", "h24"):
            sim.ping("h1", tgt)
        tiers = {sid: fabric.switches[sid].tier for sid in fabric.switches}
        for rec in sim.metrics.pings():
            path_tiers = [tiers[s] for s in rec.request_path]
            assert all(
                not (a == 1 and b == 1) for a, b in zip(path_tiers, path_tiers[1:])
            ), f"mesh hop in {rec.request_path}"


class TestStateDiscipline:
    @pytest.mark.parametrize("strategy", ["alpha", "beta", "gamma", "delta"])
    def test_forwarding_state_unchanged_by_traffic(self, strategy):
        sim = Simulation(build_t1(), strategy=strategy, record_log=False)
        sim.dhcp()
        sim.ping("H1", "H2", 5)
        sim.record_post_fingerprints()
        assert sim.metrics.fingerprints_post == sim.metrics.fingerprints_pre

    def test_interior_state_independent_of_host_count(self):
        small = Simulation(build_regular(3, 2, 4, hosts_per_edge=1), record_log=False)
        large = Simulation(build_regular(3, 2, 4, hosts_per_edge=4), record_log=False)
        for sid in small.non_edge_switches():
            assert small.metrics.fingerprints_pre[sid] == large.metrics.fingerprints_pre[sid]


class TestFailover:
    def failed_t1(self, fail_at=40, pings=60):
        sim = Simulation(build_t1())
        sim.dhcp()
        sim.arp("H1", sim.hosts["H2"].ip)
        sim.fail_link("S1", "R1", at=sim.now + fail_at)
        sim.ping("H1", "H2", pings)
        return sim

    def test_drops_confined_to_convergence_window(self):
        sim = self.failed_t1()
        (fail_tick, conv) = sim.metrics.convergence[0]
        assert sim.metrics.drop_events, "expected at least one in-flight drop"
        assert all(fail_tick <= t <= conv for t, _r, _n in sim.metrics.drop_events)

    def test_post_convergence_pings_use_surviving_root(self):
        sim = self.failed_t1()
        (fail_tick, conv) = sim.metrics.convergence[0]
        later = [r for r in sim.metrics.pings() if r.sent_tick >= conv]
        assert later and all(r.status == "ok" for r in later)
        assert {r.request_path for r in later} == {("S1", "R2", "S2")}

    def test_convergence_bound(self):
        sim = self.failed_t1()
        (fail_tick, conv) = sim.metrics.convergence[0]
        depth = 2
        assert conv - fail_tick <= 2 * depth + sim._batch_window

    def test_fail_unused_link_is_quiet(self, t1):
        sim = Simulation(t1)
        sim.dhcp()
        sim.arp("H1", sim.hosts["H2"].ip)
        sim.fail_link("S2", "R2")
        sim.drain()
        assert sim.metrics.counters.get("failover_announcements", 0) == 0
        sim.ping("H1", "H2")
        assert sim.metrics.pings()[-1].status == "ok"

    def test_fail_twice_idempotent(self, t1):
        sim = Simulation(t1)
        sim.dhcp()
        sim.fail_link("S1", "R1")
        sim.drain()
        sim.fail_link("S1", "R1")
        sim.drain()
        assert sim.metrics.counters["link_failures"] == 1

    def test_unknown_link_raises(self, t1):
        sim = Simulation(t1)
        with pytest.raises(NoSuchLink):
            sim.fail_link("S1", "S2")

    def test_both_uplinks_dead_reports_unreachable(self):
        sim = Simulation(build_t1())
        sim.dhcp()
        sim.arp("H1", sim.hosts["H2"].ip)
        sim.fail_link("S1", "R1")
        sim.drain()
        sim.fail_link("S1", "R2")
        sim.drain()
        assert ("H1", sim.hosts["H2"].ip) in sim.metrics.unreachable_pairs

    def test_restore_brings_link_back(self):
        sim = Simulation(build_t1(), policy="round_robin", seed=1)
        sim.dhcp()
        sim.fail_link("S1", "R1")
        sim.drain()
        sim.restore_link("S1", "R1")
        sim.drain()
        # fresh resolutions may use either root again
        dead_addr = BigMac.parse("01:01:01:00:00:00")
        assert sim.server._live([dead_addr]) == [dead_addr]

    def test_flood_copies_track_live_paths(self):
        sim = Simulation(build_t1())
        sim.fail_link("S1", "R1")
        sim.drain()
        sim.dhcp("H1")
        rec = sim.metrics.broadcast_records[-1]
        oracle = oracle_upward_paths(sim.topo, "H1", dead={frozenset(("S1", "R1"))})
        assert rec.copies == len(oracle) == 1


class TestDeterminism:
    def test_identical_runs_identical_logs(self):
        def run():
            sim = Simulation(build_t1(), seed=7, policy="round_robin")
            sim.dhcp()
            sim.arp("H1", sim.hosts["H2"].ip)
            sim.fail_link("S1", "R1", at=sim.now + 20)
            sim.ping("H1", "H2", 20)
            return sim.log, sim.metrics.rows()

        first, second = run(), run()
        assert first == second
