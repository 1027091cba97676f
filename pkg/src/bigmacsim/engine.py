"""Deterministic discrete-event simulation core.

Every link traversal costs one tick.  Events are processed in (tick,
insertion sequence) order, so two runs over identical inputs produce
byte-identical event logs.  The engine owns all wiring and mutable state:
switches forward, hosts emit and consume, the control server answers
batched broadcast copies, and everything observable lands in Metrics.
"""

from __future__ import annotations

import hashlib
import heapq
from dataclasses import dataclass, field
from typing import Callable

from .addressing import BROADCAST, BigMac, format_mac
from .control import ControlServer, PolicyMode, ServerCopy, TePolicy
from .dataplane import (
    EdgeState,
    ForwardDecision,
    Strategy,
    SwitchState,
    state_fingerprint,
    switch_handle,
)
from .frames import (
    ArpRequest,
    DhcpRequest,
    EchoReply,
    EchoRequest,
    Frame,
)
from .host import HostConfig, HostStack
from .topology import (
    AddressTable,
    InvalidTopology,
    Topology,
    assign_addresses,
    validate,
)


class NoSuchLink(ValueError):
    """fail/restore naming a link the topology does not contain."""


class SimulationError(RuntimeError):
    """An invariant the simulation must uphold was violated."""


@dataclass
class PingRecord:
    origin: str
    target_ip: str
    seq: int
    sent_tick: int
    status: str = "pending"  # pending | ok | timeout | unreachable
    done_tick: int | None = None
    request_path: tuple[str, ...] = ()
    reply_path: tuple[str, ...] = ()

    @property
    def hops(self) -> int:
        return len(self.request_path)


@dataclass
class BroadcastRecord:
    kind: str  # dhcp | arp
    host: str
    seq: int
    copies: int
    tick: int


@dataclass
class Metrics:
    counters: dict[str, int] = field(default_factory=dict)
    drop_events: list[tuple[int, str, str]] = field(default_factory=list)
    ping_records: dict[tuple[str, int], PingRecord] = field(default_factory=dict)
    broadcast_records: list[BroadcastRecord] = field(default_factory=list)
    convergence: list[tuple[int, int]] = field(default_factory=list)
    unreachable_pairs: list[tuple[str, str]] = field(default_factory=list)
    fingerprints_pre: dict[str, bytes] = field(default_factory=dict)
    fingerprints_post: dict[str, bytes] = field(default_factory=dict)
    final_tick: int = 0
    tick_limit_hit: bool = False

    def bump(self, name: str, amount: int = 1) -> None:
        self.counters[name] = self.counters.get(name, 0) + amount

    def pings(self) -> list[PingRecord]:
        return list(self.ping_records.values())

    def drops_total(self) -> int:
        return sum(v for k, v in self.counters.items() if k.startswith("drop_"))

    def unexpected_drops(self) -> int:
        """Drops not explained by injected link failures."""
        return sum(
            v
            for k, v in self.counters.items()
            if k.startswith("drop_") and k != "drop_dead_link"
        )

    def value(self, name: str):
        """Numeric lookup used by scenario assertions."""
        recs = self.pings()
        derived: dict[str, float] = {
            "pings_sent": len(recs),
            "pings_ok": sum(1 for r in recs if r.status == "ok"),
            "pings_failed": sum(1 for r in recs if r.status in ("timeout", "unreachable")),
            "drops_total": self.drops_total(),
            "unexpected_drops": self.unexpected_drops(),
            "copies_last": self.broadcast_records[-1].copies if self.broadcast_records else 0,
            "broadcasts": len(self.broadcast_records),
            "convergence_last": self.convergence[-1][1] if self.convergence else 0,
            "unreachable_pairs": len(self.unreachable_pairs),
            "final_tick": self.final_tick,
        }
        ok_hops = [r.hops for r in recs if r.status == "ok"]
        derived["hops_mean"] = sum(ok_hops) / len(ok_hops) if ok_hops else 0.0
        derived["hops_max"] = max(ok_hops) if ok_hops else 0
        if name in derived:
            return derived[name]
        if name in self.counters:
            return self.counters[name]
        raise KeyError(f"unknown metric {name!r}")

    def rows(self) -> list[tuple[str, object]]:
        """Stable (metric, value) listing for reports."""
        out: list[tuple[str, object]] = []
        for name in (
            "final_tick",
            "broadcasts",
            "copies_total",
            "pings_sent",
            "pings_ok",
            "pings_failed",
            "hops_mean",
            "hops_max",
            "drops_total",
            "unexpected_drops",
            "unreachable_pairs",
            "convergence_last",
        ):
            try:
                value = self.value(name)
            except KeyError:
                value = 0
            if isinstance(value, float):
                value = f"{value:.6g}"
            out.append((name, value))
        for name in sorted(self.counters):
            if name == "copies_total":
                continue
            out.append((name, self.counters[name]))
        return out


@dataclass
class _Transit:
    """Per-frame bookkeeping the fabric itself never sees."""

    path: list[str] = field(default_factory=list)
    announcement: bool = False

    def fork(self) -> "_Transit":
        return _Transit(path=list(self.path), announcement=self.announcement)


def _beta_offset(seed: int, sid: str, n: int) -> int:
    if n == 0:
        return 0
    digest = hashlib.blake2b(f"{seed}|{sid}".encode(), digest_size=8).digest()
    return int.from_bytes(digest, "big") % n


class Simulation:
    """One network plus one scenario's worth of mutable state."""

    def __init__(
        self,
        topo: Topology,
        *,
        strategy: str | Strategy = Strategy.ALPHA,
        policy: str | PolicyMode = PolicyMode.FIRST,
        seed: int = 0,
        pool: str = "10.0.0.0/24",
        host_config: HostConfig | None = None,
        record_log: bool = True,
        tick_limit: int = 1_000_000,
    ):
        self.topo = topo
        self.strategy = Strategy(strategy)
        self.policy_mode = PolicyMode(policy)
        self.seed = seed
        self.record_log = record_log
        self.tick_limit = tick_limit
        violations = validate(topo, strategy=self.strategy.value)
        if violations:
            raise InvalidTopology(violations)

        self.table: AddressTable = assign_addresses(
            topo, delta_packed=self.strategy is Strategy.DELTA
        )
        self.attach = topo.attachments()
        self.metrics = Metrics()
        self.log: list[str] = []
        self.dead: set[frozenset[str]] = set()
        self._link_pairs = topo.link_pairs()
        self._root_owner = {b: sid for sid, b in topo.root_bytes.items()}

        # static wiring
        self._up_wire: dict[tuple[str, int], tuple[str, tuple]] = {}
        self._down_wire: dict[tuple[str, int], tuple[str, tuple | None]] = {}
        self._host_wire: dict[str, tuple[str, int]] = {}
        for sid in sorted(topo.switches):
            node = topo.switches[sid]
            for up in node.uplinks:
                self._up_wire[(sid, up.index)] = (up.parent, ("down", up.parent_port))
            for port, peer in sorted(node.downlinks.items()):
                if peer in topo.hosts:
                    self._down_wire[(sid, port)] = (peer, None)
                    self._host_wire[peer] = (sid, port)
                else:
                    index = next(
                        u.index
                        for u in topo.switches[peer].uplinks
                        if u.parent == sid and u.parent_port == port
                    )
                    self._down_wire[(sid, port)] = (peer, ("up", index))

        self.states: dict[str, SwitchState] = {}
        for sid in sorted(topo.switches):
            self.states[sid] = self._build_state(sid)
        self.metrics.fingerprints_pre = {
            sid: state_fingerprint(st) for sid, st in self.states.items()
        }

        self.host_config = host_config or HostConfig()
        self.hosts: dict[str, HostStack] = {}
        self._host_of_mac: dict[bytes, str] = {}
        for hid in sorted(topo.hosts):
            h = topo.hosts[hid]
            self.hosts[hid] = HostStack(hid, h.mac, self, self.host_config, ip=h.ip)
            self._host_of_mac[h.mac] = hid

        self.server = ControlServer(
            topo,
            self.table,
            policy=TePolicy(self.policy_mode, seed),
            pool=pool,
            count=self.metrics.bump,
        )

        self._heap: list[tuple[int, int, Callable[[], None]]] = []
        self._seq = 0
        self.now = 0
        self._pending_copies: dict[tuple, list[tuple[ServerCopy, _Transit]]] = {}
        self._batch_window = 2 * max(
            (s.tier for s in topo.switches.values()), default=1
        )
        self._announcements_outstanding = 0
        self._last_fail_tick: int | None = None

    # -- construction helpers ---------------------------------------------------

    def _build_state(self, sid: str) -> SwitchState:
        node = self.topo.switches[sid]
        owning = self.table.owning_uplink.get(sid, {})
        prefixes: dict[int, list[BigMac]] = {}
        for addr in self.table.addresses_of(sid):
            k = owning.get(addr)
            if k is not None:
                prefixes.setdefault(k, []).append(addr)
        host_addrs = {
            port: self.table.addresses_of(peer)
            for port, peer in sorted(node.downlinks.items())
            if peer in self.topo.hosts
        }
        uplinks = tuple(sorted(u.index for u in node.uplinks))
        return SwitchState(
            node_id=sid,
            tier=node.tier,
            strategy=self.strategy,
            root_byte=self.topo.root_bytes.get(sid),
            uplinks=uplinks,
            uplink_prefixes={k: tuple(sorted(v)) for k, v in sorted(prefixes.items())},
            downlink_ports=frozenset(node.downlinks),
            edge=EdgeState(host_addrs=host_addrs) if host_addrs else None,
            beta_cursor=_beta_offset(self.seed, sid, len(uplinks)),
        )

    # -- event plumbing -----------------------------------------------------------

    def _schedule(self, delay: int, fn: Callable[[], None]) -> None:
        heapq.heappush(self._heap, (self.now + delay, self._seq, fn))
        self._seq += 1

    def _schedule_at(self, tick: int, fn: Callable[[], None]) -> None:
        heapq.heappush(self._heap, (max(tick, self.now), self._seq, fn))
        self._seq += 1

    def drain(self) -> None:
        """Run until the queue empties or the tick limit is reached."""
        while self._heap:
            tick, _seq, fn = heapq.heappop(self._heap)
            if tick > self.tick_limit:
                self.metrics.tick_limit_hit = True
                self.metrics.bump("tick_limit_exceeded")
                self._heap.clear()
                break
            self.now = tick
            self.metrics.final_tick = tick
            fn()

    def _log(
        self,
        kind: str,
        node: str,
        ingress: str = "-",
        egress: str = "-",
        frame: Frame | None = None,
        note: str = "-",
    ) -> None:
        if not self.record_log:
            return
        dst = format_mac(frame.dst) if frame else "-"
        src = format_mac(frame.src) if frame else "-"
        self.log.append(
            f"{self.now}\t{kind}\t{node}\t{ingress}\t{egress}\t{dst}\t{src}\t{note}"
        )

    def _drop(self, reason: str, node: str, frame: Frame | None = None) -> None:
        self.metrics.bump(f"drop_{reason}")
        self.metrics.drop_events.append((self.now, reason, node))
        self._log("drop", node, note=reason, frame=frame)

    @staticmethod
    def _ingress_text(ingress: tuple) -> str:
        if len(ingress) > 1:
            return f"{ingress[0]}:{ingress[1]}"
        return ingress[0]

    # -- frame movement ---------------------------------------------------------------

    def _deliver_switch(self, sid: str, ingress: tuple, frame: Frame, transit: _Transit) -> None:
        transit.path.append(sid)
        self._log("frame", sid, ingress=self._ingress_text(ingress), frame=frame)
        decision: ForwardDecision = switch_handle(self.states[sid], frame, ingress)
        if decision.drop is not None:
            self._drop(decision.drop, sid, frame)
            return
        fork = len(decision.actions) > 1
        for egress, out in decision.actions:
            self._emit_switch(sid, egress, out, transit.fork() if fork else transit)

    def _emit_switch(self, sid: str, egress: tuple, frame: Frame, transit: _Transit) -> None:
        kind = egress[0]
        if kind == "down":
            peer, peer_ingress = self._down_wire[(sid, egress[1])]
            if frozenset((sid, peer)) in self.dead:
                self._drop("dead_link", sid, frame)
                return
            if peer_ingress is None:
                self._schedule(1, lambda: self._deliver_host(peer, frame, transit))
            else:
                self._schedule(
                    1, lambda: self._deliver_switch(peer, peer_ingress, frame, transit)
                )
        elif kind == "up":
            wired = self._up_wire.get((sid, egress[1]))
            if wired is None:
                self._drop("no_such_uplink", sid, frame)
                return
            parent, parent_ingress = wired
            if frozenset((sid, parent)) in self.dead:
                self._drop("dead_link", sid, frame)
                return
            self._schedule(
                1, lambda: self._deliver_switch(parent, parent_ingress, frame, transit)
            )
        elif kind == "mesh":
            owner = self._root_owner.get(egress[1])
            if owner is None:
                self._drop("no_such_root", sid, frame)
                return
            self._schedule(1, lambda: self._deliver_switch(owner, ("mesh",), frame, transit))
        elif kind == "server":
            self._schedule(1, lambda: self._deliver_server(sid, frame, transit))
        else:  # pragma: no cover - defensive
            raise SimulationError(f"unknown egress {egress!r}")

    def _deliver_host(self, hid: str, frame: Frame, transit: _Transit) -> None:
        host = self.hosts[hid]
        if frame.dst != host.mac and frame.dst != BROADCAST:
            raise SimulationError(f"host {hid} handed a frame for {format_mac(frame.dst)}")
        self._log("frame", hid, ingress="host", frame=frame)
        payload = frame.payload
        if isinstance(payload, EchoRequest):
            self.metrics.bump("echo_requests_delivered")
            rec = self.metrics.ping_records.get((payload.origin, payload.seq))
            if rec is not None:
                rec.request_path = tuple(transit.path)
        elif isinstance(payload, EchoReply):
            rec = self.metrics.ping_records.get((payload.origin, payload.seq))
            if rec is not None:
                rec.reply_path = tuple(transit.path)
        if transit.announcement:
            self._announcements_outstanding -= 1
            if self._announcements_outstanding == 0 and self._last_fail_tick is not None:
                self.metrics.convergence.append((self._last_fail_tick, self.now + 1))
                self._last_fail_tick = None
        host.receive(frame)

    def _deliver_server(self, via_top: str, frame: Frame, transit: _Transit) -> None:
        self._log("frame", "server", ingress=f"top:{via_top}", frame=frame)
        payload = frame.payload
        if isinstance(payload, DhcpRequest):
            key = ("dhcp", payload.client_mac, payload.seq)
        elif isinstance(payload, ArpRequest):
            key = ("arp", payload.sender_mac, payload.seq)
        else:
            self._drop("server_unexpected", "server", frame)
            return
        if key not in self._pending_copies:
            self._pending_copies[key] = []
            self._schedule(self._batch_window, lambda: self._run_batch(key))
        self._pending_copies[key].append((ServerCopy(frame, via_top), transit))

    def _run_batch(self, key: tuple) -> None:
        entries = self._pending_copies.pop(key)
        copies = [c for c, _t in entries]
        kind, mac, seq = key
        host = self._host_of_mac.get(mac, format_mac(mac))
        self.metrics.broadcast_records.append(
            BroadcastRecord(kind=kind, host=host, seq=seq, copies=len(copies), tick=self.now)
        )
        self.metrics.bump("copies_total", len(copies))
        self._log("batch", "server", note=f"{kind}:{host}:{seq}:{len(copies)}")
        if kind == "dhcp":
            replies = self.server.handle_dhcp(copies, now=self.now)
        else:
            replies = self.server.handle_arp(copies, now=self.now)
        for reply in replies:
            self._inject(reply)

    def _inject(self, frame: Frame, announcement: bool = False) -> None:
        owner = self._root_owner.get(frame.dst[0])
        if owner is None:
            self._drop("no_such_root", "server", frame)
            if announcement:
                self._announcements_outstanding -= 1
            return
        transit = _Transit(announcement=announcement)
        self._schedule(1, lambda: self._deliver_switch(owner, ("inject",), frame, transit))

    # -- HostServices --------------------------------------------------------------------

    def host_emit(self, host_id: str, frame: Frame) -> None:
        sid, port = self._host_wire[host_id]
        if frozenset((host_id, sid)) in self.dead:
            self._drop("dead_link", host_id, frame)
            return
        self._log("emit", host_id, egress=f"{sid}:{port}", frame=frame)
        transit = _Transit()
        self._schedule(1, lambda: self._deliver_switch(sid, ("down", port), frame, transit))

    def host_timer(self, host_id: str, delay: int, token: tuple, extra: object = None) -> None:
        self._schedule(delay, lambda: self.hosts[host_id].on_timer(token, extra))

    def bump(self, name: str) -> None:
        self.metrics.bump(name)

    def echo_sent(self, host_id: str, seq: int, target_ip: str) -> None:
        self.metrics.ping_records[(host_id, seq)] = PingRecord(
            origin=host_id, target_ip=target_ip, seq=seq, sent_tick=self.now
        )

    def echo_ok(self, host_id: str, seq: int) -> None:
        rec = self.metrics.ping_records[(host_id, seq)]
        rec.status = "ok"
        rec.done_tick = self.now

    def echo_failed(self, host_id: str, seq: int, reason: str) -> None:
        rec = self.metrics.ping_records[(host_id, seq)]
        rec.status = reason
        rec.done_tick = self.now
        self.metrics.bump("echo_timeouts")

    def pings_unreachable(self, host_id: str, target_ip: str, count: int) -> None:
        self.metrics.bump("pings_unreachable", count)
        for _ in range(count):
            seq = -(len(self.metrics.ping_records) + 1)
            self.metrics.ping_records[(host_id, seq)] = PingRecord(
                origin=host_id,
                target_ip=target_ip,
                seq=seq,
                sent_tick=self.now,
                status="unreachable",
                done_tick=self.now,
            )

    # -- traffic API ------------------------------------------------------------------------

    def dhcp(self, host_id: str | None = None, *, drain: bool = True) -> None:
        targets = [host_id] if host_id else sorted(self.hosts)
        for hid in targets:
            self.hosts[hid].dhcp_acquire()
        if drain:
            self.drain()

    def arp(self, host_id: str, target_ip: str, *, drain: bool = True) -> None:
        self.hosts[host_id].arp_resolve(target_ip)
        if drain:
            self.drain()

    def ping(
        self, host_id: str, target: str, count: int = 1, *, drain: bool = True
    ) -> None:
        """Ping a peer host id (resolved to its current IP) or a literal IP."""
        if target in self.hosts:
            ip = self.hosts[target].ip
            if ip is None:
                raise SimulationError(f"ping target {target} has no IP yet")
        else:
            ip = target
        self.hosts[host_id].send_ping(ip, count)
        if drain:
            self.drain()

    def fail_link(self, a: str, b: str, at: int | None = None) -> None:
        self._link_change(a, b, up=False, at=at)

    def restore_link(self, a: str, b: str, at: int | None = None) -> None:
        self._link_change(a, b, up=True, at=at)

    def _link_change(self, a: str, b: str, up: bool, at: int | None) -> None:
        pair = frozenset((a, b))
        if pair not in self._link_pairs:
            raise NoSuchLink(f"no link between {a} and {b}")
        if at is None:
            self._schedule(0, lambda: self._do_link_change(a, b, up))
        else:
            self._schedule_at(at, lambda: self._do_link_change(a, b, up))

    def _do_link_change(self, a: str, b: str, up: bool) -> None:
        pair = frozenset((a, b))
        if up:
            if pair not in self.dead:
                return
            self.dead.discard(pair)
            self.server.on_link_change(a, b, up=True)
            self._log("link", f"{a}--{b}", note="restore")
            return
        if pair in self.dead:
            return  # failing twice is a no-op
        self.dead.add(pair)
        self.metrics.bump("link_failures")
        self._log("link", f"{a}--{b}", note="fail")
        self._last_fail_tick = self.now
        frames, unreachable = self.server.failover_announce((a, b))
        for mac, ip in unreachable:
            hid = self._host_of_mac.get(mac, format_mac(mac))
            self.metrics.unreachable_pairs.append((hid, ip))
        if frames:
            self._announcements_outstanding += len(frames)
            for frame in frames:
                self._inject(frame, announcement=True)
        else:
            self.metrics.convergence.append((self.now, self.now))
            self._last_fail_tick = None

    # -- inspection -----------------------------------------------------------------------------

    def record_post_fingerprints(self) -> None:
        self.metrics.fingerprints_post = {
            sid: state_fingerprint(st) for sid, st in self.states.items()
        }

    def non_edge_switches(self) -> list[str]:
        return sorted(sid for sid, st in self.states.items() if st.edge is None)
