import pytest

from bigmacsim.addressing import BROADCAST
from bigmacsim.frames import (
    ETHERTYPE_ECHO,
    ArpReply,
    ArpRequest,
    DhcpAck,
    DhcpRequest,
    EchoReply,
    EchoRequest,
    Frame,
)
from bigmacsim.host import HostConfig, HostStack

MAC = bytes.fromhex("020000000001")
PEER = bytes.fromhex("010201000000")


class StubSvc:
    def __init__(self):
        self.frames = []
        self.timers = []
        self.counters = {}
        self.echo_events = []

    def host_emit(self, host_id, frame):
        self.frames.append(frame)

    def host_timer(self, host_id, delay, token, extra=None):
        self.timers.append((delay, token, extra))

    def bump(self, name):
        self.counters[name] = self.counters.get(name, 0) + 1

    def echo_sent(self, host_id, seq, target_ip):
        self.echo_events.append(("sent", seq, target_ip))

    def echo_ok(self, host_id, seq):
        self.echo_events.append(("ok", seq))

    def echo_failed(self, host_id, seq, reason):
        self.echo_events.append((reason, seq))

    def pings_unreachable(self, host_id, target_ip, count):
        self.echo_events.append(("unreachable", target_ip, count))


def make_host(ip=None):
    svc = StubSvc()
    return HostStack("H1", MAC, svc, HostConfig(), ip=ip), svc


class TestDhcp:
    def test_acquire_broadcasts_with_genuine_source(self):
        host, svc = make_host()
        host.dhcp_acquire()
        (frame,) = svc.frames
        assert frame.dst == BROADCAST and frame.src == MAC
        assert isinstance(frame.payload, DhcpRequest)

    def test_configured_host_noop(self):
        host, svc = make_host(ip="10.0.0.5")
        host.dhcp_acquire()
        assert svc.frames == []

    def test_ack_sets_ip(self):
        host, svc = make_host()
        host.dhcp_acquire()
        host.receive(Frame(MAC, PEER, 0x0800, DhcpAck(MAC, "10.0.0.1", 1)))
        assert host.ip == "10.0.0.1"

    def test_retries_then_gives_up(self):
        host, svc = make_host()
        host.dhcp_acquire()
        for _ in range(HostConfig().dhcp_retries):
            delay, token, extra = svc.timers[-1]
            host.on_timer(token, extra)
        assert host.unconfigured
        assert svc.counters["host_dhcp_gave_up"] == 1


class TestArp:
    def test_miss_broadcasts_who_has(self):
        host, svc = make_host(ip="10.0.0.1")
        host.arp_resolve("10.0.0.2")
        (frame,) = svc.frames
        assert isinstance(frame.payload, ArpRequest)
        assert frame.payload.target_ip == "10.0.0.2"

    def test_hit_stays_quiet(self):
        host, svc = make_host(ip="10.0.0.1")
        host.arp_cache["10.0.0.2"] = PEER
        host.arp_resolve("10.0.0.2")
        assert svc.frames == []

    def test_reply_fills_cache(self):
        host, svc = make_host(ip="10.0.0.1")
        host.arp_resolve("10.0.0.2")
        host.receive(Frame(MAC, PEER, 0x0806, ArpReply("10.0.0.2", PEER, 1)))
        assert host.arp_cache["10.0.0.2"] == PEER

    def test_announcement_overwrites_cache(self):
        host, svc = make_host(ip="10.0.0.1")
        host.arp_cache["10.0.0.2"] = PEER
        newer = bytes.fromhex("020201000000")
        host.receive(Frame(MAC, newer, 0x0806, ArpReply("10.0.0.2", newer, 0, announcement=True)))
        assert host.arp_cache["10.0.0.2"] == newer
        assert svc.counters["host_announcements"] == 1

    def test_exhausted_retries_fail_pending_pings(self):
        host, svc = make_host(ip="10.0.0.1")
        host.send_ping("10.0.0.9", count=3)
        for _ in range(HostConfig().arp_retries):
            arp_timers = [t for t in svc.timers if t[1][0] == "arp"]
            delay, token, extra = arp_timers[-1]
            host.on_timer(token, extra)
        assert ("unreachable", "10.0.0.9", 3) in svc.echo_events


class TestPing:
    def test_self_ping_skips_network(self):
        host, svc = make_host(ip="10.0.0.1")
        host.send_ping("10.0.0.1", count=2)
        assert svc.frames == []
        assert svc.echo_events.count(("ok", 1)) + svc.echo_events.count(("ok", 2)) == 2

    def test_cached_peer_sends_echo(self):
        host, svc = make_host(ip="10.0.0.1")
        host.arp_cache["10.0.0.2"] = PEER
        host.send_ping("10.0.0.2")
        (frame,) = svc.frames
        assert frame.dst == PEER and frame.src == MAC
        assert isinstance(frame.payload, EchoRequest)

    def test_echo_request_is_answered_to_frame_source(self):
        host, svc = make_host(ip="10.0.0.1")
        host.receive(Frame(MAC, PEER, ETHERTYPE_ECHO, EchoRequest("H2", 7)))
        (frame,) = svc.frames
        assert frame.dst == PEER
        assert frame.payload == EchoReply("H2", 7)

    def test_reply_completes_and_train_continues(self):
        host, svc = make_host(ip="10.0.0.1")
        host.arp_cache["10.0.0.2"] = PEER
        host.send_ping("10.0.0.2", count=2)
        host.receive(Frame(MAC, PEER, ETHERTYPE_ECHO, EchoReply("H1", 1)))
        train_timers = [t for t in svc.timers if t[1][0] == "train"]
        assert train_timers
        delay, token, extra = train_timers[-1]
        host.on_timer(token, extra)
        assert len(svc.frames) == 2

    def test_timeout_marks_failed_and_continues(self):
        host, svc = make_host(ip="10.0.0.1")
        host.arp_cache["10.0.0.2"] = PEER
        host.send_ping("10.0.0.2", count=2)
        echo_timers = [t for t in svc.timers if t[1][0] == "echo"]
        host.on_timer(echo_timers[-1][1])
        assert ("timeout", 1) in svc.echo_events
        assert len(svc.frames) == 2  # second request went out anyway

    def test_rejects_misdelivered_frame(self):
        host, _svc = make_host()
        with pytest.raises(AssertionError):
            host.receive(Frame(PEER, MAC, ETHERTYPE_ECHO, EchoRequest("H2", 1)))
