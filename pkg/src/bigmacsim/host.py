"""Unmodified Ethernet+IP end-host behavior.

Hosts know nothing about the fabric: they transmit with their factory MAC
as source, accept frames addressed to that MAC or to broadcast, lease an IP
over DHCP, resolve peers with ARP, and cache whatever six bytes the reply
advertises.  That the cached "MAC" is really a locator address is invisible
from in here, which is the whole compatibility argument.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Protocol

from .addressing import BROADCAST
from .frames import (
    ETHERTYPE_ARP,
    ETHERTYPE_ECHO,
    ETHERTYPE_IPV4,
    ArpReply,
    ArpRequest,
    DhcpAck,
    DhcpNak,
    DhcpRequest,
    EchoReply,
    EchoRequest,
    Frame,
)


@dataclass(frozen=True)
class HostConfig:
    dhcp_timeout: int = 24
    dhcp_retries: int = 3
    arp_timeout: int = 24
    arp_retries: int = 3
    echo_timeout: int = 24
    ping_gap: int = 1  # ticks between a reply/timeout and the next request


class HostServices(Protocol):
    """What a host may ask of its surroundings: emit frames, set timers, report."""

    def host_emit(self, host_id: str, frame: Frame) -> None: ...
    def host_timer(
        self, host_id: str, delay: int, token: tuple, extra: object = None
    ) -> None: ...
    def bump(self, name: str) -> None: ...
    def echo_sent(self, host_id: str, seq: int, target_ip: str) -> None: ...
    def echo_ok(self, host_id: str, seq: int) -> None: ...
    def echo_failed(self, host_id: str, seq: int, reason: str) -> None: ...
    def pings_unreachable(self, host_id: str, target_ip: str, count: int) -> None: ...


@dataclass
class _Train:
    target_ip: str
    remaining: int
    ident: int = 0


class HostStack:
    def __init__(
        self, host_id: str, mac: bytes, svc: HostServices, config: HostConfig, ip: str | None = None
    ):
        self.host_id = host_id
        self.mac = mac
        self.ip = ip
        self.svc = svc
        self.config = config
        self.arp_cache: dict[str, bytes] = {}
        self.seq = 0  # broadcast sequence, correlates flooded copies
        self._echo_seq = 0
        self._dhcp_waiting: int | None = None  # outstanding broadcast seq
        self._dhcp_tries = 0
        self._arp_waiting: dict[str, int] = {}  # target ip -> outstanding seq
        self._arp_tries: dict[str, int] = {}
        self._deferred: dict[str, list[_Train]] = {}  # trains blocked on ARP
        self._inflight: dict[int, _Train] = {}  # echo seq -> its train
        self._train_ids = 0
        self.unconfigured = False  # DHCP gave up

    # -- transmit paths -------------------------------------------------------

    def _broadcast(self, ethertype: int, payload: object) -> None:
        self.svc.host_emit(
            self.host_id, Frame(dst=BROADCAST, src=self.mac, ethertype=ethertype, payload=payload)
        )

    def dhcp_acquire(self) -> None:
        """Broadcast for a lease; no-op when already configured."""
        if self.ip is not None or self._dhcp_waiting is not None:
            return
        self._dhcp_tries = 0
        self._send_dhcp()

    def _send_dhcp(self) -> None:
        self.seq += 1
        self._dhcp_waiting = self.seq
        self._broadcast(ETHERTYPE_IPV4, DhcpRequest(self.mac, self.seq))
        self.svc.host_timer(self.host_id, self.config.dhcp_timeout, ("dhcp", self.seq))

    def arp_resolve(self, target_ip: str) -> None:
        """Broadcast who-has unless the cache or an outstanding query covers it."""
        if target_ip in self.arp_cache or target_ip in self._arp_waiting:
            return
        if self.ip is None:
            raise RuntimeError(f"{self.host_id} cannot ARP without an IP")
        self._arp_tries[target_ip] = 0
        self._send_arp(target_ip)

    def _send_arp(self, target_ip: str) -> None:
        self.seq += 1
        self._arp_waiting[target_ip] = self.seq
        self._broadcast(ETHERTYPE_ARP, ArpRequest(self.mac, self.ip or "", target_ip, self.seq))
        self.svc.host_timer(
            self.host_id, self.config.arp_timeout, ("arp", target_ip, self.seq)
        )

    def send_ping(self, target_ip: str, count: int = 1) -> None:
        """Start an echo train; resolves the peer first when needed."""
        if self.ip is not None and target_ip == self.ip:
            # Loopback never touches the network.
            for _ in range(count):
                self._echo_seq += 1
                self.svc.echo_sent(self.host_id, self._echo_seq, target_ip)
                self.svc.echo_ok(self.host_id, self._echo_seq)
            return
        self._train_ids += 1
        train = _Train(target_ip=target_ip, remaining=count, ident=self._train_ids)
        if target_ip in self.arp_cache:
            self._advance(train)
        else:
            self._deferred.setdefault(target_ip, []).append(train)
            self.arp_resolve(target_ip)

    def _advance(self, train: _Train) -> None:
        if train.remaining <= 0:
            return
        train.remaining -= 1
        self._echo_seq += 1
        seq = self._echo_seq
        self._inflight[seq] = train
        self.svc.echo_sent(self.host_id, seq, train.target_ip)
        self.svc.host_emit(
            self.host_id,
            Frame(
                dst=self.arp_cache[train.target_ip],
                src=self.mac,
                ethertype=ETHERTYPE_ECHO,
                payload=EchoRequest(origin=self.host_id, seq=seq),
            ),
        )
        self.svc.host_timer(self.host_id, self.config.echo_timeout, ("echo", seq))

    # -- receive ------------------------------------------------------------------

    def receive(self, frame: Frame) -> None:
        if frame.dst != self.mac and frame.dst != BROADCAST:
            raise AssertionError(f"{self.host_id} delivered a frame not addressed to it")
        payload = frame.payload

        if isinstance(payload, DhcpAck):
            if payload.client_mac != self.mac:
                return
            self.ip = payload.ip
            self._dhcp_waiting = None
            self.unconfigured = False
            self.svc.bump("host_dhcp_bound")
        elif isinstance(payload, DhcpNak):
            if payload.client_mac != self.mac:
                return
            self._dhcp_waiting = None
            self.unconfigured = True
            self.svc.bump("host_dhcp_nak")
        elif isinstance(payload, ArpReply):
            # Announcements overwrite unconditionally; that is the failover hook.
            self.arp_cache[payload.target_ip] = payload.target_addr
            if payload.announcement:
                self.svc.bump("host_announcements")
            self._arp_waiting.pop(payload.target_ip, None)
            for train in self._deferred.pop(payload.target_ip, []):
                self._advance(train)
        elif isinstance(payload, EchoRequest):
            self.svc.host_emit(
                self.host_id,
                Frame(
                    dst=frame.src,
                    src=self.mac,
                    ethertype=ETHERTYPE_ECHO,
                    payload=EchoReply(origin=payload.origin, seq=payload.seq),
                ),
            )
        elif isinstance(payload, EchoReply):
            train = self._inflight.pop(payload.seq, None)
            if train is None:
                return
            self.svc.echo_ok(self.host_id, payload.seq)
            if train.remaining > 0:
                self.svc.host_timer(
                    self.host_id, self.config.ping_gap, ("train", train.ident), train
                )

    # -- timers --------------------------------------------------------------------

    def on_timer(self, token: tuple, extra: object = None) -> None:
        kind = token[0]
        if kind == "dhcp":
            if self._dhcp_waiting != token[1]:
                return
            self._dhcp_tries += 1
            if self._dhcp_tries < self.config.dhcp_retries:
                self._send_dhcp()
            else:
                self._dhcp_waiting = None
                self.unconfigured = True
                self.svc.bump("host_dhcp_gave_up")
        elif kind == "arp":
            _, target_ip, seq = token
            if self._arp_waiting.get(target_ip) != seq:
                return
            self._arp_tries[target_ip] += 1
            if self._arp_tries[target_ip] < self.config.arp_retries:
                self._send_arp(target_ip)
            else:
                del self._arp_waiting[target_ip]
                trains = self._deferred.pop(target_ip, [])
                lost = sum(t.remaining for t in trains)
                if lost:
                    self.svc.pings_unreachable(self.host_id, target_ip, lost)
        elif kind == "echo":
            seq = token[1]
            train = self._inflight.pop(seq, None)
            if train is None:
                return
            self.svc.echo_failed(self.host_id, seq, "timeout")
            if train.remaining > 0:
                self._advance(train)
        elif kind == "train":
            assert isinstance(extra, _Train)
            self._advance(extra)
