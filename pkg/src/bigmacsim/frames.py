"""Frames and the fixed-field payload records the simulator moves around.

Payloads are plain records rather than bit-exact RFC encodings: the fabric
treats them as opaque, and only hosts and the ARP&DHCP server look inside.
Address resolution and leasing each carry the client's genuine MAC plus a
per-host sequence number so the server can correlate the per-path copies of
one flooded request.
"""

from __future__ import annotations

from dataclasses import dataclass

ETHERTYPE_IPV4 = 0x0800  # carries DHCP records
ETHERTYPE_ARP = 0x0806
ETHERTYPE_ECHO = 0x88B5  # minimal ping, stands in for ICMP


@dataclass(frozen=True)
class Frame:
    dst: bytes
    src: bytes
    ethertype: int
    payload: object

    def __post_init__(self) -> None:
        if len(self.dst) != 6 or len(self.src) != 6:
            raise ValueError("frame addresses must be 6 bytes")


@dataclass(frozen=True)
class DhcpRequest:
    client_mac: bytes
    seq: int


@dataclass(frozen=True)
class DhcpAck:
    client_mac: bytes
    ip: str
    seq: int


@dataclass(frozen=True)
class DhcpNak:
    client_mac: bytes
    seq: int


@dataclass(frozen=True)
class ArpRequest:
    sender_mac: bytes
    sender_ip: str
    target_ip: str
    seq: int


@dataclass(frozen=True)
class ArpReply:
    """MAC-for-IP advertisement; unsolicited ones repoint caches (failover)."""

    target_ip: str
    target_addr: bytes
    seq: int
    announcement: bool = False


@dataclass(frozen=True)
class EchoRequest:
    origin: str  # requester host id, echoed back for correlation
    seq: int


@dataclass(frozen=True)
class EchoReply:
    origin: str
    seq: int
