"""Line-oriented topology file format.

    # comment
    switch <id> tier <n> [root 0xNN] [stack <group>]
    link <parent-id>:<downlink-port> <child-id>[:<uplink-index>]
    shortcut <id1> <id2>
    host <id> at <switch-id>:<port> mac <xx:xx:xx:xx:xx:xx> [ip <a.b.c.d>]

Ports and uplink indexes are decimal, the root byte is hex.  Unknown
directives are errors.  Top switches without an explicit root byte get the
lowest free ones in sorted-id order.
"""

from __future__ import annotations

import ipaddress

from .addressing import parse_mac, format_mac
from .topology import Topology


class TopologyFormatError(ValueError):
    """Syntax or reference error in a topology file, with its line number."""


def _fail(lineno: int, message: str) -> TopologyFormatError:
    return TopologyFormatError(f"line {lineno}: {message}")


def _split_endpoint(token: str, lineno: int) -> tuple[str, int | None]:
    if ":" not in token:
        return token, None
    name, _, num = token.rpartition(":")
    try:
        return name, int(num, 10)
    except ValueError:
        raise _fail(lineno, f"bad port/index in {token!r}") from None


def parse_topology(text: str) -> Topology:
    topo = Topology()
    pending_links: list[tuple[int, str, int, str, int | None]] = []
    pending_hosts: list[tuple[int, str, str, int, bytes, str | None]] = []
    pending_shortcuts: list[tuple[int, str, str]] = []

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        words = line.split()
        directive = words[0]

        if directive == "switch":
            if len(words) < 4 or words[2] != "tier":
                raise _fail(lineno, "expected: switch <id> tier <n> [root 0xNN] [stack <g>]")
            sid = words[1]
            try:
                tier = int(words[3], 10)
            except ValueError:
                raise _fail(lineno, f"bad tier {words[3]!r}") from None
            root: int | None = None
            stack: str | None = None
            rest = words[4:]
            while rest:
                key = rest.pop(0)
                if key == "root" and rest:
                    try:
                        root = int(rest.pop(0), 16)
                    except ValueError:
                        raise _fail(lineno, "bad root byte") from None
                elif key == "stack" and rest:
                    stack = rest.pop(0)
                else:
                    raise _fail(lineno, f"unexpected token {key!r}")
            if sid in topo.switches or sid in topo.hosts:
                raise _fail(lineno, f"duplicate node id {sid!r}")
            topo.add_switch(sid, tier, root=root, stack=stack)

        elif directive == "link":
            if len(words) != 3:
                raise _fail(lineno, "expected: link <parent>:<port> <child>[:<index>]")
            parent, port = _split_endpoint(words[1], lineno)
            child, index = _split_endpoint(words[2], lineno)
            if port is None:
                raise _fail(lineno, f"link needs a parent port: {words[1]!r}")
            pending_links.append((lineno, parent, port, child, index))

        elif directive == "shortcut":
            if len(words) != 3:
                raise _fail(lineno, "expected: shortcut <id1> <id2>")
            pending_shortcuts.append((lineno, words[1], words[2]))

        elif directive == "host":
            if len(words) < 6 or words[2] != "at" or words[4] != "mac":
                raise _fail(
                    lineno, "expected: host <id> at <switch>:<port> mac <mac> [ip <ip>]"
                )
            hid = words[1]
            sid, port = _split_endpoint(words[3], lineno)
            if port is None:
                raise _fail(lineno, f"host attachment needs a port: {words[3]!r}")
            try:
                mac = parse_mac(words[5])
            except ValueError as exc:
                raise _fail(lineno, str(exc)) from None
            ip: str | None = None
            rest = words[6:]
            if rest:
                if len(rest) != 2 or rest[0] != "ip":
                    raise _fail(lineno, f"unexpected tokens {rest!r}")
                try:
                    ip = str(ipaddress.IPv4Address(rest[1]))
                except ValueError:
                    raise _fail(lineno, f"bad ip {rest[1]!r}") from None
            pending_hosts.append((lineno, hid, sid, port, mac, ip))

        else:
            raise _fail(lineno, f"unknown directive {directive!r}")

    for lineno, parent, port, child, index in pending_links:
        if parent not in topo.switches:
            raise _fail(lineno, f"unknown switch {parent!r}")
        if child not in topo.switches:
            raise _fail(lineno, f"unknown switch {child!r}")
        try:
            topo.add_link(parent, port, child, uplink_index=index)
        except (ValueError, StopIteration) as exc:
            raise _fail(lineno, str(exc)) from None

    for lineno, hid, sid, port, mac, ip in pending_hosts:
        if sid not in topo.switches:
            raise _fail(lineno, f"unknown switch {sid!r}")
        try:
            topo.add_host(hid, at=(sid, port), mac=mac, ip=ip)
        except ValueError as exc:
            raise _fail(lineno, str(exc)) from None

    for lineno, a, b in pending_shortcuts:
        if a not in topo.switches or b not in topo.switches:
            raise _fail(lineno, f"shortcut references unknown switch: {a} {b}")
        topo.add_shortcut(a, b)

    # Auto-assign root bytes to top switches that lack one.
    used = set(topo.root_bytes.values())
    for sid in topo.top_switches():
        if sid in topo.root_bytes:
            continue
        byte = next(b for b in range(1, 0x100) if b not in used)
        used.add(byte)
        topo.root_bytes[sid] = byte

    return topo


def parse_topology_file(path: str) -> Topology:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_topology(fh.read())


def render_topology(t: Topology) -> str:
    """Serialize a topology in the same format parse_topology accepts."""
    lines: list[str] = []
    for sid in sorted(t.switches, key=lambda s: (t.switches[s].tier, s)):
        node = t.switches[sid]
        line = f"switch {sid} tier {node.tier}"
        if sid in t.root_bytes:
            line += f" root 0x{t.root_bytes[sid]:02x}"
        if node.stack_group:
            line += f" stack {node.stack_group}"
        lines.append(line)
    for sid in sorted(t.switches, key=lambda s: (t.switches[s].tier, s)):
        node = t.switches[sid]
        for port in sorted(node.downlinks):
            peer = node.downlinks[port]
            if peer not in t.switches:
                continue
            index = next(
                u.index
                for u in t.switches[peer].uplinks
                if u.parent == sid and u.parent_port == port
            )
            lines.append(f"link {sid}:{port} {peer}:{index}")
    for a, b in t.shortcuts:
        lines.append(f"shortcut {a} {b}")
    attach = t.attachments()
    for hid in sorted(t.hosts):
        sid, port = attach[hid]
        host = t.hosts[hid]
        line = f"host {hid} at {sid}:{port} mac {format_mac(host.mac)}"
        if host.ip:
            line += f" ip {host.ip}"
        lines.append(line)
    return "\n".join(lines) + "\n"
