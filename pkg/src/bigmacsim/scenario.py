"""Scenario files: the traffic script a simulation run executes.

    # comment
    pool 10.0.0.0/24
    strategy alpha|beta|gamma|delta
    policy first|round_robin|common_root
    dhcp all | dhcp <host>
    arp <host> <a.b.c.d> | arp <host> ip(<host>)
    ping <host> <host> [count]
    fail <node> <node> [@tick]
    restore <node> <node> [@tick]
    assert <metric> <op> <value>

Traffic commands run to quiescence before the next command.  fail/restore
with @tick are scheduled at an absolute tick instead, which is how a link
dies in the middle of a ping train.  pool and strategy configure the run
and must precede all traffic.
"""

from __future__ import annotations

import operator
from dataclasses import dataclass, field

from .control import PolicyMode
from .engine import Metrics, Simulation
from .host import HostConfig
from .topology import Topology


class ScenarioError(ValueError):
    """Bad scenario syntax or a reference to an undeclared node."""


OPS = {
    "==": operator.eq,
    "!=": operator.ne,
    "<": operator.lt,
    "<=": operator.le,
    ">": operator.gt,
    ">=": operator.ge,
}


@dataclass(frozen=True)
class PoolCmd:
    cidr: str


@dataclass(frozen=True)
class StrategyCmd:
    name: str


@dataclass(frozen=True)
class PolicyCmd:
    name: str


@dataclass(frozen=True)
class DhcpCmd:
    host: str | None  # None means all


@dataclass(frozen=True)
class ArpCmd:
    host: str
    ip: str | None  # literal, or None with ip_of set
    ip_of: str | None = None


@dataclass(frozen=True)
class PingCmd:
    src: str
    dst: str
    count: int = 1


@dataclass(frozen=True)
class LinkCmd:
    action: str  # fail | restore
    a: str
    b: str
    at: int | None = None


@dataclass(frozen=True)
class AssertCmd:
    metric: str
    op: str
    value: float


Command = PoolCmd | StrategyCmd | PolicyCmd | DhcpCmd | ArpCmd | PingCmd | LinkCmd | AssertCmd


def parse_scenario(text: str) -> list[Command]:
    commands: list[Command] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        words = line.split()
        head = words[0]
        try:
            commands.append(_parse_one(head, words[1:]))
        except ScenarioError as exc:
            raise ScenarioError(f"line {lineno}: {exc}") from None
    return commands


def _parse_one(head: str, args: list[str]) -> Command:
    if head == "pool":
        if len(args) != 1:
            raise ScenarioError("expected: pool <cidr>")
        return PoolCmd(args[0])
    if head == "strategy":
        if len(args) != 1 or args[0] not in ("alpha", "beta", "gamma", "delta"):
            raise ScenarioError("expected: strategy alpha|beta|gamma|delta")
        return StrategyCmd(args[0])
    if head == "policy":
        if len(args) != 1 or args[0] not in ("first", "round_robin", "common_root"):
            raise ScenarioError("expected: policy first|round_robin|common_root")
        return PolicyCmd(args[0])
    if head == "dhcp":
        if len(args) != 1:
            raise ScenarioError("expected: dhcp all|<host>")
        return DhcpCmd(None if args[0] == "all" else args[0])
    if head == "arp":
        if len(args) != 2:
            raise ScenarioError("expected: arp <host> <ip>")
        target = args[1]
        if target.startswith("ip(") and target.endswith(")"):
            return ArpCmd(args[0], ip=None, ip_of=target[3:-1])
        return ArpCmd(args[0], ip=target)
    if head == "ping":
        if len(args) not in (2, 3):
            raise ScenarioError("expected: ping <host> <host> [count]")
        count = 1
        if len(args) == 3:
            try:
                count = int(args[2], 10)
            except ValueError:
                raise ScenarioError(f"bad count {args[2]!r}") from None
        return PingCmd(args[0], args[1], count)
    if head in ("fail", "restore"):
        at: int | None = None
        rest = list(args)
        if rest and rest[-1].startswith("@"):
            try:
                at = int(rest.pop()[1:], 10)
            except ValueError:
                raise ScenarioError("bad @tick") from None
        if len(rest) != 2:
            raise ScenarioError(f"expected: {head} <node> <node> [@tick]")
        return LinkCmd(head, rest[0], rest[1], at)
    if head == "assert":
        if len(args) != 3 or args[1] not in OPS:
            raise ScenarioError("expected: assert <metric> <op> <value>")
        try:
            value = float(args[2])
        except ValueError:
            raise ScenarioError(f"bad value {args[2]!r}") from None
        return AssertCmd(args[0], args[1], value)
    raise ScenarioError(f"unknown command {head!r}")


def parse_scenario_file(path: str) -> list[Command]:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_scenario(fh.read())


@dataclass
class RunResult:
    metrics: Metrics
    failures: list[str] = field(default_factory=list)
    log: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.failures and self.metrics.unexpected_drops() == 0


def run_commands(
    topo: Topology,
    commands: list[Command],
    *,
    strategy: str = "alpha",
    policy: str = "first",
    seed: int = 0,
    record_log: bool = True,
    host_config: HostConfig | None = None,
    tick_limit: int = 1_000_000,
) -> RunResult:
    """Execute a parsed scenario; CLI flags supply defaults the file may override."""
    pool = "10.0.0.0/24"
    first_traffic = next(
        (
            i
            for i, c in enumerate(commands)
            if isinstance(c, (DhcpCmd, ArpCmd, PingCmd, LinkCmd))
        ),
        len(commands),
    )
    for i, cmd in enumerate(commands):
        if isinstance(cmd, (PoolCmd, StrategyCmd)) and i > first_traffic:
            raise ScenarioError(f"{type(cmd).__name__} must precede all traffic")
        if isinstance(cmd, PoolCmd):
            pool = cmd.cidr
        elif isinstance(cmd, StrategyCmd):
            strategy = cmd.name
        elif isinstance(cmd, PolicyCmd) and i < first_traffic:
            policy = cmd.name

    sim = Simulation(
        topo,
        strategy=strategy,
        policy=policy,
        seed=seed,
        pool=pool,
        record_log=record_log,
        host_config=host_config,
        tick_limit=tick_limit,
    )
    result = RunResult(metrics=sim.metrics, log=sim.log)

    for cmd in commands:
        if isinstance(cmd, (PoolCmd, StrategyCmd)):
            continue  # consumed above
        if isinstance(cmd, PolicyCmd):
            sim.server.policy.mode = PolicyMode(cmd.name)
            continue
        if isinstance(cmd, DhcpCmd):
            if cmd.host is not None and cmd.host not in sim.hosts:
                raise ScenarioError(f"unknown host {cmd.host!r}")
            sim.dhcp(cmd.host)
        elif isinstance(cmd, ArpCmd):
            if cmd.host not in sim.hosts:
                raise ScenarioError(f"unknown host {cmd.host!r}")
            if cmd.ip_of is not None:
                peer = sim.hosts.get(cmd.ip_of)
                if peer is None:
                    raise ScenarioError(f"unknown host {cmd.ip_of!r}")
                if peer.ip is None:
                    raise ScenarioError(f"host {cmd.ip_of} has no IP to resolve")
                target_ip = peer.ip
            else:
                target_ip = cmd.ip or ""
            sim.arp(cmd.host, target_ip)
        elif isinstance(cmd, PingCmd):
            if cmd.src not in sim.hosts or cmd.dst not in sim.hosts:
                raise ScenarioError(f"unknown host in ping {cmd.src} {cmd.dst}")
            sim.ping(cmd.src, cmd.dst, cmd.count)
        elif isinstance(cmd, LinkCmd):
            try:
                if cmd.action == "fail":
                    sim.fail_link(cmd.a, cmd.b, at=cmd.at)
                else:
                    sim.restore_link(cmd.a, cmd.b, at=cmd.at)
            except Exception as exc:
                raise ScenarioError(str(exc)) from None
            if cmd.at is None:
                sim.drain()
        elif isinstance(cmd, AssertCmd):
            try:
                actual = sim.metrics.value(cmd.metric)
            except KeyError:
                result.failures.append(f"assert: unknown metric {cmd.metric!r}")
                continue
            if not OPS[cmd.op](float(actual), cmd.value):
                result.failures.append(
                    f"assert {cmd.metric} {cmd.op} {cmd.value:g} failed (actual {actual})"
                )

    sim.drain()
    sim.record_post_fingerprints()
    return result
