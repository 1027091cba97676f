"""Command-line front end.

    bigmacsim addresses <topo> [--stats --u U --d D --n N] [--delta] [--format ...]
    bigmacsim run <topo> <scenario> [--strategy S] [--policy P] [--seed N]
                  [--log PATH] [--format text|csv] [--plots DIR]
    bigmacsim gen --tiers L --uplinks U --downlinks D [--hosts N] [-o FILE]

Exit codes: 0 success, 1 scenario assertion failure or unexpected drops,
2 input error (unparseable files, invalid topology, bad parameters).
"""

from __future__ import annotations

import argparse
import sys

from .addressing import BadFanout, FanoutParams, expected_addresses
from .generate import build_regular
from .scenario import ScenarioError, parse_scenario_file, run_commands
from .topofile import TopologyFormatError, parse_topology_file, render_topology
from .topology import InvalidTopology, assign_addresses, normalize, validate


def _load_topology(path: str, strategy: str | None = None):
    topo = normalize(parse_topology_file(path))
    violations = validate(topo, strategy=strategy)
    if violations:
        for v in violations:
            print(str(v), file=sys.stderr)
        return None
    return topo


def cmd_addresses(args: argparse.Namespace) -> int:
    topo = _load_topology(args.topology, strategy="delta" if args.delta else None)
    if topo is None:
        return 2
    table = assign_addresses(topo, delta_packed=args.delta)

    lines: list[str] = []
    if args.format == "csv":
        lines.append("node,address")
        for node in sorted(table.by_node):
            for addr in table.by_node[node]:
                lines.append(f"{node},{addr}")
    else:
        for node in sorted(table.by_node):
            rendered = ", ".join(str(a) for a in table.by_node[node])
            lines.append(f"{node}: {rendered}")
    print("\n".join(lines))

    if args.stats:
        mean = table.mean_host_addresses(topo)
        print(f"mean addresses per host: {mean:.6g}")
        if args.u and args.d:
            n = args.n if args.n else len(topo.hosts)
            try:
                est = expected_addresses(FanoutParams(n, args.u, args.d))
            except (BadFanout, ValueError) as exc:
                print(f"error: {exc}", file=sys.stderr)
                return 2
            print(f"expected addresses per host (N={n}, u={args.u}, d={args.d}): {est:.6g}")

    if args.plots:
        from .report import write_address_figure

        per_host = {h: len(table.by_node.get(h, ())) for h in topo.hosts}
        if per_host:
            path = write_address_figure(per_host, args.plots)
            print(f"figure written: {path}", file=sys.stderr)
    return 0


def cmd_run(args: argparse.Namespace) -> int:
    topo = _load_topology(args.topology, strategy=args.strategy)
    if topo is None:
        return 2
    try:
        commands = parse_scenario_file(args.scenario)
        result = run_commands(
            topo,
            commands,
            strategy=args.strategy,
            policy=args.policy,
            seed=args.seed,
            tick_limit=args.tick_limit,
        )
    except (ScenarioError, InvalidTopology) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2

    from .report import render_csv, render_text, write_figures

    sys.stdout.write(
        render_csv(result.metrics) if args.format == "csv" else render_text(result.metrics)
    )
    if args.log:
        with open(args.log, "w", encoding="utf-8") as fh:
            fh.write("\n".join(result.log) + ("\n" if result.log else ""))
    if args.plots:
        for path in write_figures(result.metrics, args.plots):
            print(f"figure written: {path}", file=sys.stderr)

    for failure in result.failures:
        print(f"FAILED {failure}", file=sys.stderr)
    unexpected = result.metrics.unexpected_drops()
    if unexpected:
        print(f"FAILED unexpected drops: {unexpected}", file=sys.stderr)
    return 0 if result.ok else 1


def cmd_gen(args: argparse.Namespace) -> int:
    try:
        topo = build_regular(
            args.tiers,
            args.uplinks,
            args.downlinks,
            hosts=args.hosts,
            hosts_per_edge=args.hosts_per_edge,
        )
    except (BadFanout, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    text = render_topology(topo)
    if args.output:
        with open(args.output, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bigmacsim",
        description="Tiered layer-2 locator addressing: address tables, simulation runs, fabric generation.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_addr = sub.add_parser("addresses", help="print the assigned address table")
    p_addr.add_argument("topology", help="topology file")
    p_addr.add_argument("--stats", action="store_true", help="add mean/expected address counts")
    p_addr.add_argument("--u", type=int, default=None, help="uplink fanout for the estimate")
    p_addr.add_argument("--d", type=int, default=None, help="downlink fanout for the estimate")
    p_addr.add_argument("--n", type=int, default=None, help="host count for the estimate")
    p_addr.add_argument("--delta", action="store_true", help="pack uplink bits into port bytes")
    p_addr.add_argument("--format", choices=("text", "csv"), default="text")
    p_addr.add_argument("--plots", metavar="DIR", default=None, help="write figures here")
    p_addr.set_defaults(func=cmd_addresses)

    p_run = sub.add_parser("run", help="run a scenario and report metrics")
    p_run.add_argument("topology", help="topology file")
    p_run.add_argument("scenario", help="scenario file")
    p_run.add_argument(
        "--strategy", choices=("alpha", "beta", "gamma", "delta"), default="alpha"
    )
    p_run.add_argument(
        "--policy", choices=("first", "round_robin", "common_root"), default="first"
    )
    p_run.add_argument("--seed", type=int, default=0, help="rotation offsets only")
    p_run.add_argument("--log", metavar="PATH", default=None, help="write the event log")
    p_run.add_argument("--format", choices=("text", "csv"), default="text")
    p_run.add_argument("--plots", metavar="DIR", default=None, help="write figures here")
    p_run.add_argument("--tick-limit", type=int, default=1_000_000)
    p_run.set_defaults(func=cmd_run)

    p_gen = sub.add_parser("gen", help="emit a regular tiered topology file")
    p_gen.add_argument("--tiers", type=int, required=True, help="switch tier count L")
    p_gen.add_argument("--uplinks", type=int, required=True, help="uplink fanout u")
    p_gen.add_argument("--downlinks", type=int, required=True, help="downlink fanout d")
    p_gen.add_argument("--hosts", type=int, default=None, help="host count (slice mode)")
    p_gen.add_argument("--hosts-per-edge", type=int, default=None)
    p_gen.add_argument("-o", "--output", default=None, help="write here instead of stdout")
    p_gen.set_defaults(func=cmd_gen)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (TopologyFormatError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
