"""Run reports: delimited metric output plus optional rendered figures."""

from __future__ import annotations

import os

from .engine import Metrics


def render_text(metrics: Metrics) -> str:
    rows = metrics.rows()
    width = max(len(name) for name, _ in rows)
    return "\n".join(f"{name:<{width}}  {value}" for name, value in rows) + "\n"


def render_csv(metrics: Metrics) -> str:
    lines = ["metric,value"]
    lines.extend(f"{name},{value}" for name, value in metrics.rows())
    return "\n".join(lines) + "\n"


def write_figures(metrics: Metrics, outdir: str) -> list[str]:
    """Render the run's headline distributions to PNG files in outdir."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    os.makedirs(outdir, exist_ok=True)
    written: list[str] = []

    hops = [r.hops for r in metrics.pings() if r.status == "ok" and r.hops]
    if hops:
        fig, ax = plt.subplots(figsize=(5, 3.2))
        ax.hist(hops, bins=range(1, max(hops) + 2), align="left", rwidth=0.8, color="#4878d0")
        ax.set_xlabel("switch hops per delivered ping")
        ax.set_ylabel("pings")
        ax.set_title("Request path lengths")
        path = os.path.join(outdir, "hops_hist.png")
        fig.savefig(path, bbox_inches="tight", dpi=120)
        plt.close(fig)
        written.append(path)

    copies = [b.copies for b in metrics.broadcast_records]
    if copies:
        fig, ax = plt.subplots(figsize=(5, 3.2))
        ax.hist(copies, bins=range(1, max(copies) + 2), align="left", rwidth=0.8, color="#6acc64")
        ax.set_xlabel("server copies per broadcast")
        ax.set_ylabel("broadcasts")
        ax.set_title("Flood fan-out")
        path = os.path.join(outdir, "broadcast_copies.png")
        fig.savefig(path, bbox_inches="tight", dpi=120)
        plt.close(fig)
        written.append(path)

    if metrics.drop_events:
        ticks = [t for t, _r, _n in metrics.drop_events]
        fig, ax = plt.subplots(figsize=(5, 3.2))
        ax.plot(sorted(ticks), range(1, len(ticks) + 1), drawstyle="steps-post", color="#d65f5f")
        ax.set_xlabel("tick")
        ax.set_ylabel("cumulative drops")
        ax.set_title("Drops over time")
        path = os.path.join(outdir, "drops_timeline.png")
        fig.savefig(path, bbox_inches="tight", dpi=120)
        plt.close(fig)
        written.append(path)

    return written


def write_address_figure(per_host: dict[str, int], outdir: str) -> str:
    """Histogram of addresses per host, for the address-table report."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    os.makedirs(outdir, exist_ok=True)
    counts = sorted(per_host.values())
    fig, ax = plt.subplots(figsize=(5, 3.2))
    ax.hist(counts, bins=range(1, max(counts) + 2), align="left", rwidth=0.8, color="#956cb4")
    ax.set_xlabel("addresses per host")
    ax.set_ylabel("hosts")
    ax.set_title("Branch-bunch address counts")
    path = os.path.join(outdir, "addresses_per_host.png")
    fig.savefig(path, bbox_inches="tight", dpi=120)
    plt.close(fig)
    return path
