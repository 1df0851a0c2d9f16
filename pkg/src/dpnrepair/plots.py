"""Benchmark figure: repair time against net size."""

from __future__ import annotations

from collections import defaultdict

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402


def plot_bench(rows: list, path) -> None:
    """Scatter of per-net mean times with the per-size mean as a line."""
    by_n = defaultdict(list)
    for r in rows:
        by_n[int(r["n"])].append(float(r["mean_seconds"]))
    fig, ax = plt.subplots(figsize=(6.4, 4.0))
    for ok, colour, label in ((True, "tab:blue", "repaired"), (False, "tab:red", "failed")):
        pts = [(int(r["n"]), float(r["mean_seconds"])) for r in rows if (r["success"] == "true") == ok]
        if pts:
            xs, ys = zip(*pts)
            ax.scatter(xs, ys, s=12, alpha=0.6, color=colour, label=label)
    ns = sorted(by_n)
    if ns:
        ax.plot(ns, [sum(by_n[n]) / len(by_n[n]) for n in ns], color="black", linewidth=1, label="mean")
    ax.set_xlabel("n (transitions)")
    ax.set_ylabel("repair time [s]")
    ax.set_title("Repair time on generated nets")
    ax.grid(True, alpha=0.3)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
