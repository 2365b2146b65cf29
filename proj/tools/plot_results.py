#!/usr/bin/env python3
"""Render plots from the CSVs the CLI writes.

  plot_results.py bars <bars.csv> <out.png>        hash-distance bar chart
  plot_results.py ssim <ssim_sorted.csv> <out.png> sorted SSIM curve
  plot_results.py sweep <sweep.csv> <out.png>      success rate vs epsilon

bars.csv comes from `detect --bars`, ssim_sorted.csv from `batch`, and
sweep.csv from `sweep`.
"""
import csv
import sys
from collections import defaultdict

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt


def read_rows(path):
    with open(path, newline="") as f:
        return list(csv.DictReader(f))


def plot_bars(rows, out):
    names = [r["algorithm"] for r in rows]
    dists = [int(r["distance"]) for r in rows]
    threshold = int(rows[0]["threshold"])
    colors = ["#c0392b" if r["detected"] == "true" else "#7f8c8d" for r in rows]
    fig, ax = plt.subplots(figsize=(5, 3.2))
    ax.bar(names, dists, color=colors)
    ax.axhline(threshold, color="black", linestyle="--", linewidth=1,
               label=f"threshold = {threshold}")
    ax.set_ylabel("Hamming distance")
    ax.set_title("Perceptual hash distances (red = fired)")
    ax.legend(frameon=False)
    fig.tight_layout()
    fig.savefig(out, dpi=150)


def plot_ssim(rows, out):
    ranks = [int(r["rank"]) for r in rows]
    ssims = [float(r["ssim"]) for r in rows]
    fig, ax = plt.subplots(figsize=(5.5, 3.2))
    ax.plot(ranks, ssims, color="#2c3e50", linewidth=1.5)
    ax.axhline(0.98, color="#c0392b", linestyle="--", linewidth=1,
               label="detection threshold 0.98")
    ax.set_xlabel("pair (sorted by SSIM)")
    ax.set_ylabel("SSIM")
    ax.set_title("SSIM across the corpus")
    ax.legend(frameon=False)
    fig.tight_layout()
    fig.savefig(out, dpi=150)


def plot_sweep(rows, out):
    by_eps = defaultdict(list)
    for r in rows:
        by_eps[float(r["epsilon"])].append(int(r["success"]))
    eps = sorted(by_eps)
    rates = [sum(by_eps[e]) / len(by_eps[e]) for e in eps]
    fig, ax = plt.subplots(figsize=(5, 3.2))
    ax.plot(eps, rates, marker="o", color="#2c3e50")
    ax.set_xlabel("epsilon")
    ax.set_ylabel("attack success rate")
    ax.set_ylim(-0.05, 1.05)
    ax.set_title("Sweep: success rate vs epsilon")
    fig.tight_layout()
    fig.savefig(out, dpi=150)


def main():
    if len(sys.argv) != 4 or sys.argv[1] not in ("bars", "ssim", "sweep"):
        sys.exit(__doc__)
    kind, src, out = sys.argv[1:]
    rows = read_rows(src)
    if not rows:
        sys.exit(f"no data rows in {src}")
    {"bars": plot_bars, "ssim": plot_ssim, "sweep": plot_sweep}[kind](rows, out)
    print(f"wrote {out}")


if __name__ == "__main__":
    main()
