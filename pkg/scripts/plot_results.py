#!/usr/bin/env python3
"""Plot the CSVs written by ``reproduce_figures.py`` (needs matplotlib).

    python scripts/plot_results.py results
"""

from __future__ import annotations

import argparse
import csv
from collections import defaultdict
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402


def read(path: Path) -> list[dict]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def curves(rows, metric):
    out = defaultdict(list)
    for r in rows:
        if r["metric"] == metric:
            out[(r["pulse"], r["mode"])].append((float(r["sweep_value"]), float(r["mean"])))
    return {k: sorted(v) for k, v in out.items()}


def plot_metric(rows, metric, xlabel, path, db=False):
    fig, ax = plt.subplots(figsize=(5, 3.6))
    for (pulse, mode), pts in sorted(curves(rows, metric).items()):
        x, y = np.array(pts).T
        if db:
            ax.plot(x, 10 * np.log10(y), marker="o", label=f"{pulse} {mode}")
        else:
            ax.semilogy(x, np.maximum(y, 1e-7), marker="o", label=f"{pulse} {mode}")
    ax.set_xlabel(xlabel)
    ax.set_ylabel("NMSE (dB)" if db else "BER")
    ax.grid(True, which="both", alpha=0.3)
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def plot_pulses(rows, path):
    fig, ax = plt.subplots(figsize=(6, 3.6))
    for r_pulse in sorted({r["pulse"] for r in rows}):
        for tau in sorted({float(r["path_delay"]) for r in rows}):
            sel = [r for r in rows if r["pulse"] == r_pulse and float(r["path_delay"]) == tau]
            fine = np.array([(float(r["t_over_Ts"]), float(r["g_value"])) for r in sel if r["kind"] == "fine"])
            samp = np.array([(float(r["t_over_Ts"]), float(r["g_value"])) for r in sel if r["kind"] == "sampled"])
            line, = ax.plot(*fine.T, lw=1, label=f"{r_pulse}, tau={tau:g} Ts")
            ax.plot(*samp.T, "o", ms=3, color=line.get_color())
    ax.set_xlabel("t / Ts")
    ax.set_ylabel("g(t - tau)")
    ax.legend(fontsize=7)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def plot_spread(directory: Path, path):
    # panel order follows the summary: RC by increasing roll-off, then TFL
    labels = [r["pulse"] for r in read(directory / "dd_spread_summary.csv")]
    grids = [directory / f"dd_spread_{label}.csv" for label in labels]
    fig, axes = plt.subplots(1, len(grids), figsize=(3 * len(grids), 3.2), squeeze=False)
    for ax, g in zip(axes[0], grids):
        rows = read(g)
        Z = np.array([[float(v) for k, v in r.items() if k != "m"] for r in rows])
        ax.imshow(20 * np.log10(np.maximum(Z, 1e-6)), aspect="auto", origin="lower", vmin=-60, vmax=0)
        ax.set_title(g.stem.removeprefix("dd_spread_"))
        ax.set_xlabel("Doppler bin")
    axes[0][0].set_ylabel("delay bin")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("directory", type=Path, nargs="?", default=Path("results"))
    args = ap.parse_args(argv)
    d = args.directory
    if (d / "pulse_response.csv").exists():
        plot_pulses(read(d / "pulse_response.csv"), d / "pulse_response.png")
    if (d / "dd_spread_summary.csv").exists():
        plot_spread(d, d / "dd_spread.png")
    if (d / "ber_snr.csv").exists():
        rows = read(d / "ber_snr.csv")
        plot_metric(rows, "ber", "SNR (dB)", d / "ber_snr.png")
        plot_metric(rows, "nmse", "SNR (dB)", d / "nmse_snr.png", db=True)
    if (d / "ber_speed.csv").exists():
        plot_metric(read(d / "ber_speed.csv"), "ber", "speed (km/h)", d / "ber_speed.png")
    for kind in ("awgn", "ltv"):
        p = d / f"ber_to_{kind}.csv"
        if p.exists():
            plot_metric(read(p), "ber", "timing offset (Ts)", d / f"ber_to_{kind}.png")
    print(f"plots written to {d}")


if __name__ == "__main__":
    main()
