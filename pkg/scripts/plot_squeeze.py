"""Plot S(theta) from ``kerrjpa squeeze`` and, if present, the histograms.

Usage: python scripts/plot_squeeze.py OUT_DIR [figure.png]
"""

import sys
from pathlib import Path

import matplotlib.pyplot as plt
import numpy as np

from kerrjpa.io import read_csv


def main(out_dir, figure="squeeze.png"):
    out_dir = Path(out_dir)
    d = read_csv(out_dir / "squeeze.csv")[1]
    hist = out_dir / "squeeze_hist.csv"
    ncol = 2 if hist.exists() else 1
    fig, axes = plt.subplots(1, ncol, figsize=(4.5 * ncol, 3.5), squeeze=False)
    ax = axes[0, 0]
    ax.errorbar(d["theta"] / np.pi, d["S_db"], yerr=d["stderr_db"], fmt="o", ms=3, label="Monte-Carlo")
    ax.plot(d["theta"] / np.pi, d["predicted_db"], "-", lw=1, label="linearized")
    ax.axhline(0, color="k", lw=0.5)
    ax.set_xlabel(r"$\theta / \pi$")
    ax.set_ylabel("S (dB)")
    ax.legend(fontsize=8)
    if hist.exists():
        h = read_csv(hist)[1]
        theta = np.unique(h["theta"])
        counts = h["count_on"].reshape(len(theta), -1)
        edges = np.append(h["bin_lo"][: counts.shape[1]], h["bin_hi"][counts.shape[1] - 1])
        step = theta[1] - theta[0]
        t_edges = np.append(theta - step / 2, theta[-1] + step / 2)
        axes[0, 1].pcolormesh(t_edges / np.pi, edges, counts.T, shading="flat", cmap="magma")
        axes[0, 1].set_xlabel(r"$\theta / \pi$")
        axes[0, 1].set_ylabel("amplified quadrature")
    fig.tight_layout()
    fig.savefig(figure, dpi=150)


if __name__ == "__main__":
    main(*sys.argv[1:])
