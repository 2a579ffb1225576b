"""Plot the output phasor loci from ``kerrjpa distort`` (sweeps.csv).

Usage: python scripts/plot_distort.py OUT_DIR [figure.png]
"""

import sys
from pathlib import Path

import matplotlib.pyplot as plt
import numpy as np

from kerrjpa.io import read_csv


def main(out_dir, figure="distort.png"):
    d = read_csv(Path(out_dir) / "sweeps.csv")[1]
    fig, ax = plt.subplots(figsize=(4.5, 4.5))
    for k in np.unique(d["sweep"]):
        s = {name: col[d["sweep"] == k] for name, col in d.items()}
        ax.plot(s["I"], s["Q"], ".", ms=2, label=f"{s['gain_target_db'][0]:g} dB")
    s = {name: col[d["sweep"] == 0] for name, col in d.items()}
    ax.plot(s["I_in"], s["Q_in"], "k-", lw=0.8, label="input")
    ax.set_aspect("equal")
    ax.set_xlabel("I")
    ax.set_ylabel("Q")
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(figure, dpi=150)


if __name__ == "__main__":
    main(*sys.argv[1:])
