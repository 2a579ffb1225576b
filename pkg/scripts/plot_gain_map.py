"""Plot gainmap.csv from ``kerrjpa gain-map`` as a colour map.

Usage: python scripts/plot_gain_map.py OUT_DIR [figure.png]
"""

import sys
from pathlib import Path

import matplotlib.pyplot as plt
import numpy as np

from kerrjpa.io import read_csv


def main(out_dir, figure="gainmap.png"):
    d = read_csv(Path(out_dir) / "gainmap.csv")[1]
    f = np.unique(d["f_ratio"])
    p = np.unique(d["p_ratio_db"])
    g = d["gain_db"].reshape(len(f), len(p))
    fig, ax = plt.subplots(figsize=(5, 4))
    mesh = ax.pcolormesh(f, p, g.T, shading="nearest", vmin=0, vmax=30, cmap="viridis")
    fig.colorbar(mesh, ax=ax, label="direct gain (dB)")
    ax.set_xlabel("$f_p / f_c$")
    ax.set_ylabel("$P_p / P_c$ (dB)")
    fig.tight_layout()
    fig.savefig(figure, dpi=150)


if __name__ == "__main__":
    main(*sys.argv[1:])
