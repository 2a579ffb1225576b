"""Plot noise data against the fitted model from ``kerrjpa noise-fit``.

Usage: python scripts/plot_noise_fit.py DATA_CSV FIT_DIR [figure.png]
"""

import json
import sys
from pathlib import Path

import matplotlib.pyplot as plt
import numpy as np

from kerrjpa.io import read_csv
from kerrjpa.calibration import noise_model
from kerrjpa.constants import TWO_PI


def main(data_csv, fit_dir, figure="noise_fit.png"):
    d = read_csv(data_csv)[1]
    fit = json.loads((Path(fit_dir) / "noise_fit.json").read_text())
    p = fit["params"]
    omega = TWO_PI * fit["freq_Hz"]
    fig, ax = plt.subplots(figsize=(5, 3.5))
    for t_f in np.unique(d["T_fridge_K"]):
        s = {name: col[d["T_fridge_K"] == t_f] for name, col in d.items()}
        model = noise_model(s["T_vts_K"], t_f, p["n_add"], p["lambda"], p["chain_gain_db"], omega)
        line = ax.plot(s["T_vts_K"], s["psd_out_quanta"], ".", ms=2)[0]
        ax.plot(s["T_vts_K"], model, "-", color=line.get_color(), label=f"T_f = {t_f * 1e3:g} mK")
    ax.set_xscale("log")
    ax.set_xlabel("$T_{VTS}$ (K)")
    ax.set_ylabel("output noise (quanta x gain)")
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(figure, dpi=150)


if __name__ == "__main__":
    main(*sys.argv[1:])
