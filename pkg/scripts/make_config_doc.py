"""Regenerate docs/config.md from the config schema.

Usage: python scripts/make_config_doc.py [docs/config.md]
"""

import sys
from pathlib import Path

from kerrjpa.config import SCHEMA

INTRO = """# Configuration reference

A config file is TOML (or JSON with the same nesting). `schema_version = 1` is required;
every other key is optional and defaults to the value listed here. Unknown keys and
wrong types are rejected with the dotted field path and, where it can be located,
the source line. Lookup order for the file: `--config PATH`, then `$KERRJPA_CONFIG`,
then the built-in profile `src/kerrjpa/data/default.toml`.

Frequencies are in Hz (cyclic), currents in uA, capacitances in fF, powers in W,
gains and losses in dB. `f_ratio` is f_p/f_c and `p_db` is P_p/P_c in dB.
"""

NOTES = {
    "device": "Resonance: `f0_Hz` if set, else `f_c_Hz` (places omega0 so the critical pump "
    "frequency lands there). Kerr: `kerr_Hz` (K/2pi) if set, else the SQUID array if "
    "`n_squids` and `critical_current_uA` are set, else `kerr_over_gamma`.",
    "distort": "Probe amplitude is sqrt(probe_photons * B) with B = `bandwidth_Hz`, default gamma/pi. "
    "`probe_photons = 0` writes zero signal columns.",
    "squeeze": "`sq_model` is `jpa` (exact steady-state map), `linearized` or `ideal` (area-preserving "
    "squeeze of `ideal_gain_db`). `sq_on = false` is the pump-off control. "
    "`histogram_bins = 0` skips the histogram file.",
    "squeeze.amp": '`kind = "full_jpa"` reads out with a second resonator biased above the LMG at '
    "`f_ratio` with direct gain `gain_db`. `readout_noise` is added noise in quanta at the "
    "amplifier output.",
    "noise_fit": "`data` is the noise CSV (also `--data`). The `init_*` keys are used only when all three are set.",
    "line_budget": "A^I comes from `input_attenuation_db`, or from `probe_out_W`/`probe_in_W` and `g_s_out_db`.",
    "synth_noise": "VTS temperatures are geometric from `t_vts_min_K` to `t_vts_max_K` (`n_vts` points) "
    'at each fridge temperature. `units = "W"` writes `psd_out_W, window_Hz, freq_Hz` columns.',
    "output": "`dir` is overridden by `--out`, `format` by `--format`. JSON-only artifacts (noise fit, "
    "line budget) and the synthetic data CSV are always written.",
}


def _default(t):
    if t.default is None:
        return "*(unset)*"
    if isinstance(t.default, bool):
        return "`true`" if t.default else "`false`"
    return f"`{t.default!r}`"


def _section(schema, prefix, out):
    leaves = [(k, v) for k, v in schema.items() if not isinstance(v, dict)]
    if prefix:
        out += [f"## `[{prefix}]`", ""]
        if prefix in NOTES:
            out += [NOTES[prefix], ""]
        out += ["| key | type | default | notes |", "|---|---|---|---|"]
        for key, t in leaves:
            notes = []
            if t.choices:
                notes.append("one of " + ", ".join(f"`{c}`" for c in t.choices))
            if t.length:
                notes.append(f"{t.length} numbers")
            out.append(f"| `{key}` | {t.kind} | {_default(t)} | {'; '.join(notes)} |")
        out.append("")
    for key, sub in schema.items():
        if isinstance(sub, dict):
            _section(sub, f"{prefix}.{key}" if prefix else key, out)


def main(path="docs/config.md"):
    out = [INTRO]
    _section(SCHEMA, "", out)
    Path(path).write_text("\n".join(out), encoding="utf-8")


if __name__ == "__main__":
    main(*sys.argv[1:])
