"""Command-line front end.

Every subcommand reads one config (``--config``, ``$KERRJPA_CONFIG`` or the
shipped default profile), writes its artifacts into ``--out`` atomically and
finishes with ``manifest.json``.

Exit codes: 0 success, 2 config or input error, 3 numerical error,
4 I/O error.
"""

import argparse
import logging
import sys
import time
import warnings
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .calibration import (
    LineBudget,
    fit_added_noise,
    input_attenuation,
    synth_noise_data,
)
from .config import ConfigError, build_device, hashable_view, load_config
from .constants import HBAR, TWO_PI
from .core import critical_params
from .distortion import (
    deamp_ratio,
    harmonic_ratio,
    optimal_point,
    phasor_sweep,
    scan_deamp_along_contour,
)
from .exceptions import DomainError, NumericalError
from .gain import (
    ABOVE,
    gain_map,
    critical_power_dbm,
    iso_gain_contour,
    iso_gain_pair,
    lmg_points,
    power_cut,
)
from .io import ArtifactWriter, config_hash, read_noise_csv, sha256_file
from .squeezing import (
    AmpModel,
    LossChannel,
    quadrature_histograms,
    squeezing_vs_operating_point,
    squeezing_vs_theta,
)

log = logging.getLogger("kerrjpa")

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL, EXIT_IO = 0, 2, 3, 4

_OP_HEADER = ["f_p_Hz", "f_ratio", "pump_amp", "P_p_W", "p_ratio_db"]


def _op_cols(op):
    return [op.f_p, op.f_ratio, op.pump_amp, op.pump_power, op.p_ratio_db]


def _op_dict(op):
    if op is None:
        return None
    return {
        "f_p_Hz": op.f_p,
        "f_ratio": op.f_ratio,
        "pump_amp": op.pump_amp,
        "P_p_W": op.pump_power,
        "p_ratio_db": op.p_ratio_db,
    }


def _device_dict(dev):
    crit = critical_params(dev)
    return {
        "omega0": dev.omega0,
        "gamma": dev.gamma,
        "kerr": dev.kerr,
        "f0_Hz": dev.f0,
        "critical": {
            "delta_c": crit.delta_c,
            "b_c": crit.b_c,
            "n_c": crit.n_c,
            "f_c_Hz": crit.f_c,
            "P_c_W": crit.P_c,
        },
    }


def _probe(dev, section):
    """Signal probe amplitude sqrt(photons * B) with B defaulting to gamma / pi."""
    bw = section["bandwidth_Hz"] or dev.gamma / np.pi
    return float(np.sqrt(section["probe_photons"] * bw))


def _pick(dev, f_ratio, target, side):
    f_p = f_ratio * critical_params(dev).f_c
    pair = iso_gain_pair(dev, f_p, target)
    if pair is None:
        raise DomainError(f"{target} dB exceeds the maximum gain at f_p/f_c = {f_ratio}")
    return pair[1] if side == ABOVE else pair[0]


# ---------------------------------------------------------------------------
# subcommands; each returns the seeds it used


def cmd_gain_map(cfg, dev, w, threads):
    c = cfg["gain_map"]
    crit = critical_params(dev)
    gm = gain_map(
        dev,
        tuple(c["f_ratio_range"]),
        tuple(c["p_db_range"]),
        c["n_f"],
        c["n_p"],
        c["probe_over_bc"] * crit.b_c,
        c["n_theta"],
        threads,
    )
    rows = []
    for i in range(len(gm.f_p)):
        for j in range(len(gm.P_p)):
            rows.append(
                [gm.f_p[i], gm.f_ratio[i], gm.P_p[j], gm.p_ratio_db[j], gm.gain_db[i, j], gm.bistable_mask[i, j]]
            )
    meta = {"f_c_Hz": f"{crit.f_c:.17g}", "P_c_W": f"{crit.P_c:.17g}", "probe_amp": f"{gm.probe_amp:.17g}"}
    w.csv("gainmap.csv", ["f_p_Hz", "f_ratio", "P_p_W", "p_ratio_db", "gain_db", "bistable"], rows, meta)
    best = gm.max_cell() if np.isfinite(gm.gain_db).any() else None
    w.json(
        "gainmap.json",
        {
            "device": _device_dict(dev),
            "f_p_Hz": gm.f_p,
            "f_ratio": gm.f_ratio,
            "P_p_W": gm.P_p,
            "p_ratio_db": gm.p_ratio_db,
            "gain_db": gm.gain_db,
            "bistable_mask": gm.bistable_mask,
            "probe_amp": gm.probe_amp,
            "n_theta": gm.n_theta,
            "max_cell": None if best is None else {"i_f": best[0], "i_p": best[1], "gain_db": best[2]},
        },
    )
    log.info("gain map %dx%d, max %.2f dB", len(gm.f_p), len(gm.P_p), best[2] if best else np.nan)
    return {}


def cmd_lmg(cfg, dev, w, threads):
    c = cfg["lmg"]
    pts = lmg_points(
        dev, tuple(c["f_ratio_range"]), c["n_f"], c["probe_over_bc"] * critical_params(dev).b_c, c["n_theta"], threads
    )
    rows = [_op_cols(p.op) + [p.gain_db, p.power_slope_db] for p in pts]
    w.csv("lmg.csv", _OP_HEADER + ["gain_db", "power_slope_db_per_pct"], rows)
    w.json(
        "lmg.json",
        {
            "device": _device_dict(dev),
            "points": [dict(_op_dict(p.op), gain_db=p.gain_db, power_slope_db_per_pct=p.power_slope_db) for p in pts],
        },
    )
    return {}


def _contour(cfg, dev, section, threads):
    c = cfg[section]
    probe = c["probe_over_bc"] * critical_params(dev).b_c if "probe_over_bc" in c else None
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        contour = iso_gain_contour(
            dev, c["target_gain_db"], tuple(c["f_ratio_range"]), c["n_f"], probe, c["n_theta"], threads
        )
    for msg in caught:
        log.warning("%s", msg.message)
    if not contour.points:
        raise DomainError(f"{c['target_gain_db']} dB is above the maximum gain at every pump frequency")
    return contour


def cmd_contour(cfg, dev, w, threads):
    contour = _contour(cfg, dev, "contour", threads)
    rows = [[k, s] + _op_cols(p) + [g] for k, (p, s, g) in enumerate(zip(contour.points, contour.sides, contour.gains_db))]
    meta = {"target_gain_db": contour.target_gain_db}
    w.csv("contour.csv", ["index", "side"] + _OP_HEADER + ["gain_db"], rows, meta)
    w.json(
        "contour.json",
        {
            "device": _device_dict(dev),
            "target_gain_db": contour.target_gain_db,
            "points": [
                dict(_op_dict(p), side=s, gain_db=g)
                for p, s, g in zip(contour.points, contour.sides, contour.gains_db)
            ],
            "omitted_f_p_Hz": contour.omitted_f_p,
        },
    )
    return {}


def cmd_distort(cfg, dev, w, threads):
    c = cfg["distort"]
    probe = _probe(dev, c)
    sweep_rows, deamp_rows, series = [], [], []
    for k, target in enumerate(c["gains_db"]):
        op, gain = _pick(dev, c["f_ratio"], target, c["side"])
        sweep = phasor_sweep(op, dev, probe, c["n_theta"])
        for t, zi, zo in zip(sweep.theta, sweep.input_points, sweep.output_points):
            sweep_rows.append([k, target, t, zi.real, zi.imag, zo.real, zo.imag])
        if probe > 0:
            res = deamp_ratio(op, dev, probe, c["n_theta"], axis=c["axis"], side=c["side"])
            ratio, angle = res.ratio_db, res.frame.angle
            harm = harmonic_ratio(sweep, c["harmonic"])
        else:
            ratio = angle = harm = float("nan")
        deamp_rows.append([k, target] + _op_cols(op) + [gain, ratio, harm, angle])
        series.append(
            dict(_op_dict(op), sweep=k, gain_target_db=target, gain_db=gain, ratio_db=ratio,
                 harmonic_ratio=harm, minor_axis_angle=angle)
        )
    meta = {"probe_amp": f"{probe:.17g}", "side": c["side"]}
    w.csv("sweeps.csv", ["sweep", "gain_target_db", "theta", "I_in", "Q_in", "I", "Q"], sweep_rows, meta)
    w.csv(
        "deamp.csv",
        ["sweep", "gain_target_db"] + _OP_HEADER + ["gain_db", "ratio_db", f"harmonic{c['harmonic']}_ratio", "minor_axis_angle"],
        deamp_rows,
        meta,
    )
    w.json("distort.json", {"device": _device_dict(dev), "probe_amp": probe, "axis": c["axis"], "series": series})
    return {}


def cmd_deamp_scan(cfg, dev, w, threads):
    c = cfg["deamp_scan"]
    contour = _contour(cfg, dev, "deamp_scan", threads)
    probe = _probe(dev, c)
    results = scan_deamp_along_contour(contour, dev, probe, c["n_theta"], threads)
    rows = [[k, r.side] + _op_cols(r.op) + [r.gain_db, r.ratio_db] for k, r in enumerate(results)]
    meta = {"target_gain_db": contour.target_gain_db, "probe_amp": f"{probe:.17g}"}
    w.csv("deamp_scan.csv", ["index", "side"] + _OP_HEADER + ["gain_db", "ratio_db"], rows, meta)
    w.json(
        "deamp_scan.json",
        {
            "device": _device_dict(dev),
            "target_gain_db": contour.target_gain_db,
            "probe_amp": probe,
            "points": [dict(_op_dict(r.op), side=r.side, gain_db=r.gain_db, ratio_db=r.ratio_db) for r in results],
        },
    )
    return {}


def cmd_optimal_point(cfg, dev, w, threads):
    c = cfg["optimal_point"]
    probe = _probe(dev, c)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        op, res = optimal_point(
            dev, c["gain_targets_db"], tuple(c["f_ratio_range"]), probe, c["n_f"], c["n_theta"], c["refine"], threads
        )
    row = [res.side] + _op_cols(op) + [res.gain_db, res.ratio_db]
    w.csv("optimal_point.csv", ["side"] + _OP_HEADER + ["gain_db", "ratio_db"], [row], {"probe_amp": f"{probe:.17g}"})
    w.json(
        "optimal_point.json",
        {
            "device": _device_dict(dev),
            "probe_amp": probe,
            "gain_targets_db": c["gain_targets_db"],
            "optimum": dict(_op_dict(op), side=res.side, gain_db=res.gain_db, ratio_db=res.ratio_db),
        },
    )
    return {}


def _amp(dev, a):
    if a["kind"] == "ideal_phase_sensitive":
        return AmpModel(kind=a["kind"], gain_db=a["gain_db"], readout_noise=a["readout_noise"])
    op, _ = _pick(dev, a["f_ratio"], a["gain_db"], ABOVE)
    return AmpModel(kind="full_jpa", gain_db=a["gain_db"], op=op, device=dev, readout_noise=a["readout_noise"])


def _amp_dict(amp):
    return {"kind": amp.kind, "gain_db": amp.gain_db, "readout_noise": amp.readout_noise, "op": _op_dict(amp.op)}


def cmd_squeeze(cfg, dev, w, threads):
    c = cfg["squeeze"]
    model, ideal_gain = c["sq_model"], c["ideal_gain_db"]
    f_p = c["f_ratio"] * critical_params(dev).f_c
    if model == "ideal":
        sq_op = None
        if not c["sq_on"]:
            ideal_gain = 0.0
    elif c["sq_on"]:
        sq_op, _ = _pick(dev, c["f_ratio"], c["gain_db"], c["side"])
    else:
        from .gain import OperatingPoint

        sq_op = OperatingPoint.at(dev, f_p, 0.0)
    amp = _amp(dev, c["amp"])
    loss = LossChannel(c["eta_db"])
    kw = {"sq_model": model, "ideal_gain_db": ideal_gain}
    res = squeezing_vs_theta(sq_op, dev, loss, amp, c["n_samples"], c["n_theta"], c["seed"], threads=threads, **kw)
    rows = list(zip(res.theta, res.S_db, res.stderr_db, res.predicted_db))
    meta = {"seed": c["seed"], "n_samples": c["n_samples"], "eta_db": c["eta_db"]}
    w.csv("squeeze.csv", ["theta", "S_db", "stderr_db", "predicted_db"], rows, meta)
    if c["histogram_bins"] > 0:
        theta, edges, on, off = quadrature_histograms(
            sq_op, dev, loss, amp, c["histogram_samples"], c["n_theta"], c["seed"], c["histogram_bins"], **kw
        )
        hrows = [
            [t, edges[b], edges[b + 1], on[k, b], off[k, b]]
            for k, t in enumerate(theta)
            for b in range(len(edges) - 1)
        ]
        w.csv("squeeze_hist.csv", ["theta", "bin_lo", "bin_hi", "count_on", "count_off"], hrows, meta)
    w.json(
        "squeeze.json",
        {
            "device": _device_dict(dev),
            "sq_model": model,
            "sq_on": c["sq_on"],
            "sq_op": _op_dict(sq_op),
            "amp": _amp_dict(amp),
            "eta_db": c["eta_db"],
            "loss_floor_db": res.loss_floor_db,
            "min_S_db": res.min_S_db,
            "min_stderr_db": res.min_stderr_db,
            "theta_min": float(res.theta[res.argmin]),
            "theta": res.theta,
            "S_db": res.S_db,
            "stderr_db": res.stderr_db,
            "predicted_db": res.predicted_db,
        },
    )
    log.info("min S = %.3f +/- %.3f dB", res.min_S_db, res.min_stderr_db)
    return {"squeeze": c["seed"]}


def cmd_squeeze_scan(cfg, dev, w, threads):
    c = cfg["squeeze_scan"]
    pts, sides, gains = power_cut(dev, c["f_ratio"], c["gains_db"], include_lmg=c["include_lmg"])
    amp = _amp(dev, c["amp"])
    results = squeezing_vs_operating_point(
        pts, dev, LossChannel(c["eta_db"]), amp, sides, c["n_samples"], c["n_theta"], c["seed"], threads=threads
    )
    rows, points = [], []
    for k, (op, side, g, r) in enumerate(zip(pts, sides, gains, results)):
        pred = float(np.min(r.predicted_db))
        rows.append([k, side] + _op_cols(op) + [g, r.min_S_db, r.min_stderr_db, r.theta[r.argmin], pred])
        points.append(
            dict(_op_dict(op), side=side, gain_db=g, min_S_db=r.min_S_db, stderr_db=r.min_stderr_db,
                 theta_min=r.theta[r.argmin], predicted_min_db=pred)
        )
    header = ["index", "side"] + _OP_HEADER + ["gain_db", "min_S_db", "stderr_db", "theta_min", "predicted_min_db"]
    w.csv("squeeze_scan.csv", header, rows, {"seed": c["seed"], "eta_db": c["eta_db"]})
    w.json("squeeze_scan.json", {"device": _device_dict(dev), "amp": _amp_dict(amp), "eta_db": c["eta_db"], "points": points})
    return {"squeeze_scan": c["seed"]}


def cmd_noise_fit(cfg, dev, w, threads, data=None):
    c = cfg["noise_fit"]
    path = data or c["data"]
    if path is None:
        raise ConfigError("no noise data file (use --data or noise_fit.data)", "noise_fit.data")
    samples, freq = read_noise_csv(path)
    omega = TWO_PI * (freq or c["freq_Hz"])
    init = None
    if all(c[k] is not None for k in ("init_n_add", "init_lambda", "init_chain_gain_db")):
        init = {"n_add": c["init_n_add"], "lambda": c["init_lambda"], "chain_gain_db": c["init_chain_gain_db"]}
    fit = fit_added_noise(samples, omega, init, c["max_nfev"])
    names = ["chain_gain_db", "lambda", "n_add"]
    w.json(
        "noise_fit.json",
        {
            "data_sha256": sha256_file(path),
            "n_samples": len(samples),
            "freq_Hz": omega / TWO_PI,
            "params": fit.params,
            "uncertainties": fit.uncertainties,
            "covariance": {"order": names, "matrix": fit.covariance},
            "condition_number": fit.condition_number,
            "residual_rms": fit.residual_rms,
            "n_iter": fit.n_iter,
            "flags": fit.flags,
        },
        force=True,
    )
    rows = [[n, fit.params[n], fit.uncertainties[n]] for n in names]
    w.csv("noise_fit.csv", ["parameter", "value", "stderr"], rows)
    log.info("N_add = %.5f, lambda = %.4f", fit.n_add, fit.lam)
    return {}


def cmd_line_budget(cfg, dev, w, threads):
    c = cfg["line_budget"]
    a_in = c["input_attenuation_db"]
    if a_in is None and c["probe_out_W"] is not None and c["probe_in_W"] is not None:
        a_in = input_attenuation(c["probe_out_W"], c["probe_in_W"], c["g_s_out_db"])
    lb = LineBudget.from_gains(c["g_a_out_db"], c["g_s_out_db"], a_in, c["sigma_a_db"], c["sigma_s_db"])
    crit = critical_params(dev)
    w.json(
        "line_budget.json",
        {
            "g_a_out_db": lb.g_a_out,
            "g_s_out_db": lb.g_s_out,
            "eta_db": lb.eta_db,
            "eta_sigma_db": lb.eta_sigma_db,
            "input_attenuation_db": lb.a_in,
            "P_c_W": crit.P_c,
            "P_c": critical_power_dbm(dev, a_in),
            "f_c_Hz": crit.f_c,
        },
        force=True,
    )
    return {}


def cmd_synth_noise(cfg, dev, w, threads):
    c = cfg["synth_noise"]
    omega = TWO_PI * c["freq_Hz"]
    t_vts = np.geomspace(c["t_vts_min_K"], c["t_vts_max_K"], c["n_vts"])
    params = {"n_add": c["n_add"], "lambda": c["lambda"], "chain_gain_db": c["chain_gain_db"]}
    data = synth_noise_data(params, t_vts, c["t_fridge_K"], c["seed"], c["noise_frac"], omega)
    meta = {"seed": c["seed"], "n_add": c["n_add"], "lambda": c["lambda"], "chain_gain_db": c["chain_gain_db"]}
    if c["units"] == "W":
        scale = HBAR * omega * c["window_Hz"]
        rows = [[d.T_vts, d.T_fridge, d.psd_out * scale, c["window_Hz"], c["freq_Hz"]] for d in data]
        header = ["T_vts_K", "T_fridge_K", "psd_out_W", "window_Hz", "freq_Hz"]
    else:
        rows = [[d.T_vts, d.T_fridge, d.psd_out] for d in data]
        header = ["T_vts_K", "T_fridge_K", "psd_out_quanta"]
    w.csv("noise_data.csv", header, rows, meta, force=True)
    return {"synth_noise": c["seed"]}


COMMANDS = {
    "gain-map": (cmd_gain_map, "direct-gain map over pump frequency and power"),
    "lmg": (cmd_lmg, "line of maximum gain"),
    "contour": (cmd_contour, "iso-gain contour on both sides of the LMG"),
    "distort": (cmd_distort, "finite-probe phasor sweeps and deamplification"),
    "deamp-scan": (cmd_deamp_scan, "deamplification ratio along an iso-gain contour"),
    "optimal-point": (cmd_optimal_point, "operating point of least deamplification ratio"),
    "squeeze": (cmd_squeeze, "squeezing S(theta) with loss and phase-sensitive readout"),
    "squeeze-scan": (cmd_squeeze_scan, "minimum squeezing along a fixed-frequency power cut"),
    "noise-fit": (cmd_noise_fit, "fit N_add, lambda and chain gain to noise data"),
    "line-budget": (cmd_line_budget, "transport loss and critical power reference planes"),
    "synth-noise": (cmd_synth_noise, "synthetic calibration noise data"),
}

_SEEDED = {"squeeze": "squeeze", "squeeze-scan": "squeeze_scan", "synth-noise": "synth_noise"}


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="config file (TOML or JSON); default $KERRJPA_CONFIG or built-in")
    common.add_argument("--out", type=Path, help="output directory (overrides output.dir)")
    common.add_argument("--seed", type=int, help="random seed (overrides the config seed)")
    common.add_argument("--format", choices=("csv", "json", "both"), help="artifact formats")
    common.add_argument("--threads", type=int, default=1, help="worker threads (results do not depend on it)")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="kerrjpa", description="Kerr parametric amplifier simulator.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")
    for name, (_, text) in COMMANDS.items():
        p = sub.add_parser(name, parents=[common], help=text, description=text)
        if name == "noise-fit":
            p.add_argument("--data", type=Path, help="noise CSV (overrides noise_fit.data)")
    return parser


def run(args):
    cfg = load_config(args.config)
    if args.seed is not None:
        if args.seed < 0:
            raise ConfigError("seed must be non-negative", "--seed")
        for section in _SEEDED.values():
            cfg[section]["seed"] = args.seed
    if args.format is not None:
        cfg["output"]["format"] = args.format
    if args.out is not None:
        cfg["output"]["dir"] = str(args.out)
    if args.threads < 1:
        raise ConfigError("--threads must be at least 1", "--threads")
    fmt = cfg["output"]["format"]
    formats = ("csv", "json") if fmt == "both" else (fmt,)

    # only the sections this command reads enter the hash
    section = args.command.replace("-", "_")
    view = hashable_view(cfg)
    view = {k: view[k] for k in ("schema_version", "device", section)}
    data = getattr(args, "data", None) or (cfg["noise_fit"]["data"] if section == "noise_fit" else None)
    if data is not None and Path(data).is_file():
        view = dict(view, data_sha256=sha256_file(data))
    w = ArtifactWriter(cfg["output"]["dir"], config_hash(view), formats)

    dev = build_device(cfg["device"])
    started = datetime.now(timezone.utc).isoformat(timespec="seconds")
    t0 = time.perf_counter()
    fn = COMMANDS[args.command][0]
    extra = {"data": args.data} if args.command == "noise-fit" else {}
    seeds = fn(cfg, dev, w, args.threads, **extra)
    w.manifest(args.command, __version__, seeds, round(time.perf_counter() - t0, 3), started)
    return w


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s: %(message)s")
    try:
        w = run(args)
    except DomainError as exc:  # includes ConfigError and malformed data files
        print(f"kerrjpa: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalError as exc:
        print(f"kerrjpa: numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except OSError as exc:
        print(f"kerrjpa: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    print(f"{args.command}: wrote {len(w.checksums)} files to {w.out_dir}")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
