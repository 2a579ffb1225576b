"""Experiment configuration: schema, defaults, loading and validation.

A config is a TOML file (or JSON with the same structure) carrying
``schema_version = 1``, a ``[device]`` table, one table per subcommand and an
``[output]`` table.  Unknown keys are rejected; missing keys take the
defaults in :data:`SCHEMA`.  See ``docs/config.md`` for the field reference.
"""

import copy
import json
import os
import re
from pathlib import Path

import numpy as np

try:  # Python >= 3.11
    import tomllib
except ModuleNotFoundError:  # pragma: no cover
    import tomli as tomllib

from .constants import TWO_PI
from .core import DeviceParams, SquidGeometry, kerr_constant
from .exceptions import DomainError

SCHEMA_VERSION = 1
ENV_VAR = "KERRJPA_CONFIG"
DEFAULT_PROFILE = Path(__file__).parent / "data" / "default.toml"


class ConfigError(DomainError):
    """Invalid configuration; ``field`` is the dotted path, ``line`` the source line."""

    def __init__(self, message, field=None, line=None, source=None):
        loc = ""
        if source is not None:
            loc = f"{source}:{line}: " if line else f"{source}: "
        where = f"[{field}] " if field else ""
        super().__init__(f"{loc}{where}{message}")
        self.field = field
        self.line = line
        self.source = source


class _T:
    """Leaf type descriptor."""

    def __init__(self, kind, default, optional=False, choices=None, length=None, check=None):
        self.kind = kind
        self.default = default
        self.optional = optional
        self.choices = choices
        self.length = length
        self.check = check


def _pos(x):
    return x > 0


def _nonneg(x):
    return x >= 0


AMP_SCHEMA = {
    "kind": _T("str", "ideal_phase_sensitive", choices=("ideal_phase_sensitive", "full_jpa")),
    "gain_db": _T("float", 25.0, check=_pos),
    "readout_noise": _T("float", 0.0, check=_nonneg),
    # full_jpa only: operating point of the readout resonator (same device)
    "f_ratio": _T("float", 1.0015, check=_pos),
}

SCHEMA = {
    "schema_version": _T("int", SCHEMA_VERSION),
    "device": {
        "gamma_Hz": _T("float", 54.5e6, check=_pos),
        "f0_Hz": _T("float", None, optional=True, check=_pos),
        "f_c_Hz": _T("float", 7.0032e9, check=_pos),
        "kerr_over_gamma": _T("float", -8.3e-4),
        "kerr_Hz": _T("float", None, optional=True),
        "squid": {
            "n_squids": _T("int", None, optional=True, check=_pos),
            "critical_current_uA": _T("float", None, optional=True, check=_pos),
            "capacitance_fF": _T("float", None, optional=True, check=_pos),
            "coupling_capacitance_fF": _T("float", None, optional=True, check=_pos),
        },
    },
    "gain_map": {
        "f_ratio_range": _T("floats", [0.999, 1.004], length=2),
        "p_db_range": _T("floats", [-6.0, 3.0], length=2),
        "n_f": _T("int", 201, check=_pos),
        "n_p": _T("int", 201, check=_pos),
        "probe_over_bc": _T("float", 1e-4, check=_pos),
        "n_theta": _T("int", 360, check=lambda n: n >= 8),
    },
    "lmg": {
        "f_ratio_range": _T("floats", [1.0005, 1.004], length=2),
        "n_f": _T("int", 11, check=_pos),
        "probe_over_bc": _T("float", 1e-4, check=_pos),
        "n_theta": _T("int", 360, check=lambda n: n >= 8),
    },
    "contour": {
        "target_gain_db": _T("float", 8.0),
        "f_ratio_range": _T("floats", [1.0005, 1.004], length=2),
        "n_f": _T("int", 11, check=_pos),
        "probe_over_bc": _T("float", 1e-4, check=_pos),
        "n_theta": _T("int", 360, check=lambda n: n >= 8),
    },
    "distort": {
        "f_ratio": _T("float", 1.0015, check=_pos),
        "gains_db": _T("floats", [6.0, 9.5, 13.0]),
        "side": _T("str", "above_LMG", choices=("below_LMG", "above_LMG")),
        "probe_photons": _T("float", 0.5, check=_nonneg),
        "bandwidth_Hz": _T("float", None, optional=True, check=_pos),
        "n_theta": _T("int", 360, check=lambda n: n >= 8),
        "axis": _T("str", "output", choices=("output", "linearized")),
        "harmonic": _T("int", 3, check=lambda n: n >= 2),
    },
    "deamp_scan": {
        "target_gain_db": _T("float", 8.0),
        "f_ratio_range": _T("floats", [1.0005, 1.004], length=2),
        "n_f": _T("int", 11, check=_pos),
        "probe_photons": _T("float", 0.5, check=_pos),
        "bandwidth_Hz": _T("float", None, optional=True, check=_pos),
        "n_theta": _T("int", 360, check=lambda n: n >= 8),
    },
    "optimal_point": {
        "gain_targets_db": _T("floats", [6.0, 7.0, 8.0, 9.0, 10.0, 11.0, 12.0, 13.0]),
        "f_ratio_range": _T("floats", [1.0005, 1.004], length=2),
        "n_f": _T("int", 8, check=_pos),
        "probe_photons": _T("float", 0.5, check=_pos),
        "bandwidth_Hz": _T("float", None, optional=True, check=_pos),
        "n_theta": _T("int", 360, check=lambda n: n >= 8),
        "refine": _T("bool", True),
    },
    "squeeze": {
        "f_ratio": _T("float", 1.0015, check=_pos),
        "gain_db": _T("float", 8.0),
        "side": _T("str", "above_LMG", choices=("below_LMG", "above_LMG")),
        "sq_on": _T("bool", True),
        "sq_model": _T("str", "jpa", choices=("jpa", "linearized", "ideal")),
        "ideal_gain_db": _T("float", 50.0, check=_pos),
        "eta_db": _T("float", 1.2, check=_nonneg),
        "n_samples": _T("int", 100_000, check=lambda n: n >= 1000),
        "n_theta": _T("int", 64, check=lambda n: n >= 4),
        "seed": _T("int", 0, check=_nonneg),
        "histogram_bins": _T("int", 64, check=_nonneg),
        "histogram_samples": _T("int", 20_000, check=lambda n: n >= 1000),
        "amp": AMP_SCHEMA,
    },
    "squeeze_scan": {
        "f_ratio": _T("float", 1.0015, check=_pos),
        "gains_db": _T("floats", [8.0, 10.0, 12.0, 14.0, 16.0, 18.0]),
        "include_lmg": _T("bool", True),
        "eta_db": _T("float", 1.2, check=_nonneg),
        "n_samples": _T("int", 100_000, check=lambda n: n >= 1000),
        "n_theta": _T("int", 64, check=lambda n: n >= 4),
        "seed": _T("int", 0, check=_nonneg),
        "amp": AMP_SCHEMA,
    },
    "noise_fit": {
        "data": _T("str", None, optional=True),
        "freq_Hz": _T("float", 7.0e9, check=_pos),
        "init_n_add": _T("float", None, optional=True),
        "init_lambda": _T("float", None, optional=True),
        "init_chain_gain_db": _T("float", None, optional=True),
        "max_nfev": _T("int", 200, check=_pos),
    },
    "line_budget": {
        "g_a_out_db": _T("float", 76.5),
        "g_s_out_db": _T("float", 75.3),
        "sigma_a_db": _T("float", None, optional=True, check=_nonneg),
        "sigma_s_db": _T("float", None, optional=True, check=_nonneg),
        "input_attenuation_db": _T("float", None, optional=True),
        "probe_out_W": _T("float", None, optional=True, check=_pos),
        "probe_in_W": _T("float", None, optional=True, check=_pos),
    },
    "synth_noise": {
        "n_add": _T("float", 0.045, check=_nonneg),
        "lambda": _T("float", 0.79, check=lambda x: 0 <= x <= 1),
        "chain_gain_db": _T("float", 100.3),
        "t_vts_min_K": _T("float", 0.02, check=_pos),
        "t_vts_max_K": _T("float", 1.0, check=_pos),
        "n_vts": _T("int", 300, check=_pos),
        "t_fridge_K": _T("floats", [0.05, 0.3, 0.5]),
        "noise_frac": _T("float", 0.005, check=_nonneg),
        "seed": _T("int", 0, check=_nonneg),
        "freq_Hz": _T("float", 7.0e9, check=_pos),
        "units": _T("str", "quanta", choices=("quanta", "W")),
        "window_Hz": _T("float", 500e3, check=_pos),
    },
    "output": {
        "dir": _T("str", "out"),
        "format": _T("str", "both", choices=("csv", "json", "both")),
    },
}

# sections that do not influence artifact contents (excluded from the hash)
_UNHASHED = ("output",)


def defaults(schema=SCHEMA):
    """Nested dict of default values."""
    return {k: defaults(v) if isinstance(v, dict) else copy.deepcopy(v.default) for k, v in schema.items()}


def _find_line(text, path):
    """Best-effort source line of the last key in ``path`` (TOML or JSON)."""
    if text is None:
        return None
    key = re.escape(path[-1])
    pat = re.compile(rf'^\s*(?:"{key}"|{key})\s*[=:]|^\s*\[\s*(?:[\w.]*\.)?{key}\s*\]', re.M)
    for m in pat.finditer(text):
        return text.count("\n", 0, m.start()) + 1
    return None


def _coerce(t, value, fpath, err):
    if value is None:
        if t.optional:
            return None
        err("must not be null")
    if t.kind == "bool":
        if not isinstance(value, bool):
            err(f"expected true/false, got {value!r}")
        return value
    if t.kind == "int":
        if isinstance(value, bool) or not isinstance(value, int):
            err(f"expected an integer, got {value!r}")
        out = value
    elif t.kind == "float":
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            err(f"expected a number, got {value!r}")
        out = float(value)
        if not np.isfinite(out):
            err(f"expected a finite number, got {value!r}")
    elif t.kind == "str":
        if not isinstance(value, str):
            err(f"expected a string, got {value!r}")
        out = value
    elif t.kind == "floats":
        if not isinstance(value, list) or not value:
            err(f"expected a non-empty list of numbers, got {value!r}")
        if any(isinstance(v, bool) or not isinstance(v, (int, float)) for v in value):
            err(f"expected a list of numbers, got {value!r}")
        out = [float(v) for v in value]
        if t.length is not None and len(out) != t.length:
            err(f"expected {t.length} numbers, got {len(out)}")
        if not all(np.isfinite(out)):
            err("list entries must be finite")
        if t.check is not None and not all(t.check(v) for v in out):
            err(f"value out of range: {value!r}")
        return out
    else:  # pragma: no cover
        raise AssertionError(t.kind)
    if t.choices is not None and out not in t.choices:
        err(f"must be one of {', '.join(t.choices)}; got {out!r}")
    if t.check is not None and not t.check(out):
        err(f"value out of range: {value!r}")
    return out


def validate(raw, text=None, source=None):
    """Merge ``raw`` over the defaults, rejecting unknown keys and bad types."""
    if not isinstance(raw, dict):
        raise ConfigError("top level must be a table", source=source)
    if "schema_version" not in raw:
        raise ConfigError("missing schema_version", "schema_version", source=source)
    if raw["schema_version"] != SCHEMA_VERSION:
        raise ConfigError(
            f"unsupported schema_version {raw['schema_version']!r} (expected {SCHEMA_VERSION})",
            "schema_version",
            _find_line(text, ["schema_version"]),
            source,
        )

    def walk(schema, node, path):
        out = {}
        for key, value in node.items():
            fpath = path + [key]
            if key not in schema:
                raise ConfigError(
                    f"unknown key (allowed: {', '.join(sorted(schema))})",
                    ".".join(fpath),
                    _find_line(text, fpath),
                    source,
                )
            sub = schema[key]
            if isinstance(sub, dict):
                if not isinstance(value, dict):
                    raise ConfigError("expected a table", ".".join(fpath), _find_line(text, fpath), source)
                out[key] = walk(sub, value, fpath)
            else:

                def err(msg, fpath=fpath):
                    raise ConfigError(msg, ".".join(fpath), _find_line(text, fpath), source)

                out[key] = _coerce(sub, value, fpath, err)
        for key, sub in schema.items():
            if key not in out:
                out[key] = defaults(sub) if isinstance(sub, dict) else copy.deepcopy(sub.default)
        return out

    cfg = walk(SCHEMA, raw, [])
    for name in ("gain_map", "lmg", "contour", "deamp_scan", "optimal_point"):
        lo, hi = cfg[name]["f_ratio_range"]
        if not lo <= hi:
            raise ConfigError(
                "range must be ordered (low, high)",
                f"{name}.f_ratio_range",
                _find_line(text, [name, "f_ratio_range"]),
                source,
            )
    return cfg


def parse_text(text, fmt, source=None):
    """Parse TOML or JSON text into a raw mapping, with line numbers on syntax errors."""
    if fmt == "json":
        try:
            return json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"invalid JSON: {exc.msg}", line=exc.lineno, source=source) from None
    try:
        return tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        m = re.search(r"line (\d+)", str(exc))
        raise ConfigError(f"invalid TOML: {exc}", line=int(m.group(1)) if m else None, source=source) from None


def load_config(path=None):
    """Load and validate a config file.

    With ``path=None`` the file named by ``$KERRJPA_CONFIG`` is used, and
    failing that the shipped default profile.
    """
    if path is None:
        path = os.environ.get(ENV_VAR) or DEFAULT_PROFILE
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    fmt = "json" if path.suffix.lower() == ".json" else "toml"
    return validate(parse_text(text, fmt, str(path)), text, str(path))


def hashable_view(cfg):
    """The part of a config that determines artifact contents."""
    return {k: v for k, v in cfg.items() if k not in _UNHASHED}


def build_device(dev):
    """DeviceParams from the ``[device]`` table (frequencies in Hz, current in uA).

    The Kerr constant comes from ``kerr_Hz`` if set, else from the SQUID
    geometry if ``n_squids`` and ``critical_current_uA`` are set, else from
    ``kerr_over_gamma``.  The resonance comes from ``f0_Hz`` if set, else
    from ``f_c_Hz``.
    """
    gamma = TWO_PI * dev["gamma_Hz"]
    sq = dev["squid"]
    geometry = None
    if sq["n_squids"] is not None and sq["critical_current_uA"] is not None:
        geometry = SquidGeometry(
            sq["n_squids"],
            sq["critical_current_uA"] * 1e-6,
            None if sq["capacitance_fF"] is None else sq["capacitance_fF"] * 1e-15,
            None if sq["coupling_capacitance_fF"] is None else sq["coupling_capacitance_fF"] * 1e-15,
        )
    elif (sq["n_squids"] is None) != (sq["critical_current_uA"] is None):
        raise ConfigError("n_squids and critical_current_uA must be given together", "device.squid")

    def kerr_for(omega0):
        if dev["kerr_Hz"] is not None:
            return TWO_PI * dev["kerr_Hz"]
        if geometry is not None:
            return kerr_constant(geometry, omega0)
        return dev["kerr_over_gamma"] * gamma

    if dev["f0_Hz"] is not None:
        omega0 = TWO_PI * dev["f0_Hz"]
    else:
        # omega0 depends on K and, for a SQUID-derived K, K depends on omega0
        kerr = kerr_for(TWO_PI * dev["f_c_Hz"])
        for _ in range(50):
            omega0 = TWO_PI * dev["f_c_Hz"] - np.sign(kerr) * np.sqrt(3) * gamma
            k_new = kerr_for(omega0)
            if k_new == kerr:
                break
            kerr = k_new
    kerr = kerr_for(omega0)
    if kerr == 0:
        raise ConfigError("Kerr constant must be nonzero", "device.kerr_over_gamma")
    return DeviceParams(omega0=omega0, gamma=gamma, kerr=kerr, squid=None if dev["kerr_Hz"] is not None else geometry)
