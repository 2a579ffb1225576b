"""Artifact I/O: CSV/JSON writers, atomic file replacement, run manifests and
the noise-data CSV reader."""

import csv
import dataclasses
import hashlib
import io
import json
import math
import os
import tempfile
from pathlib import Path

import numpy as np

from .exceptions import DomainError

_NOISE_QUANTA = ("T_vts_K", "T_fridge_K", "psd_out_quanta")
_NOISE_WATTS = ("T_vts_K", "T_fridge_K", "psd_out_W", "window_Hz", "freq_Hz")


class DataFileError(DomainError):
    """Malformed input data file; ``row`` is the 1-based line number."""

    def __init__(self, message, path=None, row=None):
        super().__init__(message)
        self.path = path
        self.row = row


def atomic_write(path, data):
    """Write ``data`` (str or bytes) to ``path`` via a temp file and rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    if isinstance(data, str):
        data = data.encode("utf-8")
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
            fh.flush()
            os.fsync(fh.fileno())
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def sha256_file(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def _fmt(x):
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return format(float(x), ".17g")
    if x is None:
        return ""
    return str(x)


def csv_text(header, rows, meta=None):
    """CSV text with ``#``-prefixed metadata lines, a header row and LF endings.

    Floats are written with 17 significant digits so values round-trip.
    """
    buf = io.StringIO()
    for key, value in (meta or {}).items():
        buf.write(f"# {key}={value}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def to_jsonable(obj):
    """Convert dataclasses, numpy arrays and scalars to plain JSON types.

    Non-finite floats become ``None`` (JSON has no NaN); complex numbers are
    ``[re, im]`` pairs.
    """
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        return {f.name: to_jsonable(getattr(obj, f.name)) for f in dataclasses.fields(obj)}
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_jsonable(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else None
    if isinstance(obj, (complex, np.complexfloating)):
        return [to_jsonable(obj.real), to_jsonable(obj.imag)]
    if isinstance(obj, Path):
        return str(obj)
    return obj


def json_text(payload):
    return json.dumps(to_jsonable(payload), indent=2, sort_keys=True, allow_nan=False) + "\n"


def config_hash(config):
    """sha256 of the canonical JSON encoding of a config mapping."""
    canon = json.dumps(to_jsonable(config), sort_keys=True, separators=(",", ":"), allow_nan=False)
    return hashlib.sha256(canon.encode("utf-8")).hexdigest()


class ArtifactWriter:
    """Collects the outputs of one run and writes them plus a manifest.

    Every file is written atomically; checksums are recorded for the
    manifest, which is written last.
    """

    def __init__(self, out_dir, cfg_hash, formats=("csv", "json")):
        self.out_dir = Path(out_dir)
        self.cfg_hash = cfg_hash
        self.formats = tuple(formats)
        self.checksums = {}

    def _record(self, name, text):
        path = atomic_write(self.out_dir / name, text)
        self.checksums[name] = sha256_file(path)
        return path

    def csv(self, name, header, rows, meta=None, force=False):
        if "csv" not in self.formats and not force:
            return None
        head = {"config_hash": self.cfg_hash}
        head.update(meta or {})
        return self._record(name, csv_text(header, rows, head))

    def json(self, name, payload, force=False):
        if "json" not in self.formats and not force:
            return None
        body = {"config_hash": self.cfg_hash}
        body.update(payload)
        return self._record(name, json_text(body))

    def manifest(self, command, version, seeds, wall_clock_s, started_utc):
        m = {
            "command": command,
            "config_hash": self.cfg_hash,
            "tool_version": version,
            "seeds": seeds,
            "wall_clock_s": wall_clock_s,
            "started_utc": started_utc,
            "outputs": dict(sorted(self.checksums.items())),
        }
        return atomic_write(self.out_dir / "manifest.json", json_text(m))


def read_noise_csv(path):
    """Read noise samples from CSV.

    Columns are either ``T_vts_K, T_fridge_K, psd_out_quanta`` or
    ``T_vts_K, T_fridge_K, psd_out_W, window_Hz, freq_Hz``; in the latter
    case the power is converted to quanta as ``P / (hbar omega W)``.
    Lines starting with ``#`` are skipped.

    Returns
    -------
    samples : list of NoiseSample
    freq_hz : float or None
        Measurement frequency if the file carries it (must be unique).

    Raises
    ------
    DataFileError
        Naming the offending line for malformed rows.
    """
    from .calibration import NoiseSample
    from .constants import HBAR, TWO_PI

    path = Path(path)
    with open(path, encoding="utf-8", newline="") as fh:
        lines = fh.read().splitlines()
    body = [(i + 1, ln) for i, ln in enumerate(lines) if ln.strip() and not ln.lstrip().startswith("#")]
    if not body:
        raise DataFileError(f"{path}: no header row", path, None)
    head_line, head = body[0]
    header = [h.strip() for h in next(csv.reader([head]))]
    if set(_NOISE_QUANTA) <= set(header):
        cols, watts = _NOISE_QUANTA, False
    elif set(_NOISE_WATTS) <= set(header):
        cols, watts = _NOISE_WATTS, True
    else:
        raise DataFileError(
            f"{path}:{head_line}: header must contain {', '.join(_NOISE_QUANTA)} "
            f"or {', '.join(_NOISE_WATTS)}; got {', '.join(header)}",
            path,
            head_line,
        )
    idx = [header.index(c) for c in cols]
    samples, freqs = [], set()
    for lineno, text in body[1:]:
        fields = next(csv.reader([text]))
        if len(fields) != len(header):
            raise DataFileError(
                f"{path}:{lineno}: expected {len(header)} fields, got {len(fields)}", path, lineno
            )
        try:
            vals = [float(fields[k]) for k in idx]
        except ValueError as exc:
            raise DataFileError(f"{path}:{lineno}: {exc}", path, lineno) from None
        if not all(math.isfinite(v) and v > 0 for v in vals):
            raise DataFileError(f"{path}:{lineno}: values must be finite and positive", path, lineno)
        if watts:
            t_v, t_f, p, window, f = vals
            psd = p / (HBAR * TWO_PI * f * window)
            freqs.add(f)
        else:
            t_v, t_f, psd = vals
        samples.append(NoiseSample(t_v, t_f, psd))
    if not samples:
        raise DataFileError(f"{path}: no data rows", path, None)
    if len(freqs) > 1:
        raise DataFileError(f"{path}: freq_Hz must be the same on every row", path, None)
    return samples, (freqs.pop() if freqs else None)


def read_csv(path):
    """Read an artifact CSV into ``(meta, columns)``.

    ``meta`` holds the ``# key=value`` comment lines; ``columns`` maps each
    header name to a numpy array (float where every entry parses, else str).
    """
    meta, body = {}, []
    with open(path, encoding="utf-8", newline="") as fh:
        for line in fh:
            if line.startswith("#"):
                key, _, value = line[1:].strip().partition("=")
                meta[key.strip()] = value
            elif line.strip():
                body.append(line)
    reader = csv.reader(body)
    header = next(reader)
    rows = list(reader)
    columns = {}
    for k, name in enumerate(header):
        raw = [r[k] for r in rows]
        try:
            columns[name] = np.array([float(v) for v in raw])
        except ValueError:
            columns[name] = np.array(raw)
    return meta, columns
