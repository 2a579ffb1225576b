"""Direct gain, gain maps, line of maximum gain (LMG) and iso-gain contours."""

import logging
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize

from .constants import HBAR, TWO_PI, from_db, to_db, watts_to_dbm
from .core import critical_params, linearize, photon_number, reflection, steady_output
from .exceptions import BistableError, DomainError, NumericalError

logger = logging.getLogger(__name__)

DEFAULT_PROBE_OVER_BC = 1e-4
DEFAULT_N_THETA = 360
DIVERGENCE_THRESHOLD_DB = 40.0
GAIN_TOL_DB = 1e-4
AMP_RTOL = 1e-9

BELOW = "below_LMG"
ON = "on_LMG"
ABOVE = "above_LMG"


@dataclass(frozen=True)
class OperatingPoint:
    """Pump frequency ``f_p`` (Hz) and real input pump amplitude (sqrt(photons/s)).

    ``f_ratio`` is f_p / f_c and ``p_ratio_db`` is P_p / P_c in dB, where
    P_p = hbar omega_p pump_amp**2.
    """

    f_p: float
    pump_amp: float
    f_ratio: float
    p_ratio_db: float

    @classmethod
    def at(cls, device, f_p, pump_amp):
        if pump_amp < 0:
            raise DomainError("pump amplitude must be non-negative")
        crit = critical_params(device)
        p_ratio = (f_p * pump_amp**2) / (crit.f_c * crit.b_c**2)
        with np.errstate(divide="ignore"):
            p_db = float(to_db(p_ratio))
        return cls(float(f_p), float(pump_amp), float(f_p / crit.f_c), p_db)

    @classmethod
    def from_normalized(cls, device, f_ratio, p_ratio_db):
        crit = critical_params(device)
        f_p = f_ratio * crit.f_c
        amp = crit.b_c * np.sqrt(from_db(p_ratio_db) / f_ratio)
        return cls(float(f_p), float(amp), float(f_ratio), float(p_ratio_db))

    def delta(self, device):
        return float(device.omega0 - TWO_PI * self.f_p)

    @property
    def omega_p(self):
        return TWO_PI * self.f_p

    @property
    def pump_power(self):
        """Pump power at the device input (W)."""
        return HBAR * self.omega_p * self.pump_amp**2


def default_probe(device):
    return DEFAULT_PROBE_OVER_BC * critical_params(device).b_c


def uniform_theta(n_theta):
    return TWO_PI * np.arange(n_theta) / n_theta


def _mean_signal_gain(delta, pump_amps, probe_amp, n_theta, device):
    """<G_theta> for each pump amplitude and a bistability flag per pump."""
    pump_amps = np.atleast_1d(np.asarray(pump_amps, dtype=float))
    probe = probe_amp * np.exp(1j * uniform_theta(n_theta))
    b_in = pump_amps[:, None] + probe[None, :]
    n, bist = photon_number(delta, np.abs(b_in) ** 2, device)
    n_p, bist_p = photon_number(delta, pump_amps**2, device)
    out = b_in * reflection(delta + device.kerr * n, device.gamma)
    pump_out = pump_amps * reflection(delta + device.kerr * n_p, device.gamma)
    sig = out - pump_out[:, None]
    g_theta = np.mean(sig.real**2 + sig.imag**2, axis=1) / probe_amp**2
    return g_theta, bist.any(axis=1) | bist_p


def _direct_gain_db(mean_g):
    return to_db((mean_g + 1) / 2)


def _check_probe(pump_amp, probe_amp, n_theta):
    if n_theta < 8:
        raise DomainError("n_theta must be at least 8")
    if not probe_amp > 0:
        raise DomainError("probe amplitude must be positive")
    if pump_amp > 0 and probe_amp > pump_amp:
        raise DomainError(f"probe amplitude {probe_amp} exceeds pump amplitude {pump_amp}")


def direct_gain(op, device, probe_amp=None, n_theta=DEFAULT_N_THETA):
    """Phase-averaged signal power gain (dB) at an operating point.

    ``n_theta`` probe phasors of amplitude ``probe_amp`` are added to the
    pump; the gain is ``10 log10((<G_theta> + 1) / 2)`` where ``G_theta`` is
    the output/input signal power ratio at probe phase ``theta``.
    """
    if probe_amp is None:
        probe_amp = default_probe(device)
    _check_probe(op.pump_amp, probe_amp, n_theta)
    g, bist = _mean_signal_gain(op.delta(device), op.pump_amp, probe_amp, n_theta, device)
    if bist[0]:
        raise BistableError(f"operating point f_p={op.f_p}, pump_amp={op.pump_amp} is bistable")
    return float(_direct_gain_db(g[0]))


def small_signal_gain(op, device):
    """Infinitesimal-probe direct gain |mu|**2 in dB from the analytic linearization."""
    mu, _ = linearize(op.pump_amp, op.delta(device), device)
    return float(to_db(np.abs(mu) ** 2))


# ---------------------------------------------------------------------------
# gain map


@dataclass
class GainMap:
    f_p: np.ndarray
    P_p: np.ndarray
    f_ratio: np.ndarray
    p_ratio_db: np.ndarray
    gain_db: np.ndarray  # shape (len(f_p), len(P_p)); NaN where bistable
    bistable_mask: np.ndarray
    probe_amp: float
    n_theta: int

    def max_cell(self):
        """(i_f, i_p, gain) of the largest finite gain."""
        idx = np.nanargmax(self.gain_db)
        i, j = np.unravel_index(idx, self.gain_db.shape)
        return int(i), int(j), float(self.gain_db[i, j])


def _grid(lo, hi, num):
    if num < 1:
        raise DomainError("grid sizes must be at least 1")
    return np.linspace(lo, hi, num)


def gain_map(
    device,
    f_ratio_range=(0.999, 1.004),
    p_db_range=(-6.0, 3.0),
    n_f=201,
    n_p=201,
    probe_amp=None,
    n_theta=DEFAULT_N_THETA,
    threads=1,
):
    """Direct gain over a (pump frequency, pump power) grid.

    Pump frequencies are given relative to f_c and powers in dB relative to
    P_c.  Bistable cells are masked (gain NaN).
    """
    f_ratio = _grid(*f_ratio_range, n_f)
    p_db = _grid(*p_db_range, n_p)
    if probe_amp is None:
        probe_amp = default_probe(device)

    def column(fr):
        ops = [OperatingPoint.from_normalized(device, fr, pd) for pd in p_db]
        amps = np.array([op.pump_amp for op in ops])
        _check_probe(amps.min(), probe_amp, n_theta)
        g, bist = _mean_signal_gain(ops[0].delta(device), amps, probe_amp, n_theta, device)
        gdb = np.where(bist, np.nan, _direct_gain_db(g))
        return ops[0].f_p, gdb, bist

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            cols = list(pool.map(column, f_ratio))
    else:
        cols = [column(fr) for fr in f_ratio]

    crit = critical_params(device)
    f_p = np.array([c[0] for c in cols])
    P_p = crit.P_c * from_db(p_db)
    return GainMap(
        f_p=f_p,
        P_p=np.atleast_1d(P_p),
        f_ratio=f_ratio,
        p_ratio_db=p_db,
        gain_db=np.array([c[1] for c in cols]),
        bistable_mask=np.array([c[2] for c in cols]),
        probe_amp=float(probe_amp),
        n_theta=n_theta,
    )


def critical_power_dbm(device, input_attenuation_db=None):
    """Critical pump power at the device plane and, given A^I, at the generator.

    A^I is the (negative, in dB) attenuation from generator to device input,
    so the generator-side power is P_c(dBm) - A^I.
    """
    p_dev = float(watts_to_dbm(critical_params(device).P_c))
    report = {"device_plane_dBm": p_dev}
    if input_attenuation_db is not None:
        report["generator_plane_dBm"] = p_dev - input_attenuation_db
    return report


def locate_critical_point(device, threshold_db=DIVERGENCE_THRESHOLD_DB):
    """Critical point, checked against the numerical model.

    The analytic values are verified in two ways: the small-signal gain
    just on the monostable side of (f_c, b_c) exceeds ``threshold_db``, and
    just beyond f_c (onto the bistable side) the drive at the centre of the
    S-curve lands inside the hysteresis region.
    """
    crit = critical_params(device)
    side = np.sign(device.kerr)  # K < 0: monostable for f_p > f_c
    eps = 1e-7
    mono = OperatingPoint.at(device, crit.f_c * (1 - side * eps), crit.b_c)
    g = small_signal_gain(mono, device)
    beyond = device.omega0 - crit.omega_c * (1 + side * 1e-6)
    # inflection of n(|b|^2); the hysteresis window is centred on it
    n_i = -2 * beyond / (3 * device.kerr)
    b_sq = n_i * ((beyond + device.kerr * n_i) ** 2 + device.gamma**2) / (2 * device.gamma)
    _, bist = photon_number(beyond, np.array([b_sq]), device)
    if not (g > threshold_db and bist[0]):
        raise NumericalError(
            f"critical point check failed: gain {g:.1f} dB near f_c, bistable beyond f_c: {bool(bist[0])}"
        )
    logger.debug("critical point verified: %.1f dB at f_c(1%+.0e)", g, -side * eps)
    return crit


# ---------------------------------------------------------------------------
# line of maximum gain


@dataclass(frozen=True)
class LMGPoint:
    op: OperatingPoint
    gain_db: float
    # dG/d(ln P_p) * 0.01: gain change (dB) per 1 % pump power change
    power_slope_db: float


def _gain_vs_amp(device, f_p, probe_amp, n_theta):
    delta = float(device.omega0 - TWO_PI * f_p)

    def g(amps):
        mean_g, bist = _mean_signal_gain(delta, amps, probe_amp, n_theta, device)
        if bist.any():
            raise BistableError(f"bistable pump amplitude at f_p={f_p}")
        return _direct_gain_db(mean_g)

    return g


def lmg_point(device, f_p, probe_amp=None, n_theta=DEFAULT_N_THETA, n_scan=64, amp_max=3.0):
    """Gain-maximizing pump amplitude at one pump frequency.

    A coarse scan over ``[0, amp_max * b_c]`` brackets the maximum, which is
    then refined by golden-section search.
    """
    crit = critical_params(device)
    if np.sign(device.kerr) * (f_p - crit.f_c) >= 0:
        raise DomainError(f"f_p={f_p} is not on the monostable side of f_c={crit.f_c}")
    if probe_amp is None:
        probe_amp = default_probe(device)
    g = _gain_vs_amp(device, f_p, probe_amp, n_theta)

    amps = np.linspace(0.0, amp_max * crit.b_c, n_scan + 1)[1:]
    amps = amps[amps > probe_amp]
    coarse = g(amps)
    k = int(np.argmax(coarse))
    if k == 0 or k == len(amps) - 1:
        raise NumericalError(f"no interior gain maximum at f_p={f_p} in [0, {amp_max} b_c]")

    res = optimize.minimize_scalar(
        lambda a: -g(a)[0],
        bracket=(amps[k - 1], amps[k], amps[k + 1]),
        method="golden",
        tol=AMP_RTOL,
    )
    a_best = float(res.x)
    g_best = float(-res.fun)
    h = 1e-5  # truncation error h**2 G''' / 6 stays far below 0.01 dB even near f_c
    plus, minus = g(np.array([a_best * np.sqrt(1 + h), a_best * np.sqrt(1 - h)]))
    op = OperatingPoint.at(device, f_p, a_best)
    return LMGPoint(op=op, gain_db=g_best, power_slope_db=float(plus - minus) / (2 * h) * 0.01)


def lmg(device, f_ratio_range=(1.0005, 1.004), n_f=11, probe_amp=None, n_theta=DEFAULT_N_THETA, threads=1):
    """Line of maximum gain over a range of pump frequencies (list of OperatingPoint)."""
    return [p.op for p in lmg_points(device, f_ratio_range, n_f, probe_amp, n_theta, threads)]


def lmg_points(device, f_ratio_range=(1.0005, 1.004), n_f=11, probe_amp=None, n_theta=DEFAULT_N_THETA, threads=1):
    crit = critical_params(device)
    f_ps = _grid(*f_ratio_range, n_f) * crit.f_c

    def one(f_p):
        return lmg_point(device, f_p, probe_amp, n_theta)

    return _pmap(one, f_ps, threads)


def _pmap(fn, items, threads):
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(fn, items))
    return [fn(x) for x in items]


# ---------------------------------------------------------------------------
# iso-gain contours


@dataclass
class Contour:
    """Ordered iso-gain contour: below-LMG branch by increasing f_p, then the
    above-LMG branch by decreasing f_p."""

    points: list
    sides: list
    target_gain_db: float
    gains_db: list = field(default_factory=list)
    omitted_f_p: list = field(default_factory=list)

    def __len__(self):
        return len(self.points)

    def branch(self, side):
        return [(p, g) for p, s, g in zip(self.points, self.sides, self.gains_db) if s == side]


def _solve_amp(g, target, lo, hi):
    def f(a):
        return g(np.array([a]))[0] - target

    a = optimize.bisect(f, lo, hi, xtol=AMP_RTOL * hi, rtol=4 * np.finfo(float).eps, maxiter=200)
    return a, g(np.array([a]))[0]


def iso_gain_pair(device, f_p, target_gain_db, probe_amp=None, n_theta=DEFAULT_N_THETA, lmg_pt=None):
    """Below- and above-LMG pump amplitudes with direct gain ``target_gain_db``.

    Returns ``None`` when the target exceeds the maximum gain at ``f_p``.
    """
    if probe_amp is None:
        probe_amp = default_probe(device)
    if lmg_pt is None:
        lmg_pt = lmg_point(device, f_p, probe_amp, n_theta)
    if target_gain_db >= lmg_pt.gain_db:
        return None
    g = _gain_vs_amp(device, f_p, probe_amp, n_theta)
    a_max = lmg_pt.op.pump_amp

    lo = probe_amp
    if g(np.array([lo]))[0] >= target_gain_db:
        raise NumericalError(f"gain at the smallest pump amplitude already exceeds {target_gain_db} dB")
    hi = 2 * a_max
    while g(np.array([hi]))[0] >= target_gain_db:
        hi *= 2
        if hi > 1e3 * a_max:
            raise NumericalError("could not bracket the above-LMG contour point")

    a_below, g_below = _solve_amp(g, target_gain_db, lo, a_max)
    a_above, g_above = _solve_amp(g, target_gain_db, a_max, hi)
    return (
        (OperatingPoint.at(device, f_p, a_below), float(g_below)),
        (OperatingPoint.at(device, f_p, a_above), float(g_above)),
    )


def iso_gain_contour(
    device,
    target_gain_db,
    f_ratio_range=(1.0005, 1.004),
    n_f=11,
    probe_amp=None,
    n_theta=DEFAULT_N_THETA,
    threads=1,
):
    """Contour of constant direct gain on the monostable side of f_c.

    Frequencies where the target exceeds the LMG gain are omitted with a warning.
    """
    crit = critical_params(device)
    f_ps = _grid(*f_ratio_range, n_f) * crit.f_c

    def one(f_p):
        return iso_gain_pair(device, f_p, target_gain_db, probe_amp, n_theta)

    pairs = _pmap(one, f_ps, threads)
    below, above, omitted = [], [], []
    for f_p, pair in zip(f_ps, pairs):
        if pair is None:
            omitted.append(float(f_p))
            continue
        below.append(pair[0])
        above.append(pair[1])
    if omitted:
        warnings.warn(
            f"{target_gain_db} dB exceeds the maximum gain at {len(omitted)} pump frequencies; omitted",
            stacklevel=2,
        )
    ordered = below + above[::-1]
    return Contour(
        points=[p for p, _ in ordered],
        sides=[BELOW] * len(below) + [ABOVE] * len(above),
        target_gain_db=float(target_gain_db),
        gains_db=[g for _, g in ordered],
        omitted_f_p=omitted,
    )


def power_cut(device, f_ratio, gain_levels_db, probe_amp=None, n_theta=DEFAULT_N_THETA, include_lmg=False):
    """Operating points along a fixed-frequency pump-power cut.

    For each gain level, the below- and above-LMG amplitudes are returned,
    ordered by increasing pump amplitude.  Returns ``(points, sides, gains)``.
    """
    crit = critical_params(device)
    f_p = f_ratio * crit.f_c
    lp = lmg_point(device, f_p, probe_amp, n_theta)
    rows = []
    for level in gain_levels_db:
        pair = iso_gain_pair(device, f_p, level, probe_amp, n_theta, lmg_pt=lp)
        if pair is None:
            raise DomainError(f"{level} dB exceeds the maximum gain {lp.gain_db:.2f} dB at f_p/f_c={f_ratio}")
        rows.append((pair[0][0], BELOW, pair[0][1]))
        rows.append((pair[1][0], ABOVE, pair[1][1]))
    if include_lmg:
        rows.append((lp.op, ON, lp.gain_db))
    rows.sort(key=lambda r: r[0].pump_amp)
    return [r[0] for r in rows], [r[1] for r in rows], [r[2] for r in rows]
