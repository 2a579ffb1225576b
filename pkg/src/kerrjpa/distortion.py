"""Finite-amplitude phasor sweeps, quadrature axes and deamplification."""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import optimize

from .constants import to_db
from .core import critical_params, jacobian, photon_number, reflection
from .exceptions import BistableError, DomainError, NumericalError
from .gain import (
    ABOVE,
    DEFAULT_N_THETA,
    OperatingPoint,
    direct_gain,
    iso_gain_contour,
    iso_gain_pair,
    lmg_point,
    uniform_theta,
)

ISOTROPY_RTOL = 1e-9


def probe_bandwidth(device):
    """Default bandwidth B = gamma / pi (Hz), the resonator linewidth."""
    return device.gamma / np.pi


def half_photon_probe(device, bandwidth=None):
    """Probe amplitude whose flux is half a photon over ``bandwidth``: |b|**2 = B/2."""
    if bandwidth is None:
        bandwidth = probe_bandwidth(device)
    return float(np.sqrt(bandwidth / 2))


@dataclass
class PhasorSweep:
    theta: np.ndarray
    input_points: np.ndarray  # complex signal phasors b_s,in e^{i theta}
    output_points: np.ndarray  # b_out(theta) - b_p,out
    op: OperatingPoint


def phasor_sweep(op, device, probe_amp, n_theta=DEFAULT_N_THETA):
    """Map a circle of probe phasors around the pump through the resonator."""
    if probe_amp < 0:
        raise DomainError("probe amplitude must be non-negative")
    theta = uniform_theta(n_theta)
    sig_in = probe_amp * np.exp(1j * theta)
    if probe_amp == 0:
        return PhasorSweep(theta, sig_in, np.zeros(n_theta, dtype=complex), op)

    delta = op.delta(device)
    b_in = np.append(op.pump_amp + sig_in, op.pump_amp + 0j)
    n, bist = photon_number(delta, np.abs(b_in) ** 2, device)
    if bist.any():
        bad = np.flatnonzero(bist)
        where = "pump" if bad[0] == n_theta else f"theta={theta[bad[0]]:.6g}"
        raise BistableError(f"bistable response at {where} (f_p={op.f_p}, pump_amp={op.pump_amp})")
    out = b_in * reflection(delta + device.kerr * n, device.gamma)
    return PhasorSweep(theta, sig_in, out[:-1] - out[-1], op)


@dataclass(frozen=True)
class QuadratureFrame:
    """Principal axes of a 2D point cloud.

    ``angle`` is the direction of the deamplified (minor) axis in [0, pi).
    """

    angle: float
    sigma_maj: float
    sigma_min: float
    isotropic: bool = False

    @property
    def minor_axis(self):
        return np.exp(1j * self.angle)

    @property
    def major_axis(self):
        return 1j * np.exp(1j * self.angle)


def principal_axes(points):
    """Covariance eigen-decomposition of complex points about their mean."""
    z = np.asarray(points, dtype=complex).ravel()
    if z.size < 3:
        raise DomainError("principal_axes needs at least 3 points")
    xy = np.stack([z.real, z.imag])
    cov = np.cov(xy, bias=True)
    if not np.any(cov):
        raise DomainError("degenerate point cloud: all points identical")
    evals, evecs = np.linalg.eigh(cov)
    evals = np.clip(evals, 0.0, None)
    v = evecs[:, 0]
    angle = float(np.arctan2(v[1], v[0]) % np.pi)
    if np.isclose(angle, np.pi):
        angle = 0.0
    iso = bool(evals[1] - evals[0] <= ISOTROPY_RTOL * evals[1])
    return QuadratureFrame(angle, float(np.sqrt(evals[1])), float(np.sqrt(evals[0])), iso)


def linearized_frame(op, device, probe_amp):
    """Output axes of the infinitesimal-signal ellipse (SVD of the Jacobian)."""
    J = jacobian(op.pump_amp, op.delta(device), device)
    u, s, _ = np.linalg.svd(J)
    minor = u[:, 1]
    angle = float(np.arctan2(minor[1], minor[0]) % np.pi)
    scale = probe_amp / np.sqrt(2)
    return QuadratureFrame(angle, float(s[0] * scale), float(s[1] * scale))


def project(points, angle):
    """Coordinate of complex points along the unit direction at ``angle``."""
    return np.real(np.asarray(points) * np.exp(-1j * angle))


def harmonic_ratio(sweep, harmonic=3, axis="major"):
    """|c_h| / |c_1| of the Fourier series of the projected output vs theta."""
    frame = principal_axes(sweep.output_points)
    angle = frame.angle if axis == "minor" else frame.angle + np.pi / 2
    x = project(sweep.output_points, angle)
    c = np.fft.rfft(x - x.mean())
    return float(np.abs(c[harmonic]) / np.abs(c[1]))


@dataclass(frozen=True)
class DeampResult:
    ratio_db: float
    op: OperatingPoint
    gain_db: float
    frame: QuadratureFrame
    side: Optional[str] = None


def deamp_ratio(op, device, probe_amp=None, n_theta=DEFAULT_N_THETA, axis="output", side=None):
    """Deamplification ratio 10 log10(sigma_out**2 / sigma_in**2).

    ``sigma_out**2`` is the variance of the output signal points along their
    deamplified axis; ``sigma_in**2`` the variance of the input circle along
    the same axis.  ``axis="linearized"`` uses the small-signal axes instead
    of the principal axes of the output cloud.
    """
    if probe_amp is None:
        probe_amp = half_photon_probe(device)
    sweep = phasor_sweep(op, device, probe_amp, n_theta)
    if probe_amp == 0:
        raise DomainError("deamplification ratio needs a nonzero probe")
    if op.pump_amp == 0:
        frame = QuadratureFrame(0.0, probe_amp / np.sqrt(2), probe_amp / np.sqrt(2), True)
    elif axis == "output":
        frame = principal_axes(sweep.output_points)
    elif axis == "linearized":
        frame = linearized_frame(op, device, probe_amp)
    else:
        raise DomainError(f"unknown axis choice {axis!r}")
    var_out = np.var(project(sweep.output_points, frame.angle))
    var_in = np.var(project(sweep.input_points, frame.angle))
    return DeampResult(
        ratio_db=float(to_db(var_out / var_in)),
        op=op,
        gain_db=direct_gain(op, device),
        frame=frame,
        side=side,
    )


def scan_deamp_along_contour(contour, device, probe_amp=None, n_theta=DEFAULT_N_THETA, threads=1):
    """Deamplification ratio at each contour point, in contour order."""
    jobs = list(zip(contour.points, contour.sides))

    def one(job):
        return deamp_ratio(job[0], device, probe_amp, n_theta, side=job[1])

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(one, jobs))
    return [one(j) for j in jobs]


def _branch_deamp(device, target, side, probe_amp, n_theta):
    def f(f_p):
        pair = iso_gain_pair(device, f_p, target, n_theta=n_theta)
        if pair is None:
            return np.inf
        op = pair[0][0] if side != ABOVE else pair[1][0]
        return deamp_ratio(op, device, probe_amp, n_theta, side=side)

    return f


def optimal_point(
    device,
    gain_targets=tuple(range(6, 14)),
    f_ratio_range=(1.0005, 1.004),
    probe_amp=None,
    n_f=8,
    n_theta=DEFAULT_N_THETA,
    refine=True,
    threads=1,
):
    """Operating point minimizing the deamplification ratio over iso-gain contours.

    Every contour is scanned on ``n_f`` pump frequencies; the best scanned
    point is then refined along its branch in pump frequency by bounded
    scalar minimization between the neighbouring scan frequencies.

    Returns ``(OperatingPoint, DeampResult)``; the result carries the branch
    label and its ``gain_db`` is the recomputed direct gain.
    """
    best = None
    crit = critical_params(device)
    f_grid = np.linspace(*f_ratio_range, n_f) * crit.f_c
    for target in gain_targets:
        contour = iso_gain_contour(device, target, f_ratio_range, n_f, n_theta=n_theta, threads=threads)
        results = scan_deamp_along_contour(contour, device, probe_amp, n_theta, threads)
        for res in results:
            if best is None or res.ratio_db < best[1].ratio_db:
                best = (target, res)
    if best is None:
        raise NumericalError("no feasible operating point on any iso-gain contour")
    target, res = best
    if refine:
        k = int(np.argmin(np.abs(f_grid - res.op.f_p)))
        lo, hi = f_grid[max(k - 1, 0)], f_grid[min(k + 1, n_f - 1)]
        f = _branch_deamp(device, target, res.side, probe_amp, n_theta)
        opt = optimize.minimize_scalar(
            lambda fp: getattr(f(fp), "ratio_db", np.inf),
            bounds=(lo, hi),
            method="bounded",
            options={"xatol": 1e-7 * crit.f_c},
        )
        refined = f(opt.x)
        if np.isfinite(getattr(refined, "ratio_db", np.inf)) and refined.ratio_db <= res.ratio_db:
            res = refined
    return res.op, res
