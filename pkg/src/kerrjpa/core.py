"""Steady-state model of a driven Kerr resonator in reflection.

A resonator with bare angular frequency ``omega0``, field decay rate ``gamma``
and Kerr constant ``kerr`` is driven by an input field ``b_in`` (in
sqrt(photons/s)) at angular frequency ``omega_p``.  With the detuning
``delta = omega0 - omega_p`` the intracavity photon number ``n`` solves

    n * ((delta + kerr * n)**2 + gamma**2) = 2 * gamma * |b_in|**2

and the reflected field is ``b_out = b_in * (i X - gamma) / (i X + gamma)``
with ``X = delta + kerr * n``.

Internally the cubic is solved in the scale-free variable ``u = kerr * n / gamma``
with ``d = delta / gamma`` and ``p = 2 * kerr * |b_in|**2 / gamma**2``::

    u**3 + 2 d u**2 + (d**2 + 1) u - p = 0

All real roots of this cubic share the sign of ``p``, so every real root is a
physical (non-negative) photon number.
"""

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .constants import HBAR, PHI0, SQRT3, TWO_PI
from .exceptions import DomainError, NumericalError

# |f(u)| <= RESIDUAL_TOL * max(1, |u|**3) on the scale-free cubic
RESIDUAL_TOL = 1e-10
_NEWTON_STEPS = 3

MONOSTABLE = "monostable"
LOW_BRANCH = "low_branch_of_bistable"


@dataclass(frozen=True)
class SquidGeometry:
    """SQUID-array description of the nonlinear inductor.

    ``capacitance`` and ``coupling_capacitance`` are carried as metadata only.
    """

    n_squids: int
    critical_current: float
    capacitance: Optional[float] = None
    coupling_capacitance: Optional[float] = None


def kerr_constant(geometry, omega0):
    """Kerr constant K = -hbar omega0**2 / (16 N_s phi0 I_c) in rad/s.

    Parameters
    ----------
    geometry : SquidGeometry
        Array of ``n_squids`` SQUIDs whose junctions have critical current
        ``critical_current`` (A).
    omega0 : float
        Bare resonance angular frequency (rad/s).
    """
    n_s = geometry.n_squids
    i_c = geometry.critical_current
    if not (n_s >= 1 and i_c > 0 and omega0 > 0):
        raise DomainError(
            f"kerr_constant needs N_s >= 1, I_c > 0, omega0 > 0 (got {n_s}, {i_c}, {omega0})"
        )
    return -HBAR * omega0**2 / (16 * n_s * PHI0 * i_c)


@dataclass(frozen=True)
class DeviceParams:
    """Physical description of the resonator.

    Attributes
    ----------
    omega0 : float
        Bare resonance angular frequency (rad/s).
    gamma : float
        Field decay rate to the port (rad/s).
    kerr : float
        Kerr constant K (rad/s); negative for a SQUID-array resonator.
    squid : SquidGeometry, optional
        When given, ``kerr`` must match :func:`kerr_constant` of it.
    """

    omega0: float
    gamma: float
    kerr: float
    squid: Optional[SquidGeometry] = field(default=None, compare=False)

    def __post_init__(self):
        if not self.gamma > 0:
            raise DomainError("gamma must be positive")
        if not (np.isfinite(self.kerr) and self.kerr != 0):
            raise DomainError("kerr must be finite and nonzero")
        if not self.quality_factor > 1:
            raise DomainError(f"quality factor omega0/(2 gamma) must exceed 1, got {self.quality_factor}")
        if self.squid is not None:
            k_geo = kerr_constant(self.squid, self.omega0)
            if abs(k_geo - self.kerr) > 1e-12 * abs(k_geo):
                raise DomainError(f"kerr={self.kerr} inconsistent with SQUID geometry ({k_geo})")

    @property
    def quality_factor(self):
        return self.omega0 / (2 * self.gamma)

    @property
    def f0(self):
        return self.omega0 / TWO_PI

    def detuning(self, f_p):
        """Detuning ``omega0 - 2 pi f_p`` (rad/s) for a pump at ``f_p`` Hz."""
        return self.omega0 - TWO_PI * np.asarray(f_p, dtype=float)

    @classmethod
    def from_squid(cls, omega0, gamma, squid):
        return cls(omega0=omega0, gamma=gamma, kerr=kerr_constant(squid, omega0), squid=squid)

    @classmethod
    def from_critical_frequency(cls, f_c, gamma, kerr):
        """Device whose critical pump frequency is ``f_c`` (Hz)."""
        omega0 = TWO_PI * f_c - np.sign(kerr) * SQRT3 * gamma
        return cls(omega0=omega0, gamma=gamma, kerr=kerr)

    @classmethod
    def typical(cls):
        """gamma = 2 pi x 54.5 MHz, K/gamma = -8.3e-4, Q = 65."""
        gamma = TWO_PI * 54.5e6
        return cls(omega0=2 * 65 * gamma, gamma=gamma, kerr=-8.3e-4 * gamma)


@dataclass(frozen=True)
class CriticalParams:
    """Onset of bistability of the driven resonator."""

    delta_c: float
    b_c: float
    n_c: float
    f_c: float
    P_c: float

    @property
    def omega_c(self):
        return TWO_PI * self.f_c


def critical_params(device):
    """Critical detuning, drive amplitude, photon number, frequency and power."""
    g, k = device.gamma, device.kerr
    delta_c = SQRT3 * g
    b_c = np.sqrt(4 * g**2 / (3 * SQRT3 * abs(k)))
    n_c = 2 * delta_c / (3 * abs(k))
    # K < 0: bifurcation at delta = +delta_c, i.e. omega_p = omega0 - delta_c
    omega_c = device.omega0 + np.sign(k) * delta_c
    return CriticalParams(
        delta_c=delta_c,
        b_c=b_c,
        n_c=n_c,
        f_c=omega_c / TWO_PI,
        P_c=HBAR * omega_c * b_c**2,
    )


# ---------------------------------------------------------------------------
# cubic solver


def _cubic(u, d, p):
    return u * ((d + u) ** 2 + 1) - p


def _cubic_prime(u, d):
    return 3 * u * u + 4 * d * u + d * d + 1


def _polish(u, d, p):
    """Guarded Newton steps; a step is kept only if it lowers the residual."""
    res = np.abs(_cubic(u, d, p))
    for _ in range(_NEWTON_STEPS):
        fp = _cubic_prime(u, d)
        with np.errstate(divide="ignore", invalid="ignore"):
            trial = u - _cubic(u, d, p) / fp
        trial_res = np.abs(_cubic(trial, d, p))
        better = np.isfinite(trial) & (trial_res < res)
        u = np.where(better, trial, u)
        res = np.where(better, trial_res, res)
    return u


def normalized_roots(d, p):
    """Real roots of ``u^3 + 2 d u^2 + (d^2 + 1) u - p = 0``.

    Closed form (trigonometric for three real roots, Cardano otherwise)
    followed by Newton polishing.  Returns an array of shape ``(..., 3)``;
    missing (complex) roots are NaN.  Roots are ordered by increasing
    ``|u|``, i.e. increasing photon number.
    """
    d, p = np.broadcast_arrays(np.asarray(d, dtype=float), np.asarray(p, dtype=float))
    P = (3 - d * d) / 3
    Q = -2 * d * (d * d + 9) / 27 - p
    disc = (Q / 2) ** 2 + (P / 3) ** 3
    three = disc < 0
    shift = 2 * d / 3

    with np.errstate(invalid="ignore", divide="ignore"):
        # one real root
        sq = np.sqrt(np.where(three, 0.0, disc))
        A = np.cbrt(-Q / 2 - np.where(Q >= 0, sq, -sq))
        t1 = np.where(A != 0, A - P / (3 * A), 0.0)

        # three real roots
        s = np.sqrt(np.where(three, -P / 3, 1.0))
        cos3a = np.clip(-(Q / 2) / s**3, -1.0, 1.0)
        alpha = np.arccos(cos3a) / 3
        tk = [2 * s * np.cos(alpha - TWO_PI * k / 3) for k in range(3)]

    roots = np.full(d.shape + (3,), np.nan)
    roots[..., 0] = np.where(three, tk[0], t1) - shift
    roots[..., 1] = np.where(three, tk[1], np.nan) - shift
    roots[..., 2] = np.where(three, tk[2], np.nan) - shift

    dd = d[..., None]
    pp = p[..., None]
    roots = _polish(roots, dd, pp)
    roots = np.where(pp == 0, np.where(np.arange(3) == 0, 0.0, np.nan), roots)
    # all real roots carry the sign of p; anything else is roundoff at ~0
    roots = np.where(roots * np.sign(pp) < 0, 0.0, roots)

    order = np.argsort(np.where(np.isnan(roots), np.inf, np.abs(roots)), axis=-1)
    return np.take_along_axis(roots, order, axis=-1)


def _check_residual(roots, d, p, where=""):
    res = np.abs(_cubic(roots, d[..., None], p[..., None]))
    scale = np.maximum(1.0, np.abs(roots) ** 3)
    bad = np.isfinite(roots) & ~(res <= RESIDUAL_TOL * scale)
    if np.any(bad):
        worst = float(np.nanmax(np.where(bad, res / scale, np.nan)))
        raise NumericalError(f"photon-number root polish did not converge{where}", residual=worst)


def photon_number(delta, b_in_sq, device):
    """Vectorized low-branch photon number.

    Returns
    -------
    n : ndarray
        Selected (smallest) non-negative root.
    bistable : ndarray of bool
        True where three distinct real roots exist.
    """
    b_in_sq = np.asarray(b_in_sq, dtype=float)
    if np.any(b_in_sq < 0):
        raise DomainError("input power flux must be non-negative")
    g, k = device.gamma, device.kerr
    d = np.asarray(delta, dtype=float) / g
    p = 2 * k * b_in_sq / g**2
    d, p = np.broadcast_arrays(d, p)
    u = normalized_roots(d, p)
    _check_residual(u, d, p)
    n = u * (g / k)
    return n[..., 0], np.isfinite(n[..., 2])


@dataclass(frozen=True)
class SteadyState:
    n: float
    all_roots: tuple
    branch: str
    delta_eff: float


def solve_photon_number(delta, device, input_power_flux):
    """All non-negative photon-number roots at one drive setting.

    The selected root is the one reached by increasing the drive from zero
    at fixed detuning (the low-amplitude branch).
    """
    if not input_power_flux >= 0:
        raise DomainError(f"input power flux must be non-negative, got {input_power_flux}")
    g, k = device.gamma, device.kerr
    d = np.float64(delta / g)
    p = np.float64(2 * k * input_power_flux / g**2)
    u = normalized_roots(d, p)
    _check_residual(u, np.asarray(d), np.asarray(p), where=f" at delta={delta}, |b|^2={input_power_flux}")
    roots = tuple(float(x) for x in u * (g / k) if np.isfinite(x))
    n = roots[0]
    return SteadyState(
        n=n,
        all_roots=roots,
        branch=LOW_BRANCH if len(roots) == 3 else MONOSTABLE,
        delta_eff=float(delta + k * n),
    )


def reflection(delta_eff, gamma):
    """All-pass reflection coefficient (i X - gamma) / (i X + gamma)."""
    return (1j * delta_eff - gamma) / (1j * delta_eff + gamma)


def steady_output(b_in, delta, device):
    """Reflected field for input field(s) ``b_in`` (complex, broadcastable)."""
    b_in = np.asarray(b_in, dtype=complex)
    n, _ = photon_number(delta, np.abs(b_in) ** 2, device)
    out = b_in * reflection(delta + device.kerr * n, device.gamma)
    return out[()] if out.ndim == 0 else out


def linearize(b_in, delta, device):
    """Small-signal response ``db_out = mu db_in + nu conj(db_in)`` about ``b_in``.

    Analytic derivative of the steady-state map; ``|mu|**2 - |nu|**2 == 1``.
    """
    b_in = np.asarray(b_in, dtype=complex)
    g, k = device.gamma, device.kerr
    b2 = np.abs(b_in) ** 2
    n, _ = photon_number(delta, b2, device)
    x = delta + k * n
    dn_db2 = 2 * g / (x * x + g * g + 2 * k * n * x)
    r = reflection(x, g)
    dr_dn = k * 2j * g / (1j * x + g) ** 2
    mu = r + b2 * dr_dn * dn_db2
    nu = b_in**2 * dr_dn * dn_db2
    return mu, nu


def jacobian(b_in, delta, device):
    """Real 2x2 Jacobian of (Re, Im) b_out with respect to (Re, Im) b_in."""
    mu, nu = linearize(b_in, delta, device)
    col_x = mu + nu
    col_y = 1j * (mu - nu)
    return np.array([[col_x.real, col_y.real], [col_x.imag, col_y.imag]])
