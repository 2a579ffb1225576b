"""Line and noise calibration: thermal occupancy, chain gains, loss, and the
added-noise fit.

The noise model referred to the squeezer input is

    S_out^in = lam * S(T_vts) + (1 - lam) * S(T_fridge) + N_add

and the measured output is ``G_chain * S_out^in`` with ``G_chain`` the
product of the chain gain and the squeezer gain.
"""

from dataclasses import dataclass, field
from decimal import Decimal

import numpy as np
from scipy import optimize

from .constants import HBAR, K_B, from_db, to_db
from .exceptions import DomainError, NumericalError

# hbar omega / k_B T above which the Bose term is below 1e-300
_FROZEN_X = 690.0
_ILL_CONDITIONED = 1e10
# trf approaches an active bound only to within roundoff
_BOUND_TOL = 1e-9


def thermal_occupancy(T, omega):
    """Noise spectral density of a resistor at ``T`` in quanta: 1/2 + n_Bose."""
    T = np.asarray(T, dtype=float)
    if np.any(T <= 0) or not omega > 0:
        raise DomainError("thermal_occupancy needs T > 0 and omega > 0")
    x = HBAR * omega / (K_B * T)
    with np.errstate(over="ignore"):
        bose = np.where(x > _FROZEN_X, 0.0, 1 / np.expm1(np.minimum(x, _FROZEN_X)))
    out = 0.5 + bose
    return float(out) if out.ndim == 0 else out


def chain_gain_from_noise(p_out, window, device_gain_db, omega):
    """Chain gain (dB) from the integrated output power of one quantum of input noise.

    ``p_out = hbar omega W G_chain G_device``.
    """
    if not (window > 0 and omega > 0 and p_out > 0):
        raise DomainError("power, window and frequency must be positive")
    g_dev = from_db(device_gain_db)
    if not g_dev > 0:
        raise DomainError("device gain must be nonzero")
    return float(to_db(p_out / (HBAR * omega * window * g_dev)))


def transport_loss(g_a_out_db, g_s_out_db):
    """Loss between squeezer and amplifier: eta = G_A^O / G_S^O (dB).

    The dB readings are decimal quantities, so the difference is taken in
    decimal arithmetic: 76.5 - 75.3 gives 1.2, not 1.2000000000000028.
    """
    return float(Decimal(repr(float(g_a_out_db))) - Decimal(repr(float(g_s_out_db))))


def combined_uncertainty(*sigmas):
    """Root-sum-square of independent uncertainties."""
    return float(np.sqrt(np.sum(np.square(sigmas))))


def input_attenuation(p_probe_out, p_probe_in, g_s_out_db):
    """Input attenuation A^I (dB) from ``P_out = P_in G_S^O A^I``."""
    if not (p_probe_out > 0 and p_probe_in > 0):
        raise DomainError("probe powers must be positive")
    return float(to_db(p_probe_out / p_probe_in) - g_s_out_db)


@dataclass(frozen=True)
class LineBudget:
    g_a_out: float
    g_s_out: float
    eta_db: float
    a_in: float = None
    eta_sigma_db: float = None

    @classmethod
    def from_gains(cls, g_a_out, g_s_out, a_in=None, sigma_a=None, sigma_s=None):
        sigma = None
        if sigma_a is not None and sigma_s is not None:
            sigma = combined_uncertainty(sigma_a, sigma_s)
        return cls(g_a_out, g_s_out, transport_loss(g_a_out, g_s_out), a_in, sigma)


@dataclass(frozen=True)
class NoiseSample:
    T_vts: float
    T_fridge: float
    psd_out: float  # quanta-equivalent integrated output

    def __post_init__(self):
        if not (self.T_vts > 0 and self.T_fridge > 0 and self.psd_out > 0):
            raise DomainError(f"invalid noise sample {self}")


@dataclass
class FitResult:
    n_add: float
    lam: float
    chain_gain_db: float
    uncertainties: dict
    residual_rms: float
    covariance: np.ndarray = None
    condition_number: float = None
    n_iter: int = 0
    flags: list = field(default_factory=list)

    @property
    def params(self):
        return {"n_add": self.n_add, "lambda": self.lam, "chain_gain_db": self.chain_gain_db}


def noise_model(T_vts, T_fridge, n_add, lam, chain_gain_db, omega):
    """Chain output noise (quanta) for VTS and fridge temperatures."""
    s_in = thermal_occupancy(T_vts, omega)
    s_f = thermal_occupancy(T_fridge, omega)
    return from_db(chain_gain_db) * (lam * s_in + (1 - lam) * s_f + n_add)


def _as_arrays(data):
    t_v = np.array([d.T_vts for d in data], dtype=float)
    t_f = np.array([d.T_fridge for d in data], dtype=float)
    y = np.array([d.psd_out for d in data], dtype=float)
    return t_v, t_f, y


def _initial_guess(t_v, t_f, y, omega):
    # slope and offset through the two extreme VTS temperatures of the coldest fridge set
    cold = t_f == t_f.min()
    tv, yy = t_v[cold], y[cold]
    i, j = int(np.argmin(tv)), int(np.argmax(tv))
    s_i, s_j = thermal_occupancy(tv[i], omega), thermal_occupancy(tv[j], omega)
    if tv[i] == tv[j]:
        slope = yy[i] / s_i
    else:
        slope = (yy[j] - yy[i]) / (s_j - s_i)
    lam0 = 0.9
    g0 = slope / lam0
    s_f = thermal_occupancy(t_f.min(), omega)
    n0 = yy[i] / g0 - lam0 * s_i - (1 - lam0) * s_f
    return np.array([to_db(g0), lam0, max(n0, 0.0)])


def fit_added_noise(data, omega, init_guess=None, max_nfev=200):
    """Least-squares fit of chain gain, transport efficiency lambda and N_add.

    Residuals are relative (model / data - 1).  The bounded trust-region
    solver keeps lambda in [0, 1] and N_add >= 0; the parameter covariance is
    ``s**2 (J^T J)^-1`` at the optimum.

    Parameters
    ----------
    data : sequence of NoiseSample
    omega : float
        Measurement angular frequency (rad/s).
    init_guess : dict, optional
        Keys ``chain_gain_db``, ``lambda``, ``n_add``.

    Raises
    ------
    NumericalError
        If the solver does not converge; ``.trace`` holds the solver status.
    """
    data = list(data)
    t_v, t_f, y = _as_arrays(data)
    pairs = {(a, b) for a, b in zip(t_v, t_f)}
    if len(pairs) < 3:
        raise DomainError("need at least 3 distinct (T_vts, T_fridge) combinations")
    s_in = thermal_occupancy(t_v, omega)
    s_f = thermal_occupancy(t_f, omega)

    if init_guess is None:
        x0 = _initial_guess(t_v, t_f, y, omega)
    else:
        x0 = np.array([init_guess["chain_gain_db"], init_guess["lambda"], init_guess["n_add"]], dtype=float)
    x0[1] = np.clip(x0[1], 0.0, 1.0)
    x0[2] = max(x0[2], 0.0)

    def model(x):
        return from_db(x[0]) * (x[1] * s_in + (1 - x[1]) * s_f + x[2])

    def resid(x):
        return model(x) / y - 1

    def jac(x):
        m = model(x)
        g = from_db(x[0])
        return np.column_stack([m * np.log(10) / 10, g * (s_in - s_f), g * np.ones_like(y)]) / y[:, None]

    sol = optimize.least_squares(
        resid,
        x0,
        jac=jac,
        bounds=([-np.inf, 0.0, 0.0], [np.inf, 1.0, np.inf]),
        method="trf",
        x_scale=np.array([1.0, 0.1, 0.01]),
        ftol=1e-15,
        xtol=1e-15,
        gtol=1e-15,
        max_nfev=max_nfev,
    )
    if sol.status <= 0:
        raise NumericalError(
            f"added-noise fit did not converge: {sol.message}",
            residual=float(np.sqrt(np.mean(sol.fun**2))),
            trace={"status": int(sol.status), "nfev": int(sol.nfev), "x": sol.x.tolist()},
        )

    J = jac(sol.x)
    JtJ = J.T @ J
    dof = max(len(y) - 3, 1)
    s2 = float(sol.fun @ sol.fun) / dof
    cond = float(np.linalg.cond(JtJ))
    flags = []
    try:
        cov = s2 * np.linalg.inv(JtJ)
    except np.linalg.LinAlgError:
        cov = np.full((3, 3), np.inf)
    if cond > _ILL_CONDITIONED:
        flags.append("ill_conditioned")
        # inflate rather than trust a near-singular inverse
        cov = np.where(np.isfinite(cov), cov, np.inf)
        diag = np.abs(np.diag(cov))
        floor = max(s2, np.finfo(float).eps) * cond
        cov[np.diag_indices(3)] = np.maximum(diag, floor)
    if sol.x[1] <= _BOUND_TOL or sol.x[1] >= 1.0 - _BOUND_TOL:
        flags.append("lambda_at_bound")
    if sol.x[2] <= _BOUND_TOL:
        flags.append("n_add_at_bound")
    sig = np.sqrt(np.abs(np.diag(cov)))
    return FitResult(
        n_add=float(sol.x[2]),
        lam=float(sol.x[1]),
        chain_gain_db=float(sol.x[0]),
        uncertainties={"n_add": float(sig[2]), "lambda": float(sig[1]), "chain_gain_db": float(sig[0])},
        residual_rms=float(np.sqrt(np.mean(sol.fun**2))),
        covariance=cov,
        condition_number=cond,
        n_iter=int(sol.nfev),
        flags=flags,
    )


def default_vts_grid(n=300, t_min=0.02, t_max=1.0):
    """VTS temperatures (K) spanning the quantum-to-thermal crossover at ~7 GHz."""
    return np.geomspace(t_min, t_max, n)


def synth_noise_data(params, T_vts, T_fridge, seed, noise_frac, omega):
    """Synthetic (T_vts, T_fridge, psd) samples from the noise model.

    ``params`` carries ``n_add``, ``lambda`` and ``chain_gain_db`` (a mapping or
    a :class:`FitResult`).  Every VTS temperature is combined with every
    fridge temperature; multiplicative Gaussian noise of relative size
    ``noise_frac`` is applied.
    """
    if isinstance(params, FitResult):
        params = params.params
    t_v, t_f = np.meshgrid(np.asarray(T_vts, dtype=float), np.asarray(T_fridge, dtype=float))
    t_v, t_f = t_v.ravel(), t_f.ravel()
    y = noise_model(t_v, t_f, params["n_add"], params["lambda"], params["chain_gain_db"], omega)
    if noise_frac > 0:
        rng = np.random.default_rng(seed)
        y = y * (1 + noise_frac * rng.standard_normal(y.size))
    return [NoiseSample(float(a), float(b), float(c)) for a, b, c in zip(t_v, t_f, y)]
