"""Semi-classical Monte-Carlo of vacuum squeezing and its phase-sensitive readout.

Vacuum is an ensemble of circular Gaussian phasors whose per-quadrature
variance is ``quanta_scale / 4`` (half a quantum).  The ensemble is passed
through the squeezer (SQ), a beamsplitter loss, and a phase-sensitive
amplifier (AMP) whose amplified quadrature is read out.  Squeezing is the
variance ratio between SQ-on and SQ-off runs that share every random draw.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .constants import from_db, to_db
from .core import jacobian, photon_number, reflection
from .distortion import linearized_frame, probe_bandwidth
from .exceptions import BistableError, DomainError
from .gain import OperatingPoint, uniform_theta

DEFAULT_N_SAMPLES = 100_000
DEFAULT_N_THETA = 64
DEFAULT_AMP_GAIN_DB = 25.0

# positional child-seed slots
_VACUUM, _LOSS, _READOUT = 0, 1, 2


def child_seed(seed, *key):
    """Deterministic child seed derived from ``seed`` and a positional key."""
    return np.random.SeedSequence(seed, spawn_key=tuple(key))


def _seed_repr(seed):
    if isinstance(seed, np.random.SeedSequence):
        return {"entropy": seed.entropy, "spawn_key": list(seed.spawn_key)}
    return seed


@dataclass
class PhasorEnsemble:
    samples: np.ndarray
    seed: object
    quanta_scale: float

    def __len__(self):
        return self.samples.size

    def replace(self, samples):
        return PhasorEnsemble(samples, self.seed, self.quanta_scale)


def vacuum_ensemble(n_samples, seed, quanta_scale):
    """I.i.d. circular Gaussian phasors with per-quadrature variance quanta_scale / 4."""
    if n_samples < 1000:
        raise DomainError("vacuum ensembles need at least 1000 samples")
    return PhasorEnsemble(_vacuum(n_samples, seed, quanta_scale), _seed_repr(seed), float(quanta_scale))


def _vacuum(n, seed, q):
    rng = np.random.default_rng(seed)
    z = rng.normal(0.0, np.sqrt(q / 4), size=(2, n))
    return z[0] + 1j * z[1]


def squeeze_state(ensemble, sq_op, device, model="jpa"):
    """Pass each vacuum phasor through the squeezer with the pump removed.

    ``model="jpa"`` uses the exact steady-state map b_out(b_p + b) - b_out(b_p);
    ``model="linearized"`` its small-signal Jacobian.
    """
    b = ensemble.samples
    delta = sq_op.delta(device)
    if model == "linearized":
        j = jacobian(sq_op.pump_amp, delta, device)
        out = (j[0, 0] * b.real + j[0, 1] * b.imag) + 1j * (j[1, 0] * b.real + j[1, 1] * b.imag)
        return ensemble.replace(out)
    if model != "jpa":
        raise DomainError(f"unknown squeezer model {model!r}")
    b_in = np.append(sq_op.pump_amp + b, sq_op.pump_amp + 0j)
    n, bist = photon_number(delta, np.abs(b_in) ** 2, device)
    if bist.any():
        raise BistableError(f"squeezer at f_p={sq_op.f_p}, pump_amp={sq_op.pump_amp} driven into bistability")
    out = b_in * reflection(delta + device.kerr * n, device.gamma)
    return ensemble.replace(out[:-1] - out[-1])


def ideal_squeeze(ensemble, gain_db, angle=0.0):
    """Area-preserving squeeze: amplify along ``angle`` by sqrt(G), deamplify the
    orthogonal quadrature by 1/sqrt(G)."""
    g = np.sqrt(from_db(gain_db))
    rot = np.exp(-1j * angle) * ensemble.samples
    out = (g * rot.real + 1j * rot.imag / g) * np.exp(1j * angle)
    return ensemble.replace(out)


@dataclass(frozen=True)
class LossChannel:
    """Beamsplitter loss of ``eta_db`` dB (``inf`` blocks the state entirely)."""

    eta_db: float

    def __post_init__(self):
        if not self.eta_db >= 0:
            raise DomainError("loss must be non-negative in dB")

    @property
    def transmissivity(self):
        return float(from_db(-self.eta_db))

    @property
    def floor_db(self):
        """Best squeezing reachable through this loss (infinitely squeezed input)."""
        with np.errstate(divide="ignore"):
            return float(to_db(1 - self.transmissivity))


def apply_loss(ensemble, loss, seed):
    """b' = sqrt(t) b + sqrt(1 - t) v with v a fresh vacuum draw."""
    t = loss.transmissivity
    v = _vacuum(len(ensemble), seed, ensemble.quanta_scale)
    return ensemble.replace(np.sqrt(t) * ensemble.samples + np.sqrt(1 - t) * v)


@dataclass(frozen=True)
class AmpModel:
    """Phase-sensitive readout amplifier.

    ``kind="ideal_phase_sensitive"`` amplifies one quadrature by sqrt(G);
    ``kind="full_jpa"`` uses the steady-state map of a second resonator at
    ``op``.  ``readout_noise`` is the added noise (quanta) injected after the
    amplifier, i.e. ``readout_noise / G`` referred to its input.
    """

    kind: str = "ideal_phase_sensitive"
    gain_db: float = DEFAULT_AMP_GAIN_DB
    op: Optional[OperatingPoint] = None
    device: object = None
    readout_noise: float = 0.0

    def __post_init__(self):
        if self.kind not in ("ideal_phase_sensitive", "full_jpa"):
            raise DomainError(f"unknown amplifier kind {self.kind!r}")
        if self.kind == "full_jpa" and (self.op is None or self.device is None):
            raise DomainError("full_jpa amplifier needs an operating point and a device")
        if self.readout_noise < 0:
            raise DomainError("readout noise must be non-negative")

    def power_gain(self):
        """Amplified-quadrature power gain (linear)."""
        if self.kind == "ideal_phase_sensitive":
            return float(from_db(self.gain_db))
        s = np.linalg.svd(jacobian(self.op.pump_amp, self.op.delta(self.device), self.device), compute_uv=False)
        return float(s[0] ** 2)


def amp_readout(ensemble, amp, theta, reference_angle=0.0, seed=None):
    """Amplified-quadrature samples after rotating the ensemble by ``theta``.

    At ``theta = 0`` the amplifier reads the quadrature at ``reference_angle``.
    """
    b = ensemble.samples * np.exp(-1j * (reference_angle + theta))
    if amp.kind == "ideal_phase_sensitive":
        y = np.sqrt(from_db(amp.gain_db)) * b.real
    else:
        op, dev = amp.op, amp.device
        delta = op.delta(dev)
        u, _, vt = np.linalg.svd(jacobian(op.pump_amp, delta, dev))
        a_in = np.arctan2(vt[0, 1], vt[0, 0])
        a_out = np.arctan2(u[1, 0], u[0, 0])
        b_in = np.append(op.pump_amp + b * np.exp(1j * a_in), op.pump_amp + 0j)
        n, bist = photon_number(delta, np.abs(b_in) ** 2, dev)
        if bist.any():
            raise BistableError("readout amplifier driven into bistability")
        out = b_in * reflection(delta + dev.kerr * n, dev.gamma)
        y = np.real((out[:-1] - out[-1]) * np.exp(-1j * a_out))
    if amp.readout_noise > 0:
        rng = np.random.default_rng(seed)
        y = y + rng.normal(0.0, np.sqrt(amp.readout_noise * ensemble.quanta_scale / 2), size=y.size)
    return y


def variance_ratio_db(y_on, y_off):
    """10 log10(var(y_on) / var(y_off)) and its delta-method standard error (dB).

    The two sample sets are paired (same underlying draws), so their
    correlation is included in the error.
    """
    n = y_on.size
    a = (y_on - y_on.mean()) ** 2
    b = (y_off - y_off.mean()) ** 2
    v_on, v_off = a.mean(), b.mean()
    rel = (np.var(a) / v_on**2 + np.var(b) / v_off**2 - 2 * np.cov(a, b, bias=True)[0, 1] / (v_on * v_off)) / n
    return float(to_db(v_on / v_off)), float(10 / np.log(10) * np.sqrt(max(rel, 0.0)))


@dataclass
class SqueezeResult:
    theta: np.ndarray
    S_db: np.ndarray
    stderr_db: np.ndarray
    sq_op: Optional[OperatingPoint]
    loss_floor_db: float
    predicted_db: np.ndarray  # closed-form Gaussian propagation of the linearized chain
    seed: object = None
    side: Optional[str] = None
    meta: dict = field(default_factory=dict)

    @property
    def min_S_db(self):
        return float(np.min(self.S_db))

    @property
    def argmin(self):
        return int(np.argmin(self.S_db))

    @property
    def min_stderr_db(self):
        return float(self.stderr_db[self.argmin])


def _squeezer_matrix(sq_op, device, sq_model, ideal_gain_db, ideal_angle):
    if sq_model == "ideal":
        g = np.sqrt(from_db(ideal_gain_db))
        c, s = np.cos(ideal_angle), np.sin(ideal_angle)
        rot = np.array([[c, -s], [s, c]])
        return rot @ np.diag([g, 1 / g]) @ rot.T
    return jacobian(sq_op.pump_amp, sq_op.delta(device), device)


def _reference_angle(sq_op, device, sq_model, ideal_angle):
    if sq_model == "ideal":
        return ideal_angle
    if sq_op.pump_amp == 0:
        return 0.0
    # amplified output axis of the squeezer
    return linearized_frame(sq_op, device, 1.0).angle + np.pi / 2


def _prepared_states(sq_op, device, loss, n_samples, seed, sq_model, ideal_gain_db, ideal_angle, quanta_scale):
    """SQ-on and SQ-off ensembles after loss, sharing every random draw."""
    if sq_model == "ideal" and ideal_gain_db is None:
        raise DomainError("ideal squeezer needs ideal_gain_db")
    vac = vacuum_ensemble(n_samples, child_seed(seed, _VACUUM), quanta_scale)
    if sq_model == "ideal":
        on = ideal_squeeze(vac, ideal_gain_db, ideal_angle)
        off = vac
    else:
        on = squeeze_state(vac, sq_op, device, sq_model)
        off = squeeze_state(vac, OperatingPoint.at(device, sq_op.f_p, 0.0), device, sq_model)
    loss_seed = child_seed(seed, _LOSS)
    return apply_loss(on, loss, loss_seed), apply_loss(off, loss, loss_seed)


def squeezing_vs_theta(
    sq_op,
    device,
    loss,
    amp=None,
    n_samples=DEFAULT_N_SAMPLES,
    n_theta=DEFAULT_N_THETA,
    seed=0,
    sq_model="jpa",
    ideal_gain_db=None,
    ideal_angle=0.0,
    quanta_scale=None,
    threads=1,
):
    """Squeezing S(theta) = sigma_on**2 / sigma_off**2 in dB.

    ``theta`` rotates the squeezed state in the amplifier frame; theta = 0
    aligns the squeezer's amplified quadrature with the amplifier's.  The
    SQ-off reference runs the same pipeline, with the same draws, through
    the squeezer with its pump switched off.

    ``sq_model`` is ``"jpa"`` (exact map), ``"linearized"`` or ``"ideal"``
    (area-preserving squeeze of ``ideal_gain_db``, ``sq_op`` may be None).
    """
    if amp is None:
        amp = AmpModel()
    if quanta_scale is None:
        quanta_scale = probe_bandwidth(device)
    on, off = _prepared_states(
        sq_op, device, loss, n_samples, seed, sq_model, ideal_gain_db, ideal_angle, quanta_scale
    )
    ref = _reference_angle(sq_op, device, sq_model, ideal_angle)
    theta = uniform_theta(n_theta)

    def one(k):
        rs = child_seed(seed, _READOUT, k)
        y_on = amp_readout(on, amp, theta[k], ref, seed=rs)
        y_off = amp_readout(off, amp, theta[k], ref, seed=rs)
        return variance_ratio_db(y_on, y_off)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            rows = list(pool.map(one, range(n_theta)))
    else:
        rows = [one(k) for k in range(n_theta)]

    return SqueezeResult(
        theta=theta,
        S_db=np.array([r[0] for r in rows]),
        stderr_db=np.array([r[1] for r in rows]),
        sq_op=sq_op,
        loss_floor_db=loss.floor_db,
        predicted_db=predicted_squeezing(
            sq_op, device, loss, amp, theta, sq_model, ideal_gain_db, ideal_angle, quanta_scale
        ),
        seed=seed,
    )


def quadrature_histograms(
    sq_op,
    device,
    loss,
    amp=None,
    n_samples=DEFAULT_N_SAMPLES,
    n_theta=DEFAULT_N_THETA,
    seed=0,
    bins=64,
    sq_model="jpa",
    ideal_gain_db=None,
    ideal_angle=0.0,
    quanta_scale=None,
):
    """Histograms of the amplified-quadrature readout vs theta, SQ on and off.

    Returns ``(theta, edges, counts_on, counts_off)``; counts have shape
    ``(n_theta, bins)`` and share the bin edges.
    """
    if amp is None:
        amp = AmpModel()
    if quanta_scale is None:
        quanta_scale = probe_bandwidth(device)
    on, off = _prepared_states(
        sq_op, device, loss, n_samples, seed, sq_model, ideal_gain_db, ideal_angle, quanta_scale
    )
    ref = _reference_angle(sq_op, device, sq_model, ideal_angle)
    theta = uniform_theta(n_theta)
    ys = [
        (amp_readout(on, amp, t, ref, seed=child_seed(seed, _READOUT, k)),
         amp_readout(off, amp, t, ref, seed=child_seed(seed, _READOUT, k)))
        for k, t in enumerate(theta)
    ]
    hi = max(max(np.max(np.abs(a)), np.max(np.abs(b))) for a, b in ys)
    edges = np.linspace(-hi, hi, bins + 1)
    counts_on = np.array([np.histogram(a, bins=edges)[0] for a, _ in ys])
    counts_off = np.array([np.histogram(b, bins=edges)[0] for _, b in ys])
    return theta, edges, counts_on, counts_off


def predicted_squeezing(
    sq_op, device, loss, amp, theta, sq_model="jpa", ideal_gain_db=None, ideal_angle=0.0, quanta_scale=None
):
    """Closed-form S(theta) (dB) for the linearized squeezer, beamsplitter loss
    and an ideal phase-sensitive readout with optional added noise."""
    if quanta_scale is None:
        quanta_scale = probe_bandwidth(device)
    vac = quanta_scale / 4
    m = _squeezer_matrix(sq_op, device, sq_model, ideal_gain_db, ideal_angle)
    t = loss.transmissivity
    cov = vac * (t * m @ m.T + (1 - t) * np.eye(2))
    ref = _reference_angle(sq_op, device, sq_model, ideal_angle)
    ang = ref + np.asarray(theta)
    e = np.stack([np.cos(ang), np.sin(ang)])
    var_on = np.einsum("in,ij,jn->n", e, cov, e)
    added = amp.readout_noise * quanta_scale / 2 / amp.power_gain()
    return to_db((var_on + added) / (vac + added))


def squeezing_vs_operating_point(
    ops, device, loss, amp=None, sides=None, n_samples=DEFAULT_N_SAMPLES, n_theta=DEFAULT_N_THETA, seed=0, **kwargs
):
    """:func:`squeezing_vs_theta` at each operating point (same seed everywhere)."""
    results = []
    for i, op in enumerate(ops):
        res = squeezing_vs_theta(op, device, loss, amp, n_samples, n_theta, seed, **kwargs)
        if sides is not None:
            res.side = sides[i]
        results.append(res)
    return results
