"""Independent reference computations used by the tests.

Nothing here calls the package's solvers: roots come from plain bisection
on the physical cubic, derivatives from central differences.
"""

import numpy as np


def kerr_cubic(n, delta, kerr, gamma, b_sq):
    """n ((delta + K n)^2 + gamma^2) - 2 gamma |b|^2 in physical units."""
    return n * ((delta + kerr * n) ** 2 + gamma**2) - 2 * gamma * b_sq


def _bisect(f, lo, hi, n_iter=200):
    """Vectorized bisection; ``f(lo)`` and ``f(hi)`` must differ in sign."""
    f_lo = f(lo)
    for _ in range(n_iter):
        mid = 0.5 * (lo + hi)
        f_mid = f(mid)
        left = np.sign(f_mid) == np.sign(f_lo)
        lo = np.where(left, mid, lo)
        f_lo = np.where(left, f_mid, f_lo)
        hi = np.where(left, hi, mid)
    return 0.5 * (lo + hi)


def bisection_roots(delta, b_sq, kerr, gamma):
    """All non-negative photon-number roots by bracketing and bisection.

    The cubic is split into monotone pieces at its stationary points; every
    piece whose end values differ in sign holds exactly one root.  Returns an
    array of shape ``(..., 3)`` sorted ascending, NaN-padded.
    """
    delta, b_sq = np.broadcast_arrays(np.asarray(delta, float), np.asarray(b_sq, float))
    upper = 2 * b_sq / gamma + 1.0  # n gamma^2 <= 2 gamma |b|^2
    disc = 16 * delta**2 * kerr**2 - 12 * kerr**2 * (delta**2 + gamma**2)
    root_disc = np.sqrt(np.clip(disc, 0, None))
    s1 = (-4 * delta * kerr - root_disc) / (6 * kerr**2)
    s2 = (-4 * delta * kerr + root_disc) / (6 * kerr**2)
    s_lo = np.clip(np.minimum(s1, s2), 0, upper)
    s_hi = np.clip(np.maximum(s1, s2), 0, upper)
    s_lo = np.where(disc > 0, s_lo, 0.0)
    s_hi = np.where(disc > 0, s_hi, 0.0)

    def f(n):
        return kerr_cubic(n, delta, kerr, gamma, b_sq)

    out = np.full(delta.shape + (3,), np.nan)
    edges = [(np.zeros_like(delta), s_lo), (s_lo, s_hi), (s_hi, upper)]
    for k, (a, b) in enumerate(edges):
        fa, fb = f(a), f(b)
        has = (fa * fb < 0) | ((fa == 0) & (k == 0))
        a_ = np.where(has, a, 0.0)
        b_ = np.where(has, b, 1.0)
        r = _bisect(lambda n: kerr_cubic(n, delta, kerr, gamma, b_sq), a_, b_)
        out[..., k] = np.where(has, r, np.nan)
    out = np.sort(out, axis=-1)
    return out


def central_jacobian(func, z, h):
    """2x2 real Jacobian of a complex map by central differences of step ``h``."""
    cols = []
    for step in (h, 1j * h):
        d = (func(z + step) - func(z - step)) / (2 * h)
        cols.append([d.real, d.imag])
    return np.array(cols).T
