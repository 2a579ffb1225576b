import time

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kerrjpa.constants import HBAR, PHI0, TWO_PI
from kerrjpa.core import (
    LOW_BRANCH,
    MONOSTABLE,
    DeviceParams,
    SquidGeometry,
    critical_params,
    jacobian,
    kerr_constant,
    linearize,
    normalized_roots,
    photon_number,
    solve_photon_number,
    steady_output,
)
from kerrjpa.exceptions import DomainError
from kerrjpa.gain import locate_critical_point

from oracles import bisection_roots, central_jacobian, kerr_cubic


def test_typical_device():
    dev = DeviceParams.typical()
    assert dev.quality_factor == pytest.approx(65.0)
    assert dev.kerr / dev.gamma == pytest.approx(-8.3e-4)


@pytest.mark.parametrize(
    "kwargs",
    [
        dict(omega0=1e10, gamma=0.0, kerr=-1.0),
        dict(omega0=1e10, gamma=1e8, kerr=0.0),
        dict(omega0=1e10, gamma=1e8, kerr=np.inf),
        dict(omega0=1e8, gamma=1e8, kerr=-1.0),
    ],
)
def test_device_validation(kwargs):
    with pytest.raises(DomainError):
        DeviceParams(**kwargs)


def test_critical_params_closed_form(device):
    crit = critical_params(device)
    g, k = device.gamma, device.kerr
    assert crit.delta_c == pytest.approx(np.sqrt(3) * g, rel=1e-15)
    assert crit.b_c**2 == pytest.approx(4 * g**2 / (3 * np.sqrt(3) * abs(k)), rel=1e-14)
    assert crit.P_c == pytest.approx(HBAR * crit.omega_c * crit.b_c**2, rel=1e-14)
    # K < 0: the critical pump sits below the bare resonance
    assert crit.f_c < device.f0
    # at the critical drive the cubic has a triple root at n_c
    n = solve_photon_number(crit.delta_c, device, crit.b_c**2).n
    assert n == pytest.approx(crit.n_c, rel=1e-4)


def test_critical_params_positive_kerr():
    g = TWO_PI * 50e6
    dev = DeviceParams(omega0=100 * g, gamma=g, kerr=1e-3 * g)
    crit = critical_params(dev)
    assert crit.f_c > dev.f0
    assert locate_critical_point(dev) == crit


def test_locate_critical_point(device):
    crit = locate_critical_point(device)
    assert crit == critical_params(device)


def test_roots_match_bisection_in_bistable_wedge(device):
    crit = critical_params(device)
    g, k = device.gamma, device.kerr
    d = g * np.linspace(1.8, 4.0, 30)
    p = crit.b_c**2 * np.linspace(0.9, 2.5, 30)
    D, P = np.meshgrid(d, p)
    ref = bisection_roots(D, P, k, g)
    u = normalized_roots(D / g, 2 * k * P / g**2)
    got = np.sort(u * g / k, axis=-1)
    assert np.array_equal(np.isnan(got), np.isnan(ref))
    assert np.sum(~np.isnan(ref[..., 2])) > 50
    ok = ~np.isnan(ref)
    np.testing.assert_allclose(got[ok], ref[ok], rtol=1e-9)


def test_roots_ordering_and_branch_label(device):
    crit = critical_params(device)
    d = 3 * device.gamma
    pc = None
    # scan for a drive with three roots
    for s in np.linspace(0.5, 3.0, 400):
        st_ = solve_photon_number(d, device, s * crit.b_c**2)
        if len(st_.all_roots) == 3:
            pc = st_
            break
    assert pc is not None
    assert pc.branch == LOW_BRANCH
    assert list(pc.all_roots) == sorted(pc.all_roots)
    assert pc.n == pc.all_roots[0]
    mono = solve_photon_number(0.0, device, crit.b_c**2)
    assert mono.branch == MONOSTABLE and len(mono.all_roots) == 1


def test_zero_drive_gives_empty_cavity(device):
    st_ = solve_photon_number(device.gamma, device, 0.0)
    assert st_.n == 0.0 and st_.all_roots == (0.0,)


def test_negative_power_rejected(device):
    with pytest.raises(DomainError):
        solve_photon_number(0.0, device, -1.0)
    with pytest.raises(DomainError):
        photon_number(0.0, np.array([1.0, -1.0]), device)


def test_root_residual_near_triple_root(device):
    crit = critical_params(device)
    g, k = device.gamma, device.kerr
    for eps in (1e-3, 1e-6, 1e-9, 0.0):
        n = solve_photon_number(crit.delta_c * (1 - eps), device, crit.b_c**2).n
        scale = 2 * g * crit.b_c**2
        assert abs(kerr_cubic(n, crit.delta_c * (1 - eps), k, g, crit.b_c**2)) < 1e-9 * scale


@settings(max_examples=200, deadline=None)
@given(
    d=st.floats(-10, 10),
    # subnormal amplitudes carry too few bits for a 1e-12 ratio
    amp=st.just(0.0) | st.floats(1e-12, 5),
    phase=st.floats(0, 2 * np.pi),
)
def test_unitarity_property(d, amp, phase):
    dev = DeviceParams.typical()
    b_c = critical_params(dev).b_c
    b = amp * b_c * np.exp(1j * phase)
    out = steady_output(b, d * dev.gamma, dev)
    if amp == 0:
        assert out == 0
    else:
        assert abs(abs(out) / abs(b) - 1) < 1e-12


def test_unitarity_batch_runtime(device, rng):
    b_c = critical_params(device).b_c
    b = b_c * rng.uniform(0.01, 3, 10_000) * np.exp(1j * rng.uniform(0, TWO_PI, 10_000))
    t0 = time.perf_counter()
    out = steady_output(b, device.gamma * rng.uniform(-5, 5, 10_000), device)
    assert time.perf_counter() - t0 < 1.0
    assert np.max(np.abs(np.abs(out) / np.abs(b) - 1)) < 1e-12


@pytest.mark.parametrize("d", [-2.0, 0.0, 1.0, 1.54, 1.7])
@pytest.mark.parametrize("amp", [0.2, 0.8, 1.1])
def test_jacobian_matches_central_differences(device, d, amp):
    crit = critical_params(device)
    delta = d * device.gamma
    b = amp * crit.b_c
    J = jacobian(b, delta, device)
    J_fd = central_jacobian(lambda z: steady_output(z, delta, device), b + 0j, 1e-4 * crit.b_c)
    np.testing.assert_allclose(J, J_fd, rtol=1e-6, atol=1e-6 * np.abs(J).max())


@pytest.mark.parametrize("d", [-1.0, 0.5, 1.54])
def test_linearization_is_symplectic(device, d):
    b = critical_params(device).b_c * np.array([0.3, 0.9, 1.2])
    mu, nu = linearize(b, d * device.gamma, device)
    np.testing.assert_allclose(np.abs(mu) ** 2 - np.abs(nu) ** 2, 1.0, atol=1e-9)
    J = jacobian(b[1], d * device.gamma, device)
    assert np.linalg.det(J) == pytest.approx(1.0, abs=1e-9)


def test_kerr_and_detuning_mirror_symmetry(device, rng):
    """K -> -K with delta -> -delta conjugates the output field."""
    mirror = DeviceParams(device.omega0, device.gamma, -device.kerr)
    b = critical_params(device).b_c * rng.uniform(0.1, 2, 50) * np.exp(1j * rng.uniform(0, TWO_PI, 50))
    delta = device.gamma * rng.uniform(-3, 3, 50)
    out = steady_output(b, delta, device)
    out_m = steady_output(np.conj(b), -delta, mirror)
    np.testing.assert_allclose(out_m, np.conj(out), rtol=1e-12)


def test_squid_kerr_constant():
    squid = SquidGeometry(n_squids=20, critical_current=7e-6)
    omega0 = TWO_PI * 7.3e9
    k = kerr_constant(squid, omega0)
    assert k == pytest.approx(-HBAR * omega0**2 / (16 * 20 * PHI0 * 7e-6), rel=1e-15)
    # a longer array dilutes the nonlinearity
    assert abs(kerr_constant(SquidGeometry(40, 7e-6), omega0)) == pytest.approx(abs(k) / 2)
    dev = DeviceParams.from_squid(omega0, TWO_PI * 54.5e6, squid)
    assert dev.kerr == k
    with pytest.raises(DomainError):
        DeviceParams(omega0, TWO_PI * 54.5e6, 2 * k, squid=squid)
    with pytest.raises(DomainError):
        kerr_constant(SquidGeometry(0, 7e-6), omega0)


def test_from_critical_frequency():
    g = TWO_PI * 54.5e6
    dev = DeviceParams.from_critical_frequency(7.0032e9, g, -8.3e-4 * g)
    assert critical_params(dev).f_c == pytest.approx(7.0032e9, rel=1e-15)
