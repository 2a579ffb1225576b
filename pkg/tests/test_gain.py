import numpy as np
import pytest

from kerrjpa.config import build_device, defaults
from kerrjpa.core import critical_params, photon_number, steady_output
from kerrjpa.exceptions import BistableError, DomainError
from kerrjpa.gain import (
    ABOVE,
    BELOW,
    ON,
    OperatingPoint,
    direct_gain,
    gain_map,
    critical_power_dbm,
    iso_gain_contour,
    iso_gain_pair,
    lmg_point,
    lmg_points,
    power_cut,
    small_signal_gain,
)

from oracles import central_jacobian


def _op(device, f_ratio, amp_over_bc):
    crit = critical_params(device)
    return OperatingPoint.at(device, f_ratio * crit.f_c, amp_over_bc * crit.b_c)


def test_operating_point_round_trip(device):
    op = OperatingPoint.from_normalized(device, 1.002, -1.5)
    back = OperatingPoint.at(device, op.f_p, op.pump_amp)
    assert back.f_ratio == pytest.approx(1.002, rel=1e-15)
    assert back.p_ratio_db == pytest.approx(-1.5, abs=1e-12)
    assert op.pump_power == pytest.approx(critical_params(device).P_c * 10 ** (-0.15), rel=1e-12)
    with pytest.raises(DomainError):
        OperatingPoint.at(device, op.f_p, -1.0)


@pytest.mark.parametrize("f_ratio", [0.99, 1.0, 1.003, 1.02])
def test_pump_off_is_all_pass(device, f_ratio):
    op = _op(device, f_ratio, 0.0)
    assert direct_gain(op, device, probe_amp=1e3) == pytest.approx(0.0, abs=1e-12)


@pytest.mark.parametrize("f_ratio, amp", [(1.001, 0.9), (1.0015, 0.7), (1.003, 1.1), (1.01, 1.5)])
def test_direct_gain_matches_finite_difference_jacobian(device, f_ratio, amp):
    op = _op(device, f_ratio, amp)
    delta = op.delta(device)
    J = central_jacobian(lambda z: steady_output(z, delta, device), op.pump_amp + 0j, 1e-5 * op.pump_amp)
    # for a symplectic map <G_theta> = ||J||_F^2 / 2, so (<G> + 1) / 2 = (||J||_F^2 / 2 + 1) / 2
    g_fd = 10 * np.log10((np.sum(J**2) / 2 + 1) / 2)
    assert direct_gain(op, device) == pytest.approx(g_fd, abs=0.01)
    assert small_signal_gain(op, device) == pytest.approx(g_fd, abs=0.01)


def test_direct_gain_domain_errors(device):
    op = _op(device, 1.002, 0.5)
    with pytest.raises(DomainError):
        direct_gain(op, device, probe_amp=2 * op.pump_amp)
    with pytest.raises(DomainError):
        direct_gain(op, device, n_theta=4)
    with pytest.raises(DomainError):
        direct_gain(op, device, probe_amp=0.0)


def test_direct_gain_rejects_bistable_point(device):
    crit = critical_params(device)
    # f_p < f_c, at the centre of the hysteresis window
    delta = 3 * device.gamma
    n_i = -2 * delta / (3 * device.kerr)
    b_sq = n_i * ((delta + device.kerr * n_i) ** 2 + device.gamma**2) / (2 * device.gamma)
    op = OperatingPoint.at(device, (device.omega0 - delta) / (2 * np.pi), np.sqrt(b_sq))
    assert op.f_ratio < 1 and b_sq > crit.b_c**2
    with pytest.raises(BistableError):
        direct_gain(op, device)


def test_gain_is_unimodal_in_pump_amplitude(device):
    f_p = 1.002 * critical_params(device).f_c
    amps = critical_params(device).b_c * np.linspace(0.02, 3.0, 300)
    g = np.array([direct_gain(OperatingPoint.at(device, f_p, a), device) for a in amps])
    steps = np.sign(np.diff(g))
    assert steps[0] > 0 and steps[-1] < 0
    assert np.count_nonzero(np.diff(steps)) == 1


def test_single_cell_map_equals_direct_gain(device):
    gm = gain_map(device, (1.002, 1.002), (-1.0, -1.0), 1, 1, n_theta=64)
    op = OperatingPoint.from_normalized(device, 1.002, -1.0)
    assert gm.gain_db.shape == (1, 1)
    assert gm.gain_db[0, 0] == direct_gain(op, device, gm.probe_amp, 64)


def test_gain_map_shape_mask_and_peak(device):
    gm = gain_map(device, (0.999, 1.004), (-6.0, 3.0), 41, 31, n_theta=64)
    assert gm.gain_db.shape == (41, 31) == gm.bistable_mask.shape
    assert np.array_equal(np.isnan(gm.gain_db), gm.bistable_mask)
    # only the f_p < f_c side can be bistable
    assert not gm.bistable_mask[gm.f_ratio > 1].any()
    assert gm.bistable_mask[gm.f_ratio < 1].any()
    i, j, peak = gm.max_cell()
    assert peak > 20.0
    assert gm.gain_db[i, j] == peak


def test_gain_map_mask_matches_solver(device):
    gm = gain_map(device, (0.999, 0.9995), (0.0, 3.0), 3, 5, n_theta=16)
    for i, fr in enumerate(gm.f_ratio):
        for j, pd in enumerate(gm.p_ratio_db):
            op = OperatingPoint.from_normalized(device, fr, pd)
            _, bist = photon_number(op.delta(device), np.array([op.pump_amp**2]), device)
            if bist[0]:
                assert gm.bistable_mask[i, j]


def test_gain_map_independent_of_threads(device):
    a = gain_map(device, (0.999, 1.004), (-6.0, 3.0), 9, 7, n_theta=32, threads=1)
    b = gain_map(device, (0.999, 1.004), (-6.0, 3.0), 9, 7, n_theta=32, threads=3)
    np.testing.assert_array_equal(a.gain_db, b.gain_db)


def test_gain_map_rejects_empty_grid(device):
    with pytest.raises(DomainError):
        gain_map(device, n_f=0, n_p=3)


@pytest.mark.parametrize("f_ratio", [1.0003, 1.0005, 1.0015, 1.003])
def test_lmg_is_a_local_maximum_and_stiff(device, f_ratio):
    pt = lmg_point(device, f_ratio * critical_params(device).f_c)
    for scale in (0.99, 1.01):
        op = OperatingPoint.at(device, pt.op.f_p, pt.op.pump_amp * np.sqrt(scale))
        assert direct_gain(op, device) < pt.gain_db
    # first-order insensitivity: < 0.01 dB per 1 % of pump power
    assert abs(pt.power_slope_db) < 0.01


def test_lmg_outside_monostable_side(device):
    with pytest.raises(DomainError):
        lmg_point(device, 0.999 * critical_params(device).f_c)


def test_lmg_amplitude_grows_with_detuning(device):
    pts = lmg_points(device, (1.0005, 1.004), 8)
    deltas = np.array([p.op.delta(device) for p in pts])
    amps = np.array([p.op.pump_amp for p in pts])
    order = np.argsort(deltas)
    assert np.all(np.diff(amps[order]) > 0)
    # and the peak gain rises toward f_c
    gains = np.array([p.gain_db for p in pts])
    assert np.all(np.diff(gains[order]) > 0)


def test_iso_gain_pair(device):
    f_p = 1.002 * critical_params(device).f_c
    (op_b, g_b), (op_a, g_a) = iso_gain_pair(device, f_p, 10.0)
    assert g_b == pytest.approx(10.0, abs=1e-3) and g_a == pytest.approx(10.0, abs=1e-3)
    assert op_a.pump_amp > op_b.pump_amp
    assert direct_gain(op_b, device) == pytest.approx(10.0, abs=1e-3)
    assert iso_gain_pair(device, f_p, 60.0) is None


def test_contour_within_tolerance_and_ordered(device):
    c = iso_gain_contour(device, 8.0, (1.0005, 1.004), 6)
    assert len(c) == 12
    assert c.sides == [BELOW] * 6 + [ABOVE] * 6
    assert np.all(np.abs(np.array(c.gains_db) - 8.0) < 0.05)
    f = np.array([p.f_p for p in c.points])
    assert np.all(np.diff(f[:6]) > 0) and np.all(np.diff(f[6:]) < 0)
    below = {round(p.f_p): p.pump_amp for p, _ in c.branch(BELOW)}
    above = {round(p.f_p): p.pump_amp for p, _ in c.branch(ABOVE)}
    assert all(above[k] > below[k] for k in below)


def test_contour_omits_frequencies_above_lmg(device):
    with pytest.warns(UserWarning, match="omitted"):
        c = iso_gain_contour(device, 15.0, (1.0005, 1.006), 6)
    assert c.omitted_f_p
    assert all(f > max(p.f_p for p in c.points) for f in c.omitted_f_p)


def test_power_cut_order(device):
    pts, sides, gains = power_cut(device, 1.0015, [8.0, 12.0], include_lmg=True)
    assert sides == [BELOW, BELOW, ON, ABOVE, ABOVE]
    amps = [p.pump_amp for p in pts]
    assert amps == sorted(amps)
    assert gains[2] == max(gains)
    with pytest.raises(DomainError):
        power_cut(device, 1.0015, [40.0])


def test_critical_power_reference_planes():
    dev = build_device(defaults()["device"])
    crit = critical_params(dev)
    assert crit.f_c == pytest.approx(7.0032e9, rel=1e-12)
    rep = critical_power_dbm(dev, input_attenuation_db=-70.0)
    assert rep["device_plane_dBm"] == pytest.approx(-88.32, abs=0.01)
    assert rep["generator_plane_dBm"] == pytest.approx(rep["device_plane_dBm"] + 70.0)
