import math

import numpy as np
import pytest

from gravinst.concomitants import (CalibrationError, FixedPointError,
                                   NormalizationViolation, calibration_for,
                                   concomitants_at, ernst_calibrate,
                                   petrov_classify, quotient_scalars,
                                   twist_oneform_values, twist_potential)
from gravinst.metrics import sample_points


def test_schwarzschild_is_hypersurface_orthogonal(schwarzschild):
    pts = sample_points(schwarzschild, 10, seed=3)
    con = concomitants_at(schwarzschild, pts)
    assert np.max(np.abs(con.omega[:, 0])) < 1e-12
    for s in (+1, -1):
        E0 = con.side(s).E[:, 0]
        assert np.max(np.abs(E0 - con.lam[:, 0])) < 1e-12


def test_schwarzschild_calibration_tail(schwarzschild):
    cal = calibration_for(schwarzschild)
    assert abs(cal.b_plus + 2.0) < 1e-9
    assert abs(cal.b_minus + 2.0) < 1e-9
    assert cal.b_omega == 0.0
    assert abs(cal.tail_exponent_plus + 1.0) < 1e-6


def test_taub_nut_half_flat_side_has_unit_ernst(taub_nut):
    cal = calibration_for(taub_nut)
    hf = taub_nut.half_flat_side
    assert hf in (+1, -1)
    assert abs(cal.b(hf)) < 1e-8
    assert cal.b(-hf) < -1e-3
    pts = sample_points(taub_nut, 8, seed=5)
    con = concomitants_at(taub_nut, pts)
    assert np.max(np.abs(con.side(hf).E[:, 0] - 1.0)) < 1e-10
    assert np.max(np.abs(con.side(hf).F2[:, 0])) < 1e-20


def test_kerr_b_negative_both_sides(kerr):
    cal = calibration_for(kerr)
    assert cal.b_plus < 0 and cal.b_minus < 0
    assert abs(cal.b_plus + 2.0) < 1e-7 and abs(cal.b_minus + 2.0) < 1e-7


def test_f2_difference_is_eight_nu(kerr):
    pts = sample_points(kerr, 25, seed=11)
    con = concomitants_at(kerr, pts)
    diff = con.side(+1).F2[:, 0] - con.side(-1).F2[:, 0]
    resid = np.abs(diff - 8.0 * con.nu[:, 0])
    scale = np.max(np.abs(con.side(+1).F2[:, 0]))
    assert np.max(resid) < 1e-10 * scale


def test_flat_has_trivial_concomitants(flat):
    pts = sample_points(flat, 6, seed=2, lam_min=0.0)
    con = concomitants_at(flat, pts)
    assert np.max(np.abs(con.F_dn[..., 0])) == 0.0
    for s in (+1, -1):
        assert np.max(np.abs(con.side(s).sigma_dn[..., 0])) == 0.0
        assert np.max(np.abs(con.side(s).E[:, 0] - 1.0)) < 1e-15
        assert con.side(s).s2 is None  # Mars-Simon fields withheld


def test_fixed_point_error_on_zero_norm(schwarzschild):
    bad = np.array([(0.0, 2.0, 1.0, 0.0)])  # on the bolt: lambda = 0
    with pytest.raises(FixedPointError):
        concomitants_at(schwarzschild, bad)


def test_twist_potential_path_independence(kerr):
    # second path: radial leg at theta2 plus an angular leg at fixed radius
    r1, th1, th2 = 6.0, 0.9, 1.9
    direct = twist_potential(kerr, np.array([(0.0, r1, th1, 0.0)]))[0]
    via = twist_potential(kerr, np.array([(0.0, r1, th2, 0.0)]))[0]
    x, w = np.polynomial.legendre.leggauss(120)
    th = 0.5 * (x + 1.0) * (th1 - th2) + th2
    pts = np.stack([np.zeros_like(th), np.full_like(th, r1), th,
                    np.zeros_like(th)], axis=1)
    om_th = twist_oneform_values(kerr, pts)[:, 2]
    leg = float(np.sum(0.5 * (th1 - th2) * w * om_th))
    assert abs(direct - (via + leg)) < 1e-10


def test_taub_nut_twist_equals_norm_deficit(taub_nut):
    # with E identically 1 on the half-flat side, omega = +-(lambda - 1)
    pts = sample_points(taub_nut, 6, seed=8)
    om = twist_potential(taub_nut, pts)
    lam = taub_nut.lam(pts)
    sign = -taub_nut.half_flat_side
    assert np.max(np.abs(om - sign * (lam - 1.0))) < 1e-12


def test_quotient_scalars_closed_form_point(schwarzschild):
    # lambda = 1/2 at r = 4m with omega = 0: w = 1/3, Theta = 8/9
    pts = np.array([(0.0, 4.0, math.pi / 2, 0.0)])
    con = concomitants_at(schwarzschild, pts)
    qs = quotient_scalars(con)
    assert abs(qs[("w", +1)][0] - 1.0 / 3.0) < 1e-12
    assert abs(qs[("w", -1)][0] - 1.0 / 3.0) < 1e-12
    assert abs(qs["Theta"][0] - 8.0 / 9.0) < 1e-12


def test_quotient_scalars_identities(taub_bolt):
    pts = sample_points(taub_bolt, 12, seed=4)
    con = concomitants_at(taub_bolt, pts)
    qs = quotient_scalars(con)
    Ep, Em = con.side(+1).E[:, 0], con.side(-1).E[:, 0]
    lam0 = con.lam[:, 0]
    assert np.max(np.abs(qs["Theta"] - 4 * lam0 / ((1 + Ep) * (1 + Em)))) < 1e-10
    for s in (+1, -1):
        s2 = con.side(s).s2[:, 0]
        w = qs[("w", s)]
        assert np.max(np.abs(qs[("k4", s)] - 4 * w ** 4 * s2)) \
            < 1e-10 * np.max(np.abs(qs[("k4", s)]))


def test_mars_simon_scalar_is_inverse_b_squared(all_models):
    # on a type-D side the Mars-Simon scalar equals 1/b^2 identically
    for model in all_models:
        if model.is_flat:
            continue
        cal = calibration_for(model)
        pts = sample_points(model, 10, seed=6)
        con = concomitants_at(model, pts)
        for s in (+1, -1):
            sf = con.side(s)
            if sf.s2 is None:
                continue
            expected = 1.0 / cal.b(s) ** 2
            assert np.max(np.abs(sf.s2[:, 0] - expected)) < 1e-6 * expected


def test_petrov_classifications(all_models):
    expected = {"schwarzschild": {1: "type-D", -1: "type-D"},
                "kerr": {1: "type-D", -1: "type-D"},
                "taub-bolt": {1: "type-D", -1: "type-D"}}
    for model in all_models:
        if model.is_flat:
            continue
        pts = sample_points(model, 24, seed=9)
        res = petrov_classify(concomitants_at(model, pts))
        got = {s: res[s]["classification"] for s in (+1, -1)}
        if model.name == "taub-nut":
            assert sorted(got.values()) == ["half-flat", "type-D"]
            assert got[model.half_flat_side] == "half-flat"
        else:
            assert got == expected[model.name]
            for s in (+1, -1):
                diag = res[s]["diagnostics"]
                assert diag["s2_rel_std"] < 1e-6
                assert diag["ms_ratio"] < 1e-7


def test_j_current_combination(kerr):
    # J = +-J_T - 2 J_D +- J_E reproduces the stored J current
    pts = sample_points(kerr, 10, seed=14)
    con = concomitants_at(kerr, pts)
    for s in (+1, -1):
        combo = (s * con.JT_up - 2.0 * con.JD_up + s * con.JE_up)[..., 0]
        got = con.side(s).J_up[..., 0]
        assert np.max(np.abs(combo - got)) < 1e-9 * max(np.max(np.abs(got)), 1e-12)


def test_normalization_violation_guard(schwarzschild):
    pts = sample_points(schwarzschild, 4, seed=3)
    con = concomitants_at(schwarzschild, pts)
    con.side(+1).E[:, 0] = 1.5  # corrupt
    with pytest.raises(NormalizationViolation):
        quotient_scalars(con)


def test_mutated_calibration_waives_theorem_checks(schwarzschild):
    broken = schwarzschild.mutated(1e-3)
    cal = ernst_calibrate(broken)  # must not raise despite b-sign freedom
    assert cal.R_ref > 0
