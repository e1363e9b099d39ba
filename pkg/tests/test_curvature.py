import math

import numpy as np
import pytest

from gravinst.curvature import (ContractViolation, curvature, frame_for,
                                sd_project, DegenerateMetricError)
from gravinst.metrics import sample_points


def _flat_cartesian_bundle(points):
    # all four coordinates active; components constant
    frame = frame_for((0, 1, 2, 3), 3)
    P = points.shape[0]
    g = np.zeros((P, 4, 4, frame.ctx.n))
    for a in range(4):
        g[:, a, a, 0] = 1.0
    return frame, curvature(frame, g)


def test_flat_cartesian_riemann_vanishes_exactly():
    pts = np.array([[0.0, 1.0, 2.0, 3.0], [0.3, -1.0, 0.5, 0.1]])
    _, b = _flat_cartesian_bundle(pts)
    assert np.max(np.abs(b.Riemann[..., 0])) < 1e-12
    assert np.max(np.abs(b.Ricci[..., 0])) < 1e-12


def test_eps_eps_two_index_contraction_on_flat_delta():
    # eps_abcd eps^cd_fh = -2 g_ah g_bf + 2 g_af g_bh on the flat delta metric;
    # the +2 entry sits at a=0,b=1,f=0,h=1 per the formula itself
    pts = np.array([[0.0, 1.0, 2.0, 3.0]])
    _, b = _flat_cartesian_bundle(pts)
    eps0 = b.eps_dn[..., 0]
    g_up0 = b.g_up[..., 0]
    eps_ud = np.einsum("pce,pdk,pekfh->pcdfh", g_up0, g_up0, eps0)
    lhs = np.einsum("pabcd,pcdfh->pabfh", eps0, eps_ud)
    assert abs(lhs[0, 0, 1, 0, 1] - 2.0) < 1e-14
    assert abs(lhs[0, 0, 1, 1, 0] + 2.0) < 1e-14
    g0 = b.g_dn[..., 0]
    rhs = -2.0 * np.einsum("pah,pbf->pabfh", g0, g0) \
        + 2.0 * np.einsum("paf,pbh->pabfh", g0, g0)
    assert np.max(np.abs(lhs - rhs)) < 1e-13


def test_eps_normalization():
    pts = np.array([[0.0, 1.0, 2.0, 3.0]])
    _, b = _flat_cartesian_bundle(pts)
    eps0 = b.eps_dn[..., 0]
    g_up0 = b.g_up[..., 0]
    eps_up = np.einsum("pabcd,pae,pbf,pcg,pdh->pefgh", eps0, g_up0, g_up0,
                       g_up0, g_up0)
    assert abs(np.einsum("pabcd,pabcd->p", eps0, eps_up)[0] - 24.0) < 1e-12


def test_schwarzschild_ricci_flat_and_weyl_tracefree(schwarzschild):
    pts = sample_points(schwarzschild, 20, seed=5)
    frame = schwarzschild.frame(3)
    b = curvature(frame, schwarzschild.metric_jets(frame, pts))
    riem = np.max(np.abs(b.Riemann[..., 0]))
    assert np.max(np.abs(b.Ricci[..., 0])) < 1e-12 * riem
    tr = np.einsum("pac,pabcd->pbd", b.g_up[..., 0], b.Weyl[..., 0])
    assert np.max(np.abs(tr)) < 1e-11 * riem


def test_degenerate_metric_rejected():
    frame = frame_for((0, 1, 2, 3), 2)
    g = np.zeros((1, 4, 4, frame.ctx.n))
    with pytest.raises(DegenerateMetricError):
        curvature(frame, g)


def test_sd_projector_algebra(kerr):
    pts = sample_points(kerr, 8, seed=9)
    frame = kerr.frame(3)
    b = curvature(frame, kerr.metric_jets(frame, pts))
    rng = np.random.default_rng(4)
    F = rng.normal(size=(pts.shape[0], 4, 4, 1)) * np.ones((1, 1, 1, frame.ctx.n))
    F = np.ascontiguousarray(F)
    F = 0.5 * (F - np.einsum("pban->pabn", F))
    for sign in (+1, -1):
        X = sd_project(F, b, sign)
        dual = 0.5 * b.ctx.einsum("pabcd,pcd->pab", b.eps_dduu, X)
        nrm = np.max(np.abs(X[..., 0]))
        # eigenvector of the duality operator
        assert np.max(np.abs((dual - sign * X)[..., 0])) < 1e-10 * nrm
        # projector idempotence and annihilation
        again = sd_project(0.5 * X, b, sign)
        assert np.max(np.abs((again - X)[..., 0])) < 1e-10 * nrm
        other = sd_project(0.5 * X, b, -sign)
        assert np.max(np.abs(other[..., 0])) < 1e-10 * nrm
    # X+ + X- = 2F
    Xp = sd_project(F, b, +1)
    Xm = sd_project(F, b, -1)
    assert np.max(np.abs((Xp + Xm - 2.0 * F)[..., 0])) < 1e-12

    # one-index contraction: X_ab X^b_c = -(1/4) X^2 g_ac
    g_up0 = b.g_up[..., 0]
    for X in (Xp, Xm):
        X0 = X[..., 0]
        X_up = np.einsum("pac,pbd,pcd->pab", g_up0, g_up0, X0)
        X2 = np.einsum("pab,pab->p", X0, X_up)
        mixed = np.einsum("pab,pbe->pae", X0, g_up0)
        lhs = np.einsum("pae,pec->pac", mixed, X0)
        rhs = -0.25 * X2[:, None, None] * b.g_dn[..., 0]
        assert np.max(np.abs(lhs - rhs)) < 1e-10 * np.max(np.abs(rhs))


def test_sd_project_rejects_non_antisymmetric(kerr):
    pts = sample_points(kerr, 2, seed=9)
    frame = kerr.frame(3)
    b = curvature(frame, kerr.metric_jets(frame, pts))
    bad = np.zeros((2, 4, 4, frame.ctx.n))
    bad[:, 0, 0, 0] = 1.0
    with pytest.raises(ContractViolation):
        sd_project(bad, b, +1)


def test_zero_two_form_projects_to_zero(schwarzschild):
    pts = sample_points(schwarzschild, 2, seed=3)
    frame = schwarzschild.frame(3)
    b = curvature(frame, schwarzschild.metric_jets(frame, pts))
    zero = np.zeros((2, 4, 4, frame.ctx.n))
    assert np.max(np.abs(sd_project(zero, b, +1))) == 0.0
