import numpy as np

from gravinst.concomitants import concomitants_at
from gravinst.curvature import divergence
from gravinst.metrics import sample_points
from gravinst.quotient import (ALPHA_GRID, dhat_current, ddkw_sides,
                               density_divergence_terms, gamma_tensor0,
                               psi_map_residual, quotient_fields)


def test_gamma_annihilates_killing_field(kerr):
    pts = sample_points(kerr, 10, seed=4)
    con = concomitants_at(kerr, pts)
    gamma0 = gamma_tensor0(con)
    xi_up0 = con.xi_up[..., 0]
    contr = np.einsum("pab,pb->pa", gamma0, xi_up0)
    assert np.max(np.abs(contr)) < 1e-12 * np.max(np.abs(gamma0))


def test_A_is_orthogonal_to_killing_field(kerr, taub_bolt):
    for model in (kerr, taub_bolt):
        pts = sample_points(model, 8, seed=6)
        con = concomitants_at(model, pts)
        qf = quotient_fields(con, +1)
        A0 = qf["A_dn"][..., 0]
        contr = np.einsum("pa,pa->p", A0, con.xi_up[..., 0])
        assert np.max(np.abs(contr)) < 1e-12 * max(np.max(np.abs(A0)), 1e-30)


def test_schwarzschild_A_vanishes(schwarzschild):
    # hypersurface-orthogonal: w+ = w-, so A = 0
    pts = sample_points(schwarzschild, 8, seed=6)
    con = concomitants_at(schwarzschild, pts)
    qf = quotient_fields(con, +1)
    scale = np.max(np.abs(qf["dw"][..., 0]))
    assert np.max(np.abs(qf["A_dn"][..., 0])) < 1e-12 * scale


def test_type_d_sides_have_vanishing_p_tensor(all_models):
    for model in all_models:
        if model.is_flat:
            continue
        pts = sample_points(model, 10, seed=8)
        con = concomitants_at(model, pts)
        for s in (+1, -1):
            sf = con.side(s)
            if sf.P0 is None:
                continue
            w_scale = np.max(np.abs(con.bundle.Wpm[s][..., 0]))
            lam0 = con.lam[:, 0]
            bound = 1e-8 * w_scale * np.max(lam0 ** 1.5)
            assert np.max(np.abs(sf.P0)) < bound, model.name


def test_ddkw_identity_all_alphas(kerr, taub_bolt, taub_nut):
    for model in (kerr, taub_bolt, taub_nut):
        pts = sample_points(model, 12, seed=10)
        con = concomitants_at(model, pts)
        for s in (+1, -1):
            if con.side(s).s2 is None:
                continue
            for alpha in ALPHA_GRID:
                lhs, rhs = ddkw_sides(con, s, alpha)
                total = sum(lhs) - sum(rhs)
                scale = max(max(np.max(np.abs(t)) for t in lhs),
                            max(np.max(np.abs(t)) for t in rhs))
                assert np.max(np.abs(total)) < 1e-8 * scale, (model.name, s, alpha)


def test_current_map_factor(kerr):
    # Theta^-1 Dhat(k^(a+1)/w^a) = 2^(beta-1) Psi^(beta) under alpha = 2b - 1
    pts = sample_points(kerr, 10, seed=12)
    con = concomitants_at(kerr, pts)
    for s in (+1, -1):
        for alpha in ALPHA_GRID:
            lhs, rhs = psi_map_residual(con, s, alpha)
            scale = max(np.max(np.abs(rhs)), 1e-30)
            assert np.max(np.abs(lhs - rhs)) < 1e-9 * scale
            # and the factor is not trivially 1 for beta != 1
            if alpha != 1.0:
                assert np.max(np.abs(lhs)) > 0


def test_divergence_dictionary(kerr):
    # cov divergence = lambda * (quotient density divergence) for invariant
    # xi-orthogonal vectors; the scale comes from the density-route terms so
    # conserved currents (whose divergence is zero) are judged fairly
    pts = sample_points(kerr, 10, seed=3)
    con = concomitants_at(kerr, pts)
    for X_up in (con.side(+1).sigma_up, con.side(-1).sigma_up, con.JD_up):
        cov = divergence(con.bundle, X_up)[..., 0]
        terms = density_divergence_terms(con, X_up)
        dens = sum(terms)
        scale = max(max(np.max(np.abs(t)) for t in terms), 1e-30)
        assert np.max(np.abs(cov - dens)) < 1e-9 * scale


def test_quotient_twist_current_conservation(kerr, taub_bolt):
    # div(lambda^-2 omega) = 0 through the quotient density route
    for model in (kerr, taub_bolt):
        pts = sample_points(model, 10, seed=5)
        con = concomitants_at(model, pts)
        terms = density_divergence_terms(con, con.JT_up)
        scale = max(max(np.max(np.abs(t)) for t in terms), 1e-30)
        assert np.max(np.abs(sum(terms))) < 1e-9 * scale


def test_half_flat_side_keeps_w_zero(taub_nut):
    pts = sample_points(taub_nut, 6, seed=2)
    con = concomitants_at(taub_nut, pts)
    qf = quotient_fields(con, taub_nut.half_flat_side)
    assert np.max(np.abs(qf["w"][:, 0])) < 1e-10
    assert np.max(np.abs(qf["Theta"][:, 0] - 1.0)) < 1e-10
