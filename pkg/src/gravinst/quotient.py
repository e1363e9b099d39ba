"""Orbit-space scalar layer, verified upstairs through the pullback dictionary.

No quotient chart is ever built: quotient scalars live on the manifold as
invariant functions, quotient one-forms as xi-orthogonal invariant one-forms,
and the two divergence dictionaries are

* covariant route:   grad_a X^a  (Levi-Civita divergence on the manifold)
* density route:     D_mu V^mu = (1/sqrt(det gamma)) d_mu (sqrt(det gamma) V^mu)
                     with sqrt(det gamma) = lambda sqrt(det g) and X^a = lambda V^mu.

The divergence identity in the quotient variables (parameter alpha) matches
the manifold family (parameter beta) under alpha = 2 beta - 1; both the
one-form map and the divergence values are checked.
"""

from __future__ import annotations

import numpy as np

from .curvature import coord_gradient, divergence_terms
from .metrics import TAU

ALPHA_GRID = (0.0, 1.0, 3.0)


def quotient_fields(con, sign):
    """Jets of w, Theta, A_a, k^4 for one duality side."""
    ctx = con.ctx
    P = con.points.shape[0]
    one = ctx.const(np.ones(P))
    E_s = con.side(sign).E
    E_o = con.side(-sign).E
    w_s = ctx.mul(one - E_s, ctx.inv(one + E_s))
    w_o = ctx.mul(one - E_o, ctx.inv(one + E_o))
    theta = one - ctx.mul(w_s, w_o)
    dw_s = coord_gradient(con.bundle.frame, w_s)
    dw_o = coord_gradient(con.bundle.frame, w_o)
    if sign > 0:
        A_dn = 0.5 * (ctx.einsum("p,pa->pa", w_s, dw_o)
                      - ctx.einsum("p,pa->pa", w_o, dw_s))
    else:
        A_dn = 0.5 * (ctx.einsum("p,pa->pa", w_o, dw_s)
                      - ctx.einsum("p,pa->pa", w_s, dw_o))
    lam_inv = ctx.inv(con.lam)
    grad2 = ctx.einsum("pa,pa->p", dw_s,
                       ctx.einsum("pab,pb->pa", con.bundle.g_up, dw_s))
    k4 = ctx.mul(lam_inv, grad2)
    return {"w": w_s, "w_other": w_o, "Theta": theta, "A_dn": A_dn, "k4": k4,
            "dw": dw_s}


def gamma_tensor0(con):
    """Degree-0 quotient metric pullback gamma_ab = lambda g_ab - xi_a xi_b."""
    lam0 = con.lam[:, 0]
    g0 = con.bundle.g_dn[..., 0]
    xi0 = con.xi_dn[..., 0]
    return lam0[:, None, None] * g0 - np.einsum("pa,pb->pab", xi0, xi0)


def density_divergence_terms(con, X_up):
    """Quotient divergence of the vector X^a (xi-orthogonal, invariant), via
    the density route, returned as additive terms of lambda * D_mu V^mu.

    Each coordinate contribution is product-rule split (weight derivative
    against component derivative) so the scale survives on cohomogeneity-one
    backgrounds where whole coordinate terms vanish individually."""
    ctx = con.ctx
    frame = con.bundle.frame
    sqrt_gamma = ctx.mul(con.lam, con.bundle.sqrt_det)
    inv_sg = ctx.inv(sqrt_gamma)
    lam_inv = ctx.inv(con.lam)
    weight = ctx.mul(sqrt_gamma, lam_inv)
    pref = ctx.mul(con.lam, inv_sg)
    terms = []
    for mu in range(4):
        if mu == TAU:
            continue
        t1 = ctx.mul(pref, ctx.mul(frame.coord_deriv(weight, mu), X_up[:, mu]))
        t2 = ctx.mul(pref, ctx.mul(weight, frame.coord_deriv(X_up[:, mu], mu)))
        terms.append(t1[..., 0])
        terms.append(t2[..., 0])
    return terms


def dhat_current(con, sign, alpha):
    """One-form jets of Theta^-1 Dhat^{+-}(k^{alpha+1} / w^alpha)."""
    ctx = con.ctx
    qf = quotient_fields(con, sign)
    k4, w, theta = qf["k4"], qf["w"], qf["Theta"]
    u = ctx.mul(ctx.powf(k4, (alpha + 1.0) / 4.0), ctx.powf(w, -alpha))
    du = coord_gradient(con.bundle.frame, u)
    inv_theta = ctx.inv(theta)
    inner = du - 2.0 * sign * ctx.einsum("p,pa->pa", ctx.mul(inv_theta, u),
                                         qf["A_dn"])
    return ctx.einsum("p,pa->pa", inv_theta, inner), qf, u


def ddkw_sides(con, sign, alpha):
    """LHS terms and RHS terms of the quotient divergence identity at alpha.

    Both sides are the quotient-equation values (pulled back); the LHS is
    lambda^{-1} grad_a of the manifold representative of the current.
    """
    ctx = con.ctx
    X_dn, qf, u = dhat_current(con, sign, alpha)
    X_up = ctx.einsum("pab,pb->pa", con.bundle.g_up, X_dn)
    lam0 = con.lam[:, 0]
    div_terms = divergence_terms(con.bundle, X_up)
    lhs = [t / lam0 for t in div_terms]

    k4_0 = qf["k4"][:, 0]
    k0 = k4_0 ** 0.25
    w0 = qf["w"][:, 0]
    theta0 = qf["Theta"][:, 0]
    dk = coord_gradient(con.bundle.frame, ctx.powf(qf["k4"], 0.25))[..., 0]
    dw = qf["dw"][..., 0]
    Y = dk - (k0 / w0)[:, None] * dw
    g_up0 = con.bundle.g_up[..., 0]
    Y2 = np.einsum("pab,pa,pb->p", g_up0, Y, Y) / lam0
    term1 = alpha * (alpha + 1.0) * k0 ** (alpha - 1.0) / (theta0 * w0 ** alpha) * Y2

    sf = con.side(sign)
    E_s0 = sf.E[:, 0]
    E_o0 = con.side(-sign).E[:, 0]
    c_factor = (1.0 + E_o0) ** 2 / (8.0 * lam0 ** 2 * (1.0 + E_s0) ** 2)
    C2 = c_factor ** 2 * sf.P2_0 / lam0 ** 3
    term2 = (alpha + 1.0) / 16.0 * k0 ** (alpha - 7.0) / w0 ** alpha \
        * theta0 ** 3 * C2
    return lhs, [term1, term2]


def psi_map_residual(con, sign, alpha):
    """The current map: Theta^-1 Dhat u equals 2^(beta-1) Psi^(beta), beta=(alpha+1)/2."""
    beta = (alpha + 1.0) / 2.0
    X_dn, _, _ = dhat_current(con, sign, alpha)
    psi = con.side(sign).Psi_dn[beta]
    factor = 2.0 ** (beta - 1.0)
    return X_dn[..., 0], factor * psi[..., 0]
