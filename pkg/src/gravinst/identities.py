"""Registry of pointwise identity checks and the verification runner.

Every identity is registered as an :class:`IdentitySpec` whose evaluator
returns the additive terms of both sides; the runner forms the residual
``|sum(lhs) - sum(rhs)|`` and the cancellation-aware scale ``max |term|``
per point, so identities built from near-cancelling O(1) pieces are judged
relative to those pieces.  Inequality checks return value terms plus scale
terms instead.

Pass rule: ``max_rel_residual < tol`` or ``max_abs_residual < floor``;
defaults tol = 1e-8, floor = 1e-12.  Tolerances are pinned here, not at call
sites.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, asdict, replace as dc_replace

import numpy as np

from .curvature import (coord_gradient, divergence_terms, laplacian_terms, LC)
from .concomitants import concomitants_at, calibration_for, twist_potential
from .metrics import sample_points, TAU, R, TH, PH
from . import quotient as qt

TOL_REL = 1e-8
FLOOR_ABS = 1e-12
INEQ_TOL = 1e-10


@dataclass(frozen=True)
class IdentitySpec:
    ident: str
    kind: str                  # "algebraic" | "differential" | "inequality"
    min_order: int
    per_side: bool
    needs_ms: bool
    evaluate: object
    description: str = ""


REGISTRY: dict[str, IdentitySpec] = {}


def _register(ident, kind, min_order=4, per_side=True, needs_ms=False, description=""):
    def deco(fn):
        REGISTRY[ident] = IdentitySpec(ident, kind, min_order, per_side, needs_ms,
                                       fn, description)
        return fn
    return deco


def _d0(arr):
    return arr[..., 0]


def _grad0(con, jet):
    return coord_gradient(con.bundle.frame, jet)[..., 0]


# ---------------------------------------------------------------------------
# Algebraic identities

@_register("eq:F2munu", "algebraic", min_order=2,
           description="squared (A)SD field vs the invariants mu, nu")
def _e_f2munu(con, s):
    return [_d0(con.side(s).F2)], [4.0 * _d0(con.mu), 4.0 * s * _d0(con.nu)]


@_register("eq:Fsigma", "algebraic", min_order=2)
def _e_fsigma(con, s):
    sf = con.side(s)
    lhs = np.einsum("pab,pb->pa", _d0(sf.F_dn),
                    np.einsum("pbc,pc->pb", _d0(con.bundle.g_up), _d0(sf.sigma_dn)))
    return [lhs], [-0.5 * _d0(sf.F2)[:, None] * _d0(con.xi_dn)]


@_register("eq:sigmasq", "algebraic", min_order=2)
def _e_sigmasq(con, s):
    sf = con.side(s)
    lhs = np.einsum("pa,pa->p", _d0(sf.sigma_dn), _d0(sf.sigma_up))
    return [lhs], [_d0(sf.F2) * _d0(con.lam)]


@_register("eq:dEcal", "algebraic", min_order=2,
           description="sigma = grad(lambda) +/- twist one-form")
def _e_decal(con, s):
    dlam = _grad0(con, con.lam)
    return [_d0(con.side(s).sigma_dn)], [dlam, s * _d0(con.omega_dn)]


@_register("eq:Ecal-lam-om", "algebraic", min_order=2,
           description="Ernst potential as norm plus/minus twist potential")
def _e_elamom(con, s):
    return [_d0(con.side(s).E)], [_d0(con.lam), s * _d0(con.omega)]


@_register("eq:lamF", "algebraic", min_order=2, per_side=False,
           description="lambda F_ab decomposition into twist and norm gradient")
def _e_lamf(con, s):
    lam0 = _d0(con.lam)
    F0 = _d0(con.F_dn)
    eps0 = _d0(con.bundle.eps_dn)
    om_up0 = _d0(con.omega_up)
    xi0 = _d0(con.xi_dn)
    xi_up0 = _d0(con.xi_up)
    dlam = _grad0(con, con.lam)
    t1 = -0.5 * np.einsum("pabcd,pc,pd->pab", eps0, xi_up0, om_up0)
    t2 = -0.5 * (np.einsum("pa,pb->pab", xi0, dlam)
                 - np.einsum("pb,pa->pab", xi0, dlam))
    return [lam0[:, None, None] * F0], [t1, t2]


@_register("eq:FcalFcal1contr", "algebraic", min_order=2,
           description="one-index contraction of an (A)SD two-form with itself")
def _e_ffcontr(con, s):
    sf = con.side(s)
    g_up0 = _d0(con.bundle.g_up)
    F0 = _d0(sf.F_dn)
    mixed = np.einsum("pab,pbe->pae", F0, g_up0)
    lhs = np.einsum("pae,pec->pac", mixed, F0)
    return [lhs], [-0.25 * _d0(sf.F2)[:, None, None] * _d0(con.bundle.g_dn)]


@_register("eq:epseps2", "algebraic", min_order=1, per_side=False)
def _e_epseps2(con, s):
    eps0 = _d0(con.bundle.eps_dn)
    g_up0 = _d0(con.bundle.g_up)
    g0 = _d0(con.bundle.g_dn)
    eps_ud = np.einsum("pce,pdk,pekfh->pcdfh", g_up0, g_up0, eps0)
    lhs = np.einsum("pabcd,pcdfh->pabfh", eps0, eps_ud)
    rhs1 = -2.0 * np.einsum("pah,pbf->pabfh", g0, g0)
    rhs2 = 2.0 * np.einsum("paf,pbh->pabfh", g0, g0)
    return [lhs], [rhs1, rhs2]


@_register("eq:epseps1", "algebraic", min_order=1, per_side=False)
def _e_epseps1(con, s):
    eps0 = _d0(con.bundle.eps_dn)
    g_up0 = _d0(con.bundle.g_up)
    g0 = _d0(con.bundle.g_dn)
    lhs = np.einsum("pabcd,pdk,pkefh->pabcefh", eps0, g_up0, eps0)
    t = [np.einsum("pah,pbf,pce->pabcefh", g0, g0, g0),
         -np.einsum("paf,pbh,pce->pabcefh", g0, g0, g0),
         -np.einsum("pah,pbe,pcf->pabcefh", g0, g0, g0),
         np.einsum("pae,pbh,pcf->pabcefh", g0, g0, g0),
         np.einsum("paf,pbe,pch->pabcefh", g0, g0, g0),
         -np.einsum("pae,pbf,pch->pabcefh", g0, g0, g0)]
    return [lhs], t


@_register("eq:eps-norm", "algebraic", min_order=1, per_side=False,
           description="eps_{abcd} eps^{abcd} = 24")
def _e_epsnorm(con, s):
    eps0 = _d0(con.bundle.eps_dn)
    g_up0 = _d0(con.bundle.g_up)
    eps_up = np.einsum("pabcd,pae,pbf,pcg,pdh->pefgh", eps0, g_up0, g_up0, g_up0,
                       g_up0)
    lhs = np.einsum("pabcd,pabcd->p", eps0, eps_up)
    return [lhs], [np.full(lhs.shape, 24.0)]


@_register("eq:killing", "algebraic", min_order=2, per_side=False,
           description="symmetrized derivative of the Killing field vanishes")
def _e_killing(con, s):
    F0 = _d0(con.F_dn)
    nab = con.killing_sym0 + F0      # grad_a xi_b
    return [0.5 * nab, 0.5 * np.einsum("pab->pba", nab)], []


# ---------------------------------------------------------------------------
# Curvature structure checks

@_register("eq:riemann-antisym", "algebraic", min_order=3, per_side=False)
def _e_riemsym(con, s):
    R0 = _d0(con.bundle.Riemann)
    return [R0, np.einsum("pbacd->pabcd", R0)], [], [con.bundle.curv_scale0]


@_register("eq:riemann-pairsym", "algebraic", min_order=3, per_side=False)
def _e_riempair(con, s):
    R0 = _d0(con.bundle.Riemann)
    return [R0, -np.einsum("pcdab->pabcd", R0)], [], [con.bundle.curv_scale0]


@_register("eq:bianchi1", "algebraic", min_order=3, per_side=False)
def _e_bianchi(con, s):
    R0 = _d0(con.bundle.Riemann)
    return [R0, np.einsum("pbcad->pabcd", R0),
            np.einsum("pcabd->pabcd", R0)], [], [con.bundle.curv_scale0]


@_register("eq:weyl-tracefree", "algebraic", min_order=3, per_side=False)
def _e_weyltrace(con, s):
    W0 = _d0(con.bundle.Weyl)
    g_up0 = _d0(con.bundle.g_up)
    terms = [np.einsum("pa,pabd->pbd", g_up0[:, :, c], W0[:, :, :, c, :])
             for c in range(4)]
    gscale = np.max(np.abs(g_up0), axis=(1, 2))
    return terms, [], [gscale * con.bundle.curv_scale0]


# ---------------------------------------------------------------------------
# Differential identities (Prop 4.2 and onward)

@_register("eq:nablaFcal", "differential", min_order=3)
def _e_nablafcal(con, s):
    # F^{+-} and W^{+-} are 2-term cancellations on a half-flat side, so both
    # are split into their plain and dualized pieces for the residual scale.
    sf = con.side(s)
    ctx = con.ctx
    dual_F = sf.F_dn - con.F_dn

    def dstack(t):
        return np.stack([con.bundle.frame.coord_deriv(t, mu) for mu in range(4)],
                        axis=1)[..., 0]

    corr_a = ctx.einsum("pdca,pdb->pcab", con.bundle.Gamma, sf.F_dn)[..., 0]
    corr_b = ctx.einsum("pdcb,pad->pcab", con.bundle.Gamma, sf.F_dn)[..., 0]
    W0 = _d0(con.bundle.Weyl)
    dualW0 = _d0(con.bundle.Wpm[s]) - W0
    xi0 = _d0(con.xi_up)
    rhs1 = -np.einsum("pabcd,pd->pcab", W0, xi0)
    rhs2 = -np.einsum("pabcd,pd->pcab", dualW0, xi0)
    return ([dstack(con.F_dn), dstack(dual_F), -corr_a, -corr_b], [rhs1, rhs2],
            [con.bundle.curv_scale0])


@_register("eq:nablaFsq", "differential", min_order=3)
def _e_nablafsq(con, s):
    sf = con.side(s)
    W0 = _d0(con.bundle.Wpm[s])
    rhs = -2.0 * np.einsum("pabcd,pab,pd->pc", W0, _d0(sf.F_up), _d0(con.xi_up))
    return [_grad0(con, sf.F2)], [rhs]


def _grad0_oneform(con, w_dn):
    return np.stack([con.bundle.frame.coord_deriv(w_dn, mu)[..., 0]
                     for mu in range(4)], axis=1)


@_register("eq:dsigmapm", "differential", min_order=3)
def _e_dsigma(con, s):
    # split sigma into its plain and dualized F-contractions for the scale
    part_plain = 2.0 * con.ctx.einsum("pab,pb->pa", con.F_dn, con.xi_up)
    part_dual = con.side(s).sigma_dn - part_plain
    d1 = _grad0_oneform(con, part_plain)
    d2 = _grad0_oneform(con, part_dual)
    return [0.5 * d1, 0.5 * d2,
            -0.5 * np.einsum("pab->pba", d1), -0.5 * np.einsum("pab->pba", d2)], []


@_register("eq:divsigma", "differential", min_order=3)
def _e_divsigma(con, s):
    sf = con.side(s)
    return divergence_terms(con.bundle, sf.sigma_up), [_d0(sf.F2)]


@_register("eq:laplaceFsq", "differential", min_order=3)
def _e_lapfsq(con, s):
    sf = con.side(s)
    W0 = _d0(con.bundle.Wpm[s])
    WFF = np.einsum("pabcd,pab,pcd->p", W0, _d0(sf.F_up), _d0(sf.F_up))
    rhs2 = 0.5 * _d0(con.lam) * _d0(con.bundle.Wpm_sq[s])
    return laplacian_terms(con.bundle, sf.F2), [-WFF, rhs2]


@_register("eq:DeltaEcal", "differential", min_order=3,
           description="Ernst equation lambda Lap E = |grad E|^2")
def _e_ernst(con, s):
    sf = con.side(s)
    lam0 = _d0(con.lam)
    lhs = [lam0 * t for t in laplacian_terms(con.bundle, sf.E)]
    dE = _grad0(con, sf.E)
    rhs = np.einsum("pab,pa,pb->p", _d0(con.bundle.g_up), dE, dE)
    return lhs, [rhs]


@_register("eq:JT-cons", "differential", min_order=3, per_side=False)
def _e_jt(con, s):
    return divergence_terms(con.bundle, con.JT_up), []


@_register("eq:JD-cons", "differential", min_order=3, per_side=False)
def _e_jd(con, s):
    return divergence_terms(con.bundle, con.JD_up), []


@_register("eq:JE-cons", "differential", min_order=3, per_side=False)
def _e_je(con, s):
    return divergence_terms(con.bundle, con.JE_up), []


@_register("eq:nabla+Gamma", "differential", min_order=3, needs_ms=True)
def _e_nablagamma(con, s):
    sf = con.side(s)
    dq = _grad0(con, sf.q)
    gam_q = _d0(sf.Gamma_dn) * _d0(sf.q)[:, None]
    return [dq, gam_q], [-_d0(sf.J_dn)]


@_register("eq:nablaMSscalar", "differential", min_order=3, needs_ms=True)
def _e_nablams(con, s):
    sf = con.side(s)
    E0 = _d0(sf.E)
    rhs = -2.0 * np.einsum("pabcd,pcd,pb->pa", sf.S0, _d0(sf.F_up), _d0(con.xi_up)) \
        / (1.0 - E0[:, None]) ** 4
    return sf.grad_s2_terms, [rhs]


@_register("eq:MSid", "differential", min_order=4, needs_ms=True)
def _e_msid(con, s):
    sf = con.side(s)
    E0, Eo0 = _d0(sf.E), _d0(con.side(-s).E)
    lam0 = _d0(con.lam)
    rhs1 = sf.S2_0 * lam0 / (2.0 * (1.0 - E0) ** 4)
    rhs2 = -(1.0 + Eo0) / (1.0 - E0) ** 5 * sf.FFS_0
    return sf.lap_s2_terms, [rhs1, rhs2]


@_register("eq:LaplaceMSscalarprel", "differential", min_order=4, needs_ms=True)
def _e_msprel(con, s):
    sf = con.side(s)
    lam0 = _d0(con.lam)
    gam_ds = np.einsum("pa,pa->p",
                       np.einsum("pab,pb->pa", _d0(con.bundle.g_up),
                                 _d0(sf.Gamma_dn)), sf.ds2_0)
    rhs = sf.S2_0 * lam0 / (2.0 * _d0(sf.F2)) * _d0(sf.s2)
    return sf.lap_s2_terms + [-gam_ds], [rhs]


def _register_beta_family():
    from .concomitants import BETA_GRID

    def lap_ms(beta):
        def ev(con, s):
            sf = con.side(s)
            gam_ds = np.einsum("pa,pa->p",
                               np.einsum("pab,pb->pa", _d0(con.bundle.g_up),
                                         _d0(sf.Gamma_dn)), sf.dgrad_s_beta[beta])
            lhs = sf.lap_s_beta_terms[beta] + [-gam_ds]
            return lhs, [sf.V0[beta] * _d0(sf.s_beta[beta])]
        return ev

    def div_psi(beta):
        def ev(con, s):
            sf = con.side(s)
            lhs = divergence_terms(con.bundle,
                                   con.ctx.einsum("pab,pb->pa", con.bundle.g_up,
                                                  sf.Psi_dn[beta]))
            rhs = 0.5 * _d0(sf.q) * sf.V0[beta] * _d0(sf.s_beta[beta])
            return lhs, [rhs]
        return ev

    def v_pos(beta):
        def ev(con, s):
            sf = con.side(s)
            lam0 = _d0(con.lam)
            F2_0 = _d0(sf.F2)
            t1 = beta * lam0 * F2_0 * sf.S2_0 / (4.0 * F2_0 ** 2)
            t2 = beta * lam0 * abs(beta - 2.0) * np.abs(sf.FS2_0) / (4.0 * F2_0 ** 2)
            return [sf.V0[beta]], [t1, t2]
        return ev

    for beta in BETA_GRID:
        tag = f"beta={beta:g}"
        REGISTRY[f"eq:LaplaceMSscalar:{tag}"] = IdentitySpec(
            f"eq:LaplaceMSscalar:{tag}", "differential", 4, True, True,
            lap_ms(beta), "modified Laplace equation for |s|^beta")
        REGISTRY[f"eq:DivPsialpha:{tag}"] = IdentitySpec(
            f"eq:DivPsialpha:{tag}", "differential", 4, True, True,
            div_psi(beta), "divergence identity for Psi^(beta)")
        if beta in (0.5, 1.0, 2.0):
            REGISTRY[f"eq:Vpm-positivity:{tag}"] = IdentitySpec(
                f"eq:Vpm-positivity:{tag}", "inequality", 4, True, True,
                v_pos(beta), "V(beta) >= 0 for beta >= 1/2")


_register_beta_family()


@_register("eq:DivPsi-rhs-positivity", "inequality", min_order=4, needs_ms=True,
           description="RHS of the beta=1 divergence identity is nonnegative")
def _e_rhs_pos(con, s):
    sf = con.side(s)
    val = 0.5 * _d0(sf.q) * sf.V0[1.0] * _d0(sf.s_beta[1.0])
    scale = np.abs(0.5 * _d0(sf.q) * _d0(sf.s_beta[1.0])) \
        * _d0(con.lam) * (np.abs(_d0(sf.F2) * sf.S2_0) + np.abs(sf.FS2_0)) \
        / (4.0 * _d0(sf.F2) ** 2)
    return [val], [scale]


@_register("eq:stst-squares", "algebraic", min_order=4, needs_ms=True,
           description="squares decomposition of the Simon-tensor counterpart")
def _e_stst(con, s):
    sf = con.side(s)
    lam0 = _d0(con.lam)
    return [2.0 * sf.P2_0 / lam0 ** 3], \
        [_d0(sf.F2) * sf.S2_0, -1.5 * sf.FS2_0]


# ---------------------------------------------------------------------------
# Quotient layer identities

@_register("C.eq:Th", "algebraic", min_order=4, per_side=False)
def _e_theta(con, s):
    Ep0, Em0 = _d0(con.side(+1).E), _d0(con.side(-1).E)
    wp = (1.0 - Ep0) / (1.0 + Ep0)
    wm = (1.0 - Em0) / (1.0 + Em0)
    return [1.0 - wp * wm], [4.0 * _d0(con.lam) / ((1.0 + Ep0) * (1.0 + Em0))]


@_register("C.eq:k4", "algebraic", min_order=4, needs_ms=True)
def _e_k4(con, s):
    qf = qt.quotient_fields(con, s)
    w0 = _d0(qf["w"])
    s2_0 = _d0(con.side(s).s2)
    return [_d0(qf["k4"])], [4.0 * w0 ** 4 * s2_0]


@_register("C.eq:A", "algebraic", min_order=4, per_side=False,
           description="two expressions for the quotient one-form A")
def _e_aform(con, s):
    qf = qt.quotient_fields(con, +1)
    Ep0, Em0 = _d0(con.side(+1).E), _d0(con.side(-1).E)
    sp0, sm0 = _d0(con.side(+1).sigma_dn), _d0(con.side(-1).sigma_dn)
    den = (1.0 + Ep0) ** 2 * (1.0 + Em0) ** 2
    rhs1 = (1.0 - Em0 ** 2)[:, None] * sp0 / den[:, None]
    rhs2 = -(1.0 - Ep0 ** 2)[:, None] * sm0 / den[:, None]
    return [_d0(qf["A_dn"])], [rhs1, rhs2]


@_register("C.eq:divom", "differential", min_order=3, per_side=False,
           description="quotient conservation of the twist current (density route)")
def _e_divom(con, s):
    return qt.density_divergence_terms(con, con.JT_up), []


@_register("C.eq:dict", "algebraic", min_order=3, per_side=False,
           description="divergence dictionary between manifold and quotient")
def _e_dict(con, s):
    X_up = con.side(+1).sigma_up
    cov = divergence_terms(con.bundle, X_up)
    dens = qt.density_divergence_terms(con, X_up)
    return cov, dens


def _register_alpha_family():
    def ddkw(alpha):
        def ev(con, s):
            return qt.ddkw_sides(con, s, alpha)
        return ev

    def psi_map(alpha):
        def ev(con, s):
            lhs, rhs = qt.psi_map_residual(con, s, alpha)
            return [lhs], [rhs]
        return ev

    for alpha in qt.ALPHA_GRID:
        tag = f"alpha={alpha:g}"
        REGISTRY[f"C.eq:ddkw:{tag}"] = IdentitySpec(
            f"C.eq:ddkw:{tag}", "differential", 4, True, True, ddkw(alpha),
            "quotient divergence identity via the pullback dictionary")
        REGISTRY[f"C.eq:psi-map:{tag}"] = IdentitySpec(
            f"C.eq:psi-map:{tag}", "algebraic", 4, True, True, psi_map(alpha),
            "current map between quotient and manifold families (alpha = 2 beta - 1)")


_register_alpha_family()


# ---------------------------------------------------------------------------
# Reports and the runner

@dataclass
class VerificationReport:
    metric: str
    parameters: dict
    identity: str
    side: str                 # "+", "-", or "both"
    n_points: int
    max_abs_residual: float | None
    max_rel_residual: float | None
    scale: float | None
    passed: bool | None
    skipped: str | None
    seed: int
    jet_order: int
    orientation: str
    tolerance: float
    floor: float

    def to_dict(self):
        return asdict(self)


def _term_reduce(terms):
    """Stack terms -> (sum, per-point max |term|)."""
    total = sum(terms)
    comp_axes = tuple(range(1, total.ndim))
    scale = np.zeros(total.shape[0])
    for t in terms:
        mag = np.abs(t)
        if comp_axes:
            mag = mag.max(axis=comp_axes)
        scale = np.maximum(scale, mag)
    return total, scale


def evaluate_identity(spec, con, side, tol=TOL_REL, floor=FLOOR_ABS):
    """Residual statistics for one identity at one side; None side for sign-free.

    Evaluators may return a third element of scale-only terms; those widen the
    cancellation scale without entering the residual sums.
    """
    out = spec.evaluate(con, side if side is not None else +1)
    lhs, rhs = out[0], out[1]
    scale_only = out[2] if len(out) > 2 else []
    if spec.kind == "inequality":
        value = sum(lhs)
        _, scale = _term_reduce(rhs)
        worst = np.min(value + np.maximum(INEQ_TOL * scale, floor))
        ok = bool(worst >= 0.0)
        return {"max_abs_residual": float(max(0.0, -np.min(value))),
                "max_rel_residual": float(max(0.0, -np.min(
                    value / np.maximum(scale, 1e-300)))),
                "scale": float(np.max(scale)), "passed": ok}
    ltot, lscale = _term_reduce(lhs)
    if rhs:
        rtot, rscale = _term_reduce(rhs)
    else:
        rtot, rscale = np.zeros_like(ltot), np.zeros_like(lscale)
    resid = np.abs(ltot - rtot)
    comp_axes = tuple(range(1, resid.ndim))
    if comp_axes:
        resid = resid.max(axis=comp_axes)
    scale = np.maximum(lscale, rscale)
    for t in scale_only:
        mag = np.abs(t)
        axes = tuple(range(1, mag.ndim))
        if axes:
            mag = mag.max(axis=axes)
        scale = np.maximum(scale, mag)
    rel = resid / np.maximum(scale, 1e-300)
    passed = bool(np.all((rel < tol) | (resid < floor)))
    return {"max_abs_residual": float(np.max(resid)),
            "max_rel_residual": float(np.max(rel)),
            "scale": float(np.max(scale)), "passed": passed}


def default_suite():
    return sorted(REGISTRY)


def run_suite(model, suite=None, n_points=100, seed=7, order=4, lam_min=0.1,
              tol=TOL_REL, floor=FLOOR_ABS, orientation=+1, points=None):
    """Run identity checks at seeded sample points; deterministic per seed."""
    if suite is None:
        suite = default_suite()
    if orientation not in (+1, -1):
        raise ValueError("orientation must be +1 or -1")
    work = model
    if orientation == -1:
        work = dc_replace(model, orientation=-1.0)
        work.half_flat_side = (-model.half_flat_side
                               if model.half_flat_side is not None else None)
        work.validated = model.validated
    if points is None:
        points = sample_points(work, n_points, seed=seed, lam_min=lam_min)
    con = concomitants_at(work, points, order=order)
    reports = []
    meta = dict(metric=model.name, parameters=dict(model.params),
                n_points=int(points.shape[0]), seed=seed, jet_order=order,
                orientation="+1" if orientation == 1 else "-1",
                tolerance=tol, floor=floor)
    for ident in suite:
        spec = REGISTRY[ident]
        sides = (+1, -1) if spec.per_side else (None,)
        for side in sides:
            label = {1: "+", -1: "-", None: "both"}[side]
            skip = None
            if order < spec.min_order:
                skip = f"requires jet order >= {spec.min_order}"
            elif spec.needs_ms:
                check_sides = [side] if side is not None else [+1, -1]
                for cs in check_sides:
                    sf = con.side(cs)
                    if sf.s2 is None:
                        reason = ("half-flat side: Mars-Simon fields undefined"
                                  if work.half_flat_side == cs or work.is_flat
                                  else "Mars-Simon singular at sampled points")
                        skip = reason
            if skip is not None:
                reports.append(VerificationReport(
                    identity=ident, side=label, max_abs_residual=None,
                    max_rel_residual=None, scale=None, passed=None, skipped=skip,
                    **meta))
                continue
            stats = evaluate_identity(spec, con, side, tol=tol, floor=floor)
            reports.append(VerificationReport(
                identity=ident, side=label, skipped=None, **stats, **meta))
    return reports


def epsilon_identity_suite(model, points=None, seed=7, order=2):
    """Both partly-contracted volume-form identities, componentwise."""
    if points is None:
        points = sample_points(model, 4, seed=seed, lam_min=0.1)
    con = concomitants_at(model, points, order=max(order, 4))
    out = []
    for ident in ("eq:epseps1", "eq:epseps2", "eq:eps-norm"):
        stats = evaluate_identity(REGISTRY[ident], con, None)
        out.append(VerificationReport(
            metric=model.name, parameters=dict(model.params), identity=ident,
            side="both", n_points=int(points.shape[0]),
            seed=seed, jet_order=max(order, 4), orientation="+1",
            tolerance=TOL_REL, floor=FLOOR_ABS, skipped=None, **stats))
    return out


# ---------------------------------------------------------------------------
# Asymptotic decay suite

DECAY_TARGETS = {"one_minus_lambda": -1.0, "twist_potential": -1.0,
                 "grad_xi": -2.0, "F2": -4.0}


def asymptotic_decay_suite(model, radii=(10.0, 100.0, 1000.0, 10000.0),
                           theta=math.pi / 4.0, slope_tol=0.1):
    """Log-log decay fits along a radial ray, plus the b^2 tail cross-check.

    The twist potential check is one-sided (decay at least as fast as 1/r):
    its target is an upper bound and e.g. Euclidean Kerr decays faster.
    """
    rs = np.array(radii) * model.scale + model.r_inner()
    ray = np.stack([np.zeros_like(rs), rs, np.full_like(rs, theta),
                    np.zeros_like(rs)], axis=1)
    con = concomitants_at(model, ray, order=4)
    cal = con.calibration
    lam0 = con.lam[:, 0]
    om0 = con.omega[:, 0]
    gradxi = np.sqrt(2.0 * np.abs(con.mu[:, 0]))
    quantities = {"one_minus_lambda": np.abs(1.0 - lam0),
                  "twist_potential": np.abs(om0),
                  "grad_xi": gradxi,
                  "F2:+": np.abs(con.side(+1).F2[:, 0]),
                  "F2:-": np.abs(con.side(-1).F2[:, 0])}
    results = {}
    logr = np.log(rs)
    for name, vals in quantities.items():
        target = DECAY_TARGETS[name.split(":")[0]] if not name.startswith("F2") \
            else DECAY_TARGETS["F2"]
        if np.max(vals) < 1e-18:
            results[name] = {"slope": None, "target": target, "passed": None,
                             "skipped": "identically zero along the ray"}
            continue
        slope = float(np.polyfit(logr, np.log(vals), 1)[0])
        if name == "twist_potential":
            ok = slope <= target + slope_tol
        else:
            ok = abs(slope - target) <= slope_tol
        results[name] = {"slope": slope, "target": target, "passed": bool(ok),
                         "skipped": None}
    # r^4 F2 -> b^2 cross-check against the Ernst calibration
    for s in (+1, -1):
        tag = f"r4F2_vs_b2:{'+' if s > 0 else '-'}"
        b = cal.b(s) if cal is not None else 0.0
        F2 = con.side(s).F2[:, 0]
        if abs(b) < 1e-12:
            results[tag] = {"value": None, "target": None, "passed": None,
                            "skipped": "half-flat side (b = 0)"}
            continue
        limit = float(rs[-1] ** 4 * F2[-1])
        ok = abs(limit - b * b) <= 0.01 * b * b
        results[tag] = {"value": limit, "target": float(b * b), "passed": bool(ok),
                        "skipped": None}
    return results


# ---------------------------------------------------------------------------
# Mutation sensitivity

def mutation_check(model, amplitude=1e-3, n_points=25, seed=13, lam_min=0.15):
    """Fraction of differential identities that fail under a metric perturbation."""
    broken = model.mutated(amplitude)
    pts = sample_points(model, n_points, seed=seed, lam_min=lam_min)
    reports = run_suite(broken, n_points=n_points, seed=seed, lam_min=lam_min,
                        points=pts)
    diff = [r for r in reports
            if REGISTRY[r.identity].kind == "differential" and r.skipped is None]
    failed = [r for r in diff if not r.passed]
    return {"n_differential": len(diff), "n_failed": len(failed),
            "failed_fraction": len(failed) / max(len(diff), 1),
            "failing": sorted({r.identity for r in failed})}
