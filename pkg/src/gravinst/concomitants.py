"""Everything derived from the Killing field at a point.

Builds, in jet arithmetic and batched over points: the squared norm, the
(anti-)self-dual parts of d(xi), the Ernst potentials (degree-0 value from a
line-integral calibration, higher coefficients reconstructed from sigma), the
twist potential, Mars-Simon objects, currents, the modified-Laplace data and
the divergence-identity currents Psi for a grid of exponents beta.

The twist potential is normalized to vanish at infinity: omega(p) is computed
as minus the quadrature of the radial twist one-form component from p to
infinity along the outgoing coordinate ray (closedness of the twist one-form
makes the value path independent; a second path is spot-checked in the tests).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .curvature import (cov_deriv_oneform, cov_deriv_two_dn, coord_gradient,
                        curvature, divergence, grad_up, gradient_product_terms,
                        laplacian, laplacian_product_terms, LC)
from .metrics import TAU, R, TH, PH

BETA_GRID = (0.5, 1.0, 2.0, 3.0)


class FixedPointError(ValueError):
    """Concomitants requested at a point with lambda <= 0."""


class NormalizationViolation(ValueError):
    """|E| >= 1, impossible under the sup lambda = 1 normalization."""


class CalibrationError(RuntimeError):
    pass


# ---------------------------------------------------------------------------
# Twist potential quadrature

def _gl_cache():
    cache = {}

    def nodes(n):
        if n not in cache:
            cache[n] = np.polynomial.legendre.leggauss(n)
        return cache[n]

    return nodes


_GL = _gl_cache()


def twist_oneform_values(model, points):
    """Degree-0 components of omega_a = eps_abcd xi^b F^cd, shape (p, 4).

    Only metric values and first derivatives enter (the Killing field is the
    tau coordinate vector, so F_ab is the antisymmetrized derivative of the
    tau column); everything past the jet extraction is plain numpy.
    """
    frame = model.frame(1)
    g = model.metric_jets(frame, points)
    g0 = g[..., 0]
    dgt = np.stack([frame.coord_deriv(g[..., :, TAU, :], mu)[..., 0]
                    for mu in range(4)], axis=1)  # (p, a, b) = d_a g_{b tau}
    F0 = 0.5 * (dgt - np.einsum("pab->pba", dgt))
    g_up0 = np.linalg.inv(g0)
    F_up0 = np.einsum("pac,pcd,pbd->pab", g_up0, F0, g_up0)
    sqrt_det0 = np.sqrt(np.linalg.det(g0))
    lc_t = LC[:, TAU, :, :]  # xi^b = delta^b_tau
    return model.orientation * sqrt_det0[:, None] \
        * np.einsum("acd,pcd->pa", lc_t, F_up0)


def twist_potential(model, points, tol=1e-12, n0=48, n_max=1536):
    """omega at chart points, normalized to 0 at infinity.

    Integrates the radial component of the twist one-form from each point to
    infinity with the substitution r = r_p + L v/(1-v) (L the model scale, so
    the near zone is resolved even for points deep inside the chart), doubling
    the Gauss-Legendre node count until the value settles.
    """
    points = np.asarray(points, dtype=float)
    if points.ndim == 1:
        points = points[None, :]
    P = points.shape[0]
    if P == 0:
        return np.zeros(0)
    r_p = points[:, R]
    L = max(model.scale, 1e-6)

    def integral(n):
        x, w = _GL(n)
        v = 0.5 * (x + 1.0)       # nodes on (0, 1)
        wv = 0.5 * w
        rr = r_p[:, None] + L * v[None, :] / (1.0 - v[None, :])
        jac = L / (1.0 - v[None, :]) ** 2
        eval_pts = np.zeros((P, n, 4))
        eval_pts[:, :, R] = rr
        eval_pts[:, :, TH] = points[:, TH][:, None]
        eval_pts[:, :, PH] = points[:, PH][:, None]
        om_r = twist_oneform_values(model, eval_pts.reshape(P * n, 4))[:, R]
        return (om_r.reshape(P, n) * jac) @ wv

    n = n0
    prev = integral(n)
    while n < n_max:
        n *= 2
        cur = integral(n)
        if np.max(np.abs(cur - prev)) < tol * max(1.0, np.max(np.abs(cur))):
            prev = cur
            break
        prev = cur
    return -prev


@dataclass(frozen=True)
class ErnstCalibration:
    """Asymptotic anchors for the Ernst potentials of one model."""

    R_ref: float
    b_lambda: float
    b_omega: float
    b_plus: float
    b_minus: float
    tail_exponent_plus: float | None
    tail_exponent_minus: float | None

    def b(self, sign):
        return self.b_plus if sign > 0 else self.b_minus

    def ms_floor(self, sign, r):
        """Mars-Simon singularity floor for (F+-)^2 at radius r."""
        b = self.b(sign)
        return 1e-10 * (b * b) / np.maximum(r, 1e-30) ** 4


def ernst_calibrate(model, R0=None, tail_tol=1e-6):
    """Fit the 1/r tail of the Ernst potentials along the equatorial ray."""
    if R0 is None:
        R0 = 50.0 * model.scale + model.r_inner()
    rs = R0 * 2.0 ** np.arange(5)
    ray = np.stack([np.zeros_like(rs), rs, np.full_like(rs, math.pi / 2.0),
                    np.zeros_like(rs)], axis=1)
    lam = model.lam(ray)
    om = twist_potential(model, ray)
    inv_r = 1.0 / rs
    from .metrics import _richardson
    b_lam = _richardson(inv_r, rs * (lam - 1.0), powers=(1, 2, 3))
    b_om = _richardson(inv_r, rs * om, powers=(1, 2, 3))
    if abs(b_om) < 1e-10 * max(abs(b_lam), 1.0):
        b_om = 0.0
    b_plus, b_minus = b_lam + b_om, b_lam - b_om

    def tail_exp(bval, vals):
        resid = np.abs(vals)
        if np.max(resid) < 1e-13:
            return None
        slope, _ = np.polyfit(np.log(rs), np.log(resid + 1e-300), 1)
        return float(slope)

    e_plus = tail_exp(b_plus, (lam - 1.0) + om)
    e_minus = tail_exp(b_minus, (lam - 1.0) - om)
    if model.strict_calibration:
        for b, e, tag in ((b_plus, e_plus, "+"), (b_minus, e_minus, "-")):
            if b > 1e-10:
                raise CalibrationError(f"{model.name}: b{tag} = {b:.3e} > 0")
            if b < -1e-10 and e is not None and not (-1.4 < e < -0.6):
                raise CalibrationError(
                    f"{model.name}: tail fit exponent {e:.3f} far from -1 on side {tag}")
    return ErnstCalibration(R_ref=float(rs[0]), b_lambda=float(b_lam),
                            b_omega=float(b_om), b_plus=float(b_plus),
                            b_minus=float(b_minus), tail_exponent_plus=e_plus,
                            tail_exponent_minus=e_minus)


_CAL_CACHE = {}


def calibration_for(model):
    key = (model.name, tuple(sorted(model.params.items())), model.orientation)
    if key not in _CAL_CACHE:
        _CAL_CACHE[key] = ernst_calibrate(model)
    return _CAL_CACHE[key]


# ---------------------------------------------------------------------------
# The concomitant bundle

@dataclass
class SignedFields:
    """Per-duality-sign fields; jets unless suffixed with 0."""

    F_dn: np.ndarray
    F_up: np.ndarray
    F2: np.ndarray
    sigma_dn: np.ndarray
    sigma_up: np.ndarray
    E: np.ndarray
    ms_ok: np.ndarray                 # (p,) bool: Mars-Simon fields defined
    # degree-0 tensors
    S0: np.ndarray | None = None      # S_{abcd}
    S2_0: np.ndarray | None = None
    FS2_0: np.ndarray | None = None   # (F S)^2
    FFS_0: np.ndarray | None = None   # F^{ab} F^{cd} S_{abcd}
    P0: np.ndarray | None = None      # P_{abc}
    P2_0: np.ndarray | None = None
    # jets for the Mars-Simon layer
    s2: np.ndarray | None = None
    Gamma_dn: np.ndarray | None = None
    q: np.ndarray | None = None       # (1+E_-s)(1-E_s)/lambda
    J_dn: np.ndarray | None = None
    J_up: np.ndarray | None = None
    s_beta: dict = field(default_factory=dict)      # beta -> |s|^beta jet
    Psi_dn: dict = field(default_factory=dict)      # beta -> one-form jet
    div_Psi: dict = field(default_factory=dict)     # beta -> scalar (p,)
    V0: dict = field(default_factory=dict)          # beta -> (p,)
    # product-rule term splits (cancellation-aware scales on special metrics)
    grad_s2_terms: list = field(default_factory=list)
    lap_s2_terms: list = field(default_factory=list)
    lap_s_beta_terms: dict = field(default_factory=dict)
    grad_s_beta_terms: dict = field(default_factory=dict)
    # derived degree-0 values used by the identity suite
    nabla_F0: np.ndarray | None = None    # grad_c F_ab, (p,c,a,b)
    dF2_0: np.ndarray | None = None       # coordinate gradient of F2
    lap_F2_0: np.ndarray | None = None
    nab_sigma0: np.ndarray | None = None  # grad_a sigma_b
    div_sigma0: np.ndarray | None = None
    lap_E0: np.ndarray | None = None
    ds2_0: np.ndarray | None = None
    lap_s2_0: np.ndarray | None = None
    dq0: np.ndarray | None = None
    lap_s_beta: dict = field(default_factory=dict)
    dgrad_s_beta: dict = field(default_factory=dict)   # coordinate gradient (p, 4)


@dataclass
class Concomitants:
    model: object
    points: np.ndarray
    bundle: object
    calibration: ErnstCalibration | None
    xi_up: np.ndarray
    xi_dn: np.ndarray
    lam: np.ndarray            # jet
    killing_sym0: np.ndarray   # grad_(a xi_b), degree 0 (diagnostic)
    F_dn: np.ndarray
    F_up: np.ndarray
    mu: np.ndarray
    nu: np.ndarray
    omega_dn: np.ndarray
    omega_up: np.ndarray
    omega: np.ndarray          # twist potential jet
    JT_up: np.ndarray
    JD_up: np.ndarray
    JE_up: np.ndarray
    div_JT0: np.ndarray
    div_JD0: np.ndarray
    div_JE0: np.ndarray
    sides: dict = field(default_factory=dict)   # sign -> SignedFields

    @property
    def ctx(self):
        return self.bundle.ctx

    def side(self, sign):
        return self.sides[+1 if sign > 0 else -1]


def _raise1(bundle, w_dn):
    return bundle.ctx.einsum("pab,pb->pa", bundle.g_up, w_dn)


def _antisym_pairs_sq(g_up0, X0, Y0):
    """X_{ab} Y^{ab} at degree 0 for antisymmetric pairs (numpy only)."""
    Yup = np.einsum("pac,pbd,pcd->pab", g_up0, g_up0, Y0)
    return np.einsum("pab,pab->p", X0, Yup)


def concomitants_at(model, points, order=4, calibration=None, betas=BETA_GRID,
                    lam_floor=1e-12, with_ms=True):
    """Full Killing-concomitant bundle at a batch of chart points."""
    points = np.asarray(points, dtype=float)
    if points.ndim == 1:
        points = points[None, :]
    if order < 4:
        raise ValueError("concomitants need jet order >= 4")
    if np.any(points[:, R] <= model.r_domain[0]):
        raise FixedPointError(
            "point on or past the fixed-point boundary of the chart")
    if calibration is None and not model.is_flat:
        calibration = calibration_for(model)

    frame = model.frame(order)
    ctx = frame.ctx
    g = model.metric_jets(frame, points)
    bundle = curvature(frame, g)

    P = points.shape[0]
    xi_up = np.zeros((P, 4, ctx.n))
    xi_up[:, TAU, 0] = 1.0
    xi_dn = g[..., :, TAU, :]
    lam = xi_dn[:, TAU, :].copy()
    if np.any(lam[:, 0] <= lam_floor):
        raise FixedPointError("lambda <= 0 at a requested point")

    nab_xi = cov_deriv_oneform(bundle, xi_dn)
    killing_sym0 = 0.5 * (nab_xi + np.einsum("pban->pabn", nab_xi))[..., 0]
    F_dn = 0.5 * (nab_xi - np.einsum("pban->pabn", nab_xi))
    F_up = ctx.einsum("pac,pcb->pab", bundle.g_up,
                      ctx.einsum("pcd,pbd->pcb", F_dn, bundle.g_up))
    mu = 0.5 * ctx.einsum("pab,pab->p", F_dn, F_up)
    nu = 0.25 * ctx.einsum("pcd,pcd->p",
                           ctx.einsum("pabcd,pab->pcd", bundle.eps_dn, F_up), F_up)

    contr = ctx.einsum("pabcd,pcd->pab", bundle.eps_dn, F_up)
    omega_dn = ctx.einsum("pab,pb->pa", contr, xi_up)
    omega_up = _raise1(bundle, omega_dn)

    omega0 = (np.zeros(P) if model.is_flat
              else twist_potential(model, points))
    om_parts = omega_dn[:, list(frame.active), :]
    omega = ctx.integrate(om_parts, omega0)

    lam_inv = ctx.inv(lam)
    lam_inv2 = ctx.mul(lam_inv, lam_inv)
    grad_lam_up = grad_up(bundle, lam)

    JT_up = -ctx.einsum("p,pa->pa", lam_inv2, omega_up)
    E = {s: lam + s * omega for s in (+1, -1)}

    sides = {}
    for s in (+1, -1):
        dual = 0.5 * ctx.einsum("pabcd,pcd->pab", bundle.eps_dduu, F_dn)
        Fs = F_dn + s * dual
        Fs_up = ctx.einsum("pac,pcb->pab", bundle.g_up,
                           ctx.einsum("pcd,pbd->pcb", Fs, bundle.g_up))
        F2 = ctx.einsum("pab,pab->p", Fs, Fs_up)
        sigma_dn = 2.0 * ctx.einsum("pab,pb->pa", Fs, xi_up)
        sigma_up = _raise1(bundle, sigma_dn)
        if calibration is not None:
            floor = calibration.ms_floor(s, points[:, R])
            ms_ok = F2[:, 0] > np.maximum(floor, 1e-28)
        else:
            ms_ok = np.zeros(P, dtype=bool)
        sides[s] = SignedFields(F_dn=Fs, F_up=Fs_up, F2=F2, sigma_dn=sigma_dn,
                                sigma_up=sigma_up, E=E[s], ms_ok=ms_ok)

    # Ehlers-family currents
    Ep, Em = E[+1], E[-1]
    sp_up, sm_up = sides[+1].sigma_up, sides[-1].sigma_up
    JD_up = 0.5 * ctx.einsum("p,pa->pa", lam_inv2,
                             ctx.einsum("p,pa->pa", Ep, sm_up)
                             + ctx.einsum("p,pa->pa", Em, sp_up))
    JE_up = 0.5 * ctx.einsum("p,pa->pa", lam_inv2,
                             ctx.einsum("p,pa->pa", ctx.mul(Ep, Ep), sm_up)
                             - ctx.einsum("p,pa->pa", ctx.mul(Em, Em), sp_up))

    con = Concomitants(model=model, points=points, bundle=bundle,
                       calibration=calibration, xi_up=xi_up, xi_dn=xi_dn, lam=lam,
                       killing_sym0=killing_sym0, F_dn=F_dn, F_up=F_up, mu=mu, nu=nu,
                       omega_dn=omega_dn, omega_up=omega_up, omega=omega,
                       JT_up=JT_up, JD_up=JD_up, JE_up=JE_up,
                       div_JT0=divergence(bundle, JT_up)[..., 0],
                       div_JD0=divergence(bundle, JD_up)[..., 0],
                       div_JE0=divergence(bundle, JE_up)[..., 0],
                       sides=sides)

    one = ctx.const(np.ones(P))
    g_up0 = bundle.g_up[..., 0]
    for s in (+1, -1):
        sf = sides[s]
        sf.nabla_F0 = cov_deriv_two_dn(bundle, sf.F_dn)[..., 0]
        sf.dF2_0 = coord_gradient(frame, sf.F2)[..., 0]
        sf.lap_F2_0 = laplacian(bundle, sf.F2)[..., 0]
        nab_sig = cov_deriv_oneform(bundle, sf.sigma_dn)
        sf.nab_sigma0 = nab_sig[..., 0]
        sf.div_sigma0 = divergence(bundle, sf.sigma_up)[..., 0]
        sf.lap_E0 = laplacian(bundle, sf.E)[..., 0]

        if not (with_ms and bool(np.all(sf.ms_ok))):
            continue

        one_mE = one - sf.E
        one_pE_other = one + sides[-s].E
        inv_one_mE = ctx.inv(one_mE)
        # Mars-Simon tensor and its squares at degree 0
        W0 = bundle.Wpm[s][..., 0]
        F0, F2_0 = sf.F_dn[..., 0], sf.F2[..., 0]
        I0 = bundle.Ipm[s][..., 0]
        FF0 = np.einsum("pab,pcd->pabcd", F0, F0)
        S0 = W0 - 6.0 * (FF0 - F2_0[:, None, None, None, None] / 3.0 * I0) \
            / (1.0 - sf.E[:, 0])[:, None, None, None, None]
        sf.S0 = S0
        S_ud = np.einsum("pae,pbf,pefcd->pabcd", g_up0, g_up0, S0)
        S_uu = np.einsum("pce,pdf,pabef->pabcd", g_up0, g_up0, S_ud)
        sf.S2_0 = np.einsum("pabcd,pabcd->p", S0, S_uu)
        F_up0 = sf.F_up[..., 0]
        T_ef = np.einsum("pefcd,pcd->pef", S0, F_up0)
        T_up = np.einsum("pae,pbf,pef->pab", g_up0, g_up0, T_ef)
        sf.FS2_0 = np.einsum("pef,pef->p", T_ef, T_up)
        sf.FFS_0 = np.einsum("pab,pab->p", T_ef, F_up0)

        # P tensor (degree 0): gamma_{a[b} X_{c]} + 4 xi^e xi^f W_{eaf[b} sigma_{c]}
        lam0 = lam[:, 0]
        g0 = g[..., 0]
        xi0 = xi_dn[..., 0]
        xi_up0 = xi_up[..., 0]
        gamma0 = lam0[:, None, None] * g0 - np.einsum("pa,pb->pab", xi0, xi0)
        X_b = np.einsum("pbefk,pe,pfk->pb", W0, xi_up0, F_up0)
        Y_ab = np.einsum("peafb,pe,pf->pab", W0, xi_up0, xi_up0)
        sig0 = sf.sigma_dn[..., 0]
        P0 = 0.5 * (np.einsum("pab,pc->pabc", gamma0, X_b)
                    - np.einsum("pac,pb->pabc", gamma0, X_b)) \
            + 2.0 * (np.einsum("pab,pc->pabc", Y_ab, sig0)
                     - np.einsum("pac,pb->pabc", Y_ab, sig0))
        sf.P0 = P0
        P_up = np.einsum("pax,pby,pcz,pxyz->pabc", g_up0, g_up0, g_up0, P0)
        sf.P2_0 = np.einsum("pabc,pabc->p", P0, P_up)

        # scalar s^2 and its Laplace data (product-rule splits keep the
        # cancellation scale visible where s^2 is constant, i.e. type D)
        h = ctx.powf(inv_one_mE, 4.0)
        s2 = ctx.mul(sf.F2, h)
        sf.s2 = s2
        sf.ds2_0 = coord_gradient(frame, s2)[..., 0]
        sf.lap_s2_0 = laplacian(bundle, s2)[..., 0]
        sf.grad_s2_terms = gradient_product_terms(bundle, sf.F2, h)
        sf.lap_s2_terms = laplacian_product_terms(bundle, sf.F2, h)

        # Gamma^{+-}_a and q = (1+E_-s)(1-E_s)/lambda
        pref = ctx.mul(one_pE_other, ctx.mul(inv_one_mE, lam_inv))
        sf.Gamma_dn = ctx.einsum("p,pa->pa", pref, sf.sigma_dn)
        q = ctx.mul(ctx.mul(one_pE_other, one_mE), lam_inv)
        sf.q = q
        sf.dq0 = coord_gradient(frame, q)[..., 0]

        # J^{+-} current
        Js_dn = (s * ctx.einsum("p,pa->pa",
                                ctx.mul(ctx.powf(one - s * E[+1], 2.0), 0.5 * lam_inv2),
                                sides[-1].sigma_dn)
                 - s * ctx.einsum("p,pa->pa",
                                  ctx.mul(ctx.powf(one + s * E[-1], 2.0),
                                          0.5 * lam_inv2),
                                  sides[+1].sigma_dn))
        sf.J_dn = Js_dn
        sf.J_up = _raise1(bundle, Js_dn)

        half_q = 0.5 * q
        for beta in betas:
            A = ctx.powf(sf.F2, beta / 2.0)
            B = ctx.powf(one_mE, -2.0 * beta)
            sb = ctx.mul(A, B)
            sf.s_beta[beta] = sb
            dsb = coord_gradient(frame, sb)
            sf.dgrad_s_beta[beta] = dsb[..., 0]
            sf.lap_s_beta[beta] = laplacian(bundle, sb)[..., 0]
            sf.grad_s_beta_terms[beta] = gradient_product_terms(bundle, A, B)
            sf.lap_s_beta_terms[beta] = laplacian_product_terms(bundle, A, B)
            psi_dn = 0.5 * ctx.einsum("p,pa->pa", sb, Js_dn) \
                + ctx.einsum("p,pa->pa", half_q, dsb)
            sf.Psi_dn[beta] = psi_dn
            psi_up = _raise1(bundle, psi_dn)
            sf.div_Psi[beta] = divergence(bundle, psi_up)[..., 0]
            sf.V0[beta] = (beta * lam[:, 0]
                           * (F2_0 * sf.S2_0 + (beta - 2.0) * sf.FS2_0)
                           / (4.0 * F2_0 ** 2))
    return con


# ---------------------------------------------------------------------------
# Quotient scalars (Appendix-C layer, scalar part)

def quotient_scalars(con):
    """w+-, Theta and k+-^4 at the bundle's points (degree-0 values)."""
    lam0 = con.lam[:, 0]
    out = {"lambda": lam0}
    for s in (+1, -1):
        E0 = con.side(s).E[:, 0]
        if np.any(np.abs(E0) >= 1.0):
            raise NormalizationViolation("|E| >= 1 at a sample point")
        out[("w", s)] = (1.0 - E0) / (1.0 + E0)
    out["Theta"] = 1.0 - out[("w", +1)] * out[("w", -1)]
    g_up0 = con.bundle.g_up[..., 0]
    for s in (+1, -1):
        E = con.side(s).E
        ctx = con.ctx
        one = ctx.const(np.ones(E.shape[0]))
        w = ctx.mul(one - E, ctx.inv(one + E))
        dw = coord_gradient(con.bundle.frame, w)[..., 0]
        grad2 = np.einsum("pab,pa,pb->p", g_up0, dw, dw)
        out[("k4", s)] = grad2 / lam0
    return out


# ---------------------------------------------------------------------------
# Petrov classification

def _weyl_operator_blocks(con, sign):
    """3x3 matrix of the Weyl operator on the (A)SD two-form space, per point."""
    g0 = con.bundle.g_dn[..., 0]
    P = g0.shape[0]
    Lc = np.linalg.cholesky(g0)
    e = np.linalg.inv(Lc)                     # rows are orthonormal frame vectors
    detsign = np.sign(np.linalg.det(e))
    e[:, 0, :] *= detsign[:, None]            # right-handed frame
    eps0 = con.bundle.eps_dduu[..., 0]
    basis = []
    for i in (1, 2, 3):
        beta = np.einsum("pa,pb->pab", e[:, 0], e[:, i])
        beta = beta - np.einsum("pab->pba", beta)
        dual = 0.5 * np.einsum("pabcd,pcd->pab", eps0, beta)
        B = beta + sign * dual
        nrm = np.sqrt(np.abs(_antisym_pairs_sq(con.bundle.g_up[..., 0], B, B)))
        basis.append(B / np.maximum(nrm, 1e-300)[:, None, None])
    W0 = con.bundle.Wpm[sign][..., 0]
    g_up0 = con.bundle.g_up[..., 0]
    M = np.zeros((P, 3, 3))
    for i in range(3):
        Bi_up = np.einsum("pac,pbd,pcd->pab", g_up0, g_up0, basis[i])
        for j in range(3):
            Bj_up = np.einsum("pac,pbd,pcd->pab", g_up0, g_up0, basis[j])
            M[:, i, j] = np.einsum("pabcd,pab,pcd->p", W0, Bi_up, Bj_up)
    return M


def petrov_classify(con, d_tol=1e-7, const_tol=1e-6, hf_tol=1e-10):
    """Petrov type per duality side from three independent criteria.

    Criteria: Mars-Simon tensor smallness, constancy of the Mars-Simon scalar,
    and eigenvalue degeneracy of the Weyl operator.  The criteria must agree,
    otherwise the side is reported inconsistent with diagnostics attached.
    """
    results = {}
    w_scale = max(float(np.max(np.abs(con.bundle.Weyl[..., 0]))), 1e-300)
    for s in (+1, -1):
        sf = con.side(s)
        w_norm = float(np.max(np.abs(con.bundle.Wpm[s][..., 0])))
        diag = {"weyl_max": w_norm}
        if w_norm < hf_tol * w_scale:
            results[s] = {"classification": "half-flat", "diagnostics": diag}
            continue
        votes = []
        if sf.S0 is not None:
            ratio = float(np.max(np.abs(sf.S0)) / w_norm)
            diag["ms_ratio"] = ratio
            votes.append("type-D" if ratio < d_tol else "general")
            s2_0 = sf.s2[:, 0]
            rel_std = float(np.std(s2_0) / max(abs(np.mean(s2_0)), 1e-300))
            diag["s2_rel_std"] = rel_std
            diag["s2_mean"] = float(np.mean(s2_0))
            votes.append("type-D" if rel_std < const_tol and abs(np.mean(s2_0)) > 0
                         else "general")
        M = _weyl_operator_blocks(con, s)
        eig = np.linalg.eigvalsh(M)
        gaps = np.minimum(eig[:, 1] - eig[:, 0], eig[:, 2] - eig[:, 1])
        rel_gap = float(np.max(gaps) / max(np.max(np.abs(eig)), 1e-300))
        diag["eigen_gap"] = rel_gap
        votes.append("type-D" if rel_gap < d_tol else "general")
        if all(v == votes[0] for v in votes):
            results[s] = {"classification": votes[0], "diagnostics": diag}
        else:
            results[s] = {"classification": "inconsistent", "diagnostics": diag,
                          "votes": votes}
    return results
