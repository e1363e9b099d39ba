"""Curvature pipeline in jet arithmetic.

Everything is batched: arrays carry a leading point axis ``p``, then component
axes, then the jet-coefficient axis.  Conventions (validated against the
Schwarzschild fixture before freezing):

* ``Riemann[p,a,b,c,d]`` is the fully lowered tensor with
  ``[del_c, del_d] xi_a`` contractions arranged so that for a Killing field
  ``grad_c F_ab = -W_abcd xi^d`` holds on Ricci-flat space.
* ``eps_dn`` is ``orientation * sqrt(det g)`` times the permutation symbol in
  chart-coordinate order; the chart declares the orientation sign.
* The self-dual/anti-self-dual split of the Weyl tensor dualizes the second
  index pair; two-form projection dualizes its only pair.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .jets import JetContext, jet_context


class DegenerateMetricError(ValueError):
    """Metric not invertible at the requested point."""


class ContractViolation(ValueError):
    """Structural precondition (e.g. antisymmetry) violated."""


def _levi_civita():
    lc = np.zeros((4, 4, 4, 4))
    import itertools

    for perm in itertools.permutations(range(4)):
        sign = 1.0
        p = list(perm)
        for i in range(4):
            for j in range(i + 1, 4):
                if p[i] > p[j]:
                    sign = -sign
        lc[perm] = sign
    return lc


LC = _levi_civita()


@dataclass(frozen=True)
class ChartFrame:
    """Jet context bound to a chart.

    ``active`` lists the chart-coordinate indices (into 0..3) the metric
    components actually depend on; derivatives along the other coordinates are
    identically zero, which keeps the coefficient tables small for toric
    metrics.
    """

    ctx: JetContext
    active: tuple
    orientation: float = 1.0

    def coord_deriv(self, a, mu):
        if mu in self.active:
            return self.ctx.deriv(a, self.active.index(mu))
        return np.zeros_like(a)

    def lift_active(self, points):
        """Active-coordinate jets for chart points of shape (p, 4)."""
        pts = np.asarray(points, dtype=float)
        if pts.ndim == 1:
            pts = pts[None, :]
        return self.ctx.lift(pts[:, list(self.active)])


def frame_for(active, order, orientation=1.0):
    return ChartFrame(jet_context(len(active), order), tuple(active), orientation)


# ---------------------------------------------------------------------------
# 4x4 jet linear algebra

def _det3(ctx, m, rows, cols):
    r0, r1, r2 = rows
    c0, c1, c2 = cols
    t = ctx.mul(m[..., r0, c0, :], ctx.mul(m[..., r1, c1, :], m[..., r2, c2, :]))
    t = t + ctx.mul(m[..., r0, c1, :], ctx.mul(m[..., r1, c2, :], m[..., r2, c0, :]))
    t = t + ctx.mul(m[..., r0, c2, :], ctx.mul(m[..., r1, c0, :], m[..., r2, c1, :]))
    t = t - ctx.mul(m[..., r0, c2, :], ctx.mul(m[..., r1, c1, :], m[..., r2, c0, :]))
    t = t - ctx.mul(m[..., r0, c0, :], ctx.mul(m[..., r1, c2, :], m[..., r2, c1, :]))
    t = t - ctx.mul(m[..., r0, c1, :], ctx.mul(m[..., r1, c0, :], m[..., r2, c2, :]))
    return t


def jet_det4(ctx, m):
    others = [1, 2, 3]
    det = None
    for c in range(4):
        cols = [x for x in range(4) if x != c]
        term = ctx.mul(m[..., 0, c, :], _det3(ctx, m, others, cols))
        if c % 2:
            term = -term
        det = term if det is None else det + term
    return det


def jet_inv4(ctx, m, det=None):
    if det is None:
        det = jet_det4(ctx, m)
    inv_det = ctx.inv(det)
    out = np.empty_like(m)
    for i in range(4):
        rows = [x for x in range(4) if x != i]
        for j in range(4):
            cols = [x for x in range(4) if x != j]
            cof = _det3(ctx, m, rows, cols)
            if (i + j) % 2:
                cof = -cof
            # adjugate transposes the cofactor matrix
            out[..., j, i, :] = ctx.mul(cof, inv_det)
    return out, det


# ---------------------------------------------------------------------------
# Curvature bundle

@dataclass
class CurvatureBundle:
    frame: ChartFrame
    g_dn: np.ndarray
    g_up: np.ndarray
    det: np.ndarray
    sqrt_det: np.ndarray
    Gamma: np.ndarray        # Gamma^a_{bc}
    Riemann: np.ndarray      # R_{abcd}
    Ricci: np.ndarray
    Rscalar: np.ndarray
    Weyl: np.ndarray
    eps_dn: np.ndarray       # eps_{abcd}
    eps_dduu: np.ndarray     # eps_{ab}^{cd}
    Wpm: dict                # sign -> W^{+/-}_{abcd}
    Ipm: dict                # sign -> I^{+/-}_{abcd}
    Wpm_sq: dict             # sign -> (W^{+/-})^2 scalar jet
    curv_scale0: np.ndarray = None   # (p,) cancellation scale of the assembly

    @property
    def ctx(self):
        return self.frame.ctx


def curvature(frame: ChartFrame, g_dn, det_floor=1e-14):
    """Full curvature bundle from the metric component jets (p,4,4,n)."""
    ctx = frame.ctx
    det = jet_det4(ctx, g_dn)
    if np.any(np.abs(det[..., 0]) < det_floor):
        raise DegenerateMetricError("metric determinant below floor at a sample point")
    g_up, _ = jet_inv4(ctx, g_dn, det)

    dg = np.stack([frame.coord_deriv(g_dn, mu) for mu in range(4)], axis=1)  # (p,m,a,b,n)
    # Gamma_{a,bc} = (d_b g_{ac} + d_c g_{ab} - d_a g_{bc}) / 2
    gamma_low = 0.5 * (np.einsum("pbacn->pabcn", dg) + np.einsum("pcabn->pabcn", dg)
                       - dg)
    Gamma = ctx.einsum("pad,pdbc->pabc", g_up, gamma_low)

    dGamma = np.stack([frame.coord_deriv(Gamma, mu) for mu in range(4)], axis=1)  # (p,m,a,b,c,n)
    # R^r_{s m n} = d_m Gamma^r_{n s} - d_n Gamma^r_{m s}
    #              + Gamma^r_{m l} Gamma^l_{n s} - Gamma^r_{n l} Gamma^l_{m s}
    t1 = np.einsum("pmrnsx->prsmnx", dGamma)
    t2 = np.einsum("pnrmsx->prsmnx", dGamma)
    gg = ctx.einsum("prml,plns->prsmn", Gamma, Gamma)
    riem_up = t1 - t2 + gg - np.einsum("prsnmx->prsmnx", gg)

    Riemann = ctx.einsum("par,prbcd->pabcd", g_dn, riem_up)
    # cancellation scale of the Riemann assembly in lowered-component units;
    # residual checks on (near-)flat charts are judged against this
    mag_up = (np.abs(t1[..., 0]) + np.abs(t2[..., 0]) + 2.0 * np.abs(gg[..., 0]))
    curv_scale0 = np.einsum("par,prbcd->pabcd", np.abs(g_dn[..., 0]),
                            mag_up).max(axis=(1, 2, 3, 4))
    Ricci = np.einsum("pmsmnx->psnx", riem_up)
    Rscalar = ctx.einsum("pab,pab->p", g_up, Ricci)

    gR = ctx.einsum("pac,pbd->pacbd", g_dn, Ricci)

    def _perm(spec):
        return np.einsum(spec + "->pabcdx", gR)

    weyl = (Riemann
            - 0.5 * (_perm("pacdbx") - _perm("padcbx") + _perm("pbdcax") - _perm("pbcdax")))
    gg1 = ctx.einsum("pac,pbd->pabcd", g_dn, g_dn)
    gg2 = ctx.einsum("pad,pbc->pabcd", g_dn, g_dn)
    weyl = weyl + (1.0 / 6.0) * ctx.einsum("p,pabcd->pabcd", Rscalar, gg1 - gg2)

    sqrt_det = ctx.sqrt(det)
    eps_dn = frame.orientation * np.einsum("abcd,pn->pabcdn", LC, sqrt_det)
    guu = ctx.einsum("pec,pfd->pefcd", g_up, g_up)
    eps_dduu = frame.orientation * ctx.einsum(
        "p,pabcd->pabcd", sqrt_det, np.einsum("abef,pefcdn->pabcdn", LC, guu))

    Wpm, Ipm, Wpm_sq = {}, {}, {}
    dual = 0.5 * ctx.einsum("pcdef,pabef->pabcd", eps_dduu, weyl)
    for sign in (+1, -1):
        Wpm[sign] = weyl + sign * dual
        Ipm[sign] = 0.25 * (gg1 - gg2 + sign * eps_dn)
        w_mixed = ctx.einsum("pabef,pefcd->pabcd", Wpm[sign], guu)
        w_up = ctx.einsum("pefab,pefcd->pabcd", guu, w_mixed)
        Wpm_sq[sign] = ctx.einsum("pabcd,pabcd->p", Wpm[sign], w_up)

    return CurvatureBundle(frame, g_dn, g_up, det, sqrt_det, Gamma, Riemann, Ricci,
                           Rscalar, weyl, eps_dn, eps_dduu, Wpm, Ipm, Wpm_sq,
                           curv_scale0)


# ---------------------------------------------------------------------------
# Derivative helpers on bundles

def coord_gradient(frame, f):
    """d_a f as a one-form of jets, shape (p,4,n)."""
    return np.stack([frame.coord_deriv(f, mu) for mu in range(4)], axis=1)


def grad_up(bundle, f):
    return bundle.ctx.einsum("pab,pb->pa", bundle.g_up, coord_gradient(bundle.frame, f))


def divergence(bundle, v_up):
    """grad_a V^a = d_a V^a + Gamma^b_{ba} V^a."""
    ctx = bundle.ctx
    dv = sum(bundle.frame.coord_deriv(v_up[:, a], a) for a in range(4))
    gtrace = np.einsum("pbban->pan", bundle.Gamma)
    return dv + ctx.einsum("pa,pa->p", gtrace, v_up)


def divergence_terms(bundle, v_up):
    """Additive degree-0 terms of grad_a V^a (for cancellation-aware scales)."""
    ctx = bundle.ctx
    terms = [bundle.frame.coord_deriv(v_up[:, a], a)[..., 0] for a in range(4)]
    gtrace = np.einsum("pbban->pan", bundle.Gamma)
    terms.append(ctx.einsum("pa,pa->p", gtrace, v_up)[..., 0])
    return terms


def laplacian(bundle, f):
    return divergence(bundle, grad_up(bundle, f))


def laplacian_terms(bundle, f):
    return divergence_terms(bundle, grad_up(bundle, f))


def gradient_product_terms(bundle, a, b):
    """grad(a*b) as the two product-rule terms (degree 0, shape (p,4) each).

    Splitting keeps the cancellation scale visible when a*b is constant while
    the factors vary."""
    da = coord_gradient(bundle.frame, a)[..., 0]
    db = coord_gradient(bundle.frame, b)[..., 0]
    return [b[..., 0][:, None] * da, a[..., 0][:, None] * db]


def laplacian_product_terms(bundle, a, b):
    """Lap(a*b) split as b Lap a + a Lap b + 2 grad a . grad b (degree 0)."""
    ctx = bundle.ctx
    a0, b0 = a[..., 0], b[..., 0]
    terms = [b0 * t for t in laplacian_terms(bundle, a)]
    terms += [a0 * t for t in laplacian_terms(bundle, b)]
    da_up = grad_up(bundle, a)
    db = coord_gradient(bundle.frame, b)
    terms.append(2.0 * ctx.einsum("pa,pa->p", da_up, db)[..., 0])
    return terms


def cov_deriv_oneform(bundle, w_dn):
    """grad_a w_b, shape (p,a,b,n)."""
    ctx = bundle.ctx
    dw = np.stack([bundle.frame.coord_deriv(w_dn, mu) for mu in range(4)], axis=1)
    return dw - ctx.einsum("pcab,pc->pab", bundle.Gamma, w_dn)


def cov_deriv_two_dn(bundle, t_dn):
    """grad_c T_ab for a (0,2) tensor, shape (p,c,a,b,n)."""
    ctx = bundle.ctx
    dt = np.stack([bundle.frame.coord_deriv(t_dn, mu) for mu in range(4)], axis=1)
    corr_a = ctx.einsum("pdca,pdb->pcab", bundle.Gamma, t_dn)
    corr_b = ctx.einsum("pdcb,pad->pcab", bundle.Gamma, t_dn)
    return dt - corr_a - corr_b


def raise_index2(bundle, t_dn):
    """T^{ab} from T_{ab}."""
    ctx = bundle.ctx
    mixed = ctx.einsum("pcd,pbd->pcb", t_dn, bundle.g_up)
    return ctx.einsum("pac,pcb->pab", bundle.g_up, mixed)


def sd_project(two_form_dn, bundle, sign, tol=1e-10):
    """Project an antisymmetric two-form onto its (anti-)self-dual part.

    Returns ``F +/- (1/2) eps_ab^{cd} F_cd``; the input must be antisymmetric
    to within ``tol`` relative to its own scale.
    """
    asym = two_form_dn + np.einsum("pban->pabn", two_form_dn)
    scale = np.max(np.abs(two_form_dn[..., 0])) + 1e-300
    if np.max(np.abs(asym[..., 0])) > tol * max(scale, 1e-12):
        raise ContractViolation("sd_project input is not antisymmetric")
    dual = 0.5 * bundle.ctx.einsum("pabcd,pcd->pab", bundle.eps_dduu, two_form_dn)
    return two_form_dn + sign * dual
