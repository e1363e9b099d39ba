"""Catalogue of explicit S^1-symmetric ALF instanton metrics.

Chart coordinates are always ordered ``(tau, r, theta, phi)`` with the bounded
Killing field ``xi = d/dtau``.  Components of every catalogued metric depend on
``(r, theta)`` only, so jets are carried in those two variables.

Each model stores its fixed-point metadata (nut surface gravities and weights,
bolt data, Euler number of the circle fibration at infinity, orbit lengths)
and is trusted only after the self-validation gate: Ricci residual, Killing
residual, squared-norm bounds, and the asymptotic approach of the norm to 1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .jets import jet_context
from .curvature import (ChartFrame, cov_deriv_oneform, curvature, frame_for)

COORDS = ("tau", "r", "theta", "phi")
TAU, R, TH, PH = 0, 1, 2, 3


class CatalogueValidationError(RuntimeError):
    pass


class ExtractionError(RuntimeError):
    pass


class SamplingError(RuntimeError):
    pass


@dataclass(frozen=True)
class NutMeta:
    """Isolated fixed point: chart position and surface-gravity data."""

    position: tuple          # (r, theta) of the nut in the chart closure
    kappa1: float            # |kappa^1| >= |kappa^2| > 0
    kappa2: float
    weights: tuple | None    # coprime (w1, w2) matching (kappa1, kappa2), if rational
    epsilon: int | None = None   # orientation, filled by extraction at the gate


@dataclass(frozen=True)
class BoltMeta:
    """Two-dimensional fixed surface."""

    r_bolt: float
    kappa: float
    euler_char: int
    self_intersection: int


@dataclass(frozen=True)
class BoundaryData:
    chi_orbifold: int        # chi[O] of the base orbifold at infinity
    ell_infinity: float      # length at infinity (liminf of orbit lengths)
    e_infinity: int          # Euler number of the circle bundle at infinity


@dataclass
class MetricModel:
    name: str
    params: dict
    scale: float                     # radial unit for sampling/margins
    r_domain: tuple                  # open chart range in r
    metric_fn: object                # (ctx, r_jet, theta_jet) -> (..., 4, 4, n)
    nuts: list = field(default_factory=list)
    bolts: list = field(default_factory=list)
    boundary: BoundaryData | None = None
    torus_area: float = 0.0          # coordinate area of the (tau, phi) lattice cell
    orientation: float = 1.0
    active: tuple = (R, TH)
    r_margin: float = 1e-2           # fractional exclusion above inner boundary
    theta_margin: float = 1e-2       # absolute exclusion around the axes
    tau_period: float = 2.0 * math.pi
    is_flat: bool = False
    half_flat_side: int | None = None   # +1/-1 once detected, None otherwise
    validated: bool = False
    strict_calibration: bool = True     # mutated models waive the b <= 0 theorems

    # -- jet plumbing -------------------------------------------------------

    def frame(self, order):
        return frame_for(self.active, order, self.orientation)

    def metric_jets(self, frame, points):
        lifted = frame.lift_active(points)
        return self.metric_fn(frame.ctx, lifted[..., 0, :], lifted[..., 1, :])

    def metric_values(self, points):
        """Degree-0 metric components, shape (p, 4, 4)."""
        frame = self.frame(0)
        return self.metric_jets(frame, points)[..., 0]

    def lam(self, points):
        """Squared Killing norm at chart points."""
        return self.metric_values(points)[:, TAU, TAU]

    def r_inner(self):
        return self.r_domain[0] * (1.0 + self.r_margin) if self.r_domain[0] > 0 \
            else self.r_margin * self.scale

    def fixed_points(self):
        return list(self.nuts) + list(self.bolts)

    def mutated(self, amplitude=1e-3):
        """Tau/phi-independent perturbation of g_tautau and g_tauphi; breaks
        Ricci-flatness (and hypersurface-orthogonality) while keeping d/dtau a
        Killing field, so the concomitant machinery stays defined."""
        base_fn = self.metric_fn

        def fn(ctx, r, th, _base=base_fn, _amp=amplitude):
            g = np.array(_base(ctx, r, th))
            one = ctx.const(np.ones(r.shape[:-1]))
            r2 = ctx.mul(r, r)
            s, c = ctx.sin(th), ctx.cos(th)
            bump = ctx.mul(ctx.div(r2, one + r2), s)
            g[..., TAU, TAU, :] = ctx.mul(g[..., TAU, TAU, :], one + _amp * bump)
            twist = _amp * ctx.mul(ctx.div(r, one + r2), ctx.mul(ctx.mul(s, s), c))
            g[..., TAU, PH, :] = g[..., TAU, PH, :] + twist
            g[..., PH, TAU, :] = g[..., TAU, PH, :]
            return g

        out = replace(self, name=self.name + "+mutated", metric_fn=fn,
                      validated=False, strict_calibration=False)
        return out


# ---------------------------------------------------------------------------
# Line elements

def _flat_fn(ctx, r, th):
    lead = r.shape[:-1]
    g = np.zeros(lead + (4, 4, ctx.n))
    one = ctx.const(np.ones(lead))
    r2 = ctx.mul(r, r)
    s = ctx.sin(th)
    g[..., TAU, TAU, :] = one
    g[..., R, R, :] = one
    g[..., TH, TH, :] = r2
    g[..., PH, PH, :] = ctx.mul(r2, ctx.mul(s, s))
    return g


def _schwarzschild_fn(m):
    def fn(ctx, r, th):
        lead = r.shape[:-1]
        g = np.zeros(lead + (4, 4, ctx.n))
        one = ctx.const(np.ones(lead))
        f = one - 2.0 * m * ctx.inv(r)
        r2 = ctx.mul(r, r)
        s = ctx.sin(th)
        g[..., TAU, TAU, :] = f
        g[..., R, R, :] = ctx.inv(f)
        g[..., TH, TH, :] = r2
        g[..., PH, PH, :] = ctx.mul(r2, ctx.mul(s, s))
        return g
    return fn


def _kerr_fn(m, a):
    # Euclidean section of Kerr: t -> -i tau, a -> i a from Boyer-Lindquist.
    def fn(ctx, r, th):
        lead = r.shape[:-1]
        g = np.zeros(lead + (4, 4, ctx.n))
        one = ctx.const(np.ones(lead))
        s = ctx.sin(th)
        c = ctx.cos(th)
        s2, c2 = ctx.mul(s, s), ctx.mul(c, c)
        r2 = ctx.mul(r, r)
        sigma = r2 - (a * a) * c2
        delta = r2 - 2.0 * m * r - (a * a) * one
        inv_sigma = ctx.inv(sigma)
        g[..., TAU, TAU, :] = ctx.mul(delta + (a * a) * s2, inv_sigma)
        gtp = ctx.mul(-2.0 * m * a * ctx.mul(r, s2), inv_sigma)
        g[..., TAU, PH, :] = gtp
        g[..., PH, TAU, :] = gtp
        g[..., R, R, :] = ctx.mul(sigma, ctx.inv(delta))
        g[..., TH, TH, :] = sigma
        rr = r2 - (a * a) * one
        g[..., PH, PH, :] = ctx.mul(ctx.mul(ctx.mul(rr, rr) + ctx.mul(delta, (a * a) * s2),
                                            inv_sigma), s2)
        return g
    return fn


def _taub_nut_fn(n):
    # Gibbons-Hawking form, V = 1 + 2n/r, one-form 2n cos(theta) dphi.
    def fn(ctx, r, th):
        lead = r.shape[:-1]
        g = np.zeros(lead + (4, 4, ctx.n))
        one = ctx.const(np.ones(lead))
        V = one + 2.0 * n * ctx.inv(r)
        invV = ctx.inv(V)
        c = ctx.cos(th)
        s = ctx.sin(th)
        r2 = ctx.mul(r, r)
        A = 2.0 * n * c
        g[..., TAU, TAU, :] = invV
        gtp = ctx.mul(invV, A)
        g[..., TAU, PH, :] = gtp
        g[..., PH, TAU, :] = gtp
        g[..., PH, PH, :] = ctx.mul(invV, ctx.mul(A, A)) + ctx.mul(ctx.mul(V, r2),
                                                                   ctx.mul(s, s))
        g[..., R, R, :] = V
        g[..., TH, TH, :] = ctx.mul(V, r2)
        return g
    return fn


def _taub_bolt_fn(n):
    m = 1.25 * n  # bolt regularity fixes m = 5n/4, bolt at r = 2n
    def fn(ctx, r, th):
        lead = r.shape[:-1]
        g = np.zeros(lead + (4, 4, ctx.n))
        one = ctx.const(np.ones(lead))
        r2 = ctx.mul(r, r)
        num = r2 - 2.0 * m * r + (n * n) * one
        den = r2 - (n * n) * one
        f = ctx.mul(num, ctx.inv(den))
        c = ctx.cos(th)
        s = ctx.sin(th)
        A = 2.0 * n * c
        g[..., TAU, TAU, :] = f
        gtp = ctx.mul(f, A)
        g[..., TAU, PH, :] = gtp
        g[..., PH, TAU, :] = gtp
        g[..., PH, PH, :] = ctx.mul(f, ctx.mul(A, A)) + ctx.mul(den, ctx.mul(s, s))
        g[..., R, R, :] = ctx.inv(f)
        g[..., TH, TH, :] = den
        return g
    return fn


# ---------------------------------------------------------------------------
# Model constructors

def flat(period=2.0 * math.pi):
    return MetricModel(
        name="flat", params={"period": period}, scale=1.0, r_domain=(0.0, math.inf),
        metric_fn=_flat_fn, nuts=[], bolts=[],
        boundary=BoundaryData(chi_orbifold=2, ell_infinity=period, e_infinity=0),
        torus_area=period * 2.0 * math.pi, tau_period=period, is_flat=True,
        half_flat_side=None)


def schwarzschild(m=1.0):
    kappa = 1.0 / (4.0 * m)
    return MetricModel(
        name="schwarzschild", params={"m": m}, scale=m, r_domain=(2.0 * m, math.inf),
        metric_fn=_schwarzschild_fn(m),
        bolts=[BoltMeta(r_bolt=2.0 * m, kappa=kappa, euler_char=2, self_intersection=0)],
        boundary=BoundaryData(chi_orbifold=2, ell_infinity=2.0 * math.pi / kappa,
                              e_infinity=0),
        torus_area=(2.0 * math.pi / kappa) * 2.0 * math.pi,
        tau_period=2.0 * math.pi / kappa)


def _rationalize(x, max_den=64, tol=1e-9):
    from fractions import Fraction
    fr = Fraction(x).limit_denominator(max_den)
    if abs(float(fr) - x) < tol * abs(x):
        return fr.numerator, fr.denominator
    return None


def kerr(m=1.0, a=0.3):
    if not 0.0 < abs(a) < m:
        raise ValueError("kerr requires 0 < |a| < m for a regular Euclidean section")
    root = math.sqrt(m * m + a * a)
    r_plus = m + root
    kappa_h = root / (2.0 * m * r_plus)
    omega = abs(a) / (2.0 * m * r_plus)
    ratio = _rationalize(kappa_h / omega)
    weights = (ratio[0], ratio[1]) if ratio else None
    nut_n = NutMeta(position=(r_plus, 0.0), kappa1=kappa_h, kappa2=omega, weights=weights)
    nut_s = NutMeta(position=(r_plus, math.pi), kappa1=kappa_h, kappa2=omega,
                    weights=weights)
    return MetricModel(
        name="kerr", params={"m": m, "a": a}, scale=m, r_domain=(r_plus, math.inf),
        metric_fn=_kerr_fn(m, a), nuts=[nut_n, nut_s],
        boundary=BoundaryData(chi_orbifold=2, ell_infinity=2.0 * math.pi / kappa_h,
                              e_infinity=0),
        torus_area=(2.0 * math.pi / kappa_h) * 2.0 * math.pi,
        tau_period=2.0 * math.pi / kappa_h)


def taub_nut(n=1.0):
    kappa = 1.0 / (4.0 * n)
    return MetricModel(
        name="taub-nut", params={"n": n}, scale=2.0 * n, r_domain=(0.0, math.inf),
        metric_fn=_taub_nut_fn(n),
        nuts=[NutMeta(position=(0.0, math.pi / 2.0), kappa1=kappa, kappa2=kappa,
                      weights=(1, 1))],
        boundary=BoundaryData(chi_orbifold=2, ell_infinity=8.0 * math.pi * n,
                              e_infinity=0),  # e filled after orientation detection
        torus_area=8.0 * math.pi * n * 2.0 * math.pi,
        tau_period=8.0 * math.pi * n)


def taub_bolt(n=1.0):
    # orientation -1 realizes the CP^2-minus-point orientation with
    # sign[M] = +1, e = +1 and bolt self-intersection +1
    kappa = 1.0 / (4.0 * n)
    return MetricModel(
        name="taub-bolt", params={"n": n}, scale=2.0 * n, r_domain=(2.0 * n, math.inf),
        metric_fn=_taub_bolt_fn(n), orientation=-1.0,
        bolts=[BoltMeta(r_bolt=2.0 * n, kappa=kappa, euler_char=2, self_intersection=1)],
        boundary=BoundaryData(chi_orbifold=2, ell_infinity=8.0 * math.pi * n,
                              e_infinity=1),
        torus_area=8.0 * math.pi * n * 2.0 * math.pi,
        tau_period=8.0 * math.pi * n)


_CONSTRUCTORS = {
    "flat": flat,
    "schwarzschild": schwarzschild,
    "kerr": kerr,
    "taub-nut": taub_nut,
    "taub-bolt": taub_bolt,
}


def model_by_name(name, **params):
    if name not in _CONSTRUCTORS:
        raise KeyError(f"unknown metric '{name}'; known: {sorted(_CONSTRUCTORS)}")
    return _CONSTRUCTORS[name](**params)


# ---------------------------------------------------------------------------
# Sampling

def sample_points(model, count, seed, lam_min=0.1, r_max_factor=200.0):
    """Deterministic chart points with lambda >= lam_min, stratified in r.

    Points avoid the axis and inner-boundary margins.  The same (model
    parameters, seed) always reproduces the same list.
    """
    if not 0.0 < lam_min < 1.0 and not model.is_flat:
        raise SamplingError("lam_min must lie in (0, 1)")
    if count == 0:
        return np.zeros((0, 4))
    rng = np.random.default_rng(seed)
    r_lo = model.r_inner()
    r_hi = min(model.r_domain[1], r_max_factor * model.scale + r_lo)
    if not model.is_flat:
        # push the inner sampling radius out to where the equatorial lambda
        # clears lam_min (individual points are still rejected on lambda)
        def lam_eq(r):
            return float(model.lam(np.array([(0.0, r, math.pi / 2.0, 0.0)]))[0])
        if lam_eq(r_lo) < lam_min:
            from scipy.optimize import brentq
            r_lo = brentq(lambda r: lam_eq(r) - lam_min, r_lo, r_hi, xtol=1e-12)
            r_lo *= 1.0 + 1e-6
    n_bins = min(count, 8)
    edges = np.geomspace(r_lo, r_hi, n_bins + 1)
    out = []
    bin_i = 0
    attempts = 0
    while len(out) < count:
        attempts += 1
        if attempts > 200 * count:
            raise SamplingError(
                f"{model.name}: domain empty under constraints (lam_min={lam_min})")
        lo, hi = edges[bin_i], edges[bin_i + 1]
        r = float(np.exp(rng.uniform(np.log(lo), np.log(hi))))
        th = float(rng.uniform(model.theta_margin, math.pi - model.theta_margin))
        tau = float(rng.uniform(0.0, model.tau_period))
        ph = float(rng.uniform(0.0, 2.0 * math.pi))
        pt = (tau, r, th, ph)
        lam = float(model.lam(np.array([pt]))[0])
        if lam >= lam_min and lam <= 1.0 + 1e-12:
            out.append(pt)
            bin_i = (bin_i + 1) % n_bins
    return np.array(out)


# ---------------------------------------------------------------------------
# Surface-gravity extraction (invariant limits of mu, nu)

def _mu_nu(model, points, order=2):
    """Invariants mu = |grad xi|^2/2 and nu = eps(grad xi, grad xi)/4 at points."""
    frame = model.frame(order)
    g = model.metric_jets(frame, points)
    bundle = curvature(frame, g)
    ctx = frame.ctx
    xi_dn = g[..., :, TAU, :]
    F = cov_deriv_oneform(bundle, xi_dn)            # grad_a xi_b
    F = 0.5 * (F - np.einsum("pban->pabn", F))      # structural antisymmetry
    F_up = ctx.einsum("pac,pcb->pab", bundle.g_up,
                      ctx.einsum("pcd,pbd->pcb", F, bundle.g_up))
    mu = 0.5 * ctx.einsum("pab,pab->p", F, F_up)
    nu = 0.25 * ctx.einsum("pcd,pcd->p",
                           ctx.einsum("pabcd,pab->pcd", bundle.eps_dn, F_up), F_up)
    return mu[..., 0], nu[..., 0]


def _richardson(ts, vals, powers=(1, 2, 3, 4, 5)):
    """Limit of vals(t) as t->0 assuming vals = v0 + sum c_j t^powers[j]."""
    powers = powers[:len(ts) - 1]
    A = np.vstack([np.ones_like(ts)] + [ts ** p for p in powers]).T
    sol, *_ = np.linalg.lstsq(A, vals, rcond=None)
    return sol[0]


def surface_gravities(model, fixed_point, t0=0.04, n_steps=6):
    """Extract surface gravities at a declared nut or bolt by invariant limits.

    Nuts: solves mu -> k1^2 + k2^2, nu -> 2 k1 k2 along an approach ray with
    Richardson extrapolation; returns (|k1|, |k2|, epsilon).  Bolts: returns
    kappa = lim sqrt(mu) and checks lim nu = 0.  Cross-checks the declared
    metadata to 1e-6 relative.
    """
    if model.is_flat or (not model.nuts and not model.bolts):
        raise ExtractionError(f"{model.name}: no fixed points declared")
    ts = t0 / (2.0 ** np.arange(n_steps))
    if isinstance(fixed_point, BoltMeta):
        pts = np.array([(0.0, fixed_point.r_bolt * (1.0 + t), math.pi / 2.0, 0.0)
                        for t in ts])
        mu, nu = _mu_nu(model, pts)
        mu0 = _richardson(ts, mu)
        nu0 = _richardson(ts, nu)
        if abs(nu0) > 1e-8 * abs(mu0):
            raise ExtractionError(
                f"{model.name}: bolt nu-limit {nu0:.3e} not small vs mu {mu0:.3e}")
        kappa = math.sqrt(mu0)
        if abs(kappa - fixed_point.kappa) > 1e-6 * fixed_point.kappa:
            raise ExtractionError(
                f"{model.name}: extracted bolt kappa {kappa!r} vs declared "
                f"{fixed_point.kappa!r}")
        return {"kind": "bolt", "kappa": kappa, "nu_limit": nu0}
    # nut
    r0, th0 = fixed_point.position
    if r0 > 0.0:
        # chart-corner nut (pole of an r = r0 surface): approach diagonally
        th_of = (lambda t: t) if th0 < math.pi / 2.0 else (lambda t: math.pi - t)
        ray = [(0.0, r0 * (1.0 + t), th_of(t), 0.0) for t in ts]
    else:
        # coordinate-center nut: approach radially at fixed theta
        ray = [(0.0, t * model.scale, th0, 0.0) for t in ts]
    pts = np.array(ray)
    mu, nu = _mu_nu(model, pts)
    mu0 = _richardson(ts, mu)
    nu0 = _richardson(ts, nu)
    # mu -> k1^2 + k2^2, nu -> 2 k1 k2
    splus = math.sqrt(max(mu0 + nu0, 0.0))
    sminus = math.sqrt(max(mu0 - nu0, 0.0))
    k1 = 0.5 * (splus + sminus)
    k2 = 0.5 * abs(splus - sminus)
    eps = 1 if nu0 > 0 else -1
    for got, want in ((k1, fixed_point.kappa1), (k2, fixed_point.kappa2)):
        if abs(got - want) > 1e-6 * max(want, 1e-30):
            raise ExtractionError(
                f"{model.name}: extracted nut kappa {got!r} vs declared {want!r}")
    return {"kind": "nut", "kappa1": k1, "kappa2": k2, "epsilon": eps, "nu_limit": nu0}


# ---------------------------------------------------------------------------
# Validation gate

def _validate(model, seed=1234, n_points=30, tol=1e-9):
    pts = sample_points(model, n_points, seed=seed, lam_min=0.02 if not model.is_flat
                        else 0.0)
    frame = model.frame(3)
    g = model.metric_jets(frame, pts)
    bundle = curvature(frame, g)
    riem_scale = np.max(np.abs(bundle.Riemann[..., 0]))
    ric = np.max(np.abs(bundle.Ricci[..., 0]))
    if model.is_flat:
        # cancellation in the spherical chart leaves roundoff scaled by |g|
        gmax = np.max(np.abs(g[..., 0]))
        if riem_scale > 1e-12 * max(1.0, gmax):
            raise CatalogueValidationError(f"flat model has curvature {riem_scale:.3e}")
    elif ric > tol * riem_scale:
        raise CatalogueValidationError(
            f"{model.name}: Ricci residual {ric:.3e} vs Riemann scale {riem_scale:.3e}")
    xi_dn = g[..., :, TAU, :]
    nab = cov_deriv_oneform(bundle, xi_dn)
    kill = np.max(np.abs((nab + np.einsum("pban->pabn", nab))[..., 0]))
    kill_scale = max(np.max(np.abs(nab[..., 0])), 1e-12)
    if kill > tol * kill_scale:
        raise CatalogueValidationError(
            f"{model.name}: Killing residual {kill:.3e} (scale {kill_scale:.3e})")
    lam = model.lam(pts)
    if np.any(lam > 1.0 + 1e-12):
        raise CatalogueValidationError(f"{model.name}: lambda exceeds 1")
    if not model.is_flat and np.any(lam >= 1.0):
        raise CatalogueValidationError(f"{model.name}: lambda not < 1 in the bulk")
    # monotone approach of lambda to 1 along a radial ray
    rs = np.array([10.0, 100.0, 1000.0, 10000.0]) * model.scale + model.r_inner()
    ray = np.array([(0.0, r, math.pi / 2.0, 0.0) for r in rs])
    lam_ray = model.lam(ray)
    if not model.is_flat:
        if np.any(np.diff(lam_ray) <= 0) or abs(lam_ray[-1] - 1.0) > 1e-3:
            raise CatalogueValidationError(f"{model.name}: lambda does not rise to 1")
    # detect the half-flat side, if any
    wplus = float(np.max(np.abs(bundle.Wpm[+1][..., 0])))
    wminus = float(np.max(np.abs(bundle.Wpm[-1][..., 0])))
    big = max(wplus, wminus)
    if not model.is_flat and big > 0:
        if wplus < 1e-10 * big:
            model.half_flat_side = +1
        elif wminus < 1e-10 * big:
            model.half_flat_side = -1
    # fill nut orientations from extraction and fix e for Taub-NUT
    new_nuts = []
    for nut in model.nuts:
        res = surface_gravities(model, nut)
        new_nuts.append(replace(nut, epsilon=res["epsilon"]))
    model.nuts = new_nuts
    for bolt in model.bolts:
        surface_gravities(model, bolt)
    if model.name == "taub-nut" and model.nuts:
        # sign[S^4 \ pt] = 0 forces e = -epsilon(P) through the signature identity
        model.boundary = replace(model.boundary, e_infinity=-model.nuts[0].epsilon)
    model.validated = True
    return model


_CACHE = {}


def catalogue(params=None, seed=1234):
    """All catalogued models, each one past its self-validation gate.

    ``params`` optionally overrides constructor arguments per metric name,
    e.g. ``{"kerr": {"m": 1.0, "a": 0.75}}``.
    """
    params = params or {}
    out = []
    for name, ctor in _CONSTRUCTORS.items():
        kwargs = dict(params.get(name, {}))
        key = (name, tuple(sorted(kwargs.items())))
        if key not in _CACHE:
            _CACHE[key] = _validate(ctor(**kwargs), seed=seed)
        out.append(_CACHE[key])
    return out


def validated_model(name, seed=1234, **params):
    key = (name, tuple(sorted(params.items())))
    if key not in _CACHE:
        _CACHE[key] = _validate(model_by_name(name, **params), seed=seed)
    return _CACHE[key]
