import math
import json
import os

import numpy as np
import pytest

from gravinst.metrics import (CatalogueValidationError, ExtractionError,
                              catalogue, sample_points, surface_gravities,
                              validated_model)

GOLDEN = os.path.join(os.path.dirname(__file__), "golden")


# ---------------------------------------------------------------------------
# Independent symbolic oracle for the transcribed line elements: sympy builds
# the Ricci tensor from the metric matrix, mpmath evaluates it at high
# precision.  This path shares nothing with the jet pipeline.

def _symbolic_metric(name):
    import sympy as sp
    r, th = sp.symbols("r theta", positive=True)
    if name == "schwarzschild":
        m = sp.Integer(1)
        f = 1 - 2 * m / r
        g = sp.diag(f, 1 / f, r ** 2, r ** 2 * sp.sin(th) ** 2)
    elif name == "kerr":
        m, a = sp.Integer(1), sp.Rational(3, 10)
        sig = r ** 2 - a ** 2 * sp.cos(th) ** 2
        dl = r ** 2 - 2 * m * r - a ** 2
        g = sp.zeros(4, 4)
        g[0, 0] = (dl + a ** 2 * sp.sin(th) ** 2) / sig
        g[0, 3] = g[3, 0] = -2 * m * a * r * sp.sin(th) ** 2 / sig
        g[1, 1] = sig / dl
        g[2, 2] = sig
        g[3, 3] = ((r ** 2 - a ** 2) ** 2 + dl * a ** 2 * sp.sin(th) ** 2) \
            * sp.sin(th) ** 2 / sig
    elif name == "taub-nut":
        n = sp.Integer(1)
        V = 1 + 2 * n / r
        A = 2 * n * sp.cos(th)
        g = sp.zeros(4, 4)
        g[0, 0] = 1 / V
        g[0, 3] = g[3, 0] = A / V
        g[3, 3] = A ** 2 / V + V * r ** 2 * sp.sin(th) ** 2
        g[1, 1] = V
        g[2, 2] = V * r ** 2
    elif name == "taub-bolt":
        n = sp.Integer(1)
        m = sp.Rational(5, 4) * n
        f = (r ** 2 - 2 * m * r + n ** 2) / (r ** 2 - n ** 2)
        A = 2 * n * sp.cos(th)
        g = sp.zeros(4, 4)
        g[0, 0] = f
        g[0, 3] = g[3, 0] = f * A
        g[3, 3] = f * A ** 2 + (r ** 2 - n ** 2) * sp.sin(th) ** 2
        g[1, 1] = 1 / f
        g[2, 2] = r ** 2 - n ** 2
    else:
        raise KeyError(name)
    return (r, th), g


def _symbolic_ricci_evaluator(name):
    import sympy as sp
    (r, th), g = _symbolic_metric(name)
    coords = [sp.Symbol("tau"), r, th, sp.Symbol("phi")]
    ginv = g.inv()
    gamma = [[[sum(ginv[a, d] * (sp.diff(g[d, c], coords[b])
                                 + sp.diff(g[b, d], coords[c])
                                 - sp.diff(g[b, c], coords[d])) / 2
                   for d in range(4)) for c in range(4)] for b in range(4)]
             for a in range(4)]
    ricci = sp.zeros(4, 4)
    for b in range(4):
        for c in range(4):
            expr = 0
            for a in range(4):
                expr += sp.diff(gamma[a][b][c], coords[a]) \
                    - sp.diff(gamma[a][a][c], coords[b])
                for d in range(4):
                    expr += gamma[a][a][d] * gamma[d][b][c] \
                        - gamma[a][b][d] * gamma[d][a][c]
            ricci[b, c] = expr
    return sp.lambdify((r, th), ricci, modules="mpmath"), \
        sp.lambdify((r, th), g, modules="mpmath")


@pytest.mark.parametrize("name,point", [
    ("schwarzschild", (5.3, 1.1)),
    ("kerr", (4.7, 0.9)),
    ("taub-nut", (1.7, 2.1)),
    ("taub-bolt", (3.9, 0.7)),
])
def test_transcriptions_are_ricci_flat_symbolically(name, point):
    import mpmath as mp
    mp.mp.dps = 40
    ricci_fn, g_fn = _symbolic_ricci_evaluator(name)
    ric = ricci_fn(mp.mpf(point[0]), mp.mpf(point[1]))
    gm = g_fn(mp.mpf(point[0]), mp.mpf(point[1]))
    scale = max(abs(gm[i, j]) for i in range(4) for j in range(4))
    worst = max(abs(ric[i, j]) for i in range(4) for j in range(4))
    assert worst < mp.mpf("1e-30") * scale


# ---------------------------------------------------------------------------
# Catalogue gate

def test_catalogue_contains_required_models_and_validates(all_models):
    names = {m.name for m in all_models}
    assert {"flat", "schwarzschild", "kerr", "taub-nut", "taub-bolt"} <= names
    assert all(m.validated for m in all_models)


def test_flat_model_has_constant_norm_and_no_curvature(flat):
    pts = sample_points(flat, 10, seed=2, lam_min=0.0)
    assert np.allclose(flat.lam(pts), 1.0)
    assert not flat.fixed_points()


def test_corrupted_metric_fails_the_gate(schwarzschild):
    from gravinst.metrics import _validate
    broken = schwarzschild.mutated(1e-3)
    with pytest.raises(CatalogueValidationError):
        _validate(broken)


def test_lambda_below_one_and_monotone(all_models):
    for model in all_models:
        if model.is_flat:
            continue
        rs = np.array([10.0, 100.0, 1000.0, 10000.0]) * model.scale
        ray = np.stack([np.zeros_like(rs), rs + model.r_inner(),
                        np.full_like(rs, math.pi / 2), np.zeros_like(rs)], axis=1)
        lam = model.lam(ray)
        assert np.all(np.diff(lam) > 0) and lam[-1] < 1.0


# ---------------------------------------------------------------------------
# Sampling

def test_sample_points_deterministic_golden(schwarzschild):
    pts = sample_points(schwarzschild, 12, seed=7, lam_min=0.1)
    path = os.path.join(GOLDEN, "sample_points_schwarzschild_seed7.json")
    got = [[round(float(v), 12) for v in row] for row in pts]
    with open(path) as fh:
        expected = json.load(fh)
    assert got == expected


def test_sample_points_respect_lambda_floor(kerr):
    pts = sample_points(kerr, 40, seed=3, lam_min=0.25)
    assert np.all(kerr.lam(pts) >= 0.25)


def test_sample_points_empty_and_rerun_identical(taub_nut):
    assert sample_points(taub_nut, 0, seed=1).shape == (0, 4)
    a = sample_points(taub_nut, 25, seed=42)
    b = sample_points(taub_nut, 25, seed=42)
    assert np.array_equal(a, b)


# ---------------------------------------------------------------------------
# Surface gravities

def test_schwarzschild_bolt_surface_gravity(schwarzschild):
    # closed form: lambda = 1 - 2m/r gives kappa = 1/(4m)
    res = surface_gravities(schwarzschild, schwarzschild.bolts[0])
    assert res["kind"] == "bolt"
    assert abs(res["kappa"] - 0.25) < 1e-8
    assert abs(res["nu_limit"]) < 1e-8 * res["kappa"] ** 2


def test_taub_nut_self_dual_nut(taub_nut):
    # splitting kappa1/kappa2 out of (mu, nu) takes a square root of the
    # extrapolation residual at a self-dual nut, so ~1e-7 is the attainable
    # agreement; the spec's metadata cross-check is 1e-6 relative
    res = surface_gravities(taub_nut, taub_nut.nuts[0])
    assert res["kind"] == "nut"
    assert abs(res["kappa1"] - res["kappa2"]) < 1e-7
    assert abs(res["kappa1"] - 0.25) < 1e-7


def test_kerr_nut_gravities_match_closed_form(kerr_rational):
    m, a = 1.0, 0.75
    root = math.sqrt(m * m + a * a)
    r_plus = m + root
    kappa, omega = root / (2 * m * r_plus), a / (2 * m * r_plus)
    eps_seen = set()
    for nut in kerr_rational.nuts:
        res = surface_gravities(kerr_rational, nut)
        assert abs(res["kappa1"] - kappa) < 1e-7 * kappa
        assert abs(res["kappa2"] - omega) < 1e-7 * omega
        eps_seen.add(res["epsilon"])
        assert nut.weights == (5, 3)
    assert eps_seen == {+1, -1}


def test_flat_has_no_fixed_points_to_extract(flat):
    with pytest.raises(ExtractionError):
        surface_gravities(flat, None)


def test_taub_bolt_nu_limit_small(taub_bolt):
    res = surface_gravities(taub_bolt, taub_bolt.bolts[0])
    assert abs(res["nu_limit"]) < 1e-8 * res["kappa"] ** 2
