"""Command-line entry points and report emission.

Subcommands: list-metrics, verify-identities, petrov, charges, balance,
classify, case-analysis, decay.  Exit code 0 means every requested check
passed, 1 means a verification failure (the report carries the reason),
2 means a usage or configuration error.

Reports are machine-first: a single JSON document (or JSON lines for
enumerations) wrapped in an envelope whose ``generated_at`` field is the only
nondeterministic part; rerunning a command with identical flags reproduces
the report body byte for byte.  Markdown summaries are derived views.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from dataclasses import asdict, is_dataclass

from . import combinatorics as comb
from . import metrics as met

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


def _json_default(obj):
    if is_dataclass(obj):
        return asdict(obj)
    raise TypeError(f"not serializable: {type(obj)}")


def _emit(args, body, markdown_fn=None):
    envelope = {"command": args.command,
                "generated_at": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime()),
                "report": body}
    if args.format == "markdown" and markdown_fn is not None:
        text = markdown_fn(body)
    else:
        text = json.dumps(envelope, indent=2, sort_keys=True, default=_json_default)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text + "\n")
    else:
        sys.stdout.write(text + "\n")


def _read_config(path):
    out = {}
    with open(path) as fh:
        for line in fh:
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"config line without '=': {line!r}")
            key, val = (s.strip() for s in line.split("=", 1))
            out[key] = val
    return out


_KNOWN_KEYS = {"metric", "m", "a", "n", "points", "seed", "order", "tolerance",
               "floor", "lam-min"}


def _apply_config(args, cfg):
    for key, val in cfg.items():
        if key not in _KNOWN_KEYS:
            raise ValueError(f"unknown config key {key!r}")
        attr = key.replace("-", "_")
        cur = getattr(args, attr, None)
        if cur is None:
            if key in ("points", "seed", "order"):
                setattr(args, attr, int(val))
            elif key == "metric":
                setattr(args, attr, val)
            else:
                setattr(args, attr, float(val))


def _model_from_args(args):
    params = {}
    if args.metric in ("schwarzschild", "kerr") and args.m is not None:
        params["m"] = args.m
    if args.metric == "kerr" and args.a is not None:
        params["a"] = args.a
    if args.metric in ("taub-nut", "taub-bolt") and args.n is not None:
        params["n"] = args.n
    return met.validated_model(args.metric, **params)


def _metric_options(p):
    p.add_argument("--metric", required=True,
                   choices=sorted(met._CONSTRUCTORS))
    p.add_argument("--m", type=float, default=None, help="mass parameter")
    p.add_argument("--a", type=float, default=None, help="rotation parameter")
    p.add_argument("--n", type=float, default=None, help="nut parameter")


def _common_options(p):
    p.add_argument("--seed", type=int, default=7)
    p.add_argument("--points", type=int, default=100)
    p.add_argument("--order", type=int, default=4, help="jet order K")
    p.add_argument("--tolerance", type=float, default=None)
    p.add_argument("--floor", type=float, default=None)
    p.add_argument("--lam-min", dest="lam_min", type=float, default=0.1)
    p.add_argument("--config", default=None, help="key=value config file")
    p.add_argument("--format", choices=("json", "markdown"), default="json")
    p.add_argument("--out", default=None, help="write the report here")


def build_parser():
    ap = argparse.ArgumentParser(
        prog="gravinst",
        description="numerical and exact verification of S1-symmetric ALF "
                    "instanton identities")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("list-metrics", help="catalogued metrics and their data")
    p.add_argument("--format", choices=("json", "markdown"), default="json")
    p.add_argument("--out", default=None)

    p = sub.add_parser("verify-identities",
                       help="run the pointwise identity suite on one metric")
    _metric_options(p)
    _common_options(p)
    p.add_argument("--orientation", choices=("+1", "-1", "both"), default="both")
    p.add_argument("--identity", action="append", default=None,
                   help="restrict to these identity ids (repeatable)")

    p = sub.add_parser("petrov", help="Petrov classification per duality side")
    _metric_options(p)
    _common_options(p)

    p = sub.add_parser("charges", help="nut/bolt charges with extrapolation")
    _metric_options(p)
    _common_options(p)

    p = sub.add_parser("balance", help="boundary balance of the divergence identity")
    _metric_options(p)
    _common_options(p)
    p.add_argument("--sign", choices=("+", "-", "both"), default="both")

    p = sub.add_parser("decay", help="asymptotic decay-rate fits")
    _metric_options(p)
    _common_options(p)

    p = sub.add_parser("classify",
                       help="enumerate admissible fixed-point configurations")
    p.add_argument("--chi", type=int, required=True)
    p.add_argument("--sign", type=int, required=True)
    p.add_argument("--e", type=int, required=True)
    p.add_argument("--max-weight", type=int, default=6)
    p.add_argument("--max-nuts", type=int, default=6)
    p.add_argument("--bolts", action="store_true",
                   help="include bolt variants (chi in {2,0,-2}, |B.B| <= 8, "
                        "at most 2 bolts by default)")
    p.add_argument("--max-bolts", type=int, default=2)
    p.add_argument("--bb-max", type=int, default=8)
    p.add_argument("--format", choices=("json", "markdown"), default="json")
    p.add_argument("--out", default=None)

    p = sub.add_parser("case-analysis",
                       help="replay a uniqueness case analysis exactly")
    p.add_argument("--topology", choices=sorted(comb.TOPOLOGIES), required=True)
    p.add_argument("--max-weight", type=int, default=12)
    p.add_argument("--max-nuts", type=int, default=6)
    p.add_argument("--no-bolts", action="store_true")
    p.add_argument("--full", action="store_true",
                   help="keep one row per configuration (can be very large)")
    p.add_argument("--format", choices=("json", "markdown"), default="json")
    p.add_argument("--out", default=None)
    return ap


# ---------------------------------------------------------------------------
# Markdown views

def _md_reports_table(reports):
    lines = ["| identity | side | n | max rel resid | scale | status |",
             "|---|---|---|---|---|---|"]
    for r in reports:
        status = "skip: " + r["skipped"] if r["skipped"] else \
            ("pass" if r["passed"] else "FAIL")
        rel = "" if r["max_rel_residual"] is None else f"{r['max_rel_residual']:.2e}"
        scale = "" if r["scale"] is None else f"{r['scale']:.2e}"
        lines.append(f"| {r['identity']} | {r['side']} | {r['n_points']} "
                     f"| {rel} | {scale} | {status} |")
    return "\n".join(lines)


def _md_case(body):
    lines = [f"# case analysis: {body['topology']}",
             f"admissible configurations: {body['n_admissible']} "
             f"(with bolts: {body['n_with_bolts']})",
             f"realizability candidates: {body['n_candidates']}",
             f"counterexamples: {body['n_counterexamples']}",
             f"max Phi+: {body['phi_plus_max']}, max Phi-: {body['phi_minus_max']}"]
    return "\n".join(lines)


# ---------------------------------------------------------------------------
# Command bodies

def _cmd_list_metrics(args):
    rows = []
    for model in met.catalogue():
        rows.append({
            "name": model.name, "parameters": model.params,
            "nuts": [{"kappa1": n.kappa1, "kappa2": n.kappa2,
                      "weights": list(n.weights) if n.weights else None,
                      "epsilon": n.epsilon} for n in model.nuts],
            "bolts": [{"kappa": b.kappa, "euler_char": b.euler_char,
                       "self_intersection": b.self_intersection}
                      for b in model.bolts],
            "e_infinity": model.boundary.e_infinity,
            "ell_infinity": model.boundary.ell_infinity,
            "chi_orbifold": model.boundary.chi_orbifold,
            "half_flat_side": ({1: "+", -1: "-"}.get(model.half_flat_side)
                               if model.half_flat_side else None),
            "validated": model.validated})
    def md(body):
        lines = ["| metric | params | fixed points | e | half-flat |", "|---|---|---|---|---|"]
        for r in body:
            fps = f"{len(r['nuts'])} nuts, {len(r['bolts'])} bolts"
            lines.append(f"| {r['name']} | {r['parameters']} | {fps} "
                         f"| {r['e_infinity']} | {r['half_flat_side'] or '-'} |")
        return "\n".join(lines)
    _emit(args, rows, md)
    return EXIT_OK


def _cmd_verify(args):
    from .identities import run_suite, TOL_REL, FLOOR_ABS
    model = _model_from_args(args)
    tol = args.tolerance if args.tolerance is not None else TOL_REL
    floor = args.floor if args.floor is not None else FLOOR_ABS
    orientations = {"+1": (1,), "-1": (-1,), "both": (1, -1)}[args.orientation]
    reports = []
    for orient in orientations:
        reports += [r.to_dict() for r in run_suite(
            model, suite=args.identity, n_points=args.points, seed=args.seed,
            order=args.order, lam_min=args.lam_min, tol=tol, floor=floor,
            orientation=orient)]
    n_fail = sum(1 for r in reports if r["passed"] is False)
    body = {"metric": model.name, "parameters": model.params,
            "n_reports": len(reports), "n_failed": n_fail,
            "n_skipped": sum(1 for r in reports if r["skipped"]),
            "reports": reports}
    _emit(args, body, lambda b: _md_reports_table(b["reports"]))
    return EXIT_OK if n_fail == 0 else EXIT_FAIL


def _cmd_petrov(args):
    from .concomitants import concomitants_at, petrov_classify
    model = _model_from_args(args)
    pts = met.sample_points(model, max(args.points, 20), seed=args.seed,
                            lam_min=args.lam_min)
    con = concomitants_at(model, pts, order=args.order)
    res = petrov_classify(con)
    body = {"metric": model.name, "parameters": model.params,
            "n_points": int(pts.shape[0]),
            "sides": {("+" if s > 0 else "-"): res[s] for s in res}}
    ok = all(v["classification"] != "inconsistent" for v in res.values())
    _emit(args, body)
    return EXIT_OK if ok else EXIT_FAIL


def _cmd_charges(args):
    from .flux import charge
    model = _model_from_args(args)
    rows = []
    ok = True
    for fp in model.fixed_points():
        res = charge(model, fp)
        rel = abs(res["charge"] - res["expected"]) / max(abs(res["expected"]), 1e-9)
        res["rel_error"] = rel
        ok = ok and rel < 1e-4
        rows.append(res)
    if not rows:
        body = {"metric": model.name, "note": "no fixed points"}
        _emit(args, body)
        return EXIT_OK
    body = {"metric": model.name, "parameters": model.params, "charges": rows}
    _emit(args, body)
    return EXIT_OK if ok else EXIT_FAIL


def _cmd_balance(args):
    from .flux import global_balance
    model = _model_from_args(args)
    signs = {"+": (1,), "-": (-1,), "both": (1, -1)}[args.sign]
    rows, ok = [], True
    for s in signs:
        if model.half_flat_side == s or model.is_flat:
            rows.append({"sign": "+" if s > 0 else "-",
                         "skipped": "half-flat side"})
            continue
        ledger = global_balance(model, s).to_dict()
        ledger["closed_form_rel"] = abs(ledger["boundary_sum"]) \
            / max(ledger["scale"], 1e-30)
        ok = ok and ledger["closed_form_rel"] < 1e-5
        rows.append(ledger)
    body = {"metric": model.name, "parameters": model.params, "ledgers": rows}
    _emit(args, body)
    return EXIT_OK if ok else EXIT_FAIL


def _cmd_decay(args):
    from .identities import asymptotic_decay_suite
    model = _model_from_args(args)
    res = asymptotic_decay_suite(model)
    ok = all(v["passed"] is not False for v in res.values())
    body = {"metric": model.name, "parameters": model.params, "fits": res}
    _emit(args, body)
    return EXIT_OK if ok else EXIT_FAIL


def _cmd_classify(args):
    configs = comb.enumerate_configs(
        args.chi, args.sign, args.e, n_max=args.max_nuts, w_max=args.max_weight,
        include_bolts=args.bolts, bb_max=args.bb_max, max_bolts=args.max_bolts)
    lines = []
    for cfg in configs:
        phi_p, phi_m = comb.phi_values(cfg)
        lines.append(json.dumps({"config": cfg.to_dict(),
                                 "phi_plus": str(phi_p),
                                 "phi_minus": str(phi_m)}, sort_keys=True))
    summary = json.dumps({"summary": {"chi": args.chi, "sign": args.sign,
                                      "e": args.e, "count": len(configs)}},
                         sort_keys=True)
    text = "\n".join(lines + [summary])
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text + "\n")
    else:
        sys.stdout.write(text + "\n")
    return EXIT_OK


def _cmd_case(args):
    res = comb.case_analysis(args.topology, w_max=args.max_weight,
                             n_max=args.max_nuts,
                             include_bolts=not args.no_bolts,
                             collect="full" if args.full else "summary")
    _emit(args, res, _md_case)
    return EXIT_OK if res["n_counterexamples"] == 0 else EXIT_FAIL


_COMMANDS = {"list-metrics": _cmd_list_metrics, "verify-identities": _cmd_verify,
             "petrov": _cmd_petrov, "charges": _cmd_charges,
             "balance": _cmd_balance, "decay": _cmd_decay,
             "classify": _cmd_classify, "case-analysis": _cmd_case}


def main(argv=None):
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else EXIT_OK
    try:
        if getattr(args, "config", None):
            _apply_config(args, _read_config(args.config))
        return _COMMANDS[args.command](args)
    except (ValueError, KeyError, OSError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_USAGE
    except Exception as exc:  # verification machinery errors carry the reason
        sys.stderr.write(f"verification error: {exc}\n")
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
