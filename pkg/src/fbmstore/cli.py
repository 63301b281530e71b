"""Command-line front end.

Subcommands: rate, metrics, horizon, srd, covprobe. Every option can also be
given in a ``--config`` file (JSON object or key=value lines, keys named like
the options with underscores); command-line flags take precedence. The
default output directory may be set with FBMSTORE_OUTDIR.
"""
from __future__ import annotations

import argparse
import csv
import json
import os
import sys

import numpy as np

from . import io
from .qp import SolverError

DEFAULTS = {
    "rate": {
        "h": 0.5,
        "n": 256,
        "tol": 1e-8,
        "kind": "B",
        "delta": 0.0,
        "eps": 0.0,
        "horizon": 3.0,
        "sweep_delta": None,
        "check_prop33": False,
        "outdir": None,
        "prefix": "rate",
    },
    "metrics": {
        "h": 0.5,
        "horizons": "2,4,8",
        "t_ref": None,
        "reps": 10000,
        "step": 2.0**-8,
        "seed": 0,
        "batch_size": 256,
        "outdir": None,
        "prefix": "metrics",
    },
    "horizon": {
        "h": None,
        "theta": None,
        "x": None,
        "eps": 0.05,
        "n": 256,
        "tol": 1e-8,
        "batch": None,
        "outdir": None,
        "prefix": "horizon",
    },
    "srd": {
        "model": "gaussian",
        "model_file": None,
        "mu": 0.0,
        "sigma2": 1.0,
        "a": 1.0,
        "b": 2.0,
        "r": 2.0,
        "lam": 0.5,
        "mu_j": 1.0,
        "x": 0.0,
        "s_max": None,
        "sweep": None,
        "outdir": None,
        "prefix": "srd",
    },
    "covprobe": {
        "h": 0.7,
        "lags": "1,2,4,8",
        "warmup": None,
        "reps": 200,
        "step": 2.0**-6,
        "seed": 0,
        "outdir": None,
        "prefix": "covprobe",
    },
}

H_NOTE = (
    "Only logarithmic asymptotics are known; for H != 1/2 the fitted slope at "
    "desk-scale horizons is not expected to match -theta numerically."
)


def _floats(text):
    if isinstance(text, (list, tuple)):
        return [float(v) for v in text]
    return [float(v) for v in str(text).split(",") if v.strip()]


def _range(text):
    a, b, s = (float(v) for v in str(text).split(":"))
    k = int(np.floor((b - a) / s + 1e-9))
    return [round(a + i * s, 12) for i in range(k + 1)]


def _read_config(path):
    with open(path) as fh:
        text = fh.read().strip()
    if text.startswith("{"):
        return json.loads(text)
    out = {}
    for line in text.splitlines():
        line = line.split("#", 1)[0].strip()
        if line:
            k, _, v = line.partition("=")
            out[k.strip()] = _coerce(v.strip())
    return out


def _coerce(v):
    for cast in (int, float):
        try:
            return cast(v)
        except ValueError:
            pass
    if v.lower() in ("true", "false"):
        return v.lower() == "true"
    return v


def _resolve(command, ns):
    cfg = dict(DEFAULTS[command])
    given = {k: v for k, v in vars(ns).items() if k not in ("command", "config", "func")}
    if getattr(ns, "config", None):
        filecfg = _read_config(ns.config)
        unknown = sorted(set(filecfg) - set(cfg))
        if unknown:
            raise SystemExit(f"error: unknown config keys for '{command}': {unknown}")
        cfg.update(filecfg)
    cfg.update(given)
    if cfg.get("outdir") is None:
        cfg["outdir"] = io.default_outdir()
    return cfg


def _out(cfg, name):
    os.makedirs(cfg["outdir"], exist_ok=True)
    return os.path.join(cfg["outdir"], f"{cfg['prefix']}_{name}")


def _meta(command, cfg):
    shown = {k: v for k, v in cfg.items() if k != "outdir"}
    return io.metadata(command, shown)


def cmd_rate(cfg):
    from .rate_variational import ConstraintSet, check_proposition_3_3, j_delta, min_norm, phi, single_constraint_rate

    meta = _meta("rate", cfg)
    h, n, tol = float(cfg["h"]), int(cfg["n"]), float(cfg["tol"])
    cset = ConstraintSet(cfg["kind"], float(cfg["delta"]), float(cfg["eps"]), float(cfg["horizon"]))
    path = min_norm(h, cset, n=n, tol=tol)
    result = path.to_dict()
    if 0.5 < h < 1:
        result["phi"] = phi(h)
        result["upper_bound"] = 0.5 * phi(h)
    io.write_json(_out(cfg, "path.json"), result, meta)
    io.write_csv(_out(cfg, "path.csv"), *_split(path.csv_rows()), meta)
    label = "theta" if cset.kind == "B" else f"value[{cset.kind}]"
    print(f"{label} = {path.value:.10g}  kkt_residual = {path.kkt_residual:.3g}  duality_gap = {path.duality_gap:.3g}")

    if cfg.get("sweep_delta"):
        rows = []
        for d in _range(cfg["sweep_delta"]):
            rows.append((d, j_delta(h, d, n=n, horizon=float(cfg["horizon"]), tol=tol), single_constraint_rate(h, d)))
        io.write_csv(_out(cfg, "j_delta.csv"), ("delta", "j_delta", "single_constraint_rate"), rows, meta)
        print(f"j_delta sweep: {len(rows)} rows")
    if cfg.get("check_prop33"):
        rep = check_proposition_3_3(h, n=n, horizon=float(cfg["horizon"]), tol=tol)
        io.write_json(_out(cfg, "prop33.json"), rep, meta)
        print(f"A/A_bar/B max relative difference = {rep['max_relative_difference']:.4g}")
    return 0


def _split(rows):
    rows = list(rows)
    return rows[0], rows[1:]


def cmd_metrics(cfg):
    from .convergence_metrics import StarvationError, d1_ci, d1_hat, d2_hat, tail_fit, weibull_fit
    from .storage_sim import simulate_maxima

    horizons = _floats(cfg["horizons"])
    t_ref = float(cfg["t_ref"]) if cfg.get("t_ref") else 8.0 * max(horizons)
    cfg["t_ref"] = t_ref
    meta = _meta("metrics", cfg)
    h, reps, step = float(cfg["h"]), int(cfg["reps"]), float(cfg["step"])
    m = simulate_maxima(h, horizons + [t_ref], step, reps, int(cfg["seed"]), int(cfg["batch_size"]))
    ref = m[:, -1]
    d1 = [d1_hat(m[:, i], ref) for i in range(len(horizons))]
    d1w = [d1_ci(m[:, i], ref) for i in range(len(horizons))]
    d2 = [d2_hat(m[:, i], ref) for i in range(len(horizons))]
    rows = [(t, a, aw, b.estimate, b.half_width, reps) for t, a, aw, b in zip(horizons, d1, d1w, d2)]
    io.write_csv(
        _out(cfg, "table.csv"),
        ("horizon", "D1", "D1_ci_half_width", "D2", "D2_ci_half_width", "n_reps"),
        rows,
        meta,
    )
    for name, vals, ws in (("D1", d1, d1w), ("D2", [b.estimate for b in d2], [b.half_width for b in d2])):
        io.write_csv(
            _out(cfg, f"{name}.csv"),
            ("horizon", "estimate", "ci_half_width", "n_reps"),
            [(t, v, w, reps) for t, v, w in zip(horizons, vals, ws)],
            meta,
        )
    report = {"horizons": horizons, "t_ref": t_ref, "D1": d1, "D2": [b.estimate for b in d2]}
    status = 0
    for name, vals, ws in (("D1", d1, d1w), ("D2", [b.estimate for b in d2], [b.half_width for b in d2])):
        try:
            report[f"fit_{name}"] = weibull_fit(h, horizons, vals, ws).to_dict()
        except StarvationError as exc:
            report[f"fit_{name}"] = {"error": str(exc)}
            status = 1
    report["strictly_decreasing"] = {
        "D1": bool(np.all(np.diff(d1) < 0)),
        "D2": bool(np.all(np.diff(report["D2"]) < 0)),
    }
    try:
        report["tail_fit"] = tail_fit(h, ref).to_dict()
    except ValueError as exc:
        report["tail_fit"] = {"error": str(exc)}
    if h != 0.5:
        report["note"] = H_NOTE
    io.write_json(_out(cfg, "fit.json"), report, meta)
    for name in ("D1", "D2"):
        fit = report[f"fit_{name}"]
        if "slope" in fit:
            print(f"{name} slope = {fit['slope']:.6g} (r^2 {fit['r_squared']:.4f})")
        else:
            print(f"{name} fit failed: {fit['error']}", file=sys.stderr)
    return status


def cmd_horizon(cfg):
    from .horizon_planner import HorizonRequest, horizon, horizon_with_computed_theta

    meta = _meta("horizon", cfg)
    if cfg.get("batch"):
        with open(cfg["batch"], newline="") as fh:
            reader = csv.DictReader(ln for ln in fh if not ln.startswith("#"))
            fields = list(reader.fieldnames or [])
            rows = []
            for rec in reader:
                resp = horizon(HorizonRequest(float(rec["h"]), float(rec["theta"]), float(rec["x"]), float(rec["eps"])))
                rows.append([rec[f] for f in fields] + [resp.t, resp.t_star, resp.numerator_rate, resp.denominator_rate])
        path = _out(cfg, "batch.csv")
        io.write_csv(path, fields + ["t", "t_star", "numerator_rate", "denominator_rate"], rows, meta)
        print(io.dumps({"rows": len(rows), "output": os.path.basename(path)}))
        return 0
    for key in ("h", "x"):
        if cfg.get(key) is None:
            raise SystemExit(f"error: --{key} is required")
    if cfg.get("theta") is None:
        resp = horizon_with_computed_theta(float(cfg["h"]), float(cfg["x"]), float(cfg["eps"]), int(cfg["n"]), float(cfg["tol"]))
    else:
        resp = horizon(HorizonRequest(float(cfg["h"]), float(cfg["theta"]), float(cfg["x"]), float(cfg["eps"])))
    io.write_json(_out(cfg, "response.json"), resp.to_dict(), meta)
    print(io.dumps(resp.to_dict()))
    return 0


def _model(cfg):
    from .srd_rates import CumulantModel, load_model

    if cfg.get("model_file"):
        return load_model(cfg["model_file"])
    kind = cfg["model"]
    if kind in ("gaussian", "gaussian_iid"):
        return CumulantModel("gaussian_iid", {"mu": float(cfg["mu"]), "sigma2": float(cfg["sigma2"])})
    if kind in ("markov", "markov_fluid_2state"):
        return CumulantModel("markov_fluid_2state", {k: float(cfg[k]) for k in ("a", "b", "r")})
    if kind in ("cpoisson", "compound_poisson_exp"):
        return CumulantModel("compound_poisson_exp", {"lam": float(cfg["lam"]), "mu_j": float(cfg["mu_j"])})
    raise SystemExit(f"error: unknown model {kind!r}")


def cmd_srd(cfg):
    from .srd_rates import RateFunction, di_decay_rate, k_rate

    meta = _meta("srd", cfg)
    model = _model(cfg)
    rf = RateFunction(model)
    s_max = cfg.get("s_max")
    s_max = None if s_max is None else float(s_max)
    kr = k_rate(model, float(cfg["x"]), s_max, rate=rf)
    result = {
        "model": model.to_dict(),
        "mean_rate": model.mean_rate,
        "x": kr.x,
        "k_rate": kr.value,
        "s_star": kr.s_star,
        "s_max": kr.s_max,
        "flag": kr.flag,
        "di_decay_rate": di_decay_rate(model),
    }
    io.write_json(_out(cfg, "result.json"), result, meta)
    if cfg.get("sweep"):
        rows = [k_rate(model, x, s_max, rate=rf).row() for x in _range(cfg["sweep"])]
        io.write_csv(_out(cfg, "k_sweep.csv"), ("x", "k_rate", "s_star", "flag"), rows, meta)
    print(repr(kr.value))
    return 0


def cmd_covprobe(cfg):
    from .covariance_probe import conjecture_diagnostic, default_warmup, estimate_cov

    h, step, seed = float(cfg["h"]), float(cfg["step"]), int(cfg["seed"])
    if cfg.get("warmup") is None:
        cfg["warmup"] = default_warmup(h, step=step, seed=seed + 1)
    meta = _meta("covprobe", cfg)
    est = estimate_cov(h, _floats(cfg["lags"]), float(cfg["warmup"]), int(cfg["reps"]), step, seed)
    io.write_csv(_out(cfg, "cov.csv"), ("lag", "cov", "ci", "reps"), est.rows(), meta)
    try:
        rep = conjecture_diagnostic(est, h).to_dict()
    except ValueError as exc:
        rep = {"preferred": "inconclusive", "error": str(exc)}
    rep.update({"warmup": est.warmup, "mean_q": est.mean_q, "asserted": False})
    io.write_json(_out(cfg, "report.json"), rep, meta)
    print(f"preferred = {rep['preferred']}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="fbmstore", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    S = argparse.SUPPRESS

    def common(sp):
        sp.add_argument("--config", default=None, help="JSON or key=value file")
        sp.add_argument("--outdir", default=S)
        sp.add_argument("--prefix", default=S)

    r = sub.add_parser("rate", help="discretized large-deviations rates", argument_default=S)
    common(r)
    r.add_argument("--h", type=float)
    r.add_argument("--n", type=int)
    r.add_argument("--tol", type=float)
    r.add_argument("--kind", choices=["B", "A_delta", "A_bar", "D_delta", "D_delta_eps"])
    r.add_argument("--delta", type=float)
    r.add_argument("--eps", type=float)
    r.add_argument("--horizon", type=float)
    r.add_argument("--sweep-delta", dest="sweep_delta", metavar="START:STOP:STEP")
    r.add_argument("--check-prop33", dest="check_prop33", action="store_true")
    r.set_defaults(func=cmd_rate)

    m = sub.add_parser("metrics", help="Monte Carlo D1/D2 over a horizon ladder", argument_default=S)
    common(m)
    m.add_argument("--h", type=float)
    m.add_argument("--horizons")
    m.add_argument("--t-ref", dest="t_ref", type=float)
    m.add_argument("--reps", type=int)
    m.add_argument("--step", type=float)
    m.add_argument("--seed", type=int)
    m.add_argument("--batch-size", dest="batch_size", type=int)
    m.set_defaults(func=cmd_metrics)

    hz = sub.add_parser("horizon", help="simulation horizon bound", argument_default=S)
    common(hz)
    hz.add_argument("--h", type=float)
    hz.add_argument("--theta", type=float)
    hz.add_argument("--x", type=float)
    hz.add_argument("--eps", type=float)
    hz.add_argument("--n", type=int)
    hz.add_argument("--tol", type=float)
    hz.add_argument("--batch", help="CSV with columns h,theta,x,eps")
    hz.set_defaults(func=cmd_horizon)

    s = sub.add_parser("srd", help="short-range-dependent decay rates", argument_default=S)
    common(s)
    s.add_argument("--model", choices=["gaussian", "markov", "cpoisson"])
    s.add_argument("--model-file", dest="model_file")
    for name in ("mu", "sigma2", "a", "b", "r", "lam", "x"):
        s.add_argument(f"--{name}", type=float)
    s.add_argument("--mu-j", dest="mu_j", type=float)
    s.add_argument("--s-max", dest="s_max", type=float)
    s.add_argument("--sweep", metavar="START:STOP:STEP")
    s.set_defaults(func=cmd_srd)

    c = sub.add_parser("covprobe", help="workload covariance decay diagnostic", argument_default=S)
    common(c)
    c.add_argument("--h", type=float)
    c.add_argument("--lags")
    c.add_argument("--warmup", type=float)
    c.add_argument("--reps", type=int)
    c.add_argument("--step", type=float)
    c.add_argument("--seed", type=int)
    c.set_defaults(func=cmd_covprobe)
    return p


def main(argv=None) -> int:
    ns = build_parser().parse_args(argv)
    cfg = _resolve(ns.command, ns)
    try:
        return ns.func(cfg)
    except SolverError as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
