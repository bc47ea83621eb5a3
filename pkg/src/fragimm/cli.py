"""Command-line surface of the laboratory.

Science parameters live in a JSON config (explicit keys, no positional
science arguments); the command line only selects the action and the
run-level knobs (seed, output directory, replica count, cutoff).
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from typing import Dict, List, Optional

import numpy as np

from . import rng as rngmod
from .brownian import prop_report
from .deterministic import mu_stat_estimate, mu_stat_moment
from .errors import ConfigError, FragimmError
from .experiments import (dislocation_from_config, fi_config_from,
                          flags_from_config, immigration_from_config,
                          load_config, run, write_csv, write_manifest, _get)
from .families import immigration_report, phi, stationarity_gate
from .immigration import sample_stationary, simulate_fi


def _print_json(obj) -> None:
    json.dump(obj, sys.stdout, indent=2, sort_keys=True, default=str)
    sys.stdout.write("\n")


def _common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("config", help="JSON config path")
    parser.add_argument("--seed", type=int, default=None,
                        help="master seed (overrides config)")
    parser.add_argument("--out", default=None, help="output directory")
    parser.add_argument("--reps", type=int, default=None,
                        help="replica count (overrides config)")
    parser.add_argument("--eps", type=float, default=None,
                        help="mass cutoff (overrides config)")


def _load(args) -> Dict:
    raw = load_config(args.config)
    if args.seed is not None:
        raw["seed"] = args.seed
    if args.out is not None:
        raw["out"] = args.out
    if args.reps is not None:
        raw["n_reps"] = args.reps
    if args.eps is not None:
        raw["eps"] = args.eps
    return raw


def cmd_phi(args) -> int:
    raw = _load(args)
    disl = dislocation_from_config(raw)
    q_grid = [float(q) for q in _get(raw, "phi.q_grid",
                                     (0.0, 0.5, 1.0, 2.0, 5.0, 10.0))]
    rows = [(q, phi(disl, q), phi(disl, q, method="quadrature")
             if disl.family != "discrete_finite" else phi(disl, q))
            for q in q_grid]
    out = raw.get("out")
    if out:
        path = write_csv(os.path.join(out, "phi.csv"),
                         ("q", "phi", "phi_quadrature"), rows)
        write_manifest(out, raw, [path])
    for q, v, vq in rows:
        print(f"{q:g},{v:.12g},{vq:.12g}")
    return 0


def cmd_report(args) -> int:
    raw = _load(args)
    imm = immigration_from_config(raw)
    rep = immigration_report(imm)
    eps_grid = [float(e) for e in _get(raw, "report.eps_grid",
                                       (1.0, 0.1, 0.01))]
    _print_json({
        "alpha_I": rep.alpha_I,
        "lambda_sup": rep.lambda_sup,
        "lambda_finite_interval": list(rep.lambda_finite_interval),
        "h1_ok": rep.h1_ok,
        "h1_value": rep.h1_value,
        "diverging": rep.diverging,
        "total_rate_above": {str(e): rep.total_rate_above(e) for e in eps_grid},
    })
    return 0


def cmd_gate(args) -> int:
    raw = _load(args)
    disl = dislocation_from_config(raw)
    imm = immigration_from_config(raw)
    if "alpha" not in raw:
        raise ConfigError("alpha", "missing required key")
    verdict = stationarity_gate(float(raw["alpha"]), disl, imm,
                                flags_from_config(raw, disl))
    _print_json({
        "exists": verdict.exists,
        "reasons": list(verdict.reasons),
        "alpha_I": verdict.alpha_I,
        "lambda_sup": verdict.lambda_sup,
        "lp_membership": verdict.lp_membership,
        "flags": {"h2": verdict.hypothesis_flags.h2,
                  "h3": verdict.hypothesis_flags.h3,
                  "h4": verdict.hypothesis_flags.h4},
    })
    return 0


def cmd_simulate(args) -> int:
    raw = _load(args)
    cfg = fi_config_from(raw)
    seed = int(raw.get("seed", 0))
    n_reps = int(raw.get("n_reps", 100))
    t = float(raw.get("t", 1.0))
    u0 = [float(x) for x in raw.get("u0", [1.0])]
    out = raw.get("out", "results")
    log_events = bool(raw.get("event_log", False))
    rows: List = []
    event_rows: List = []
    for r in range(n_reps):
        s = simulate_fi(cfg, u0, t, rngmod.derive_seed(seed, 10, r),
                        log_events=log_events)
        rows.extend((r, m) for m in s.masses)
        if log_events:
            for ev_t, kind, parent, children in s.meta["event_log"]:
                event_rows.append((r, ev_t, kind, parent) + tuple(children))
    path = write_csv(os.path.join(out, "sample.csv"), ("replica", "mass"), rows)
    artifacts = [path]
    if log_events:
        artifacts.append(write_csv(
            os.path.join(out, "events.csv"),
            ("replica", "time", "event", "parent_mass", "child_masses..."),
            event_rows))
    meta = {"eps": cfg.eps, "eps_imm": cfg.eps_imm, "t": t, "seed": seed,
            "n_reps": n_reps, "gate": cfg.verdict.exists}
    meta_path = os.path.join(out, "sample_meta.json")
    with open(meta_path, "w") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
        fh.write("\n")
    write_manifest(out, raw, artifacts + [meta_path])
    print(f"wrote {path}")
    return 0


def cmd_stationary(args) -> int:
    raw = _load(args)
    cfg = fi_config_from(raw)
    seed = int(raw.get("seed", 0))
    n_reps = int(raw.get("n_reps", 100))
    out = raw.get("out", "results")
    rows: List = []
    lookback = 0.0
    residual = 0.0
    for r in range(n_reps):
        s = sample_stationary(cfg, rngmod.derive_seed(seed, 11, r))
        lookback = max(lookback, s.meta["lookback"])
        residual = max(residual, s.meta["residual"])
        rows.extend((r, m) for m in s.masses)
    path = write_csv(os.path.join(out, "stationary.csv"),
                     ("replica", "mass"), rows)
    meta = {"eps": cfg.eps, "eps_imm": cfg.eps_imm, "delta": cfg.delta,
            "lookback": lookback, "residual": residual, "seed": seed,
            "n_reps": n_reps, "gate": cfg.verdict.exists}
    meta_path = os.path.join(out, "stationary_meta.json")
    with open(meta_path, "w") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
        fh.write("\n")
    write_manifest(out, raw, [path, meta_path])
    print(f"wrote {path}")
    return 0


def cmd_deteq(args) -> int:
    raw = _load(args)
    disl = dislocation_from_config(raw)
    imm = immigration_from_config(raw)
    alpha = float(raw.get("alpha", 0.0))
    seed = int(raw.get("seed", 0))
    out = raw.get("out", "results")
    sec = raw.get("deteq", {})
    lambdas = [float(x) for x in sec.get("lambdas", (1.5, 2.0, 3.0))]
    artifacts = []
    mrows = []
    for lam in lambdas:
        exact = mu_stat_moment(alpha, disl, imm, lam)
        mrows.append((lam, exact, "exact"))
    artifacts.append(write_csv(os.path.join(out, "moments.csv"),
                               ("lambda", "value", "se_or_exact"), mrows))
    bins_spec = sec.get("bins")
    if bins_spec:
        lo, hi, nb = bins_spec
        edges = np.linspace(float(lo), float(hi), int(nb) + 1)
        est = mu_stat_estimate(alpha, disl, imm, bins=edges,
                               n_reps=int(raw.get("n_reps", 20000)),
                               seed=seed)
        rows = [(edges[k], edges[k + 1], est.weights[k], est.ses[k])
                for k in range(len(edges) - 1)]
        artifacts.append(write_csv(os.path.join(out, "measure.csv"),
                                   ("bin_lo", "bin_hi", "weight", "se"), rows))
    mu_t_spec = sec.get("mu_t")
    if mu_t_spec:
        from .deterministic import InitialMeasure, mu_t_estimate
        mu0 = None
        if mu_t_spec.get("dirac"):
            mu0 = InitialMeasure("dirac", mass=float(mu_t_spec["dirac"]))
        power = float(mu_t_spec.get("f_power", 2.0))
        support = tuple(float(x) for x in mu_t_spec.get("support", (1e-3, 40.0)))
        trows = []
        for t in mu_t_spec.get("t_grid", (raw.get("t", 1.0),)):
            r = mu_t_estimate(alpha, disl, imm, mu0, float(t),
                              lambda x: x ** power, support,
                              int(raw.get("n_reps", 20000)),
                              rngmod.derive_seed(seed, 12, int(float(t) * 100)))
            if r["value"] != 0.0 and r["se"] / abs(r["value"]) > 0.1:
                print(f"warning: mu_t estimate at t={t} has relative "
                      f"standard error {r['se'] / abs(r['value']):.2f} "
                      "(reciprocal-mass weights are heavy here)",
                      file=sys.stderr)
            trows.append((float(t), r["value"], r["se"]))
        artifacts.append(write_csv(os.path.join(out, "mu_t.csv"),
                                   ("t", "value", "se"), trows))
    write_manifest(out, raw, artifacts)
    print(f"wrote {artifacts}")
    return 0


def cmd_brownian(args) -> int:
    raw = _load(args)
    sec = raw.get("brownian", {})
    d = float(sec.get("d", 1.0))
    dx = float(sec.get("dx", 1e-4))
    level = float(sec.get("level", 1.0))
    n_paths = int(raw.get("n_reps", sec.get("n_paths", 2000)))
    seed = int(raw.get("seed", 0))
    out = raw.get("out", "results")
    rep = prop_report(d, level, dx, n_paths, seed,
                      min_len=sec.get("min_len"))
    path = os.path.join(out, "brownian_report.json")
    os.makedirs(out, exist_ok=True)
    with open(path, "w") as fh:
        json.dump(rep, fh, indent=2, sort_keys=True, default=str)
        fh.write("\n")
    artifacts = [path]
    if sec.get("raw_csv"):
        from . import rng as _rng
        from .brownian import simulate_until_last_hit, state_excursions, margin_for
        rows: List = []
        min_len = sec.get("min_len") or 2.0 * dx
        for r in range(n_paths):
            g = _rng.stream(seed, _rng.KIND_PATH, r)
            pth = simulate_until_last_hit(d, level, dx, margin_for(1e-6, d), g)
            for m in state_excursions(pth, 0.0, min_len).masses:
                rows.append((r, m))
        artifacts.append(write_csv(os.path.join(out, "excursions.csv"),
                                   ("replica", "length"), rows))
    write_manifest(out, raw, artifacts)
    _print_json({k: rep[k] for k in ("mean_count_above_1",
                                     "mean_count_above_1_exact",
                                     "mean_total", "mean_total_exact",
                                     "passed")})
    return 0


def cmd_experiment(args) -> int:
    if args.action != "run":
        raise ConfigError("experiment", f"unknown action {args.action!r}")
    result = run(args.config, out_dir=args.out)
    _print_json(result)
    return 0


def main(argv: Optional[List[str]] = None) -> int:
    parser = argparse.ArgumentParser(
        prog="fragimm",
        description="fragmentation-with-immigration simulation laboratory")
    sub = parser.add_subparsers(dest="command", required=True)

    for name, fn in (("phi", cmd_phi), ("report", cmd_report),
                     ("gate", cmd_gate), ("simulate", cmd_simulate),
                     ("stationary", cmd_stationary), ("deteq", cmd_deteq),
                     ("brownian", cmd_brownian)):
        p = sub.add_parser(name)
        _common(p)
        p.set_defaults(fn=fn)

    p = sub.add_parser("experiment")
    p.add_argument("action", choices=["run"])
    _common(p)
    p.set_defaults(fn=cmd_experiment)

    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except FragimmError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
