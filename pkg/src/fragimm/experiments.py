"""Config-driven experiments: construction from JSON configs, the scripted
convergence-rate / small-particle / hydrodynamic studies, and deterministic
artifact writing (CSV + manifest)."""
from __future__ import annotations

import hashlib
import json
import math
import os
import platform
from typing import Dict, List, Optional, Sequence

import numpy as np

from . import __version__
from . import rng as rngmod
from .deterministic import InitialMeasure, mu_t_histogram
from .errors import ConfigError, GateRefusalError
from .families import (DislocationSpec, HypothesisFlags, ImmigrationSpec,
                       default_flags)
from .immigration import FiConfig, sample_stationary, simulate_fi
from .metrics import bl_lower, make_dictionary

# ---------------------------------------------------------------------------
# config parsing
# ---------------------------------------------------------------------------


def load_config(path: str) -> Dict:
    try:
        with open(path) as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}", exc.msg) from exc


def _get(raw: Dict, key: str, default=None, required: bool = False):
    cur = raw
    for part in key.split("."):
        if not isinstance(cur, dict) or part not in cur:
            if required:
                raise ConfigError(key, "missing required key")
            return default
        cur = cur[part]
    return cur


def dislocation_from_config(raw: Dict) -> DislocationSpec:
    family = _get(raw, "dislocation.family", required=True)
    c = float(_get(raw, "dislocation.c", 0.0))
    atoms = _get(raw, "dislocation.atoms", ())
    try:
        return DislocationSpec(family, erosion_c=c,
                               atoms=tuple((float(w), tuple(fr)) for w, fr in atoms))
    except ValueError as exc:
        raise ConfigError("dislocation", str(exc)) from exc


def immigration_from_config(raw: Dict) -> ImmigrationSpec:
    sec = _get(raw, "immigration", required=True)
    family = _get(raw, "immigration.family", required=True)
    try:
        return ImmigrationSpec(
            family,
            rate=sec.get("rate"),
            exponent=sec.get("exponent"),
            x_min=sec.get("x_min"),
            drift=sec.get("drift"),
            groups=tuple((float(w), tuple(fr)) for w, fr in sec.get("groups", ())),
            arrivals=float(sec.get("arrivals", 1.0)),
        )
    except ValueError as exc:
        raise ConfigError("immigration", str(exc)) from exc


def flags_from_config(raw: Dict, disl: DislocationSpec) -> HypothesisFlags:
    sec = _get(raw, "flags")
    if sec is None:
        return default_flags(disl)
    return HypothesisFlags(h2=sec.get("h2"), h3=sec.get("h3"), h4=sec.get("h4"))


def fi_config_from(raw: Dict) -> FiConfig:
    disl = dislocation_from_config(raw)
    imm = immigration_from_config(raw)
    if "alpha" not in raw:
        raise ConfigError("alpha", "missing required key")
    kwargs = {}
    for name in ("eps", "eps_imm", "delta", "lookback_step", "max_age",
                 "eta", "pilot_reps", "pilot_horizon", "max_particles"):
        if raw.get(name) is not None:
            kwargs[name] = raw[name]
    return FiConfig(float(raw["alpha"]), disl, imm,
                    flags=flags_from_config(raw, disl), **kwargs)


# ---------------------------------------------------------------------------
# artifact writing
# ---------------------------------------------------------------------------

def config_hash(raw: Dict) -> str:
    blob = json.dumps(raw, sort_keys=True, separators=(",", ":")).encode()
    return hashlib.sha256(blob).hexdigest()


def write_csv(path: str, header: Sequence[str], rows: Sequence[Sequence]) -> str:
    """Deterministic CSV writer: caller supplies already-sorted rows."""
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")
    return path


def _fmt(v) -> str:
    if isinstance(v, float):
        return format(v, ".17g")
    return str(v)


def write_manifest(out_dir: str, raw: Dict, artifacts: List[str]) -> str:
    """Write (or extend) the run manifest: config hash, seed, versions and
    artifact digests. Successive commands with the same config and output
    directory accumulate their artifacts in one manifest."""
    os.makedirs(out_dir, exist_ok=True)
    digests = {}
    for a in artifacts:
        with open(a, "rb") as fh:
            digests[os.path.basename(a)] = hashlib.sha256(fh.read()).hexdigest()
    path = os.path.join(out_dir, "manifest.json")
    chash = config_hash(raw)
    if os.path.exists(path):
        with open(path) as fh:
            previous = json.load(fh)
        if previous.get("config_hash") == chash:
            digests = {**previous.get("artifacts", {}), **digests}
    manifest = {
        "config_hash": chash,
        "seed": raw.get("seed"),
        "experiment": raw.get("experiment"),
        "versions": {
            "python": platform.python_version(),
            "numpy": np.__version__,
            "fragimm": __version__,
        },
        "artifacts": digests,
    }
    with open(path, "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


# ---------------------------------------------------------------------------
# rate-of-convergence experiment
# ---------------------------------------------------------------------------

def fit_log_linear(ts: np.ndarray, ds: np.ndarray, ses: np.ndarray,
                   log_abscissa: bool = False,
                   floor: float = 1e-3) -> Dict:
    """Least-squares slope of log(distance) against t (or log t), using only
    points that stand above their sampling noise."""
    ts = np.asarray(ts, float)
    ds = np.asarray(ds, float)
    ses = np.asarray(ses, float)
    keep = ds > np.maximum(2.0 * ses, floor)
    if keep.sum() < 3:
        return {"slope": float("nan"), "n_used": int(keep.sum()),
                "status": "insufficient signal"}
    x = np.log(ts[keep]) if log_abscissa else ts[keep]
    y = np.log(ds[keep])
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    tss = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid ** 2)) / tss if tss > 0 else 1.0
    return {"slope": float(slope), "intercept": float(intercept),
            "r_squared": r2, "n_used": int(keep.sum()), "status": "ok"}


def rate_experiment(raw: Dict, out_dir: str) -> Dict:
    """Distance to stationarity against time, fitted decay shape.

    Samples the stationary law once, then forward states at each grid time,
    and reports the dictionary lower bound with a log-linear (alpha = 0) or
    log-log (alpha > 0) fit.
    """
    cfg = fi_config_from(raw)
    if cfg.verdict.exists != "yes":
        raise GateRefusalError("rate experiment requires gate = yes")
    seed = int(raw.get("seed", 0))
    n_reps = int(raw.get("n_reps", 800))
    u0 = [float(x) for x in raw.get("u0", [3.0])]
    t_grid = [float(t) for t in raw.get("t_grid", (1.0, 2.0, 4.0, 8.0, 16.0))]
    dictionary = make_dictionary(seed=rngmod.derive_seed(seed, 1))
    stat = [sample_stationary(cfg, rngmod.derive_seed(seed, 2, r))
            for r in range(n_reps)]
    rows = []
    ds, ses = [], []
    for ti, t in enumerate(t_grid):
        fwd = [simulate_fi(cfg, u0, t, rngmod.derive_seed(seed, 3, ti, r))
               for r in range(n_reps)]
        d, se = bl_lower(fwd, stat, dictionary)
        rows.append((t, d, se))
        ds.append(d)
        ses.append(se)
    fit = fit_log_linear(np.array(t_grid), np.array(ds), np.array(ses),
                         log_abscissa=cfg.alpha > 0.0)
    artifacts = [write_csv(os.path.join(out_dir, "rate.csv"),
                           ("t", "distance_lb", "se"), rows)]
    result = {"fit": fit, "rows": rows, "alpha": cfg.alpha}
    with open(os.path.join(out_dir, "fit.json"), "w") as fh:
        json.dump({"fit": fit, "alpha": cfg.alpha}, fh, indent=2, sort_keys=True)
        fh.write("\n")
    artifacts.append(os.path.join(out_dir, "fit.json"))
    write_manifest(out_dir, raw, artifacts)
    return result


# ---------------------------------------------------------------------------
# small-particle probe
# ---------------------------------------------------------------------------

def plateau_verdict(alpha: float, eps_grid: Sequence[float],
                    per_replica_counts: Sequence[Sequence[int]],
                    min_count: int = 400) -> Dict:
    """Plateau detector on scaled small-fragment counts.

    A replica stabilizes when the relative range of eps^{1+alpha} * count
    over the last decade of the grid sits inside the 10% band widened by
    the replica's own counting resolution (2 / sqrt(finest count)); only
    replicas whose finest count reaches ``min_count`` can certify the band
    at all. The verdict additionally requires ensemble-level flatness (the
    across-replica mean of the scaled count must not trend over the decade
    beyond 10% or 3 standard errors) and a nonzero fraction of empty
    replicas. Short grids or too few resolvable replicas are inconclusive.
    """
    eps_grid = sorted(float(e) for e in eps_grid)
    eps_min = eps_grid[0]
    decade_idx = [i for i, e in enumerate(eps_grid)
                  if e <= 10.0 * eps_min * 1.0000001]
    grid_adequate = len(decade_idx) >= 4
    n_reps = len(per_replica_counts)
    zeros = 0
    eligible = 0
    plateaus = []
    scaled_rows = []
    for counts in per_replica_counts:
        scaled = [e ** (1.0 + alpha) * c for e, c in zip(eps_grid, counts)]
        scaled_rows.append(scaled)
        c_min = counts[0]
        if c_min == 0:
            zeros += 1
            continue
        if c_min < min_count:
            continue
        eligible += 1
        vals = [scaled[i] for i in decade_idx]
        rel = (max(vals) - min(vals)) / max(vals)
        band = 0.10 + 2.0 / math.sqrt(c_min)
        plateaus.append(rel < band)
    frac_plateau = (sum(plateaus) / eligible) if eligible else 0.0
    frac_zero = zeros / n_reps if n_reps else 0.0
    arr = np.asarray(scaled_rows)
    mean_lo = float(arr[:, decade_idx[0]].mean()) if n_reps else 0.0
    mean_hi = float(arr[:, decade_idx[-1]].mean()) if n_reps else 0.0
    se_diff = float(np.std(arr[:, decade_idx[0]] - arr[:, decade_idx[-1]],
                           ddof=1) / math.sqrt(max(n_reps, 2)))
    drift = abs(mean_lo - mean_hi)
    ensemble_flat = drift < max(0.10 * max(mean_lo, mean_hi), 3.0 * se_diff)
    if not grid_adequate or eligible < 5:
        status = "inconclusive"
    elif frac_zero > 0.0 and frac_plateau >= 0.6 and ensemble_flat:
        status = "pass"
    else:
        status = "fail"
    return {"status": status, "fraction_plateau": frac_plateau,
            "fraction_zero": frac_zero, "n_reps": n_reps,
            "n_eligible": eligible, "min_count": min_count,
            "grid_adequate": grid_adequate, "ensemble_flat": ensemble_flat,
            "ensemble_drift": drift, "alpha": alpha, "eps_min": eps_min}


def small_particle_probe(raw: Dict, out_dir: str) -> Dict:
    """Per-replica scaling of the count of small stationary fragments.

    In the admissible regime (-1 < alpha < 0 with light small-mass
    immigration), eps^{1+alpha} * count(>eps) stabilizes replica by replica
    as eps decreases, with a positive fraction of empty replicas.
    """
    eps_grid = raw.get("probe", {}).get("eps_grid")
    if eps_grid is None:
        eps_grid = list(np.geomspace(1e-2, 1e-6, 13))
    eps_grid = sorted(float(e) for e in eps_grid)
    eps_min = eps_grid[0]
    # simulate at the finest cutoff; coarser counts are exact restrictions
    raw_sim = dict(raw)
    raw_sim["eps"] = min(float(raw.get("eps", eps_min)), eps_min)
    raw_sim["eps_imm"] = min(float(raw.get("eps_imm") or eps_min), raw_sim["eps"])
    cfg = fi_config_from(raw_sim)
    alpha = cfg.alpha
    if not (-1.0 < alpha < 0.0):
        raise GateRefusalError("small-particle probe requires -1 < alpha < 0")
    if cfg.verdict.exists != "yes":
        raise GateRefusalError("small-particle probe requires gate = yes")
    if cfg.flags.h3 is not True or cfg.flags.h4 is not True:
        raise GateRefusalError("small-particle probe requires declared (H3) "
                               "and (H4) flags")
    small = cfg.imm.small_moment(-alpha)
    if not math.isfinite(small):
        raise GateRefusalError(
            "probe regime needs integral of sum_j s_j^{-alpha} 1{s_j<=1} "
            "I(ds) < inf")
    seed = int(raw.get("seed", 0))
    n_reps = int(raw.get("n_reps", 60))
    min_count = int(raw.get("probe", {}).get("min_count", 400))
    per_replica = []
    for r in range(n_reps):
        s = sample_stationary(cfg, rngmod.derive_seed(seed, 4, r))
        per_replica.append([s.count_above(e) for e in eps_grid])
    report = plateau_verdict(alpha, eps_grid, per_replica, min_count)
    rows = []
    for r, counts in enumerate(per_replica):
        for e, c in zip(eps_grid, counts):
            rows.append((r, e, c, e ** (1.0 + alpha) * c))
    artifacts = [write_csv(os.path.join(out_dir, "probe.csv"),
                           ("replica", "eps", "count", "scaled"), rows)]
    with open(os.path.join(out_dir, "probe.json"), "w") as fh:
        json.dump(report, fh, indent=2, sort_keys=True)
        fh.write("\n")
    artifacts.append(os.path.join(out_dir, "probe.json"))
    write_manifest(out_dir, raw, artifacts)
    return report


# ---------------------------------------------------------------------------
# hydrodynamic scaling check
# ---------------------------------------------------------------------------

def hydrodynamic_check(raw: Dict, out_dir: str) -> Dict:
    """Law-of-large-numbers check: a Poisson(n mu_0) start with intensity
    n I, rescaled by 1/n, approaches the deterministic solution."""
    cfg = fi_config_from(raw)
    seed = int(raw.get("seed", 0))
    sec = raw.get("hydro", {})
    n_scaling = [int(n) for n in sec.get("n_scaling", (1, 4, 16))]
    mass = float(sec.get("mass", 1.0))
    t = float(sec.get("t", 2.0))
    reps = int(sec.get("n_reps", 200))
    lo, hi, nb = sec.get("bins", (0.05, 4.0, 12))
    edges = np.linspace(float(lo), float(hi), int(nb) + 1)
    mu0 = InitialMeasure("dirac", mass=mass)

    n_det = int(sec.get("det_reps", 20000))
    det = mu_t_histogram(cfg.alpha, cfg.disl, cfg.imm, mu0, t, edges, n_det,
                         rngmod.derive_seed(seed, 5))
    det_bins = det.weights

    rows = []
    discrepancies = []
    for idx, n in enumerate(n_scaling):
        cfg_n = FiConfig(cfg.alpha, cfg.disl, cfg.imm.scaled(n), eps=cfg.eps,
                         eps_imm=cfg.eps_imm, delta=cfg.delta,
                         flags=cfg.flags)
        hist = np.zeros(len(edges) - 1)
        for r in range(reps):
            g = rngmod.stream(seed, rngmod.KIND_EXPERIMENT, idx, r)
            n_init = int(g.poisson(n * mu0.total))
            u0 = [mass] * n_init
            s = simulate_fi(cfg_n, u0, t, rngmod.derive_seed(seed, 6, idx, r))
            h, _ = np.histogram(s.masses, bins=edges)
            hist += h / n
        hist /= reps
        disc = float(np.sum(np.abs(hist - det_bins)))
        discrepancies.append(disc)
        rows.append((n, disc))
    decreasing = all(discrepancies[i + 1] <= discrepancies[i]
                     for i in range(len(discrepancies) - 1))
    artifacts = [write_csv(os.path.join(out_dir, "hydro.csv"),
                           ("n", "l1_discrepancy"), rows)]
    report = {"n_scaling": n_scaling, "discrepancies": discrepancies,
              "decreasing": decreasing, "t": t}
    with open(os.path.join(out_dir, "hydro.json"), "w") as fh:
        json.dump(report, fh, indent=2, sort_keys=True)
        fh.write("\n")
    artifacts.append(os.path.join(out_dir, "hydro.json"))
    write_manifest(out_dir, raw, artifacts)
    return report


EXPERIMENTS = {
    "rate_alpha0": rate_experiment,
    "rate_alpha_pos": rate_experiment,
    "rate": rate_experiment,
    "small_particle_probe": small_particle_probe,
    "hydrodynamic": hydrodynamic_check,
}


def run(config_path: str, out_dir: Optional[str] = None) -> Dict:
    """Validate a config and dispatch its experiment; artifacts land in the
    output directory together with a manifest."""
    raw = load_config(config_path)
    name = _get(raw, "experiment", required=True)
    if name not in EXPERIMENTS:
        raise ConfigError("experiment",
                          f"unknown experiment {name!r}; "
                          f"known: {sorted(EXPERIMENTS)}")
    out = out_dir or raw.get("out") or "results"
    return EXPERIMENTS[name](raw, out)
