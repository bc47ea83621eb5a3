"""End-to-end validation against the drifted-Brownian-path construction.

A Brownian motion with drift d, observed between the first and last hitting
times of a level, carries a fragmentation-with-immigration state in the
lengths of its excursions above that level. The exact stationary law of
those lengths is a Cox point measure: Poisson with intensity
T sqrt(1/(8 pi)) x^{-3/2} exp(-x d^2 / 2) dx where T is exponential(d).
This module simulates grid paths, extracts excursion lengths, samples the
exact Cox law, and cross-compares the two.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from . import rng as rngmod
from .errors import GuardError
from .families import _brownian_mass_inverse_cdf, _brownian_mass_tail
from .metrics import two_sample
from .samples import PointSample

_BLOCK = 1 << 16


@dataclass
class DriftPath:
    """Grid path of a Brownian motion with drift; values[0] = 0."""

    values: np.ndarray
    dx: float
    drift: float
    meta: Dict = field(default_factory=dict)


def margin_for(delta_path: float, d: float) -> float:
    """Overshoot margin M with return probability exp(-2 d M) = delta_path."""
    return -math.log(delta_path) / (2.0 * d)


def simulate_until_last_hit(d: float, level: float, dx: float, margin: float,
                            rng, max_steps: int = 50_000_000) -> DriftPath:
    """Simulate until the path first exceeds level + margin.

    The probability that the true path ever returns below ``level``
    afterwards is exp(-2 d margin), recorded in the metadata; everything up
    to the last hit of ``level`` is then observed with that confidence.
    """
    if d <= 0.0 or dx <= 0.0 or margin <= 0.0:
        raise ValueError("need d > 0, dx > 0, margin > 0")
    stop = level + margin
    chunks: List[np.ndarray] = [np.zeros(1)]
    last = 0.0
    n_steps = 0
    while True:
        inc = rng.normal(d * dx, math.sqrt(dx), size=_BLOCK)
        block = last + np.cumsum(inc)
        hit = np.flatnonzero(block >= stop)
        if hit.size:
            chunks.append(block[:hit[0] + 1])
            break
        chunks.append(block)
        last = block[-1]
        n_steps += _BLOCK
        if n_steps > max_steps:
            raise GuardError(f"path exceeded {max_steps} steps before "
                             f"reaching {stop}")
    values = np.concatenate(chunks)
    return DriftPath(values, dx, d, meta={
        "level": level, "margin": margin,
        "return_probability": math.exp(-2.0 * d * margin)})


def first_hit_index(path: DriftPath, level: float) -> int:
    idx = np.flatnonzero(path.values >= level)
    if idx.size == 0:
        raise ValueError("path never reaches the level")
    return int(idx[0])


def last_below_index(path: DriftPath, level: float) -> int:
    idx = np.flatnonzero(path.values <= level)
    return int(idx[-1]) if idx.size else 0


def _run_lengths(above: np.ndarray) -> np.ndarray:
    """Lengths (in grid steps) of maximal runs of True."""
    if above.size == 0:
        return np.zeros(0, dtype=np.int64)
    flanked = np.concatenate(([False], above, [False]))
    d = np.diff(flanked.astype(np.int8))
    starts = np.flatnonzero(d == 1)
    ends = np.flatnonzero(d == -1)
    return ends - starts


def excursion_lengths(path: DriftPath, level: float, min_len: float,
                      lo_index: Optional[int] = None) -> PointSample:
    """Decreasing lengths of maximal grid intervals above ``level`` between
    the first and last hits, discarding lengths below ``min_len``.

    Lengths carry an O(dx) discretization bias. ``lo_index`` restricts the
    window from the left (used to isolate the immigrated part). When the
    observed path never returns to the level after first reaching it, the
    whole remaining stretch counts as one excursion.
    """
    lo = first_hit_index(path, level) if lo_index is None else lo_index
    hi = last_below_index(path, level)
    if hi <= lo:
        hi = len(path.values) - 1
    return _window_excursions(path, level, min_len, lo, hi)


def state_excursions(path: DriftPath, level: float, min_len: float,
                     lo_index: Optional[int] = None) -> PointSample:
    """Excursions strictly between the first hit and the last observed
    return to the level: the mass configuration of the path-built process.

    A path with no observed return carries only sub-grid excursions there,
    so the sample is empty (unlike ``excursion_lengths``, which follows the
    injected-path convention of counting the open final stretch).
    """
    lo = first_hit_index(path, level) if lo_index is None else lo_index
    hi = last_below_index(path, level)
    if hi <= lo:
        return PointSample((), meta={"dx": path.dx, "level": level,
                                     "min_len": min_len})
    return _window_excursions(path, level, min_len, lo, hi)


def _window_excursions(path: DriftPath, level: float, min_len: float,
                       lo: int, hi: int) -> PointSample:
    if min_len < 2.0 * path.dx:
        raise ValueError("min_len must be at least two grid steps")
    if hi <= lo:
        return PointSample((), meta={"dx": path.dx, "level": level,
                                     "min_len": min_len})
    window = path.values[lo:hi + 1]
    runs = _run_lengths(window > level) * path.dx
    kept = runs[runs >= min_len]
    return PointSample(tuple(float(x) for x in kept),
                       meta={"dx": path.dx, "level": level,
                             "min_len": min_len})


# ---------------------------------------------------------------------------
# exact stationary (Cox) sampler
# ---------------------------------------------------------------------------

def cox_intensity_tail(eps: float, d: float) -> float:
    """integral_eps^inf sqrt(1/(8 pi)) x^{-3/2} exp(-x d^2/2) dx."""
    return 0.5 * _brownian_mass_tail(eps, d)


def cox_mean_count_above(a: float, d: float) -> float:
    """E[number of stationary excursions with length > a]."""
    return cox_intensity_tail(a, d) / d


def cox_mean_total(d: float) -> float:
    """E[total stationary excursion length] (eps -> 0 limit)."""
    return 1.0 / (2.0 * d * d)


def cox_stationary_sample(d: float, eps: float, rng) -> PointSample:
    """Exact draw of the stationary excursion lengths above eps."""
    if d <= 0.0 or eps <= 0.0:
        raise ValueError("need d > 0 and eps > 0")
    t_rand = rng.exponential(1.0 / d)
    mean = t_rand * cox_intensity_tail(eps, d)
    n = int(rng.poisson(mean))
    masses = [_brownian_mass_inverse_cdf(eps, d, rng.random()) for _ in range(n)]
    return PointSample(tuple(masses), meta={"eps": eps, "d": d, "T": t_rand})


# ---------------------------------------------------------------------------
# path vs Cox comparison report
# ---------------------------------------------------------------------------

def prop_report(d: float, level: float, dx: float, n_paths: int, seed: int,
                min_len: Optional[float] = None,
                count_thresholds: Sequence[float] = (0.5, 1.0, 2.0),
                significance: float = 0.01,
                delta_path: float = 1e-6) -> Dict:
    """Compare path excursions at level 0 against (a) the exact Cox law and
    (b) path excursions at ``level`` (stationarity), statistic by statistic.

    ``min_len`` defaults to the smallest admissible cut 2 dx, so the total
    excursion mass is compared against its eps -> 0 limit with only an
    O(sqrt(min_len)) truncation deficit.
    """
    margin = margin_for(delta_path, d)
    if min_len is None:
        min_len = 2.0 * dx
    exc0: List[PointSample] = []
    exct: List[PointSample] = []
    cox: List[PointSample] = []
    for r in range(n_paths):
        g = rngmod.stream(seed, rngmod.KIND_PATH, r)
        path = simulate_until_last_hit(d, level, dx, margin, g)
        exc0.append(state_excursions(path, 0.0, min_len))
        exct.append(state_excursions(path, level, min_len))
        cox.append(cox_stationary_sample(d, min_len,
                                         rngmod.stream(seed, rngmod.KIND_COX, r)))
    tests = []
    for name, sa, sb in (("path0_vs_cox", exc0, cox),
                         ("path0_vs_level", exc0, exct)):
        for a in count_thresholds:
            rep = two_sample(sa, sb, "count_above", a=a)
            rep["comparison"] = name
            tests.append(rep)
        rep = two_sample(sa, sb, "largest_mass")
        rep["comparison"] = name
        tests.append(rep)
    for rep in tests:
        rep["value_paths"] = rep["mean_a"]
        if rep["comparison"] == "path0_vs_cox":
            rep["value_cox"] = rep["mean_b"]
        rep["se"] = math.sqrt(max(rep["mean_a"], 1e-12) / rep["n_a"])
        rep["pass"] = rep["p_value"] > significance
    mean_count_1 = float(np.mean([s.count_above(1.0) for s in exc0]))
    mean_total = float(np.mean([s.total() for s in exc0]))
    return {
        "d": d, "level": level, "dx": dx, "n_paths": n_paths,
        "min_len": min_len, "margin": margin,
        "mean_count_above_1": mean_count_1,
        "mean_count_above_1_exact": cox_mean_count_above(1.0, d),
        "mean_total": mean_total,
        "mean_total_exact": cox_mean_total(d),
        "tests": tests,
        "passed": all(t["p_value"] > significance for t in tests),
        "dx_bias_note": "excursion lengths carry O(dx) grid bias",
    }


# ---------------------------------------------------------------------------
# conditioned excursions (splitting a given state)
# ---------------------------------------------------------------------------

def unit_excursion(dx: float, rng) -> np.ndarray:
    """Grid Brownian excursion of length 1 (bridge rotated at its argmin)."""
    n = max(int(round(1.0 / dx)), 8)
    steps = rng.normal(0.0, math.sqrt(1.0 / n), size=n)
    w = np.concatenate(([0.0], np.cumsum(steps)))
    bridge = w - np.linspace(0.0, 1.0, n + 1) * w[-1]
    k = int(np.argmin(bridge))
    exc = np.concatenate((bridge[k:-1], bridge[:k + 1])) - bridge[k]
    return exc


def excursion_split_lengths(length: float, t: float, dx: float,
                            rng) -> np.ndarray:
    """Lengths above t of an excursion conditioned to have total length
    ``length`` (Brownian scaling of a unit excursion)."""
    e = unit_excursion(dx / length, rng) * math.sqrt(length)
    runs = _run_lengths(e > t) * (dx / length) * length
    return runs


def _tagged_component_profile(e: np.ndarray, dx: float, u_index: int):
    """Length of the component containing the tagged point, as a piecewise
    constant function of the level.

    Returns (levels, lengths): on [levels[i], levels[i+1]) the component has
    lengths[i]; the component vanishes at the tagged point's own height.
    Only the running records toward each side matter, so this is O(n).
    """
    n = len(e) - 1
    # left records: walking left from the tag, strictly decreasing heights
    left_levels, left_pos = [], []
    cur = math.inf
    for j in range(u_index, -1, -1):
        if e[j] < cur:
            cur = e[j]
            left_levels.append(cur)
            left_pos.append(j)
    right_levels, right_pos = [], []
    cur = math.inf
    for j in range(u_index, n + 1):
        if e[j] < cur:
            cur = e[j]
            right_levels.append(cur)
            right_pos.append(j)
    # merge break levels below the tag height in increasing order
    h = e[u_index]
    breaks = sorted(set(lv for lv in left_levels + right_levels if lv < h))
    levels, lengths = [], []
    for lv in [0.0] + breaks:
        # boundary on each side: first (highest) record at or below the level
        a_idx = next((p for l, p in zip(left_levels, left_pos) if l <= lv), 0)
        b_idx = next((p for l, p in zip(right_levels, right_pos) if l <= lv), n)
        levels.append(lv)
        lengths.append(max(b_idx - a_idx, 1) * dx)
    levels.append(h)
    return np.array(levels), np.array(lengths)


def homogeneous_tagged_moment(t: float, q: float, dx: float, n_reps: int,
                              seed: int) -> Tuple[float, float]:
    """Monte Carlo of E[sum_k F_k(t)^{1+q}] for the excursion-built splitting
    run on the homogeneous clock, via the tagged component.

    The component length of a uniformly tagged point, as a function of the
    level, is converted to homogeneous time by integrating length^{-1/2}
    over levels (the path construction carries self-similarity index -1/2,
    so small components burn level-time faster than homogeneous time).
    Size-biasing then gives E[sum_k F_k(t)^{1+q}] = E[lambda(t)^q].
    """
    vals = np.empty(n_reps)
    for r in range(n_reps):
        g = rngmod.stream(seed, rngmod.KIND_PATH, 1, r)
        e = unit_excursion(dx, g)
        u_index = int(g.integers(0, len(e)))
        levels, lengths = _tagged_component_profile(e, dx, u_index)
        # homogeneous time t(s) = integral_0^s length(sigma)^{-1/2} d sigma
        lam = 0.0
        acc = 0.0
        for i in range(len(lengths)):
            seg = levels[i + 1] - levels[i]
            rate = 1.0 / math.sqrt(lengths[i])
            if acc + seg * rate >= t:
                lam = lengths[i]
                break
            acc += seg * rate
        vals[r] = lam ** q
    return float(np.mean(vals)), float(np.std(vals, ddof=1) / math.sqrt(n_reps))


def fi_state_excursions(u0: Sequence[float], level: float, d: float, dx: float,
                        seed: int, min_len: float) -> PointSample:
    """Forward state at time ``level`` of the path-built process started
    from u0: scaled conditioned excursions for the initial masses plus the
    immigrated part of a fresh path (segment after its last zero)."""
    out: List[float] = []
    for j, u in enumerate(u0):
        g = rngmod.stream(seed, rngmod.KIND_PATH, 2, j)
        runs = excursion_split_lengths(float(u), level, dx, g)
        out.extend(float(x) for x in runs[runs >= min_len])
    g = rngmod.stream(seed, rngmod.KIND_PATH, 3)
    path = simulate_until_last_hit(d, level, dx, margin_for(1e-6, d), g)
    r0 = last_below_index(path, 0.0)
    lo = max(first_hit_index(path, level), r0)
    imm = state_excursions(path, level, min_len, lo_index=lo)
    out.extend(imm.masses)
    return PointSample(tuple(out), meta={"level": level, "dx": dx,
                                         "min_len": min_len})
