"""Empirical-measure statistics.

The distance between laws of mass configurations is estimated from below by
a finite dictionary of clamped affine functionals of the leading components:
every entry is bounded by 1 and 1-Lipschitz for the sup metric on decreasing
sequences (guaranteed by sum |a_j| <= 1 and the [-1, 1] clamp), so the
maximal mean discrepancy over the dictionary is a certified lower bound on
the bounded-Lipschitz norm, up to sampling error.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Dict, List, Sequence, Tuple

import numpy as np
from scipy.stats import mannwhitneyu

from . import rng as rngmod
from .samples import PointSample


@dataclass
class LipDictionary:
    """Entries f(s) = clamp_[-1,1](sum_{j<=K} a_j s_j + b), sum |a_j| <= 1."""

    coeffs: np.ndarray   # (n_entries, K)
    offsets: np.ndarray  # (n_entries,)
    seed: int

    def __post_init__(self):
        norms = np.abs(self.coeffs).sum(axis=1)
        if np.any(norms > 1.0 + 1e-12):
            raise ValueError("dictionary entries must satisfy sum|a_j| <= 1")

    @property
    def K(self) -> int:
        return self.coeffs.shape[1]

    def evaluate(self, samples: Sequence[PointSample]) -> np.ndarray:
        """(n_samples, n_entries) matrix of entry values."""
        K = self.K
        mat = np.zeros((len(samples), K))
        for i, s in enumerate(samples):
            lead = s.masses[:K]
            mat[i, :len(lead)] = lead
        vals = mat @ self.coeffs.T + self.offsets
        return np.clip(vals, -1.0, 1.0)


def make_dictionary(K: int = 8, n_random: int = 256, seed: int = 0,
                    thresholds: Sequence[float] = (0.1, 0.25, 0.5, 0.75,
                                                   1.0, 1.5, 2.0)) -> LipDictionary:
    """Random simplex-weighted entries plus curated smoothed indicators
    clamp(s_j - theta) for each leading component and threshold."""
    g = rngmod.stream(seed, rngmod.KIND_DICT)
    a = g.dirichlet(np.ones(K), size=n_random)
    a *= np.where(g.random((n_random, K)) < 0.5, -1.0, 1.0)
    b = g.uniform(-2.0, 1.0, size=n_random)
    rows: List[np.ndarray] = [a]
    offs: List[np.ndarray] = [b]
    curated_a = []
    curated_b = []
    for j in range(K):
        for th in thresholds:
            e = np.zeros(K)
            e[j] = 1.0
            curated_a.append(e)
            curated_b.append(-th)
    rows.append(np.asarray(curated_a))
    offs.append(np.asarray(curated_b))
    return LipDictionary(np.vstack(rows), np.concatenate(offs), seed)


def bl_lower(samples_a: Sequence[PointSample], samples_b: Sequence[PointSample],
             dictionary: LipDictionary) -> Tuple[float, float]:
    """Lower bound on the bounded-Lipschitz distance between the two
    empirical laws, with the SE of the maximizing entry."""
    va = dictionary.evaluate(samples_a)
    vb = dictionary.evaluate(samples_b)
    mean_a = va.mean(axis=0)
    mean_b = vb.mean(axis=0)
    diffs = np.abs(mean_a - mean_b)
    best = int(np.argmax(diffs))
    se = math.sqrt(va[:, best].var(ddof=1) / va.shape[0]
                   + vb[:, best].var(ddof=1) / vb.shape[0])
    return float(diffs[best]), se


_STATS = ("largest_mass", "count_above", "total_above")


def _extract(samples: Sequence[PointSample], statistic: str, a: float) -> np.ndarray:
    if statistic == "largest_mass":
        return np.array([s.largest() for s in samples])
    if statistic == "count_above":
        return np.array([s.count_above(a) for s in samples], dtype=float)
    if statistic == "total_above":
        return np.array([s.total_above(a) for s in samples])
    raise ValueError(f"unknown statistic {statistic!r}; use one of {_STATS}")


def two_sample(samples_a: Sequence[PointSample], samples_b: Sequence[PointSample],
               statistic: str, a: float = 0.0) -> Dict:
    """Distribution-free rank-based two-sample p-value for one statistic."""
    if len(samples_a) < 50 or len(samples_b) < 50:
        raise ValueError("two_sample needs at least 50 samples per side")
    xa = _extract(samples_a, statistic, a)
    xb = _extract(samples_b, statistic, a)
    if np.all(xa == xa[0]) and np.all(xb == xb[0]) and xa[0] == xb[0]:
        p = 1.0
    else:
        p = float(mannwhitneyu(xa, xb, alternative="two-sided",
                               method="asymptotic").pvalue)
        p = min(p, 1.0)
    return {"statistic": statistic, "threshold": a, "p_value": p,
            "n_a": len(xa), "n_b": len(xb),
            "mean_a": float(np.mean(xa)), "mean_b": float(np.mean(xb))}
