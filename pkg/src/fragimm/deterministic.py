"""Deterministic fragmentation-with-immigration equation.

The probabilistic representation is the solver: time-t solutions are
evaluated by Monte Carlo over the initial measure, the immigration marks
and the tagged-fragment subordinator; the stationary solution is evaluated
three independent ways (exact moment formula, closed-form densities for the
two special regimes, and a Monte Carlo of the time-integral representation
with an explicit truncation tail bound) so each route can certify the
others.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Dict, Optional, Tuple

import numpy as np

from . import rng as rngmod
from ._quadrature import integrate
from .errors import AssumptionError, IndeterminateError
from .families import DislocationSpec, ImmigrationSpec, phi
from .samples import MeasureEstimate
from .tagged import (SubordinatorSpec, sample_tagged_mass, sample_xi_value,
                     subordinator_from)

INF = float("inf")


# ---------------------------------------------------------------------------
# initial measures and assumption checks
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class InitialMeasure:
    """Initial mass-intensity: a Dirac mass or a weighted exponential density."""

    family: str                      # dirac | exponential_density
    mass: Optional[float] = None     # dirac location
    rate: Optional[float] = None     # exponential density rate
    weight: float = 1.0              # total mass of the measure

    def __post_init__(self):
        if self.family == "dirac":
            if self.mass is None or self.mass <= 0.0:
                raise ValueError("dirac needs a positive mass")
        elif self.family == "exponential_density":
            if self.rate is None or self.rate <= 0.0:
                raise ValueError("exponential_density needs rate > 0")
        else:
            raise ValueError(f"unknown initial measure family {self.family!r}")

    @property
    def total(self) -> float:
        return 1.0 if self.family == "dirac" else self.weight

    def sample(self, rng) -> float:
        if self.family == "dirac":
            return self.mass
        return rng.exponential(1.0 / self.rate)

    def tail_x_moment(self, p: float) -> float:
        """integral_1^inf x^p mu_0(dx)."""
        if self.family == "dirac":
            return self.mass ** p if self.mass >= 1.0 else 0.0
        lam = self.rate
        return self.weight * integrate(
            lambda x: x ** p * lam * math.exp(-lam * x), 1.0, INF)


def dirac(mass: float) -> InitialMeasure:
    return InitialMeasure("dirac", mass=mass)


def exponential_density(rate: float, weight: float = 1.0) -> InitialMeasure:
    return InitialMeasure("exponential_density", rate=rate, weight=weight)


def check_radon_assumption(alpha: float, disl: DislocationSpec,
                           imm: Optional[ImmigrationSpec],
                           mu0: Optional[InitialMeasure]) -> str:
    """Analytic check of the sign-matched Radon assumption on (I, mu_0).

    Returns 'checked' when the built-in families decide it; raises naming
    the diverging integral when it provably fails; returns 'unchecked' when
    the combination is outside the built-in analytic table.
    """
    if imm is not None:
        if alpha > 0.0:
            if not math.isfinite(imm.moment_integral(1.0)):
                raise AssumptionError(
                    "positive index: integral of sum_j s_j I(ds) diverges")
        elif alpha == 0.0:
            if imm.family == "single_powerlaw" and imm.exponent <= 2.0:
                raise AssumptionError(
                    "zero index: integral of sum_j s_j phibar(1/ln s_j) "
                    "1{s_j>=1} I(ds) diverges (power-law tail too heavy)")
        else:
            if not imm.tail_is_finite(1.0 + alpha):
                raise AssumptionError(
                    "negative index: integral of sum_j s_j^{1+alpha} "
                    "1{s_j>=1} I(ds) diverges")
    if mu0 is not None:
        p = 1.0 if alpha >= 0.0 else 1.0 + alpha
        if not math.isfinite(mu0.tail_x_moment(p)):
            raise AssumptionError(
                f"initial measure: integral_1^inf x^{p:g} mu_0(dx) diverges")
    if alpha == 0.0 and imm is not None and imm.family == "group_discrete":
        return "checked"
    if alpha == 0.0 and imm is not None and imm.family not in (
            "single_exponential", "single_powerlaw", "brownian_I"):
        return "unchecked"
    return "checked"


# ---------------------------------------------------------------------------
# time-t solution, Monte Carlo over the probabilistic representation
# ---------------------------------------------------------------------------

def _mu_t_batch(alpha: float, sub: SubordinatorSpec,
                imm: Optional[ImmigrationSpec], mu0: Optional[InitialMeasure],
                t: float, support: Tuple[float, float], eval_fn, width: int,
                n_reps: int, seed: int) -> np.ndarray:
    a_lo, a_hi = support
    rate_a = imm.rate_above(a_lo) if imm is not None else 0.0
    out = np.zeros((n_reps, width))
    for r in range(n_reps):
        g = rngmod.stream(seed, rngmod.KIND_DETEQ, r)
        row = out[r]
        if mu0 is not None:
            x = mu0.sample(g)
            lam = sample_tagged_mass(sub, alpha, x ** alpha * t, g)
            if lam > 0.0:
                y = x * lam
                if a_lo < y < a_hi:
                    eval_fn(row, y, mu0.total / lam)
        if imm is not None and rate_a > 0.0 and t > 0.0:
            u = g.uniform(0.0, t)
            mark = imm.sample_group_above(a_lo, g)
            for s in mark:
                if s <= a_lo:
                    continue  # cannot re-enter the support: masses decrease
                lam = sample_tagged_mass(sub, alpha, s ** alpha * u, g)
                if lam > 0.0:
                    y = s * lam
                    if a_lo < y < a_hi:
                        eval_fn(row, y, t * rate_a / lam)
    return out


def mu_t_estimate(alpha: float, disl: DislocationSpec,
                  imm: Optional[ImmigrationSpec], mu0: Optional[InitialMeasure],
                  t: float, f: Callable[[float], float],
                  support: Tuple[float, float], n_reps: int,
                  seed: int) -> Dict:
    """<mu_t, f> for f supported in ``support``, with its standard error.

    Each replica combines one tagged evaluation of the initial-measure term
    with one (arrival time, mark, tagged mass) evaluation of the
    immigration term.
    """
    a_lo, a_hi = support
    if not (0.0 < a_lo < a_hi):
        raise ValueError("support must satisfy 0 < a < b")
    status = check_radon_assumption(alpha, disl, imm, mu0)
    sub = subordinator_from(disl)

    def eval_fn(row, y, w, _f=f):
        row[0] += w * _f(y)

    vals = _mu_t_batch(alpha, sub, imm, mu0, t, support, eval_fn, 1,
                       n_reps, seed)[:, 0]
    mean = float(np.mean(vals))
    se = float(np.std(vals, ddof=1) / math.sqrt(n_reps))
    return {"value": mean, "se": se, "t": t, "assumption": status}


def mu_t_histogram(alpha: float, disl: DislocationSpec,
                   imm: Optional[ImmigrationSpec], mu0: Optional[InitialMeasure],
                   t: float, bins: np.ndarray, n_reps: int,
                   seed: int) -> MeasureEstimate:
    """Binned <mu_t, 1_bin> estimates from one Monte Carlo pass."""
    edges = np.asarray(bins, dtype=float)
    support = (float(edges[0]), float(edges[-1]))
    status = check_radon_assumption(alpha, disl, imm, mu0)
    sub = subordinator_from(disl)

    def eval_fn(row, y, w, _edges=edges):
        k = int(np.searchsorted(_edges, y, side="right")) - 1
        if 0 <= k < len(_edges) - 1:
            row[k] += w

    sample = _mu_t_batch(alpha, sub, imm, mu0, t, support, eval_fn,
                         len(edges) - 1, n_reps, seed)
    means = sample.mean(axis=0)
    ses = sample.std(axis=0, ddof=1) / math.sqrt(n_reps)
    return MeasureEstimate(kind="empirical", bin_edges=edges, weights=means,
                           ses=ses, meta={"t": t, "n_reps": n_reps,
                                          "assumption": status})


# ---------------------------------------------------------------------------
# stationary solution: exact moments and closed-form densities
# ---------------------------------------------------------------------------

def mu_stat_moment(alpha: float, disl: DislocationSpec, imm: ImmigrationSpec,
                   lam: float) -> float:
    """integral of x^lam against the stationary solution.

    Equals phi(lam - alpha - 1)^{-1} * integral of sum_j s_j^{lam - alpha}
    I(ds) on the moment window, +inf outside it (the divergence statement
    below the window requires phi(0) = 0, otherwise the value is not
    determined and IndeterminateError is raised).
    """
    if lam <= 1.0 + alpha:
        if phi(disl, 0.0) == 0.0:
            return INF
        raise IndeterminateError(
            "moment order at or below 1 + alpha with killing present: "
            "divergence is only established for phi(0) = 0")
    numerator = imm.moment_integral(lam - alpha)
    if not math.isfinite(numerator):
        return INF
    return numerator / phi(disl, lam - alpha - 1.0)


def mu_stat_density_binary(alpha: float, imm: ImmigrationSpec, x: float) -> float:
    """Closed-form stationary density for the uniform binary splitting law
    (no erosion) with single-particle immigration density i:
    x^{-alpha} i(x) + 2 x^{-alpha-2} integral_x^inf y i(y) dy."""
    if x <= 0.0:
        raise ValueError("density is defined on (0, inf)")
    return x ** -alpha * imm.density(x) \
        + 2.0 * x ** (-alpha - 2.0) * imm.mass_tail_integral(x)


def mu_stat_density_brownian(d: float, x: float) -> float:
    """Closed-form stationary density of the Brownian-path regime."""
    if x <= 0.0:
        raise ValueError("density is defined on (0, inf)")
    return math.exp(-x * d * d / 2.0) / (d * math.sqrt(8.0 * math.pi * x ** 3))


def mu_stat_density(form: str, x: float, alpha: float = 0.0,
                    imm: Optional[ImmigrationSpec] = None,
                    d: Optional[float] = None) -> float:
    if form == "binary_closed":
        if imm is None:
            raise ValueError("binary_closed needs the immigration spec")
        return mu_stat_density_binary(alpha, imm, x)
    if form == "brownian_closed":
        if d is None:
            raise ValueError("brownian_closed needs the drift d")
        return mu_stat_density_brownian(d, x)
    raise ValueError(f"unknown closed form {form!r}")


# ---------------------------------------------------------------------------
# stationary solution: Monte Carlo of the time-integral representation
# ---------------------------------------------------------------------------

def _stat_tail_bound(alpha: float, disl: DislocationSpec, imm: ImmigrationSpec,
                     support: Tuple[float, float], g_sup: float,
                     t_trunc: float) -> float:
    """Upper bound on the neglected contribution of times beyond t_trunc.

    Uses P(xi_t <= L) <= exp(qL - t phi(q)) and the per-family moment
    integrals, optimized over a small q grid.
    """
    a = support[0]
    best = INF
    for q in (0.5, 1.0, 2.0, 3.0):
        rate_q = phi(disl, q)
        if rate_q <= 0.0:
            continue
        mom = imm.moment_integral(1.0 + q)
        if not math.isfinite(mom):
            continue
        bound = g_sup * a ** -(1.0 + q) * mom * math.exp(-t_trunc * rate_q) / rate_q
        best = min(best, bound)
    return best


def _mu_stat_mc_batch(alpha: float, sub: SubordinatorSpec, imm: ImmigrationSpec,
                      support: Tuple[float, float], t_trunc: float,
                      eval_fn, width: int, n_reps: int, seed: int,
                      salt: int) -> np.ndarray:
    a_lo, a_hi = support
    rate_a = imm.rate_above(a_lo)
    out = np.zeros((n_reps, width))
    for r in range(n_reps):
        g = rngmod.stream(seed, rngmod.KIND_DETEQ, salt, r)
        t = g.uniform(0.0, t_trunc)
        mark = imm.sample_group_above(a_lo, g)
        row = out[r]
        for s in mark:
            if s <= a_lo:
                continue
            xi = sample_xi_value(sub, t, g)
            if xi == INF:
                continue
            y = s * math.exp(-xi)
            if a_lo < y < a_hi:
                # weight for <mu_stat, f> = <mu_hom, x^{-alpha} f>
                w = t_trunc * rate_a * math.exp(xi) * y ** -alpha
                eval_fn(row, y, w)
    return out


def mu_stat_estimate(alpha: float, disl: DislocationSpec, imm: ImmigrationSpec,
                     bins: Optional[np.ndarray] = None,
                     f: Optional[Callable[[float], float]] = None,
                     support: Optional[Tuple[float, float]] = None,
                     n_reps: int = 20000, seed: int = 0,
                     t_trunc: Optional[float] = None,
                     g_sup: Optional[float] = None):
    """Monte Carlo of the stationary solution over (mark, age) space.

    Histogram mode (``bins``) returns a MeasureEstimate; functional mode
    (``f`` with ``support``) returns a dict with value, SE and the reported
    truncation tail bound. The truncation horizon doubles until its bound
    falls below 10% of a pilot SE.
    """
    if imm is None:
        raise AssumptionError("vanishing immigration is excluded: the "
                              "stationary solution degenerates")
    if not math.isfinite(imm.moment_integral(1.0)):
        raise AssumptionError(
            "stationary solution requires integral of sum_j s_j I(ds) < inf")
    sub = subordinator_from(disl)
    if bins is not None:
        edges = np.asarray(bins, dtype=float)
        support = (float(edges[0]), float(edges[-1]))
        width = len(edges) - 1

        def eval_fn(row, y, w, _edges=edges):
            k = int(np.searchsorted(_edges, y, side="right")) - 1
            if 0 <= k < len(_edges) - 1:
                row[k] += w
    else:
        if f is None or support is None:
            raise ValueError("provide bins, or f with its support")
        width = 1

        def eval_fn(row, y, w, _f=f):
            row[0] += w * _f(y)

    if g_sup is None:
        lo, hi = support
        g_sup = max(lo ** -alpha, hi ** -alpha)
        if f is not None:
            g_sup *= max(abs(f(lo * 1.0000001)), abs(f(hi * 0.9999999)), 1.0)

    if t_trunc is None:
        t_trunc = 8.0
        pilot_n = max(500, n_reps // 20)
        while True:
            pilot = _mu_stat_mc_batch(alpha, sub, imm, support, t_trunc,
                                      eval_fn, width, pilot_n, seed, 1)
            se_pilot = float(np.max(pilot.std(axis=0, ddof=1))) / math.sqrt(n_reps)
            bound = _stat_tail_bound(alpha, disl, imm, support, g_sup, t_trunc)
            if bound < 0.1 * se_pilot or t_trunc > 4096.0:
                break
            t_trunc *= 2.0
    bound = _stat_tail_bound(alpha, disl, imm, support, g_sup, t_trunc)

    sample = _mu_stat_mc_batch(alpha, sub, imm, support, t_trunc, eval_fn,
                               width, n_reps, seed, 0)
    means = sample.mean(axis=0)
    ses = sample.std(axis=0, ddof=1) / math.sqrt(n_reps)
    meta = {"t_trunc": t_trunc, "tail_bound": bound, "n_reps": n_reps,
            "seed": seed}
    if bins is not None:
        return MeasureEstimate(kind="semi_analytic", bin_edges=np.asarray(bins, float),
                               weights=means, ses=ses, meta=meta)
    return {"value": float(means[0]), "se": float(ses[0]), **meta}


# ---------------------------------------------------------------------------
# generator residual
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SmoothBump:
    """C-infinity bump supported on [lo, hi] (the classic mollifier)."""

    lo: float
    hi: float

    def _z(self, x: float) -> float:
        return 2.0 * (x - self.lo) / (self.hi - self.lo) - 1.0

    def __call__(self, x: float) -> float:
        z = self._z(x)
        if abs(z) >= 1.0:
            return 0.0
        return math.exp(-1.0 / (1.0 - z * z))

    def deriv(self, x: float) -> float:
        z = self._z(x)
        if abs(z) >= 1.0:
            return 0.0
        dz = 2.0 / (self.hi - self.lo)
        return self(x) * (-2.0 * z / (1.0 - z * z) ** 2) * dz


def _splitting_term(disl: DislocationSpec, f: Callable[[float], float],
                    support: Tuple[float, float], x: float) -> float:
    """integral of [sum_j f(x s_j) - f(x)] against the dislocation measure."""
    lo, hi = support
    if disl.family == "binary_uniform":
        # sum over both fragments collapses to (2/x) integral_0^x f
        a = max(lo, 0.0)
        b = min(x, hi)
        fint = integrate(f, a, b, rel_tol=1e-12, abs_tol=1e-15) if b > a else 0.0
        return (2.0 / x) * fint - f(x)
    if disl.family == "discrete_finite":
        return math.fsum(w * (math.fsum(f(x * s) for s in frag) - f(x))
                         for w, frag in disl.atoms)
    # brownian kernel, substitution u = sqrt(1 - s1)
    c = math.sqrt(2.0 / math.pi)

    def integrand(u: float) -> float:
        s1 = 1.0 - u * u
        val = f(x * s1) + f(x * u * u) - f(x)
        return 2.0 * c * val * s1 ** -1.5 / (u * u)

    pts = []
    for edge in (lo, hi):
        frac = edge / x
        if 0.0 < frac < 0.5:
            pts.append(math.sqrt(frac))
        if 0.5 < frac < 1.0:
            pts.append(math.sqrt(1.0 - frac))
    return integrate(integrand, 0.0, math.sqrt(0.5), rel_tol=1e-11,
                     points=sorted(set(pts)) or None, abs_tol=1e-14)


def generator_apply(alpha: float, disl: DislocationSpec, f, fprime,
                    support: Tuple[float, float], x: float) -> float:
    """The equation's generator acting on f, at x."""
    c = disl.erosion_c
    val = _splitting_term(disl, f, support, x)
    if c > 0.0:
        val -= c * x * fprime(x)
    return x ** alpha * val


def immigration_pairing(imm: ImmigrationSpec, f, support) -> float:
    """integral of sum_j f(s_j) against I."""
    lo, hi = support
    if imm.family == "group_discrete":
        return imm.arrivals * math.fsum(
            w * math.fsum(f(s) for s in frag) for w, frag in imm.groups)
    return integrate(lambda x: f(x) * imm.density(x), lo, hi, rel_tol=1e-12,
                     abs_tol=1e-15)


def generator_residual(alpha: float, disl: DislocationSpec, imm: ImmigrationSpec,
                       f: SmoothBump, density: Callable[[float], float],
                       x_hi: float = 200.0) -> Dict:
    """<mu_stat, Af> + integral of sum_j f(s_j) I(ds); vanishes at the
    stationary solution. ``density`` is the closed-form stationary density.
    """
    support = (f.lo, f.hi)

    def integrand(x: float) -> float:
        return generator_apply(alpha, disl, f, f.deriv, support, x) * density(x)

    outer = integrate(integrand, f.lo, x_hi, rel_tol=1e-9,
                      points=(f.hi, 2.0 * f.hi), abs_tol=1e-13)
    imm_term = immigration_pairing(imm, f, support)
    residual = outer + imm_term
    return {"residual": residual, "immigration_term": imm_term,
            "relative": abs(residual) / abs(imm_term) if imm_term else 0.0}
