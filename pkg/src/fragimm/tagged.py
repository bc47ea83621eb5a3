"""Tagged-fragment process: killed subordinator plus self-similar time change.

The mass of a uniformly tagged fragment is exp(-xi(rho(t))) where xi is a
killed compound-Poisson subordinator built from (c, nu) and rho inverts
u -> integral_0^u exp(alpha xi(r)) dr. Both the subordinator and the time
change are simulated exactly: between jumps xi is affine, so each segment's
integral is exponential-affine and inverts in closed form.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence, Tuple

import numpy as np

from . import rng as rngmod
from ._quadrature import integrate
from .errors import AnalyticOnlyFamilyError
from .families import DislocationSpec, phi

INF = float("inf")

# Residual-budget guard: if reaching the next target would require more than
# this much subordinator time at the current integrand level, the tagged
# fragment is treated as dust (alpha < 0 absorption).
_DUST_TIME_GUARD = 1e18


@dataclass(frozen=True)
class SubordinatorSpec:
    """Killed compound-Poisson subordinator (killing, drift, jump part)."""

    killing_rate: float
    drift: float
    jump_rate: float
    disl: DislocationSpec

    def sample_jump(self, rng) -> float:
        """One size-biased jump: draw a dislocation, accept with probability
        sum_j s_j, pick fragment j with probability s_j / sum, emit -ln s_j."""
        while True:
            frag = self.disl.sample_fragments(rng)
            tot = math.fsum(frag)
            if rng.random() >= tot:
                continue
            u = rng.uniform(0.0, tot)
            acc = 0.0
            for s in frag:
                acc += s
                if u <= acc:
                    return -math.log(s)
            return -math.log(frag[-1])


def subordinator_from(disl: DislocationSpec) -> SubordinatorSpec:
    """Decompose a simulable dislocation law into (killing, drift, jumps)."""
    if not disl.simulable:
        raise AnalyticOnlyFamilyError(
            f"{disl.family} is an analytic-only family (infinite total rate); "
            "event-driven sampling is not available")
    killing = phi(disl, 0.0)
    if disl.family == "binary_uniform":
        jump_rate = 1.0
    else:
        jump_rate = math.fsum(w * math.fsum(s for s in frag if s < 1.0)
                              for w, frag in disl.atoms)
    return SubordinatorSpec(killing_rate=killing, drift=disl.erosion_c,
                            jump_rate=jump_rate, disl=disl)


def jump_laplace_term(spec: SubordinatorSpec, q: float) -> float:
    """jump_rate * E[1 - exp(-q X)] for X ~ jump law, computed analytically
    (independent route for the phi-consistency invariant)."""
    if spec.disl.family == "binary_uniform":
        # size-biased fragment density is 2x on (0, 1)
        return integrate(lambda x: (1.0 - x ** q) * 2.0 * x, 0.0, 1.0)
    return math.fsum(w * math.fsum(s * (1.0 - s ** q) for s in frag)
                     for w, frag in spec.disl.atoms)


@dataclass
class XiPath:
    """Realized subordinator path on [0, t_max]."""

    jump_times: Tuple[float, ...]
    jump_sizes: Tuple[float, ...]
    drift: float
    kill_time: float
    t_max: float

    def value(self, t: float) -> float:
        if t >= self.kill_time:
            return INF
        total = self.drift * t
        for u, x in zip(self.jump_times, self.jump_sizes):
            if u <= t:
                total += x
            else:
                break
        return total


def sample_xi_path(spec: SubordinatorSpec, t_max: float, rng) -> XiPath:
    kill = rng.exponential(1.0 / spec.killing_rate) if spec.killing_rate > 0.0 else INF
    times, sizes = [], []
    u = 0.0
    if spec.jump_rate > 0.0:
        while True:
            u += rng.exponential(1.0 / spec.jump_rate)
            if u > t_max or u >= kill:
                break
            times.append(u)
            sizes.append(spec.sample_jump(rng))
    return XiPath(tuple(times), tuple(sizes), spec.drift, kill, t_max)


def sample_xi_value(spec: SubordinatorSpec, t: float, rng) -> float:
    """xi(t) for a fresh path (inf when killed by time t)."""
    kill = rng.exponential(1.0 / spec.killing_rate) if spec.killing_rate > 0.0 else INF
    if t >= kill:
        return INF
    total = spec.drift * t
    if spec.jump_rate > 0.0:
        u = rng.exponential(1.0 / spec.jump_rate)
        while u <= t:
            if u >= kill:
                break
            total += spec.sample_jump(rng)
            u += rng.exponential(1.0 / spec.jump_rate)
    return total


def _segment_area(xi: float, alpha: float, c: float, length: float) -> float:
    """integral over a segment of exp(alpha * (xi + c r)) dr, r in [0, length]."""
    level = math.exp(alpha * xi)
    ac = alpha * c
    if length == INF:
        if ac < 0.0:
            return level / (-ac)
        return INF if level > 0.0 else 0.0
    if ac == 0.0:
        return level * length
    return level * math.expm1(ac * length) / ac


def _segment_invert(xi: float, alpha: float, c: float, area: float) -> float:
    """Length r solving integral_0^r exp(alpha (xi + c s)) ds = area."""
    level = math.exp(alpha * xi)
    ac = alpha * c
    if ac == 0.0:
        return area / level
    return math.log1p(ac * area / level) / ac


def sample_tagged_masses(spec: SubordinatorSpec, alpha: float,
                         ts: Sequence[float], rng) -> np.ndarray:
    """Tagged masses exp(-xi(rho(t))) at the sorted times ``ts``, along one
    shared subordinator path (masses are nonincreasing along the path)."""
    ts = np.asarray(ts, dtype=float)
    if np.any(ts < 0.0):
        raise ValueError("times must be nonnegative")
    if np.any(np.diff(ts) < 0.0):
        raise ValueError("times must be sorted ascending")
    out = np.zeros(len(ts))
    kill = rng.exponential(1.0 / spec.killing_rate) if spec.killing_rate > 0.0 else INF
    c = spec.drift

    if alpha == 0.0:
        # rho(t) = t bitwise; only xi(t) is needed
        xi = 0.0
        next_jump = rng.exponential(1.0 / spec.jump_rate) if spec.jump_rate > 0.0 else INF
        for k, t in enumerate(ts):
            while next_jump <= t and next_jump < kill:
                xi += spec.sample_jump(rng)
                next_jump += rng.exponential(1.0 / spec.jump_rate)
            out[k] = 0.0 if t >= kill else math.exp(-(xi + c * t))
        return out

    xi = 0.0
    u = 0.0
    area = 0.0
    k = 0
    n = len(ts)
    while k < n:
        next_jump = u + rng.exponential(1.0 / spec.jump_rate) if spec.jump_rate > 0.0 else INF
        seg_end = min(next_jump, kill)
        seg_len = seg_end - u
        seg_area = _segment_area(xi, alpha, c, seg_len)
        # strict crossing: a target landing exactly on a segment boundary
        # belongs to the next segment (right continuity of the mass path)
        while k < n and ts[k] < area + seg_area:
            need = ts[k] - area
            if need <= 0.0:
                rho_local = 0.0
            else:
                rho_local = _segment_invert(xi, alpha, c, need)
            out[k] = math.exp(-(xi + c * rho_local))
            k += 1
        if k >= n:
            break
        area += seg_area
        if seg_end == kill or seg_len == INF:
            break  # killed (or saturated pure-drift segment): dust afterwards
        u = seg_end
        # xi is tracked at segment start: add the drift accrued over the
        # finished segment, then the jump that ends it
        xi += c * seg_len + spec.sample_jump(rng)
        if alpha < 0.0 and (ts[-1] - area) > _DUST_TIME_GUARD * math.exp(alpha * xi):
            break  # residual time-change budget unreachable: dust
    return out


def sample_tagged_mass(spec: SubordinatorSpec, alpha: float, t: float, rng) -> float:
    """Tagged-fragment mass at a single time t (0 when killed or dust)."""
    return float(sample_tagged_masses(spec, alpha, [t], rng)[0])


def intensity_estimate(spec: SubordinatorSpec, alpha: float, t: float,
                       f: Callable[[float], float], n_reps: int,
                       seed: int) -> Tuple[float, float]:
    """Unbiased Monte Carlo estimate of E[sum_k f(F_k(t))] with its SE.

    Uses the size-bias identity: the tagged mass weighted by its reciprocal
    reproduces the intensity of the whole fragment ensemble. Replicas own
    independent streams derived from (seed, replica index).
    """
    if n_reps < 2:
        raise ValueError("n_reps must be at least 2")
    vals = np.empty(n_reps)
    for r in range(n_reps):
        g = rngmod.stream(seed, rngmod.KIND_TAGGED, r)
        lam = sample_tagged_mass(spec, alpha, t, g)
        vals[r] = f(lam) / lam if lam > 0.0 else 0.0
    mean = float(np.mean(vals))
    se = float(np.std(vals, ddof=1) / math.sqrt(n_reps))
    return mean, se


def laplace_mc(spec: SubordinatorSpec, q: float, t: float, n_reps: int,
               seed: int) -> Tuple[float, float]:
    """Monte Carlo mean and SE of exp(-q xi(t)) (0 on killed paths)."""
    vals = np.empty(n_reps)
    for r in range(n_reps):
        g = rngmod.stream(seed, rngmod.KIND_TAGGED, r)
        x = sample_xi_value(spec, t, g)
        vals[r] = 0.0 if x == INF else math.exp(-q * x)
    mean = float(np.mean(vals))
    se = float(np.std(vals, ddof=1) / math.sqrt(n_reps))
    return mean, se
