"""Fragmentation with immigration: forward runs and the stationary sampler.

The stationary state is the superposition of every immigrated group
fragmented for its age. It is sampled backward in age: Poisson group ages
are generated window by window (so extending the lookback never perturbs
already-generated groups), each group is evolved for its age with the exact
event-driven simulator, and the lookback horizon grows until the estimated
probability that any older, not-yet-simulated group still contributes a
fragment above the cutoff falls below the configured residual budget.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence

import numpy as np

from . import rng as rngmod
from .errors import AssumptionError, BudgetError, GateRefusalError
from .families import (DislocationSpec, HypothesisFlags, ImmigrationSpec,
                       default_flags, phi, stationarity_gate)
from .metrics import two_sample
from .particles import DEFAULT_MAX_PARTICLES, ParticleSystem
from .samples import PointSample

INF = float("inf")


@dataclass
class FiConfig:
    """Process parameters plus explicit truncation and residual budgets."""

    alpha: float
    disl: DislocationSpec
    imm: ImmigrationSpec
    eps: float = 1e-3
    eps_imm: Optional[float] = None
    delta: float = 0.01
    lookback_step: float = 2.0
    max_age: float = 800.0
    eta: float = 0.1
    pilot_reps: int = 200
    pilot_horizon: float = 50.0
    max_particles: int = DEFAULT_MAX_PARTICLES
    flags: Optional[HypothesisFlags] = None
    pilot_seed: int = 0xF1A9

    def __post_init__(self):
        if self.eps_imm is None:
            self.eps_imm = self.eps
        if self.eps_imm > self.eps:
            raise ValueError("eps_imm must not exceed eps")
        if not (0.0 < self.delta < 1.0):
            raise ValueError("delta must lie in (0, 1)")
        if self.flags is None:
            self.flags = default_flags(self.disl)
        if not math.isfinite(self.imm.h1_integral()):
            raise AssumptionError(
                "immigrated-mass integral sum_j (s_j ^ 1) I(ds) diverges: "
                "(H1) fails")
        self.verdict = stationarity_gate(self.alpha, self.disl, self.imm,
                                         self.flags)
        self._residual_model = None

    def residual_model(self) -> "_ResidualModel":
        """Pilot-backed lookback model, fitted once per configuration."""
        if self._residual_model is None:
            self._residual_model = _ResidualModel(self, self.pilot_seed)
        return self._residual_model


def simulate_fi(cfg: FiConfig, u0: Sequence[float], t: float, seed: int,
                init_key_offset: int = 0,
                include_immigration: bool = True,
                log_events: bool = False) -> PointSample:
    """Forward run: evolve u0 and Poisson-immigrated groups to time t,
    return the (eps, inf)-restricted configuration.

    Immigrant groups whose leading mass is at most eps_imm are discarded
    exactly (masses only decrease, so they can never re-enter (eps, inf)).
    The immigration realization depends only on (seed), never on u0, which
    makes shared-seed superposition decompositions exact.
    """
    if t < 0.0:
        raise ValueError("t must be nonnegative")
    system = ParticleSystem(list(u0), cfg.disl, cfg.alpha, eps=cfg.eps,
                            seed=seed, key_offset=init_key_offset,
                            max_particles=cfg.max_particles,
                            log_events=log_events)
    n_groups = 0
    if include_immigration:
        rate = cfg.imm.rate_above(cfg.eps_imm)
        g_imm = rngmod.stream(seed, rngmod.KIND_IMMIGRATION)
        n_groups = int(g_imm.poisson(rate * t))
        times = np.sort(g_imm.uniform(0.0, t, n_groups)) if n_groups else []
        for k in range(n_groups):
            g = rngmod.stream(seed, rngmod.KIND_GROUP, k)
            mark = cfg.imm.sample_group_above(cfg.eps_imm, g)
            keys = [(rngmod.KIND_GROUP, k, j) for j in range(len(mark))]
            system.add_particles(mark, float(times[k]), keys)
    system.evolve(t)
    meta = {
        "eps": cfg.eps, "eps_imm": cfg.eps_imm, "t": t, "seed": seed,
        "n_groups": n_groups,
        "retired_mass": system.retired_mass,
        "immigrated_mass": system.immigrated_mass,
        "initial_mass": system.initial_mass,
        "dislocation_loss": system.dislocation_loss,
    }
    if log_events:
        meta["event_log"] = system.event_log
    return PointSample(system.masses(), meta=meta)


# ---------------------------------------------------------------------------
# residual bounds for the backward sampler
# ---------------------------------------------------------------------------

class _ResidualModel:
    """Estimated probability that some group older than A still shows a
    fragment above eps, per sign of alpha."""

    def __init__(self, cfg: FiConfig, seed: int):
        self.cfg = cfg
        self.rate = cfg.imm.rate_above(cfg.eps_imm)
        self.kind: str
        self.pilot_taus: Optional[np.ndarray] = None
        self.pilot_astar: Optional[np.ndarray] = None
        self.envelope_const: Optional[float] = None
        alpha = cfg.alpha
        if alpha < 0.0:
            self.kind = "pilot_extinction"
            self._fit_extinction(seed)
        elif alpha == 0.0:
            self.kind = "analytic_markov"
            self._fit_markov()
        else:
            self.kind = "pilot_envelope"
            self._fit_envelope(seed)

    # alpha < 0: groups die at a finite age; lookback residual is the mean
    # overshoot of pilot extinction ages.
    def _fit_extinction(self, seed: int) -> None:
        cfg = self.cfg
        taus = np.empty(cfg.pilot_reps)
        for r in range(cfg.pilot_reps):
            g = rngmod.stream(seed, rngmod.KIND_PILOT, 0, r)
            mark = cfg.imm.sample_group_above(cfg.eps_imm, g)
            keys = [(rngmod.KIND_PILOT, 1, r, j) for j in range(len(mark))]
            sys_ = ParticleSystem(mark, cfg.disl, cfg.alpha, eps=cfg.eps,
                                  seed=seed, root_keys=keys,
                                  max_particles=cfg.max_particles)
            taus[r] = sys_.run_to_extinction()
        self.pilot_taus = taus

    # alpha = 0: Markov bound through the known ensemble moment decay
    # E[sum_k F_k(t)^{1+eta}] = exp(-t phi(eta)); pick the eta that gives
    # the shortest horizon for the configured budget.
    def _fit_markov(self) -> None:
        cfg = self.cfg
        best = None
        for eta in (0.25, 0.5, 1.0, 2.0, 3.0):
            rate_eta = phi(cfg.disl, eta)
            if rate_eta <= 0.0:
                continue
            c_eta = cfg.imm.moment_integral(1.0 + eta)
            if not math.isfinite(c_eta):
                continue
            const = c_eta * cfg.eps ** -(1.0 + eta) / rate_eta
            horizon = math.log(max(const / cfg.delta, 1.0)) / rate_eta
            if best is None or horizon < best[2]:
                best = (eta, const, horizon, rate_eta)
        if best is None:
            raise BudgetError("no finite (1+eta)-moment of I is available "
                              "for the alpha = 0 residual bound")
        self._markov = best

    # alpha > 0: pilot-estimated decay envelope of the largest fragment,
    # F_1(t) <= C t^{-1/(alpha+eta)}, then a deterministic last-contribution
    # age per immigrated mark.
    def _fit_envelope(self, seed: int) -> None:
        cfg = self.cfg
        grid = np.geomspace(0.25, cfg.pilot_horizon, 12)
        worst = 0.0
        for r in range(cfg.pilot_reps):
            keys = [(rngmod.KIND_PILOT, 2, r)]
            sys_ = ParticleSystem([1.0], cfg.disl, cfg.alpha, eps=cfg.eps / 4.0,
                                  seed=seed, root_keys=keys,
                                  max_particles=cfg.max_particles)
            for t in grid:
                sys_.evolve(float(t))
                ms = sys_.masses()
                top = ms[0] if ms else 0.0
                worst = max(worst, top * t ** (1.0 / (cfg.alpha + cfg.eta)))
        self.envelope_const = 1.5 * worst
        astar = np.empty(cfg.pilot_reps)
        for r in range(cfg.pilot_reps):
            g = rngmod.stream(seed, rngmod.KIND_PILOT, 3, r)
            mark = cfg.imm.sample_group_above(cfg.eps_imm, g)
            astar[r] = max(self._last_age(s) for s in mark)
        self.pilot_astar = astar

    def _last_age(self, s: float) -> float:
        """Age past which a mass-s immigrant keeps no fragment above eps,
        under the fitted envelope."""
        cfg = self.cfg
        c_hat = self.envelope_const
        if s <= cfg.eps or c_hat <= 0.0:
            return 0.0
        return s ** -cfg.alpha * (s * c_hat / cfg.eps) ** (cfg.alpha + cfg.eta)

    def residual(self, age: float) -> float:
        if self.kind == "pilot_extinction":
            return self.rate * float(np.mean(np.clip(self.pilot_taus - age, 0.0, None)))
        if self.kind == "analytic_markov":
            eta, const, _, rate_eta = self._markov
            return const * math.exp(-rate_eta * age)
        return self.rate * float(np.mean(np.clip(self.pilot_astar - age, 0.0, None)))

    def describe(self) -> Dict:
        out = {"kind": self.kind}
        if self.kind == "analytic_markov":
            out["eta"] = self._markov[0]
        if self.kind == "pilot_envelope":
            out["envelope_const"] = self.envelope_const
            out["pilot_horizon"] = self.cfg.pilot_horizon
        return out


def sample_stationary(cfg: FiConfig, seed: int) -> PointSample:
    """One draw from the stationary configuration, backward in age.

    Refuses unless the existence gate answers 'yes'; refuses when the
    residual budget cannot be met within the configured age limit.
    """
    if cfg.verdict.exists != "yes":
        raise GateRefusalError(
            f"stationary sampling refused: gate verdict is "
            f"'{cfg.verdict.exists}' ({'; '.join(cfg.verdict.reasons)})")
    model = cfg.residual_model()
    rate = model.rate
    W = cfg.lookback_step
    masses: List[float] = []
    n_groups = 0
    n_contributing = 0
    age = 0.0
    w = 0
    while True:
        g_w = rngmod.stream(seed, rngmod.KIND_WINDOW, w)
        n_w = int(g_w.poisson(rate * W))
        offsets = np.sort(g_w.random(n_w)) if n_w else []
        for i in range(n_w):
            a = w * W + W * float(offsets[i])
            g = rngmod.stream(seed, rngmod.KIND_STAT_GROUP, w, i)
            mark = cfg.imm.sample_group_above(cfg.eps_imm, g)
            keys = [(rngmod.KIND_STAT_GROUP, w, i, j) for j in range(len(mark))]
            sys_ = ParticleSystem(mark, cfg.disl, cfg.alpha, eps=cfg.eps,
                                  seed=seed, root_keys=keys,
                                  max_particles=cfg.max_particles)
            sys_.evolve(a)
            contributed = sys_.masses()
            if contributed:
                n_contributing += 1
            masses.extend(contributed)
            n_groups += 1
        w += 1
        age = w * W
        if model.residual(age) < cfg.delta:
            break
        if age >= cfg.max_age:
            raise BudgetError(
                f"residual budget delta={cfg.delta} not met by age "
                f"{cfg.max_age} (residual {model.residual(age):.3g})")
    return PointSample(tuple(masses), meta={
        "eps": cfg.eps, "eps_imm": cfg.eps_imm, "delta": cfg.delta,
        "lookback": age, "residual": model.residual(age), "seed": seed,
        "n_groups": n_groups, "n_contributing": n_contributing,
        "gate": cfg.verdict.exists,
        "residual_model": model.describe(),
    })


def stationarity_check(cfg: FiConfig, t_shift: float, n_reps: int, seed: int,
                       significance: float = 0.01) -> Dict:
    """Two-sample comparison of the stationary law against itself shifted
    by t_shift through the forward dynamics."""
    if cfg.verdict.exists != "yes":
        raise GateRefusalError("stationarity check requires gate = yes")
    pre: List[PointSample] = []
    post: List[PointSample] = []
    for r in range(n_reps):
        s0 = sample_stationary(cfg, rngmod.derive_seed(seed, 0, r))
        s1 = simulate_fi(cfg, s0.masses, t_shift, rngmod.derive_seed(seed, 1, r))
        pre.append(s0)
        post.append(s1)
    reports = [two_sample(pre, post, "largest_mass"),
               two_sample(pre, post, "count_above", a=cfg.eps),
               two_sample(pre, post, "total_above", a=cfg.eps)]
    return {"t_shift": t_shift, "n_reps": n_reps,
            "significance": significance,
            "tests": reports,
            "passed": all(r["p_value"] > significance for r in reports)}
