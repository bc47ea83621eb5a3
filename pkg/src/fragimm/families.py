"""Parametric dislocation and immigration measure families.

Dislocation families (splitting laws on decreasing mass vectors with sum <= 1):

* ``binary_uniform`` -- largest-fragment density 2 on [1/2, 1], second
  fragment 1 - s1, total rate 1, conservative.
* ``brownian_nu``    -- largest-fragment density sqrt(2/pi) x^{-3/2} (1-x)^{-3/2}
  on [1/2, 1), second fragment 1 - s1; infinite total rate, analytic only.
* ``discrete_finite``-- finitely many weighted fragment vectors.

Immigration families (Poisson intensities of arriving particle groups):

* ``single_exponential(rate)`` -- unit-rate arrivals of single particles with
  Exp(rate) masses.
* ``single_powerlaw(exponent, x_min)`` -- intensity x^{-exponent} dx above x_min.
* ``brownian_I(drift)`` -- intensity sqrt(1/(2 pi)) x^{-3/2} exp(-x drift^2/2) dx.
* ``group_discrete`` -- finitely many weighted group vectors.

All tail/moment functionals used by the existence gate are evaluated in
closed form per family; quadrature is only used where an integrand has no
elementary antiderivative (the brownian splitting kernel).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Tuple

from scipy.special import erfc

from ._quadrature import integrate

INF = float("inf")

_SQRT_2_OVER_PI = math.sqrt(2.0 / math.pi)


# ---------------------------------------------------------------------------
# dislocation measures
# ---------------------------------------------------------------------------

def _validate_fragments(frag: Tuple[float, ...]) -> Tuple[float, ...]:
    if not frag:
        raise ValueError("fragment vector is empty")
    if any(not (0.0 < s <= 1.0) for s in frag):
        raise ValueError("fragment masses must lie in (0, 1]")
    if any(frag[i] < frag[i + 1] for i in range(len(frag) - 1)):
        raise ValueError("fragment vector must be decreasing")
    if sum(frag) > 1.0 + 1e-12:
        raise ValueError("fragment masses must sum to at most 1")
    if frag[0] == 1.0 and len(frag) == 1:
        raise ValueError("the trivial vector (1, 0, ...) is not allowed")
    return tuple(float(s) for s in frag)


@dataclass(frozen=True)
class DislocationSpec:
    """Splitting law: family tag, erosion coefficient, family parameters."""

    family: str
    erosion_c: float = 0.0
    atoms: Tuple[Tuple[float, Tuple[float, ...]], ...] = ()

    def __post_init__(self):
        if self.family not in ("binary_uniform", "brownian_nu", "discrete_finite"):
            raise ValueError(f"unknown dislocation family {self.family!r}")
        if self.erosion_c < 0.0:
            raise ValueError("erosion coefficient must be nonnegative")
        if self.family == "discrete_finite":
            if not self.atoms:
                raise ValueError("discrete_finite needs at least one atom")
            cleaned = []
            for w, frag in self.atoms:
                if w <= 0.0:
                    raise ValueError("atom rate-weights must be positive")
                cleaned.append((float(w), _validate_fragments(tuple(frag))))
            object.__setattr__(self, "atoms", tuple(cleaned))
        elif self.atoms:
            raise ValueError("atoms only apply to discrete_finite")

    @property
    def total_rate(self) -> float:
        """nu(D1): total dislocation rate of a unit-mass particle."""
        if self.family == "binary_uniform":
            return 1.0
        if self.family == "discrete_finite":
            return math.fsum(w for w, _ in self.atoms)
        return INF

    @property
    def simulable(self) -> bool:
        return math.isfinite(self.total_rate)

    @property
    def conservative(self) -> bool:
        """True when no mass is lost within sudden dislocations."""
        if self.family == "discrete_finite":
            return all(abs(math.fsum(f) - 1.0) <= 1e-12 for _, f in self.atoms)
        return True  # both binary kernels satisfy s1 + s2 = 1

    def sample_fragments(self, rng) -> Tuple[float, ...]:
        """Draw one dislocation from the normalized measure (simulable only)."""
        if self.family == "binary_uniform":
            s1 = rng.uniform(0.5, 1.0)
            return (s1, 1.0 - s1)
        if self.family == "discrete_finite":
            weights = [w for w, _ in self.atoms]
            total = math.fsum(weights)
            u = rng.uniform(0.0, total)
            acc = 0.0
            for w, frag in self.atoms:
                acc += w
                if u <= acc:
                    return frag
            return self.atoms[-1][1]
        raise ValueError("brownian_nu has no normalizable dislocation law")


def binary_uniform(c: float = 0.0) -> DislocationSpec:
    return DislocationSpec("binary_uniform", erosion_c=c)


def brownian_nu(c: float = 0.0) -> DislocationSpec:
    return DislocationSpec("brownian_nu", erosion_c=c)


def discrete_finite(atoms, c: float = 0.0) -> DislocationSpec:
    return DislocationSpec("discrete_finite", erosion_c=c, atoms=tuple(atoms))


def _phi_brownian_integrand(u: float, q: float) -> float:
    # substitution u = sqrt(1 - s1); integrand is bounded on (0, 1/sqrt(2)]
    x = 1.0 - u * u
    one_minus_xq = -math.expm1((1.0 + q) * math.log1p(-u * u))
    tail = u ** (2.0 * (1.0 + q))
    return 2.0 * _SQRT_2_OVER_PI * (one_minus_xq - tail) * x ** -1.5 / (u * u)


def _phi_binary_integrand(x: float, q: float) -> float:
    return 2.0 * (1.0 - x ** (1.0 + q) - (1.0 - x) ** (1.0 + q))


def phi(disl: DislocationSpec, q: float, method: str = "auto") -> float:
    """Laplace exponent of the tagged-fragment subordinator.

    phi(q) = c (q+1) + integral of (1 - sum_j s_j^{1+q}) against the
    dislocation measure. ``method='quadrature'`` forces the numeric route
    (used as an independent oracle against the closed forms).
    """
    if q < 0.0:
        raise ValueError("phi is defined for q >= 0")
    base = disl.erosion_c * (q + 1.0)
    if disl.family == "binary_uniform":
        if method == "quadrature":
            return base + integrate(lambda x: _phi_binary_integrand(x, q), 0.5, 1.0)
        return base + q / (q + 2.0)
    if disl.family == "discrete_finite":
        return base + math.fsum(
            w * (1.0 - math.fsum(s ** (1.0 + q) for s in frag))
            for w, frag in disl.atoms
        )
    # brownian_nu: adaptive quadrature with the singularity removed
    if q == 0.0:
        return base
    val = integrate(lambda u: _phi_brownian_integrand(u, q), 0.0, math.sqrt(0.5),
                    points=(1e-8, 1e-6, 1e-4, 1e-2) if q > 50.0 else None,
                    rel_tol=1e-12)
    return base + val


# ---------------------------------------------------------------------------
# immigration measures
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ImmigrationSpec:
    """Poisson intensity of arriving particle groups.

    ``arrivals`` scales the whole intensity (used for hydrodynamic n*I runs).
    """

    family: str
    rate: Optional[float] = None        # single_exponential
    exponent: Optional[float] = None    # single_powerlaw
    x_min: Optional[float] = None       # single_powerlaw
    drift: Optional[float] = None       # brownian_I
    groups: Tuple[Tuple[float, Tuple[float, ...]], ...] = ()
    arrivals: float = 1.0

    def __post_init__(self):
        if self.arrivals <= 0.0:
            raise ValueError("arrivals multiplier must be positive")
        if self.family == "single_exponential":
            if self.rate is None or self.rate <= 0.0:
                raise ValueError("single_exponential needs rate > 0")
        elif self.family == "single_powerlaw":
            if self.exponent is None or self.x_min is None:
                raise ValueError("single_powerlaw needs exponent and x_min")
            if self.x_min <= 0.0:
                raise ValueError("single_powerlaw needs x_min > 0")
            if self.exponent <= 1.0:
                raise ValueError(
                    "single_powerlaw exponent must exceed 1, otherwise the "
                    "immigrated-mass integral sum_j (s_j ^ 1) above 1 diverges "
                    "and (H1) fails")
        elif self.family == "brownian_I":
            if self.drift is None or self.drift <= 0.0:
                raise ValueError("brownian_I needs drift > 0")
        elif self.family == "group_discrete":
            if not self.groups:
                raise ValueError("group_discrete needs at least one group")
            cleaned = []
            for w, frag in self.groups:
                if w <= 0.0:
                    raise ValueError("group rates must be positive")
                frag = tuple(float(s) for s in frag)
                if any(s <= 0.0 for s in frag):
                    raise ValueError("group masses must be positive")
                if any(frag[i] < frag[i + 1] for i in range(len(frag) - 1)):
                    raise ValueError("group vectors must be decreasing")
                cleaned.append((float(w), frag))
            object.__setattr__(self, "groups", tuple(cleaned))
        else:
            raise ValueError(f"unknown immigration family {self.family!r}")

    # -- closed-form functionals ------------------------------------------

    def moment_integral(self, p: float) -> float:
        """integral of sum_j s_j^p against I; +inf when divergent."""
        a = self.arrivals
        if self.family == "single_exponential":
            if p <= -1.0:
                return INF
            return a * math.gamma(p + 1.0) / self.rate ** p
        if self.family == "single_powerlaw":
            if p >= self.exponent - 1.0:
                return INF
            return a * self.x_min ** (p - self.exponent + 1.0) / (self.exponent - p - 1.0)
        if self.family == "brownian_I":
            if p <= 0.5:
                return INF
            return a * math.sqrt(1.0 / (2.0 * math.pi)) * math.gamma(p - 0.5) \
                * (2.0 / self.drift ** 2) ** (p - 0.5)
        return a * math.fsum(w * math.fsum(s ** p for s in frag)
                             for w, frag in self.groups)

    def tail_moment(self, p: float, use_sum: bool = True) -> float:
        """integral of sum_j s_j^p 1{s_j >= 1} (or s_1 only) against I."""
        a = self.arrivals
        if self.family == "single_exponential":
            lam = self.rate
            # integral_1^inf x^p lam e^{-lam x} dx, finite for every p
            val = integrate(lambda x: x ** p * lam * math.exp(-lam * x), 1.0, INF)
            return a * val
        if self.family == "single_powerlaw":
            lo = max(1.0, self.x_min)
            if p >= self.exponent - 1.0:
                return INF
            return a * lo ** (p - self.exponent + 1.0) / (self.exponent - p - 1.0)
        if self.family == "brownian_I":
            d = self.drift
            val = integrate(lambda x: x ** (p - 1.5) * math.exp(-x * d * d / 2.0),
                            1.0, INF)
            return a * math.sqrt(1.0 / (2.0 * math.pi)) * val
        total = 0.0
        for w, frag in self.groups:
            entries = frag if use_sum else frag[:1]
            total += w * math.fsum(s ** p for s in entries if s >= 1.0)
        return a * total

    def tail_is_finite(self, p: float) -> bool:
        if self.family == "single_powerlaw":
            return p < self.exponent - 1.0
        return True

    def log_tail_integral(self) -> float:
        """integral of ln(s_1) 1{s_1 >= 1} against I (finite for every
        built-in family satisfying (H1))."""
        a = self.arrivals
        if self.family == "single_exponential":
            lam = self.rate
            return a * integrate(lambda x: math.log(x) * lam * math.exp(-lam * x),
                                 1.0, INF)
        if self.family == "single_powerlaw":
            lo = max(1.0, self.x_min)
            b = self.exponent
            # integral_lo^inf ln(x) x^{-b} dx in closed form
            return a * lo ** (1.0 - b) * (math.log(lo) / (b - 1.0) + 1.0 / (b - 1.0) ** 2)
        if self.family == "brownian_I":
            d = self.drift
            val = integrate(lambda x: math.log(x) * x ** -1.5 * math.exp(-x * d * d / 2.0),
                            1.0, INF)
            return a * math.sqrt(1.0 / (2.0 * math.pi)) * val
        return a * math.fsum(w * math.log(frag[0]) for w, frag in self.groups
                             if frag[0] >= 1.0)

    def small_moment(self, p: float) -> float:
        """integral of sum_j s_j^p 1{s_j <= 1} against I; +inf when divergent."""
        a = self.arrivals
        if self.family == "single_exponential":
            lam = self.rate
            if p <= -1.0:
                return INF
            return a * integrate(lambda x: x ** p * lam * math.exp(-lam * x), 0.0, 1.0)
        if self.family == "single_powerlaw":
            lo, b = self.x_min, self.exponent
            if lo >= 1.0:
                return 0.0
            e = p - b
            if e == -1.0:
                return a * (math.log(1.0) - math.log(lo))
            return a * (1.0 - lo ** (e + 1.0)) / (e + 1.0)
        if self.family == "brownian_I":
            if p <= 0.5:
                return INF
            d = self.drift
            val = integrate(lambda x: x ** (p - 1.5) * math.exp(-x * d * d / 2.0),
                            0.0, 1.0)
            return a * math.sqrt(1.0 / (2.0 * math.pi)) * val
        return a * math.fsum(w * math.fsum(s ** p for s in frag if s <= 1.0)
                             for w, frag in self.groups)

    def h1_integral(self) -> float:
        """integral of sum_j (s_j ^ 1) against I (hypothesis (H1))."""
        small = self.small_moment(1.0)
        big = self.tail_moment(0.0)
        return small + big

    def alpha_I(self) -> float:
        """Critical self-similarity index from the upper tail of I."""
        if self.family == "single_powerlaw":
            return 1.0 - self.exponent
        return -INF  # all positive upper-tail moments finite

    def lambda_sup(self) -> float:
        """sup{lambda : integral of sum_j s_j^lambda I(ds) < inf}."""
        if self.family == "single_powerlaw":
            return self.exponent - 1.0
        return INF

    def lambda_finite_interval(self) -> Tuple[float, float]:
        """Open interval of lambda on which the moment integral is finite."""
        if self.family == "single_exponential":
            return (-1.0, INF)
        if self.family == "single_powerlaw":
            return (-INF, self.exponent - 1.0)
        if self.family == "brownian_I":
            return (0.5, INF)
        return (-INF, INF)

    # -- rate/sampling of the restriction {s_1 > eps} ----------------------

    def rate_above(self, eps: float) -> float:
        """I({s : s_1 > eps}); finite for every eps > 0 under (H1)."""
        if eps < 0.0:
            raise ValueError("eps must be nonnegative")
        a = self.arrivals
        if self.family == "single_exponential":
            return a * math.exp(-self.rate * eps)
        if self.family == "single_powerlaw":
            lo, b = max(eps, self.x_min), self.exponent
            return a * lo ** (1.0 - b) / (b - 1.0)
        if self.family == "brownian_I":
            if eps == 0.0:
                return INF
            return a * _brownian_mass_tail(eps, self.drift)
        return a * math.fsum(w for w, frag in self.groups if frag[0] > eps)

    def sample_group_above(self, eps: float, rng) -> Tuple[float, ...]:
        """One group drawn from I conditioned on {s_1 > eps}."""
        if self.family == "single_exponential":
            return (eps + rng.exponential(1.0 / self.rate),)
        if self.family == "single_powerlaw":
            lo = max(eps, self.x_min)
            u = rng.random()
            return (lo * (1.0 - u) ** (-1.0 / (self.exponent - 1.0)),)
        if self.family == "brownian_I":
            return (_brownian_mass_inverse_cdf(eps, self.drift, rng.random()),)
        eligible = [(w, frag) for w, frag in self.groups if frag[0] > eps]
        if not eligible:
            raise ValueError(f"no group has leading mass above {eps}")
        total = math.fsum(w for w, _ in eligible)
        u = rng.uniform(0.0, total)
        acc = 0.0
        for w, frag in eligible:
            acc += w
            if u <= acc:
                return frag
        return eligible[-1][1]

    def density(self, x: float) -> float:
        """Single-particle intensity density i(x) (single-mass families only)."""
        if x <= 0.0:
            return 0.0
        a = self.arrivals
        if self.family == "single_exponential":
            return a * self.rate * math.exp(-self.rate * x)
        if self.family == "single_powerlaw":
            return a * x ** -self.exponent if x >= self.x_min else 0.0
        if self.family == "brownian_I":
            d = self.drift
            return a * math.sqrt(1.0 / (2.0 * math.pi)) * x ** -1.5 \
                * math.exp(-x * d * d / 2.0)
        raise ValueError("group_discrete has no single-particle density")

    def mass_tail_integral(self, x: float) -> float:
        """integral_x^inf y i(y) dy for single-particle families."""
        a = self.arrivals
        if self.family == "single_exponential":
            lam = self.rate
            return a * (x + 1.0 / lam) * math.exp(-lam * x)
        if self.family == "single_powerlaw":
            b = self.exponent
            if b <= 2.0:
                return INF
            lo = max(x, self.x_min)
            return a * lo ** (2.0 - b) / (b - 2.0)
        if self.family == "brownian_I":
            d = self.drift
            val = integrate(lambda y: y ** -0.5 * math.exp(-y * d * d / 2.0), x, INF)
            return a * math.sqrt(1.0 / (2.0 * math.pi)) * val
        raise ValueError("group_discrete has no single-particle density")

    def scaled(self, n: float) -> "ImmigrationSpec":
        """The intensity n*I (hydrodynamic scaling)."""
        return ImmigrationSpec(self.family, rate=self.rate, exponent=self.exponent,
                               x_min=self.x_min, drift=self.drift, groups=self.groups,
                               arrivals=self.arrivals * n)


def _brownian_mass_tail(eps: float, d: float) -> float:
    """integral_eps^inf sqrt(1/(2 pi)) x^{-3/2} exp(-x d^2 / 2) dx, exactly."""
    return _SQRT_2_OVER_PI * math.exp(-d * d * eps / 2.0) / math.sqrt(eps) \
        - d * erfc(d * math.sqrt(eps / 2.0))


def _brownian_mass_inverse_cdf(eps: float, d: float, u: float) -> float:
    """Inverse CDF of the normalized brownian mass intensity above eps."""
    from scipy.optimize import brentq

    total = _brownian_mass_tail(eps, d)
    target = total * (1.0 - u)
    if target <= 0.0:
        target = total * 1e-16
    hi = max(4.0 * eps, 4.0 / (d * d))
    while _brownian_mass_tail(hi, d) > target:
        hi *= 4.0
        if hi > 1e12:
            break
    return brentq(lambda x: _brownian_mass_tail(x, d) - target, eps, hi,
                  xtol=1e-14, rtol=1e-13)


def single_exponential(rate: float) -> ImmigrationSpec:
    return ImmigrationSpec("single_exponential", rate=rate)


def single_powerlaw(exponent: float, x_min: float) -> ImmigrationSpec:
    return ImmigrationSpec("single_powerlaw", exponent=exponent, x_min=x_min)


def brownian_immigration(drift: float) -> ImmigrationSpec:
    return ImmigrationSpec("brownian_I", drift=drift)


def group_discrete(groups) -> ImmigrationSpec:
    return ImmigrationSpec("group_discrete", groups=tuple(groups))


# ---------------------------------------------------------------------------
# immigration report
# ---------------------------------------------------------------------------

@dataclass
class ImmigrationReport:
    alpha_I: float
    lambda_sup: float
    lambda_finite_interval: Tuple[float, float]
    h1_ok: bool
    h1_value: float
    diverging: Optional[str]
    total_rate_above: Callable[[float], float]


def immigration_report(spec: ImmigrationSpec) -> ImmigrationReport:
    h1 = spec.h1_integral()
    ok = math.isfinite(h1)
    return ImmigrationReport(
        alpha_I=spec.alpha_I(),
        lambda_sup=spec.lambda_sup(),
        lambda_finite_interval=spec.lambda_finite_interval(),
        h1_ok=ok,
        h1_value=h1,
        diverging=None if ok else "integral of sum_j (s_j ^ 1) I(ds)",
        total_rate_above=spec.rate_above,
    )


# ---------------------------------------------------------------------------
# hypothesis flags and the stationarity gate
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class HypothesisFlags:
    """User-declared structural hypotheses on the fragmentation.

    h2: no erosion, conservative dislocations, finite log-moment.
    h3: h2 plus non-arithmetic tagged subordinator.
    h4: second-order small-fragment integrability (small-particle probe).
    ``None`` means undeclared.
    """

    h2: Optional[bool] = None
    h3: Optional[bool] = None
    h4: Optional[bool] = None


def default_flags(disl: DislocationSpec) -> HypothesisFlags:
    conservative_no_erosion = disl.erosion_c == 0.0 and disl.conservative
    if disl.family == "binary_uniform":
        return HypothesisFlags(h2=conservative_no_erosion,
                               h3=conservative_no_erosion, h4=True)
    if disl.family == "brownian_nu":
        return HypothesisFlags(h2=conservative_no_erosion, h3=None, h4=None)
    # discrete atoms: arithmeticity cannot be decided here
    return HypothesisFlags(h2=conservative_no_erosion, h3=None, h4=None)


@dataclass
class GateVerdict:
    exists: str                       # yes | no | unknown
    reasons: Tuple[str, ...]
    alpha_I: float
    lambda_sup: float
    lp_membership: dict
    hypothesis_flags: HypothesisFlags


def stationarity_gate(alpha: float, disl: DislocationSpec, imm: ImmigrationSpec,
                      flags: Optional[HypothesisFlags] = None) -> GateVerdict:
    """Existence gate for the stationary state, clause by clause.

    Evaluates the relevant tail integrals of I analytically per family and
    reports which clause fired, together with the matching l^p membership
    claims. Returns 'unknown' exactly at the critical index and whenever a
    clause would need an undeclared hypothesis flag.
    """
    if flags is None:
        flags = default_flags(disl)
    a_I = imm.alpha_I()
    lam_sup = imm.lambda_sup()
    membership: dict = {}
    reasons = []

    if math.isfinite(a_I) and alpha == a_I:
        reasons.append("critical index alpha == alpha_I: not settled")
        return GateVerdict("unknown", tuple(reasons), a_I, lam_sup,
                           membership, flags)

    if alpha < 0.0:
        sum_ok = imm.tail_is_finite(-alpha)
        max_ok = sum_ok  # leading-mass tail has the same exponent per family
        if sum_ok:
            reasons.append("negative-index clause (i): integral of "
                           "sum_j s_j^{-alpha} 1{s_j>=1} I finite")
            membership[f"p > {1.0 + alpha:g}"] = "in"
            if alpha < -1.0:
                membership["p = 0 (finitely many particles)"] = "in"
            return GateVerdict("yes", tuple(reasons), a_I, lam_sup,
                               membership, flags)
        if not max_ok:
            reasons.append("negative-index clause (ii): integral of "
                           "s_1^{-alpha} 1{s_1>=1} I diverges")
            return GateVerdict("no", tuple(reasons), a_I, lam_sup,
                               membership, flags)
        reasons.append("no clause decides")
        return GateVerdict("unknown", tuple(reasons), a_I, lam_sup,
                           membership, flags)

    if alpha == 0.0:
        log_tail = imm.log_tail_integral()
        if math.isfinite(log_tail):
            reasons.append("zero-index clause (i): integral of "
                           "ln(s_1) 1{s_1>=1} I finite")
            membership["p > 1"] = "in"
            if disl.erosion_c == 0.0 and disl.conservative:
                membership["p = 1"] = "not_in"
            return GateVerdict("yes", tuple(reasons), a_I, lam_sup,
                               membership, flags)
        if flags.h2 is True:
            reasons.append("zero-index clause (ii): log tail diverges and "
                           "(H2) declared")
            return GateVerdict("no", tuple(reasons), a_I, lam_sup,
                               membership, flags)
        reasons.append("log tail diverges but (H2) undeclared")
        return GateVerdict("unknown", tuple(reasons), a_I, lam_sup,
                           membership, flags)

    # alpha > 0
    gamma_sup = lam_sup  # tail exponent boundary; inf for light tails
    some_eps_ok = gamma_sup > 0.0
    if some_eps_ok:
        reasons.append("positive-index clause (i): integral of s_1^eps "
                       "1{s_1>=1} I finite for small eps")
        gamma = min(gamma_sup, 1.0)
        if math.isfinite(gamma_sup):
            # approach the supremum from below for the sharpest claim
            best = min(1.0, max(gamma_sup - 1e-9, gamma_sup / 2.0))
            membership[f"p > {1.0 + alpha / best:g}"] = "in"
        else:
            membership[f"p > {1.0 + alpha:g}"] = "in"
        if flags.h3 is True:
            if math.isfinite(gamma_sup):
                g = min(gamma_sup, 1.0)
                membership[f"p <= {1.0 + alpha / g:g}"] = "not_in"
            else:
                membership[f"p <= {1.0 + alpha:g}"] = "not_in"
        else:
            membership["non-membership claims"] = "unknown ((H3) undeclared)"
        return GateVerdict("yes", tuple(reasons), a_I, lam_sup,
                           membership, flags)
    reasons.append("no positive tail moment is finite")
    return GateVerdict("no", tuple(reasons), a_I, lam_sup, membership, flags)
