"""Shared result containers: point samples and measure estimates."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, Optional, Tuple

import numpy as np


@dataclass
class PointSample:
    """A finite decreasing configuration of masses with provenance metadata."""

    masses: Tuple[float, ...]
    meta: Dict = field(default_factory=dict)

    def __post_init__(self):
        ms = tuple(sorted((float(m) for m in self.masses), reverse=True))
        object.__setattr__(self, "masses", ms)

    def largest(self) -> float:
        return self.masses[0] if self.masses else 0.0

    def count_above(self, a: float) -> int:
        return sum(1 for m in self.masses if m > a)

    def total_above(self, a: float) -> float:
        return math.fsum(m for m in self.masses if m > a)

    def total(self) -> float:
        return math.fsum(self.masses)

    def moment(self, p: float) -> float:
        return math.fsum(m ** p for m in self.masses)

    def merged(self, other: "PointSample") -> "PointSample":
        return PointSample(self.masses + other.masses, dict(self.meta))


@dataclass
class MeasureEstimate:
    """Radon-measure estimate on (0, inf): histogram weights with SEs,
    optionally accompanied by exact multiset moments."""

    kind: str                                 # empirical | semi_analytic | closed_form
    bin_edges: Optional[np.ndarray] = None
    weights: Optional[np.ndarray] = None
    ses: Optional[np.ndarray] = None
    moments: Dict[float, float] = field(default_factory=dict)
    meta: Dict = field(default_factory=dict)

    def support(self) -> Tuple[float, float]:
        if self.bin_edges is None:
            return (0.0, math.inf)
        return (float(self.bin_edges[0]), float(self.bin_edges[-1]))
