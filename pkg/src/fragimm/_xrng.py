"""Lightweight deterministic per-particle streams for the event loop.

SplitMix64 (the finalizer SeedSequence itself uses for entropy mixing):
each particle owns a 64-bit stream seed, draws its waiting time and its
dislocation from that stream, and derives child seeds by a keyed remix.
Constant cost per draw regardless of genealogy depth, so million-event
trees stay cheap while remaining bitwise reproducible and invariant under
lowering the mass cutoff.
"""
from __future__ import annotations

import math

_MASK = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15
_CHILD_K1 = 0xD1B54A32D192ED03
_CHILD_K2 = 0x8CB92BA72F3D8DD7


def mix64(z: int) -> int:
    z &= _MASK
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
    return z ^ (z >> 31)


def child_seed(parent_seed: int, j: int) -> int:
    """Stream seed of child j, decoupled from the parent's own draw chain."""
    return mix64(mix64(parent_seed ^ _CHILD_K1) + (j + 1) * _CHILD_K2)


class SplitMix:
    """Minimal generator API used by the dislocation samplers."""

    __slots__ = ("state",)

    def __init__(self, seed: int):
        self.state = seed & _MASK

    def next64(self) -> int:
        self.state = (self.state + _GOLDEN) & _MASK
        return mix64(self.state)

    def random(self) -> float:
        return (self.next64() >> 11) * 2.0 ** -53

    def uniform(self, lo: float, hi: float) -> float:
        return lo + (hi - lo) * self.random()

    def exponential(self) -> float:
        u = (self.next64() >> 11) * 2.0 ** -53
        return -math.log1p(-u)  # u in [0, 1): exact Exp(1) inverse CDF
