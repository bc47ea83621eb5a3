"""Shared adaptive quadrature kernel (Gauss-Kronrod via QUADPACK)."""
from __future__ import annotations

from scipy.integrate import quad

REL_TOL = 1e-10


def integrate(f, a, b, rel_tol=REL_TOL, points=None, limit=200, abs_tol=0.0):
    """Integrate f over [a, b] to relative tolerance ``rel_tol``.

    ``points`` marks interior breakpoints (ignored for infinite limits,
    as QUADPACK requires). ``abs_tol`` > 0 gives integrands with flat zero
    stretches (bump functions) an absolute floor, avoiding roundoff churn.
    """
    if points is not None and b != float("inf") and a != float("-inf"):
        pts = [p for p in points if a < p < b]
        val, _ = quad(f, a, b, epsabs=abs_tol, epsrel=rel_tol, limit=limit,
                      points=pts or None)
    else:
        val, _ = quad(f, a, b, epsabs=abs_tol, epsrel=rel_tol, limit=limit)
    return val
