"""Scalar numerical kernels: sech-power integrals, root brackets, finite differences."""

import math
import sys
from dataclasses import dataclass

from scipy import integrate, optimize

from .exceptions import NoSignChange

__all__ = [
    "Bracket",
    "sech_power_integral",
    "tail_cutoff",
    "brent_root",
    "central_diff",
]

_TAIL_TOL = 1e-16


def _log_sech(y):
    a = abs(y)
    return math.log(2.0) - a - math.log1p(math.exp(-2.0 * a))


def tail_cutoff(q):
    """Point y* beyond which the tail of sech^q is below 1e-16.

    Uses sech^q(y) <= 2^q exp(-q y), whose tail integral is 2^q exp(-q y*) / q.
    """
    return max(0.0, (q * math.log(2.0) - math.log(q) - math.log(_TAIL_TOL)) / q)


def sech_power_integral(q, tau):
    """Return the integral of sech(y)**q over [tau, inf).

    The infinite tail (and, for very negative ``tau``, the far-left piece)
    is dropped beyond the analytic cutoff from :func:`tail_cutoff`; the
    remaining finite interval goes to adaptive Gauss-Kronrod quadrature.
    """
    q = float(q)
    if not q > 0:
        raise ValueError("q must be positive")
    y_star = tail_cutoff(q)
    lo = max(float(tau), -y_star)
    if lo >= y_star:
        return 0.0
    points = [0.0] if lo < 0.0 < y_star else None
    val, _ = integrate.quad(
        lambda y: math.exp(q * _log_sech(y)),
        lo,
        y_star,
        epsabs=1e-15,
        epsrel=1e-13,
        limit=400,
        points=points,
    )
    return val


@dataclass(frozen=True)
class Bracket:
    """Interval [lo, hi] on which ``f`` changes sign.

    Use :meth:`of` to build one; it evaluates ``f`` at both ends and raises
    :class:`NoSignChange` if the signs agree.
    """

    lo: float
    hi: float
    f_lo: float
    f_hi: float

    @classmethod
    def of(cls, f, lo, hi):
        lo, hi = float(lo), float(hi)
        if not lo < hi:
            raise ValueError(f"empty bracket [{lo}, {hi}]")
        f_lo, f_hi = float(f(lo)), float(f(hi))
        if f_lo * f_hi > 0:
            raise NoSignChange(f"f({lo})={f_lo:g} and f({hi})={f_hi:g} share a sign")
        return cls(lo, hi, f_lo, f_hi)


def brent_root(f, bracket, tol=1e-13):
    """Root of ``f`` inside ``bracket`` (Brent's method, bisection safeguarded)."""
    if bracket.f_lo == 0.0:
        return bracket.lo
    if bracket.f_hi == 0.0:
        return bracket.hi
    return optimize.brentq(f, bracket.lo, bracket.hi, xtol=tol, rtol=4 * sys.float_info.epsilon, maxiter=500)


def central_diff(f, x, h):
    """Five-point central derivative, error O(h**4)."""
    return (f(x - 2 * h) - 8 * f(x - h) + 8 * f(x + h) - f(x + 2 * h)) / (12 * h)
