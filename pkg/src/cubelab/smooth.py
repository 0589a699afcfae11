"""Smooth-number sets and congruence-restricted prime ranges.

Sets are materialized eagerly as sorted integer lists: the generating
functions iterate them many times and desk scale keeps them below 10^6
members.  Note that 1 belongs to every smooth set (the divisor condition
is vacuous), which shifts the zero-phase sum count by one.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from cubelab.params import Parameters, PreconditionError

__all__ = [
    "SmoothSet",
    "RestrictedPrimeRange",
    "smooth_set",
    "smooth_star_set",
    "smooth_interval_set",
    "restricted_primes",
    "primes_in",
    "prime_range_clears_smooth_cap",
]

_SIEVE_LIMIT = 4_000_000


@dataclass(frozen=True)
class SmoothSet:
    """Integers in (bound_low, bound_high] whose prime factors are <= prime_cap."""

    bound_low: float
    bound_high: float
    prime_cap: float
    members: tuple[int, ...] = field(repr=False)

    def __len__(self) -> int:
        return len(self.members)

    def as_array(self) -> np.ndarray:
        return np.asarray(self.members, dtype=np.int64)


@dataclass(frozen=True)
class RestrictedPrimeRange:
    """Primes p = 2 (mod 3) in (low, high]."""

    low: float
    high: float
    primes: tuple[int, ...]

    def __len__(self) -> int:
        return len(self.primes)


@lru_cache(maxsize=32)
def _largest_prime_factor(limit: int) -> np.ndarray:
    """lpf[m] = largest prime factor of m for m <= limit (lpf[0] = lpf[1] = 0)."""
    if limit > _SIEVE_LIMIT:
        raise PreconditionError(f"sieve limit {limit} exceeds the desk-scale cap {_SIEVE_LIMIT}")
    lpf = np.zeros(limit + 1, dtype=np.int64)
    for p in range(2, limit + 1):
        if lpf[p] == 0:
            lpf[p::p] = p  # ascending primes overwrite, leaving the largest
    return lpf


def _resolve_cap(base: float, eta: float) -> float:
    """base**eta, snapped to an integer when within 1e-9 relative.

    The admission test "prime <= cap" is integer-valued, so a cap that is
    mathematically an integer must not flicker with the rounding of pow
    (e.g. 10**(log2/log10) evaluates to 1.9999999999999998).
    """
    cap = base**eta
    nearest = round(cap)
    if nearest >= 1 and abs(cap - nearest) <= 1e-9 * max(1.0, cap):
        return float(nearest)
    return cap


def _smooth_members(lo: int, hi: int, cap: float) -> tuple[int, ...]:
    """Integers m in [lo, hi] with every prime factor <= cap, ascending."""
    if hi < lo:
        return ()
    lpf = _largest_prime_factor(hi)
    mask = lpf[lo : hi + 1] <= cap
    return tuple(int(m) for m in np.nonzero(mask)[0] + lo)


def smooth_set(R: float, eta: float) -> SmoothSet:
    """The set of m in [1, R] whose prime factors are all <= R^eta."""
    if R < 1:
        raise PreconditionError(f"R must be >= 1, got {R}")
    if not 0 < eta < 1:
        raise PreconditionError(f"eta must lie in (0, 1), got {eta}")
    cap = _resolve_cap(R, eta)
    return SmoothSet(0.0, R, cap, _smooth_members(1, math.floor(R), cap))


def smooth_star_set(X: float, Z: float, eta: float) -> SmoothSet:
    """The set of m in [1, X] whose prime factors are all <= Z^eta."""
    if X < 1 or Z < 1:
        raise PreconditionError(f"X and Z must be >= 1, got X={X}, Z={Z}")
    cap = _resolve_cap(Z, eta)
    return SmoothSet(0.0, X, cap, _smooth_members(1, math.floor(X), cap))


def smooth_interval_set(X: float, Z: float, eta: float) -> SmoothSet:
    """The dyadic shell (X, 2X] of Z^eta-smooth integers."""
    if X < 1 or Z < 1:
        raise PreconditionError(f"X and Z must be >= 1, got X={X}, Z={Z}")
    cap = _resolve_cap(Z, eta)
    return SmoothSet(X, 2 * X, cap, _smooth_members(math.floor(X) + 1, math.floor(2 * X), cap))


def primes_in(lo: float, hi: float) -> tuple[int, ...]:
    """All primes p with lo < p <= hi."""
    top = math.floor(hi)
    if top < 2:
        return ()
    lpf = _largest_prime_factor(top)
    idx = np.arange(top + 1)
    is_prime = (lpf == idx) & (idx >= 2)
    return tuple(int(p) for p in np.nonzero(is_prime)[0] if p > lo)


def restricted_primes(Y: float, J: int) -> RestrictedPrimeRange:
    """Primes p = 2 (mod 3) in the window (2^-J * Y, Y]."""
    if Y < 1:
        raise PreconditionError(f"Y must be >= 1, got {Y}")
    if J < 0:
        raise PreconditionError(f"J must be nonnegative, got {J}")
    low = Y * 2.0**-J
    primes = tuple(p for p in primes_in(low, Y) if p % 3 == 2)
    return RestrictedPrimeRange(low, Y, primes)


def prime_range_clears_smooth_cap(params: Parameters) -> bool:
    """Whether 2^-J * Y > R^eta, so no restricted prime divides a smooth member.

    Holds at asymptotic scale by choice of exponents; at toy scale it is
    parameter-dependent, so experiments check it instead of assuming it.
    """
    return params.Y * 2.0**-params.J > params.R**params.eta
