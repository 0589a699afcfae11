"""Cubic exponential sums, local solution counts, and the singular series.

S(q, a) = sum_{r=1..q} e(a r^3 / q) is evaluated through the distribution
of cubes mod q, so a full table over a costs one length-q FFT.  The series
coefficients use the normalized fourth power (S(q,a)/q)^4: with the
exponent taken as -4 the series diverges wildly, so +4 is what the
surrounding arithmetic forces (and what the truncation diagnostics
confirm).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from cubelab.params import PreconditionError

__all__ = [
    "ExpSumValue",
    "SeriesReport",
    "CongruenceCounter",
    "LocalDensity",
    "MAIN_TERM_CONSTANT",
    "cubic_gauss_sum",
    "gauss_sum_table",
    "local_congruence_count",
    "multiplicative_weight",
    "series_coefficient",
    "series_coefficient_table",
    "singular_series_truncated",
    "singular_series_values",
    "singular_series_euler",
    "local_density",
    "main_term",
]

#: Gamma(4/3)^2 / Gamma(2/3), the archimedean factor of the main term.
MAIN_TERM_CONSTANT: float = math.gamma(4.0 / 3.0) ** 2 / math.gamma(2.0 / 3.0)

_DENSITY_MODULUS_CAP = 10**6


@dataclass(frozen=True)
class ExpSumValue:
    q: int
    a: int
    value: complex


@dataclass(frozen=True)
class SeriesReport:
    """Truncated singular series with per-q partial sums.

    tail_estimate is the spread (max - min) of the running totals over
    q in (Q_max/2, Q_max], an observed-fluctuation diagnostic: generic
    tail bounds for this series hold only off an exceptional set, so no
    per-n bound is asserted.
    """

    n: int
    Q_max: int
    partial_sums: tuple[tuple[int, float, float], ...] = field(repr=False)
    value: float
    tail_estimate: float


@dataclass(frozen=True)
class CongruenceCounter:
    """Count of y in [1,q]^6 with y1^3-y2^3+y3^3-y4^3+y5^3-y6^3 = 0 (mod q)."""

    q: int
    count: int


@dataclass(frozen=True)
class LocalDensity:
    """Stabilized density of four-cube solutions to x1^3+..+x4^3 = n mod p^k."""

    p: int
    n: int
    k_used: int
    value: float
    converged: bool


@lru_cache(maxsize=4096)
def _cube_counts(q: int) -> np.ndarray:
    """counts[c] = #{1 <= r <= q : r^3 = c (mod q)}."""
    r = np.arange(q, dtype=np.int64)
    cubes = (r * r % q) * r % q
    return np.bincount(cubes, minlength=q)


@lru_cache(maxsize=2048)
def gauss_sum_table(q: int) -> np.ndarray:
    """S(q, a) for a = 0..q-1 as one complex vector."""
    counts = _cube_counts(q)
    return np.conj(np.fft.fft(counts))


def cubic_gauss_sum(q: int, a: int) -> complex:
    """S(q, a) = sum_{r=1..q} e(a r^3 / q)."""
    if q < 1:
        raise PreconditionError(f"q must be positive, got {q}")
    return complex(gauss_sum_table(q)[a % q])


def _cyclic_convolve(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Exact integer cyclic convolution of two length-q vectors."""
    q = len(a)
    full = np.convolve(a, b)
    out = full[:q].copy()
    out[: q - 1] += full[q:]
    return out


def local_congruence_count(q: int, cap: int = 60) -> CongruenceCounter:
    """Exact count of y in [1,q]^6 with alternating cube sum divisible by q.

    Computed as a six-fold cyclic convolution of the cube-residue frequency
    vector (cost O(q^2)), not a 6-nested loop.
    """
    if q < 1:
        raise PreconditionError(f"q must be positive, got {q}")
    if q > cap:
        raise PreconditionError(f"q={q} exceeds the guard cap {cap}")
    plus = _cube_counts(q).astype(np.int64)
    minus = plus[(-np.arange(q)) % q]
    acc = plus.copy()
    for factor in (minus, plus, minus, plus, minus):
        acc = _cyclic_convolve(acc, factor)
    return CongruenceCounter(q=q, count=int(acc[0]))


@lru_cache(maxsize=4096)
def _factorize(q: int) -> tuple[tuple[int, int], ...]:
    out = []
    d, m = 2, q
    while d * d <= m:
        if m % d == 0:
            e = 0
            while m % d == 0:
                m //= d
                e += 1
            out.append((d, e))
        d += 1
    if m > 1:
        out.append((m, 1))
    return tuple(out)


def multiplicative_weight(q: int) -> float:
    """Multiplicative majorant w(q) of |S(q,a)|/q on coprime classes.

    On a prime power p^(3u+v): 3 * p^(-u-1/2) when v = 1, p^(-u-1) when
    v in {2, 3}; w(1) = 1.
    """
    if q < 1:
        raise PreconditionError(f"q must be positive, got {q}")
    value = 1.0
    for p, e in _factorize(q):
        u, v = divmod(e - 1, 3)
        v += 1
        if v == 1:
            value *= 3.0 * p ** (-u - 0.5)
        else:
            value *= float(p) ** (-u - 1)
    return value


@lru_cache(maxsize=2048)
def series_coefficient_table(q: int) -> np.ndarray:
    """A(q, m) for m = 0..q-1: sum over coprime a of (S(q,a)/q)^4 e(-a m/q).

    The table is one FFT of the masked fourth-power vector; the imaginary
    parts must vanish (conjugate a <-> q-a pairing) and are checked before
    the real coercion.
    """
    s_over_q = gauss_sum_table(q) / q
    weights = s_over_q**4
    a = np.arange(q)
    coprime = np.gcd(a, q) == 1  # for q = 1 this admits a = 0, i.e. the a = q term
    weights = np.where(coprime, weights, 0.0)
    table = np.fft.fft(weights)
    bad = np.abs(table.imag) > np.maximum(1e-9 * np.abs(table), 1e-12)
    if np.any(bad):
        worst = int(np.argmax(np.abs(table.imag)))
        raise ArithmeticError(
            f"A({q}, {worst}) has non-negligible imaginary part {table[worst].imag:.3e}"
        )
    return table.real.copy()


def series_coefficient(q: int, n: int) -> float:
    """A(q, n), real by conjugate pairing; multiplicative in q for fixed n."""
    if q < 1 or n < 1:
        raise PreconditionError(f"q and n must be positive, got q={q}, n={n}")
    return float(series_coefficient_table(q)[n % q])


def singular_series_truncated(n: int, Q_max: int) -> SeriesReport:
    """Partial sums of the four-cube singular series up to modulus Q_max."""
    if Q_max < 1:
        raise PreconditionError(f"Q_max must be >= 1, got {Q_max}")
    if n < 1:
        raise PreconditionError(f"n must be positive, got {n}")
    partials = []
    running = 0.0
    for q in range(1, Q_max + 1):
        a_qn = float(series_coefficient_table(q)[n % q])
        running += a_qn
        partials.append((q, a_qn, running))
    window = [total for q, _, total in partials if q > Q_max / 2]
    tail = max(window) - min(window) if window else 0.0
    return SeriesReport(n=n, Q_max=Q_max, partial_sums=tuple(partials),
                        value=running, tail_estimate=tail)


def singular_series_values(ns: np.ndarray, Q_max: int) -> np.ndarray:
    """Truncated singular series for a whole array of n at once."""
    if Q_max < 1:
        raise PreconditionError(f"Q_max must be >= 1, got {Q_max}")
    ns = np.asarray(ns, dtype=np.int64)
    if np.any(ns < 1):
        raise PreconditionError("all n must be positive")
    out = np.zeros(len(ns), dtype=np.float64)
    for q in range(1, Q_max + 1):
        out += series_coefficient_table(q)[ns % q]
    return out


def _four_cube_density(modulus: int, n: int) -> float:
    """M(modulus, n) / modulus^3 by convolving the cube-frequency vector."""
    counts = _cube_counts(modulus).astype(np.float64)
    transform = np.fft.rfft(counts) ** 4
    solutions = np.fft.irfft(transform, modulus)[n % modulus]
    return float(solutions) / float(modulus) ** 3


def local_density(p: int, n: int, k_max: int) -> LocalDensity:
    """Euler-factor oracle: density of x1^3+...+x4^3 = n (mod p^k), stabilized.

    Densities are computed for k = 1, 2, ... up to k_max, stopping once two
    consecutive values agree to 1e-6 relative.  For p not dividing 3n every
    solution mod p has a unit coordinate, so Hensel lifting fixes the
    density at its k=1 value; that certificate marks k_max=1 calls as
    converged without a second level.
    """
    if n < 1:
        raise PreconditionError(f"n must be positive, got {n}")
    if p < 2 or _factorize(p) != ((p, 1),):
        raise PreconditionError(f"p must be prime, got {p}")
    if k_max < 1:
        raise PreconditionError(f"k_max must be >= 1, got {k_max}")
    if p**k_max > _DENSITY_MODULUS_CAP:
        raise PreconditionError(
            f"p^k_max = {p**k_max} exceeds the modulus cap {_DENSITY_MODULUS_CAP}"
        )

    hensel_certified = (3 * n) % p != 0
    value = _four_cube_density(p, n)
    k_used, converged = 1, hensel_certified
    for k in range(2, k_max + 1):
        nxt = _four_cube_density(p**k, n)
        converged = abs(nxt - value) <= 1e-6 * max(abs(nxt), 1e-30)
        value, k_used = nxt, k
        if converged:
            break
    return LocalDensity(p=p, n=n, k_used=k_used, value=value, converged=converged)


def main_term(n: int, theta: float, Q_max: int) -> float:
    """Gamma(4/3)^2/Gamma(2/3) * S(n; Q_max) * n^(2*theta - 1/3)."""
    if n < 2:
        raise PreconditionError(f"n must be >= 2, got {n}")
    series = singular_series_truncated(n, Q_max).value
    return MAIN_TERM_CONSTANT * series * float(n) ** (2.0 * theta - 1.0 / 3.0)


@lru_cache(maxsize=64)
def _deep_density_table(p: int) -> tuple[int, np.ndarray]:
    """(modulus, densities by residue) at the deepest level p^k <= 10^6."""
    k = 1
    while p ** (k + 1) <= _DENSITY_MODULUS_CAP:
        k += 1
    modulus = p**k
    counts = _cube_counts(modulus).astype(np.float64)
    table = np.fft.irfft(np.fft.rfft(counts) ** 4, modulus) / float(modulus) ** 3
    return modulus, table


@lru_cache(maxsize=1024)
def _unit_density_table(p: int) -> np.ndarray:
    """Level-1 densities by residue mod p."""
    counts = _cube_counts(p).astype(np.float64)
    return np.fft.irfft(np.fft.rfft(counts) ** 4, p) / float(p) ** 3


def singular_series_euler(ns: np.ndarray, p_max: int = 2000) -> np.ndarray:
    """Euler-product evaluation of the singular series over primes <= p_max.

    For p not dividing 3n the level-1 density is already exact (Hensel), so
    only p <= 31 use their deepest affordable level; the skipped corrections
    for larger ramified p are below sum p^-3 < 1e-4.  Stabilization needs
    the p-adic valuation of n to sit a couple of levels under the table
    depth, which desk-scale windows satisfy.
    """
    from cubelab.smooth import primes_in  # deferred: smooth imports nothing from here

    ns = np.asarray(ns, dtype=np.int64)
    if np.any(ns < 1):
        raise PreconditionError("all n must be positive")
    out = np.ones(len(ns), dtype=np.float64)
    for p in primes_in(1, p_max):
        p = int(p)
        if p <= 31:
            modulus, table = _deep_density_table(p)
            out *= table[ns % modulus]
        else:
            out *= _unit_density_table(p)[ns % p]
    return out
