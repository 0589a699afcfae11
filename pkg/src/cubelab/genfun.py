"""Cubic Weyl sums and oscillatory integrals at a real phase.

Phase accuracy is the whole game here: alpha*x^3 mod 1 computed as a naive
double product loses every significant digit once x^3 approaches 2^53, so
the sums run through an exact product-splitting reduction (Dekker two-term
products, with a big-integer fallback above the float-exact cube range).
The oscillatory integrals use panel-doubling Gauss-Legendre with panel
counts seeded by the oscillation count; Z stays small enough at desk scale
that no Filon-type machinery is warranted.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

import numpy as np

from cubelab.params import Parameters, PreconditionError
from cubelab.smooth import SmoothSet, restricted_primes, smooth_interval_set, smooth_set

__all__ = [
    "WeylSumSpec",
    "OscIntegralValue",
    "QuadratureError",
    "interval_spec",
    "set_spec",
    "bilinear_spec",
    "spec_from_params",
    "weyl_sum",
    "fractional_phases",
    "v_integral",
    "w_integral",
    "rho_kernel",
    "sigma_kernel",
    "estimate_bilinear_prefactor",
]

_TERM_GUARD = 10**8
_FLOAT_EXACT_CUBE = 208_000  # largest x with x^3 < 2^53


class QuadratureError(RuntimeError):
    """Adaptive quadrature failed to reach the requested tolerance."""


@dataclass(frozen=True)
class WeylSumSpec:
    """Index set of a cubic Weyl sum sum_x e(alpha x^3).

    kind "interval" sums over integers lo < x <= hi; "set" over an explicit
    sorted list; "bilinear" over products p*w with p from a restricted prime
    list and w from the matching smooth shell.
    """

    kind: str
    lo: float = 0.0
    hi: float = 0.0
    members: tuple[int, ...] = ()
    pairs: tuple[tuple[int, tuple[int, ...]], ...] = ()

    def term_values(self) -> np.ndarray:
        """The summation variable x (or p*w) as a sorted int64 array."""
        if self.kind == "interval":
            lo_i, hi_i = math.floor(self.lo), math.floor(self.hi)
            return np.arange(lo_i + 1, hi_i + 1, dtype=np.int64)
        if self.kind == "set":
            return np.asarray(self.members, dtype=np.int64)
        if self.kind == "bilinear":
            chunks = [p * np.asarray(ws, dtype=np.int64) for p, ws in self.pairs if ws]
            if not chunks:
                return np.empty(0, dtype=np.int64)
            return np.sort(np.concatenate(chunks))
        raise PreconditionError(f"unknown spec kind {self.kind!r}")

    def term_count(self) -> int:
        if self.kind == "interval":
            return max(0, math.floor(self.hi) - math.floor(self.lo))
        if self.kind == "set":
            return len(self.members)
        return sum(len(ws) for _, ws in self.pairs)

    def max_term(self) -> int:
        if self.kind == "interval":
            return max(0, math.floor(self.hi))
        if self.kind == "set":
            return max(self.members) if self.members else 0
        return max((p * max(ws) for p, ws in self.pairs if ws), default=0)


@dataclass(frozen=True)
class OscIntegralValue:
    beta: float
    Z: float
    value: complex
    abs_error_estimate: float


def interval_spec(lo: float, hi: float) -> WeylSumSpec:
    if not 0 <= lo <= hi:
        raise PreconditionError(f"need 0 <= lo <= hi, got ({lo}, {hi})")
    return WeylSumSpec(kind="interval", lo=lo, hi=hi)


def set_spec(members: Sequence[int] | SmoothSet) -> WeylSumSpec:
    if isinstance(members, SmoothSet):
        members = members.members
    members = tuple(int(m) for m in members)
    if any(m <= 0 for m in members):
        raise PreconditionError("set spec members must be positive")
    if any(b <= a for a, b in zip(members, members[1:])):
        raise PreconditionError("set spec members must be strictly increasing")
    return WeylSumSpec(kind="set", members=members)


def bilinear_spec(pairs: Sequence[tuple[int, Sequence[int]]]) -> WeylSumSpec:
    frozen = tuple((int(p), tuple(int(w) for w in ws)) for p, ws in pairs)
    return WeylSumSpec(kind="bilinear", pairs=frozen)


def spec_from_params(kind: str, params: Parameters) -> WeylSumSpec:
    """The named generating-function index set at the given parameters.

    f: (P, 2P];  h: the smooth set up to R;  K: the prime-times-shell
    bilinear range;  F: [1, 2P];  F0: [1, P];  G: [1, R].
    """
    P, R = params.P, params.R
    if kind == "f":
        return interval_spec(P, 2 * P)
    if kind == "F":
        return interval_spec(0, 2 * P)
    if kind == "F0":
        return interval_spec(0, P)
    if kind == "G":
        return interval_spec(0, R)
    if kind == "h":
        return set_spec(smooth_set(R, params.eta))
    if kind == "K":
        primes = restricted_primes(params.Y, params.J).primes
        pairs = []
        for p in primes:
            shell = smooth_interval_set(max(P / p, 1.0), max(2 * P / params.Y, 1.0), params.eta)
            pairs.append((p, shell.members))
        return bilinear_spec(pairs)
    raise PreconditionError(f"unknown generating function kind {kind!r}")


def _split_hi_lo(x: np.ndarray | float):
    split = 134_217_729.0  # 2^27 + 1, Dekker splitting constant
    t = x * split
    hi = t - (t - x)
    return hi, x - hi


def fractional_phases(alpha: float, values: np.ndarray) -> np.ndarray:
    """alpha * values^3 mod 1, elementwise, to full double accuracy.

    values^3 held exactly in float64 requires values < 208_000; beyond that
    an exact dyadic big-integer reduction takes over (alpha, as a double,
    IS a dyadic rational, so the reduction is error-free).
    """
    alpha = alpha - math.floor(alpha)  # exact: both are multiples of ulp(alpha)
    values = np.asarray(values, dtype=np.int64)
    if len(values) == 0:
        return np.empty(0, dtype=np.float64)
    if int(values.max()) > _FLOAT_EXACT_CUBE:
        return _fractional_phases_exact(alpha, values)
    cubes = values.astype(np.float64) ** 3
    prod = alpha * cubes
    ahi, alo = _split_hi_lo(alpha)
    chi, clo = _split_hi_lo(cubes)
    err = ((ahi * chi - prod) + ahi * clo + alo * chi) + alo * clo
    frac = (prod - np.floor(prod)) + err
    return frac - np.floor(frac)


def fractional_linear_phase(alpha: float, k: int) -> float:
    """alpha * k mod 1 to full double accuracy (k a positive integer)."""
    alpha = alpha - math.floor(alpha)
    if k < 2**53:
        kf = float(k)
        prod = alpha * kf
        ahi, alo = _split_hi_lo(alpha)
        khi, klo = _split_hi_lo(kf)
        err = ((ahi * khi - prod) + ahi * klo + alo * khi) + alo * klo
        frac = (prod - math.floor(prod)) + err
        return frac - math.floor(frac)
    mant, exp = math.frexp(alpha)
    mant_int = int(mant * (1 << 53))
    shift = 53 - exp
    mask = (1 << shift) - 1
    return ((mant_int * k) & mask) * math.ldexp(1.0, -shift)


def _fractional_phases_exact(alpha: float, values: np.ndarray) -> np.ndarray:
    mant, exp = math.frexp(alpha)
    mant_int = int(mant * (1 << 53))
    shift = 53 - exp
    if shift <= 0:  # alpha an even integer after reduction; cannot happen for alpha in [0,1)
        return np.zeros(len(values), dtype=np.float64)
    mask = (1 << shift) - 1
    scale = math.ldexp(1.0, -shift)
    out = np.empty(len(values), dtype=np.float64)
    for i, v in enumerate(values.tolist()):
        out[i] = ((mant_int * v**3) & mask) * scale
    return out


def weyl_sum(alpha: float, spec: WeylSumSpec) -> complex:
    """sum over the spec'd index set of e(alpha x^3)."""
    if spec.term_count() > _TERM_GUARD:
        raise PreconditionError(
            f"spec has {spec.term_count()} terms, beyond the {_TERM_GUARD} guard"
        )
    values = spec.term_values()
    if len(values) == 0:
        return 0j
    phases = fractional_phases(alpha, values)
    return complex(np.exp(2j * np.pi * phases).sum())


@lru_cache(maxsize=8)
def _gauss_rule(order: int):
    nodes, weights = np.polynomial.legendre.leggauss(order)
    return nodes, weights


def _oscillatory_integral(beta: float, lo: float, hi: float, tol: float,
                          max_nodes: int = 2_000_000) -> OscIntegralValue:
    """integral over [lo, hi] of e(beta * g^3) dg by panel-doubled 16-pt GL."""
    if tol <= 0:
        raise PreconditionError(f"tol must be positive, got {tol}")
    nodes, weights = _gauss_rule(16)
    cycles = abs(beta) * abs(hi**3 - lo**3)
    panels = max(4, min(int(cycles / 2) + 4, max_nodes // 32))

    def evaluate(m: int) -> complex:
        edges = np.linspace(lo, hi, m + 1)
        mid = 0.5 * (edges[:-1] + edges[1:])[:, None]
        half = 0.5 * (edges[1] - edges[0])
        g = mid + half * nodes[None, :]
        vals = np.exp(2j * np.pi * beta * g**3)
        return complex((vals * weights[None, :]).sum() * half)

    prev = evaluate(panels)
    while True:
        panels *= 2
        if panels * 16 > max_nodes:
            raise QuadratureError(
                f"no convergence to tol={tol} within {max_nodes} nodes "
                f"(beta={beta}, range=[{lo}, {hi}])"
            )
        cur = evaluate(panels)
        err = abs(cur - prev)
        if err <= tol:
            return OscIntegralValue(beta=beta, Z=hi, value=cur, abs_error_estimate=err)
        prev = cur


def v_integral(beta: float, Z: float, tol: float = 1e-10) -> OscIntegralValue:
    """integral from Z to 2Z of e(beta * g^3) dg."""
    if Z <= 0:
        raise PreconditionError(f"Z must be positive, got {Z}")
    return _oscillatory_integral(beta, Z, 2 * Z, tol)


def w_integral(beta: float, Z: float, tol: float = 1e-10) -> OscIntegralValue:
    """integral from 0 to Z of e(beta * g^3) dg."""
    if Z <= 0:
        raise PreconditionError(f"Z must be positive, got {Z}")
    return _oscillatory_integral(beta, 0.0, Z, tol)


def _batch_rule(betas: np.ndarray, lo: float, hi: float, tol: float,
                max_panels: int = 65_536) -> np.ndarray:
    """The oscillatory integral for a whole array of beta, shared GL grid.

    One fixed rule sized for the worst oscillation in the batch, verified by
    panel doubling; evaluation is chunked over beta so the phase matrix
    stays within a few tens of megabytes however large the batch is.
    """
    betas = np.asarray(betas, dtype=np.float64)
    if len(betas) == 0:
        return np.empty(0, dtype=np.complex128)
    nodes, weights = _gauss_rule(16)
    cycles = float(np.abs(betas).max()) * abs(hi**3 - lo**3)
    panels = max(4, int(cycles / 2) + 4)

    def evaluate(m: int) -> np.ndarray:
        edges = np.linspace(lo, hi, m + 1)
        mid = 0.5 * (edges[:-1] + edges[1:])
        half = 0.5 * (edges[1] - edges[0])
        g3 = ((mid[:, None] + half * nodes[None, :]).ravel()) ** 3
        w = np.tile(weights, m) * half
        out = np.empty(len(betas), dtype=np.complex128)
        chunk = max(1, 4_000_000 // len(g3))
        for start in range(0, len(betas), chunk):
            b = betas[start : start + chunk]
            out[start : start + chunk] = np.exp(2j * np.pi * b[:, None] * g3[None, :]) @ w
        return out

    prev = evaluate(panels)
    while True:
        panels *= 2
        if panels > max_panels:
            raise QuadratureError("batched oscillatory integral exceeded its panel budget")
        cur = evaluate(panels)
        if float(np.abs(cur - prev).max()) <= tol:
            return cur
        prev = cur


@lru_cache(maxsize=64)
def _smooth_count(R: float, eta: float) -> int:
    return len(smooth_set(R, eta))


def rho_kernel(beta: float, params: Parameters, C: float, tol: float = 1e-10) -> complex:
    """C * h(0)^2 * v(beta; P)^2, the major-arc kernel of the restricted count.

    C is the bilinear prefactor the caller supplies (no closed form exists
    for it here); see estimate_bilinear_prefactor for a labeled heuristic.
    """
    if C <= 0:
        raise PreconditionError(f"C must be positive, got {C}")
    h0 = _smooth_count(params.R, params.eta)
    v = v_integral(beta, params.P, tol).value
    return C * h0 * h0 * v * v


def sigma_kernel(beta: float, P: float, R: float, tol: float = 1e-10,
                 form: str = "direct") -> complex:
    """(w(beta;2P)^2 - w(beta;P)^2) * w(beta;R)^2, the full-range kernel.

    form="factored" evaluates the algebraically equal
    (v(beta;P)^2 + 2 v(beta;P) w(beta;P)) * w(beta;R)^2 for cross-checks.
    """
    if P <= 0 or R <= 0:
        raise PreconditionError(f"P and R must be positive, got P={P}, R={R}")
    wR = w_integral(beta, R, tol).value
    if form == "direct":
        w2P = w_integral(beta, 2 * P, tol).value
        wP = w_integral(beta, P, tol).value
        return (w2P * w2P - wP * wP) * wR * wR
    if form == "factored":
        v = v_integral(beta, P, tol).value
        wP = w_integral(beta, P, tol).value
        return (v * v + 2 * v * wP) * wR * wR
    raise PreconditionError(f"unknown form {form!r}")


def estimate_bilinear_prefactor(params: Parameters) -> float:
    """Heuristic estimate C ~ K(0) / v(0; P) = K(0) / P.

    This is an empirical convenience, not a derived constant: it equates
    the zero-phase values of the bilinear sum and its major-arc model.
    """
    k0 = spec_from_params("K", params).term_count()
    return k0 / params.P
