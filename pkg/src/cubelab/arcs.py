"""Major-arc dissections, membership, and quadrature over arc families.

Three arc styles share one container: the wide arcs of half-width L/N
around every a/q with q <= L, the narrow arcs |q*alpha - a| <= X/P^3 with
q <= X, and the latter specialized to X = P^(3/4).  Arcs are closed
intervals clipped to [0, 1); the arc around 1 is the wraparound twin of
the arc around 0, so clipping keeps the total measure exact.

Full-circle moments are never obtained by quadrature on the minor-arc
complement (hopelessly oscillatory); they come from equispaced grid
averages, which are exact for trigonometric polynomials, and minor-arc
quantities follow by subtraction.
"""

from __future__ import annotations

import cmath
import math
from bisect import bisect_right
from dataclasses import dataclass, field

import numpy as np

from cubelab.expsums import cubic_gauss_sum
from cubelab.genfun import (
    QuadratureError,
    WeylSumSpec,
    _batch_rule,
    _gauss_rule,
    _smooth_count,
    fractional_linear_phase,
    spec_from_params,
    v_integral,
    w_integral,
    weyl_sum,
)
from cubelab.params import Parameters, PreconditionError, Rational, ResourceGuardError

__all__ = [
    "Arc",
    "ArcDissection",
    "ArcIntegrand",
    "p_dissection",
    "m_dissection",
    "n_dissection",
    "arc_membership",
    "dissection_measure",
    "evaluate_integrand",
    "integrate_over_arcs",
    "truncated_singular_integral",
    "major_arc_approximant",
    "mean_value_grid",
    "make_rho_integrand",
    "make_sigma_integrand_pair",
    "moment_integrand",
]

_ARC_COUNT_GUARD = 500_000
_GRID_GUARD = 1 << 24


@dataclass(frozen=True)
class Arc:
    label: Rational
    center: float
    half_width: float
    lo: float
    hi: float

    @property
    def length(self) -> float:
        return self.hi - self.lo


@dataclass(frozen=True)
class ArcDissection:
    """A labeled family of arcs in [0, 1), sorted by left endpoint."""

    style: str
    cutoff: float
    arcs: tuple[Arc, ...] = field(repr=False)
    params: Parameters
    overlapping: bool

    def __len__(self) -> int:
        return len(self.arcs)


def _build(style: str, cutoff: float, params: Parameters, width_of) -> ArcDissection:
    if cutoff < 1:
        raise PreconditionError(f"arc cutoff must be >= 1, got {cutoff}")
    q_top = math.floor(cutoff)
    arcs: list[Arc] = []
    count = 0
    for q in range(1, q_top + 1):
        for a in range(0, q + 1):
            if math.gcd(a, q) != 1:
                continue
            count += 1
            if count > _ARC_COUNT_GUARD:
                raise ResourceGuardError(
                    f"dissection would exceed {_ARC_COUNT_GUARD} arcs; lower the cutoff"
                )
            center = a / q
            w = width_of(q)
            arcs.append(Arc(Rational(a, q), center, w,
                            max(center - w, 0.0), min(center + w, 1.0)))
    arcs.sort(key=lambda arc: (arc.lo, arc.hi))
    overlapping = any(prev.hi > cur.lo and prev.center != cur.center
                      for prev, cur in zip(arcs, arcs[1:]))
    return ArcDissection(style=style, cutoff=float(cutoff), arcs=tuple(arcs),
                         params=params, overlapping=overlapping)


def p_dissection(params: Parameters, L: float | None = None) -> ArcDissection:
    """Arcs of half-width L/N around a/q for q <= L."""
    L = params.L if L is None else L
    return _build("P", L, params, lambda q: L / params.N)


def m_dissection(params: Parameters, X: float) -> ArcDissection:
    """Arcs |q*alpha - a| <= X/P^3 around a/q for q <= X."""
    return _build("M", X, params, lambda q: X / (q * params.P**3))


def n_dissection(params: Parameters) -> ArcDissection:
    """The narrow pruning family: the X = P^(3/4) specialization."""
    X = params.P ** 0.75
    d = m_dissection(params, X)
    return ArcDissection(style="N", cutoff=d.cutoff, arcs=d.arcs,
                         params=params, overlapping=d.overlapping)


def arc_membership(alpha: float, dissection: ArcDissection) -> Rational | None:
    """Label of the arc containing alpha, or None on the minor-arc complement.

    Interval search against the materialized arcs.  (Locating the nearest
    rational by continued fractions is only sound for the narrow style: it
    minimizes |q*alpha - a|, while wide arcs admit points whose best
    approximant lies in a different, non-containing arc.)
    """
    if not 0.0 <= alpha < 1.0:
        raise PreconditionError(f"alpha must lie in [0, 1), got {alpha}")
    arcs = dissection.arcs
    if not arcs:
        return None
    if dissection.overlapping:
        # Degenerate family: right endpoints are not ordered, so scan.
        hits = [arc for arc in arcs if arc.lo <= alpha <= arc.hi]
    else:
        los = [arc.lo for arc in arcs]
        idx = bisect_right(los, alpha) - 1
        hits = [arcs[j] for j in (idx, idx + 1)
                if 0 <= j < len(arcs) and arcs[j].lo <= alpha <= arcs[j].hi]
    if not hits:
        return None
    best = min(hits, key=lambda arc: (arc.label.q, arc.label.a))
    return best.label


def dissection_measure(dissection: ArcDissection) -> float:
    """Total length of the union, exact for disjoint families."""
    if dissection.overlapping:
        raise PreconditionError("dissection has overlapping arcs; measure is ill-defined")
    return math.fsum(arc.length for arc in dissection.arcs)


@dataclass(frozen=True)
class ArcIntegrand:
    """Product of powers of Weyl sums, optionally conjugated, times e(-n*alpha)."""

    factors: tuple[tuple[WeylSumSpec, int, bool], ...]
    twist: int = 0

    def __post_init__(self) -> None:
        if sum(e for _, e, _ in self.factors) < 1:
            raise PreconditionError("integrand must have total degree >= 1")
        if any(e < 1 for _, e, _ in self.factors):
            raise PreconditionError("factor exponents must be positive")

    def degree_bound(self) -> int:
        """Largest trigonometric frequency the integrand can carry."""
        span = sum(e * s.max_term() ** 3 for s, e, _ in self.factors)
        return span + abs(self.twist)


def evaluate_integrand(alpha: float, integrand: ArcIntegrand) -> complex:
    out = 1 + 0j
    for spec, exponent, conjugated in integrand.factors:
        val = weyl_sum(alpha, spec)
        if conjugated:
            val = val.conjugate()
        out *= val**exponent
    if integrand.twist:
        out *= cmath.exp(-2j * cmath.pi * fractional_linear_phase(alpha, integrand.twist))
    return out


def _adaptive_complex(fn, lo: float, hi: float, tol: float, cycles: float,
                      label: str, max_nodes: int = 400_000) -> complex:
    """Panel-doubling 16-pt Gauss-Legendre for a scalar complex integrand."""
    nodes, weights = _gauss_rule(16)
    panels = max(2, 2 * (int(cycles / 2) + 1))  # even, so the center is an edge

    def evaluate(m: int) -> complex:
        edges = np.linspace(lo, hi, m + 1)
        half = 0.5 * (edges[1] - edges[0])
        total = 0j
        for k in range(m):
            mid = 0.5 * (edges[k] + edges[k + 1])
            for x, w in zip(nodes, weights):
                total += w * fn(mid + half * x)
        return total * half

    prev = evaluate(panels)
    while True:
        panels *= 2
        if panels * 16 > max_nodes:
            raise QuadratureError(f"quadrature on {label} failed to reach tol={tol}")
        cur = evaluate(panels)
        if abs(cur - prev) <= tol:
            return cur
        prev = cur


def integrate_over_arcs(integrand: ArcIntegrand, dissection: ArcDissection,
                        tol: float = 1e-9) -> complex:
    """Sum of per-arc adaptive quadratures, per-arc tolerance tol/#arcs."""
    if tol <= 0:
        raise PreconditionError(f"tol must be positive, got {tol}")
    if not dissection.arcs:
        return 0j
    per_arc = tol / len(dissection.arcs)
    freq = integrand.degree_bound()
    reals, imags = [], []
    for arc in dissection.arcs:
        if arc.length == 0.0:
            continue
        cycles = arc.length * freq
        val = _adaptive_complex(
            lambda a: evaluate_integrand(a, integrand),
            arc.lo, arc.hi, per_arc, cycles,
            label=f"arc ({arc.label.a}/{arc.label.q})",
        )
        reals.append(val.real)
        imags.append(val.imag)
    return complex(math.fsum(reals), math.fsum(imags))


def truncated_singular_integral(n: int, params: Parameters, kind: str, C: float = 1.0,
                                tol: float = 1e-8, L: float | None = None) -> float:
    """integral over [-L/N, L/N] of kernel(beta) e(-n beta) d beta, real part.

    kind "u" integrates C h(0)^2 v(beta;P)^2 (the restricted-count kernel);
    kind "W" integrates (w(beta;2P)^2 - w(beta;P)^2) w(beta;R)^2.  tol is
    relative; the imaginary residue must stay below 1e-6 relative (the
    integrand is conjugate-symmetric in beta) or an ArithmeticError flags it.

    n is any positive integer: the window base only sets the integration
    range, and probing frequencies outside (N, 2N] is deliberately allowed
    (the kernel's shape is read off at n ~ P^3).
    """
    if n < 1:
        raise PreconditionError(f"n must be positive, got {n}")
    if kind not in ("u", "W"):
        raise PreconditionError(f"kind must be 'u' or 'W', got {kind!r}")
    L = params.L if L is None else L
    half = L / params.N
    P, R = params.P, params.R
    h0 = _smooth_count(R, params.eta)
    inner_tol = 1e-12 * max(P, 1.0)

    def kernel_batch(betas: np.ndarray) -> np.ndarray:
        if kind == "u":
            v = _batch_rule(betas, P, 2 * P, inner_tol)
            return C * h0 * h0 * v * v
        w2 = _batch_rule(betas, 0.0, 2 * P, inner_tol)
        w1 = _batch_rule(betas, 0.0, P, inner_tol)
        wr = _batch_rule(betas, 0.0, R, inner_tol)
        return (w2 * w2 - w1 * w1) * wr * wr

    nodes, weights = _gauss_rule(16)
    cycles = 2 * half * n + 2 * half * (2 * P) ** 3
    panels = max(4, min(int(cycles / 2) + 4, 4096))

    def evaluate(m: int) -> complex:
        edges = np.linspace(-half, half, m + 1)
        mid = 0.5 * (edges[:-1] + edges[1:])
        hw = 0.5 * (edges[1] - edges[0])
        betas = (mid[:, None] + hw * nodes[None, :]).ravel()
        vals = kernel_batch(betas) * np.exp(-2j * np.pi * n * betas)
        return complex(vals @ np.tile(weights, m)) * hw

    prev = evaluate(panels)
    for _ in range(10):
        panels *= 2
        if panels * 16 > 600_000:
            raise QuadratureError(f"singular integral (kind={kind}) did not converge")
        cur = evaluate(panels)
        if abs(cur - prev) <= tol * max(abs(cur), 1e-300):
            if abs(cur.imag) > 1e-6 * max(abs(cur), 1e-300):
                raise ArithmeticError(
                    f"singular integral has imaginary residue {cur.imag:.3e}"
                )
            return cur.real
        prev = cur
    raise QuadratureError(f"singular integral (kind={kind}) did not converge")


def major_arc_approximant(alpha: float, dissection: ArcDissection, kind: str,
                          tol: float = 1e-10) -> complex:
    """The model value q^-1 S(q,a) v(alpha - a/q; P) on the containing arc.

    kind "f-star" uses the shifted-range integral v(.; P); kind "F-star"
    uses w(.; 2P).  Off the dissection the model is 0.
    """
    if kind not in ("f-star", "F-star"):
        raise PreconditionError(f"kind must be 'f-star' or 'F-star', got {kind!r}")
    label = arc_membership(alpha, dissection)
    if label is None:
        return 0j
    beta = alpha - label.a / label.q
    front = cubic_gauss_sum(label.q, label.a) / label.q
    if kind == "f-star":
        return front * v_integral(beta, dissection.params.P, tol).value
    return front * w_integral(beta, 2 * dissection.params.P, tol).value


def mean_value_grid(integrand: ArcIntegrand, grid_points: int) -> complex:
    """Equispaced average over the full circle, exact by orthogonality.

    Each Weyl-sum factor is evaluated at every j/M simultaneously through
    the cube-residue distribution mod M (one FFT per factor), so the cost
    is O(M log M) regardless of the index-set sizes.
    """
    M = int(grid_points)
    if M > _GRID_GUARD:
        raise ResourceGuardError(f"grid of {M} points exceeds the {_GRID_GUARD} cap")
    degree = integrand.degree_bound()
    if M <= degree:
        raise PreconditionError(
            f"grid of {M} points undersamples a degree-{degree} integrand"
        )
    total = np.ones(M, dtype=np.complex128)
    for spec, exponent, conjugated in integrand.factors:
        values = spec.term_values() % M
        cubes = (values * values % M) * values % M
        counts = np.bincount(cubes, minlength=M).astype(np.float64)
        factor = np.conj(np.fft.fft(counts))  # sum_x e(+ j x^3 / M) at each j
        if conjugated:
            factor = np.conj(factor)
        total *= factor**exponent
    if integrand.twist:
        j = np.arange(M, dtype=np.int64)
        twist_phase = (integrand.twist % M) * j % M
        total *= np.exp(-2j * np.pi * twist_phase / M)
    return complex(total.mean())


def make_rho_integrand(n: int, params: Parameters,
                       k_spec: WeylSumSpec | None = None) -> ArcIntegrand:
    """f * K * h^2 * e(-n alpha): the restricted-count integrand."""
    f = spec_from_params("f", params)
    k = k_spec if k_spec is not None else spec_from_params("K", params)
    h = spec_from_params("h", params)
    return ArcIntegrand(factors=((f, 1, False), (k, 1, False), (h, 2, False)), twist=n)


def make_sigma_integrand_pair(n: int, params: Parameters) -> tuple[ArcIntegrand, ArcIntegrand]:
    """(F^2 G^2 e(-n.), F0^2 G^2 e(-n.)); their integrals subtract to sigma."""
    F = spec_from_params("F", params)
    F0 = spec_from_params("F0", params)
    G = spec_from_params("G", params)
    full = ArcIntegrand(factors=((F, 2, False), (G, 2, False)), twist=n)
    inner = ArcIntegrand(factors=((F0, 2, False), (G, 2, False)), twist=n)
    return full, inner


def moment_integrand(spec: WeylSumSpec, power: int) -> ArcIntegrand:
    """|W(alpha)|^(2*power) as a conjugate-paired product (a trig polynomial)."""
    if power < 1:
        raise PreconditionError(f"power must be >= 1, got {power}")
    return ArcIntegrand(factors=((spec, power, False), (spec, power, True)), twist=0)
