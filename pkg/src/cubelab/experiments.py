"""Experiment drivers: residual sweeps and predicted-vs-actual tables."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from cubelab.arcs import m_dissection, major_arc_approximant
from cubelab.expsums import (
    MAIN_TERM_CONSTANT,
    singular_series_truncated,
)
from cubelab.genfun import interval_spec, weyl_sum
from cubelab.params import PreconditionError, derive_parameters
from cubelab.repcount import count_r

__all__ = ["ResidualSample", "ResidualSweep", "residual_sweep", "predict_table"]


@dataclass(frozen=True)
class ResidualSample:
    q: int
    a: int
    beta: float
    residual: float
    envelope: float

    @property
    def ratio(self) -> float:
        return self.residual / self.envelope


@dataclass(frozen=True)
class ResidualSweep:
    P: float
    q_max: int
    samples: tuple[ResidualSample, ...]
    max_ratio: float


def residual_sweep(P: float, q_max: int, samples: int = 9,
                   tol: float = 1e-10) -> ResidualSweep:
    """Measure |f - f*| against q^(1/2) (1 + P^3 |beta|)^(1/2) on narrow arcs.

    For every arc (a, q) with q <= q_max, the offsets beta run over a fixed
    symmetric grid inside the arc (deterministic, so doubled-P comparisons
    are reproducible).  The envelope column is the theoretical residual
    shape; the summary is the observed sup of residual/envelope.
    """
    if q_max > 50:
        raise PreconditionError(f"q_max must be <= 50, got {q_max}")
    if q_max < 1 or samples < 1:
        raise PreconditionError("q_max and samples must be positive")
    N = int(round(4 * P**3))
    params = derive_parameters(N, 1 / 3, L_override=min(float(q_max), float(N)))
    dissection = m_dissection(params, X=P ** (6 / 5))
    f_spec = interval_spec(params.P, 2 * params.P)

    fractions = np.linspace(-0.95, 0.95, samples)
    out = []
    worst = 0.0
    for arc in dissection.arcs:
        if arc.label.q > q_max or arc.length == 0.0:
            continue
        for frac in fractions:
            alpha = arc.center + float(frac) * arc.half_width
            if not 0.0 <= alpha < 1.0:
                continue
            beta = alpha - arc.center
            model = major_arc_approximant(alpha, dissection, "f-star", tol=tol)
            residual = abs(weyl_sum(alpha, f_spec) - model)
            envelope = math.sqrt(arc.label.q) * math.sqrt(1 + params.P**3 * abs(beta))
            out.append(ResidualSample(q=arc.label.q, a=arc.label.a, beta=beta,
                                      residual=residual, envelope=envelope))
            worst = max(worst, residual / envelope)
    return ResidualSweep(P=params.P, q_max=q_max, samples=tuple(out), max_ratio=worst)


def predict_table(ns: list[int], theta: float, Q_max: int) -> list[dict]:
    """Per-n rows: exact count, truncated series, main term, ratio."""
    rows = []
    for n in ns:
        rep = count_r(n, theta)
        series = singular_series_truncated(n, Q_max).value
        predicted = MAIN_TERM_CONSTANT * series * n ** (2 * theta - 1 / 3)
        ratio = rep.count / predicted if predicted > 0 else float("nan")
        rows.append({
            "n": n, "theta": theta, "count": rep.count, "series": series,
            "main_term": predicted, "ratio": ratio,
            "exceptional": int(rep.count == 0),
        })
    return rows
