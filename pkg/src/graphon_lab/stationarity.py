"""Euler-Lagrange structure of the constrained entropy problem.

At an interior stationary point the graphon is a logistic function of the
degree sums,

    g(x, y) = 1 / (1 + exp(-(alpha + beta (d(x) + d(y))))),

and the degree function solves the self-consistency equation d(x) = k(d(x))
with

    k(z) = int dy / (1 + exp(-(alpha + beta (z + d(y))))).

Both sides of k(z) = z are analytic, so stationary graphons take finitely
many degree values: they are multipodal.

Multiplier convention: ``LagrangeState`` stores the coefficients (alpha,
beta) of the logistic formula above.  They are proportional to the
entropy-gradient multipliers (a_s, b_s) with dS = a_s de + b_s dt via
(alpha, beta) = -2 (a_s, b_s), because the pointwise stationarity condition
reads H'(g) = a_s + b_s (d(x) + d(y)) and H'(u) = -logit(u)/2.  Ratios such
as alpha/beta are the same in both conventions.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from graphon_lab.core import StepFunction, StepGraphon, degree_function

__all__ = [
    "LagrangeState",
    "lagrange_graphon",
    "consistency_map",
    "fixed_points",
    "stationarity_residual",
]

ROOT_SCAN_POINTS = 2001
ROOT_TOL = 1e-12
ROOT_DEDUP = 1e-9


@dataclass(frozen=True)
class LagrangeState:
    """Coefficients of the logistic stationarity formula (see module docs)."""

    alpha: float
    beta: float

    def entropy_gradient_multipliers(self) -> tuple[float, float]:
        """(a_s, b_s) with dS = a_s de + b_s dt; equals -(alpha, beta)/2."""
        return -0.5 * self.alpha, -0.5 * self.beta


def lagrange_graphon(d: StepFunction, ls: LagrangeState) -> StepGraphon:
    """Graphon implied by a degree function at a stationary point.

    expit saturates to exactly 0 or 1 once the argument passes +-700ish,
    which is the required behavior near the upper boundary where the
    multipliers diverge.
    """
    dv = d.value_array
    arg = ls.alpha + ls.beta * (dv[:, None] + dv[None, :])
    return StepGraphon(d.cuts, expit(arg))


def consistency_map(z: float, d: StepFunction, ls: LagrangeState) -> float:
    """k(z) = sum_j pi_j expit(alpha + beta (z + d_j)); maps into (0, 1)."""
    args = ls.alpha + ls.beta * (z + d.value_array)
    return float(d.measures @ expit(args))


def fixed_points(
    d: StepFunction,
    ls: LagrangeState,
    bracket_grid: int = ROOT_SCAN_POINTS,
) -> list[float]:
    """All solutions of k(z) = z in [0, 1].

    Sign-change scan on a uniform grid followed by bisection to 1e-12;
    roots closer than 1e-9 are merged.  k is continuous from [0,1] into
    (0,1), so at least one fixed point always exists.
    """
    pi = d.measures
    dv = d.value_array

    def f(z: float) -> float:
        return float(pi @ expit(ls.alpha + ls.beta * (z + dv))) - z

    zs = np.linspace(0.0, 1.0, bracket_grid)
    vals = expit(ls.alpha + ls.beta * (zs[:, None] + dv[None, :])) @ pi - zs
    roots: list[float] = []
    for i in range(len(zs) - 1):
        lo, hi = zs[i], zs[i + 1]
        flo, fhi = vals[i], vals[i + 1]
        if flo == 0.0:
            roots.append(lo)
            continue
        if flo * fhi < 0.0:
            while hi - lo > ROOT_TOL:
                mid = 0.5 * (lo + hi)
                fmid = f(mid)
                if fmid == 0.0:
                    lo = hi = mid
                    break
                if flo * fmid < 0.0:
                    hi = mid
                else:
                    lo, flo = mid, fmid
            roots.append(0.5 * (lo + hi))
    if vals[-1] == 0.0:
        roots.append(zs[-1])
    deduped: list[float] = []
    for r in roots:
        if not deduped or r - deduped[-1] > ROOT_DEDUP:
            deduped.append(r)
    assert deduped, "continuous map into (0,1) must have a fixed point"
    return deduped


def stationarity_residual(
    g: StepGraphon, ls: LagrangeState
) -> tuple[float, float]:
    """Certificate pair for a candidate stationary point.

    Returns the sup-norm of g - lagrange_graphon(degree(g)) and of
    d - k(d); both vanish exactly at interior stationary points.
    """
    d = degree_function(g)
    model = lagrange_graphon(d, ls)
    graphon_residual = float(
        np.max(np.abs(g.value_matrix - model.value_matrix))
    )
    degree_residual = max(
        abs(consistency_map(z, d, ls) - z) for z in d.values
    )
    return graphon_residual, degree_residual
