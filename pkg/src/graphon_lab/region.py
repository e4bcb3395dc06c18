"""Feasible region of the (e, t~) plane and named graphon constructors.

The reduced 2star density t~ = t - e^2 ranges over [0, t~_max(e)].  The
upper boundary is achieved by a clique (e >= 1/2) or an anti-clique
(e <= 1/2); the lower boundary t~ = 0 is the constant (Erdos-Renyi) curve.
Two explicit bipodal families live here as well: the small-t~ ansatz with
degree values 1/2 +- zeta, and the edge-density-1/2 symmetric family fixed
by the g <-> 1-g symmetry.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

from graphon_lab.core import (
    BipodalParams,
    DomainError,
    GraphonError,
    StepGraphon,
    complement,
)

__all__ = [
    "RegionVerdict",
    "RegionQuery",
    "SingularPointError",
    "InfeasibleAnsatzError",
    "NonexistentFamilyError",
    "t_max",
    "t_tilde_max",
    "query_region",
    "clique_graphon",
    "anticlique_graphon",
    "er_graphon",
    "ansatz_graphon",
    "symmetric_graphon",
]

BOUNDARY_MARGIN = 1e-12

# largest t~ for which the symmetric bipodal family exists (a = 1, b = 0)
SYMMETRIC_T_TILDE_MAX = 0.0625


class SingularPointError(GraphonError):
    """Ansatz requested at the singular point e = 1/2, t~ = 0 (zeta = 0)."""


class InfeasibleAnsatzError(GraphonError):
    """Ansatz parameters leave [0,1]; the family only covers small zeta."""


class NonexistentFamilyError(GraphonError):
    """Symmetric bipodal graphons do not exist for t~ > 1/16."""


class RegionVerdict(enum.Enum):
    INTERIOR = "Interior"
    BOUNDARY = "Boundary"
    INFEASIBLE = "Infeasible"


@dataclass(frozen=True)
class RegionQuery:
    """Feasibility verdict for a requested (e, t~) pair."""

    e: float
    t_tilde: float
    verdict: RegionVerdict
    margin: float


def t_max(e: float) -> float:
    """Maximum raw 2star density at edge density e.

    e^(3/2) for e >= 1/2 (clique), (1-e)^(3/2) + 2e - 1 for e <= 1/2
    (anti-clique); the two branches agree at e = 1/2 where the maximum is
    sqrt(2)/4.
    """
    if not 0.0 <= e <= 1.0:
        raise DomainError(f"edge density {e} outside [0, 1]")
    if e >= 0.5:
        return e ** 1.5
    return (1.0 - e) ** 1.5 + 2.0 * e - 1.0


def t_tilde_max(e: float) -> float:
    """Maximum reduced 2star density t_max(e) - e^2."""
    return t_max(e) - e * e


def query_region(e: float, t_tilde: float) -> RegionQuery:
    """Classify (e, t~) as Interior, Boundary, or Infeasible.

    Boundary means within 1e-12 of either t~ = 0 or t~ = t~_max(e); such
    points are handled by the extremal constructors, not the interior
    solver.
    """
    if not 0.0 <= e <= 1.0:
        return RegionQuery(e, t_tilde, RegionVerdict.INFEASIBLE, math.nan)
    upper = t_tilde_max(e)
    margin = min(t_tilde, upper - t_tilde)
    if t_tilde < -BOUNDARY_MARGIN or t_tilde > upper + BOUNDARY_MARGIN:
        return RegionQuery(e, t_tilde, RegionVerdict.INFEASIBLE, margin)
    if t_tilde <= BOUNDARY_MARGIN or upper - t_tilde <= BOUNDARY_MARGIN:
        return RegionQuery(e, t_tilde, RegionVerdict.BOUNDARY, margin)
    return RegionQuery(e, t_tilde, RegionVerdict.INTERIOR, margin)


def clique_graphon(e: float) -> StepGraphon:
    """Graphon equal to 1 on [0, sqrt(e)]^2 and 0 elsewhere; achieves t_max."""
    if not 0.0 < e <= 1.0:
        raise DomainError(f"clique edge density {e} outside (0, 1]")
    c = math.sqrt(e)
    if c >= 1.0:
        return StepGraphon.constant(1.0)
    return StepGraphon((c,), [[1.0, 0.0], [0.0, 0.0]])


def anticlique_graphon(e: float) -> StepGraphon:
    """Complement of the clique at 1-e: 0 on a sqrt(1-e)-square, 1 elsewhere."""
    if not 0.0 <= e < 1.0:
        raise DomainError(f"anti-clique edge density {e} outside [0, 1)")
    return complement(clique_graphon(1.0 - e))


def er_graphon(p: float) -> StepGraphon:
    """Constant graphon p; the unique entropy maximizer on the t~ = 0 curve."""
    if not 0.0 <= p <= 1.0:
        raise DomainError(f"density {p} outside [0, 1]")
    return StepGraphon.constant(p)


def ansatz_graphon(e: float, t_tilde: float) -> BipodalParams:
    """Closed-form bipodal graphon with degree values exactly 1/2 +- zeta.

    With zeta = sqrt(t~ + (e - 1/2)^2):

        a = 1 - e - 2 zeta,   b = 1 - e + 2 zeta,
        d = 1 - e,            c = (1 - (e - 1/2)/zeta) / 2.

    Reproduces the requested (e, t~) exactly.  Raises SingularPointError at
    zeta = 0 and InfeasibleAnsatzError when a or b leaves [0,1]; a pode
    size outside (0,1) by more than 1e-12 is likewise infeasible, while a
    smaller violation collapses to the constant graphon.
    """
    zeta_sq = t_tilde + (e - 0.5) ** 2
    zeta = math.sqrt(max(zeta_sq, 0.0))
    if zeta == 0.0:
        raise SingularPointError("ansatz undefined at the singular point (1/2, 0)")
    a = 1.0 - e - 2.0 * zeta
    b = 1.0 - e + 2.0 * zeta
    d = 1.0 - e
    c = 0.5 * (1.0 - (e - 0.5) / zeta)
    if a < -BOUNDARY_MARGIN or b > 1.0 + BOUNDARY_MARGIN:
        raise InfeasibleAnsatzError(
            f"ansatz values (a={a:.6g}, b={b:.6g}) leave [0,1]; "
            "the family only covers small zeta"
        )
    a = min(max(a, 0.0), 1.0)
    b = min(max(b, 0.0), 1.0)
    if c < -BOUNDARY_MARGIN or c > 1.0 + BOUNDARY_MARGIN:
        raise InfeasibleAnsatzError(f"ansatz pode size c={c:.6g} outside [0,1]")
    c = min(max(c, 0.0), 1.0)
    params = BipodalParams(a, b, c, d)
    # normalize the pode order only; ties at c = 1/2 keep the written form
    if c > 0.5:
        params = params.swapped()
    return params


def symmetric_graphon(t_tilde: float) -> BipodalParams:
    """The e = 1/2 family fixed by g <-> 1-g: a = 1/2 + 2 mu, b = 1 - a, c = d = 1/2.

    mu = sqrt(t~); exists only for t~ <= 1/16 (a hits 1 at the endpoint).
    """
    if t_tilde < 0.0:
        raise DomainError(f"t_tilde {t_tilde} negative")
    if t_tilde > SYMMETRIC_T_TILDE_MAX:
        raise NonexistentFamilyError(
            f"symmetric bipodal graphons require t_tilde <= {SYMMETRIC_T_TILDE_MAX}"
        )
    mu = math.sqrt(t_tilde)
    return BipodalParams(0.5 + 2.0 * mu, 0.5 - 2.0 * mu, 0.5, 0.5)
