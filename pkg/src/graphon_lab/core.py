"""Step graphons and their exact functionals.

A step graphon is a symmetric measurable function [0,1]^2 -> [0,1] that is
piecewise constant on a product partition of [0,1].  We represent the
partition by its interior breakpoints ("cuts"); the partition classes are
called podes and their lengths are the pode measures.  Every functional in
this module is evaluated in closed form on the step structure -- there is
no quadrature anywhere.

Conventions:

- entropy density  H(u) = -(u ln u + (1-u) ln(1-u)) / 2,  H(0) = H(1) = 0
- graphon entropy  S(g) = sum_ij pi_i pi_j H(v_ij)
- degree function  d_i = sum_j pi_j v_ij
- edge density     e = sum_i pi_i d_i
- 2star density    t = sum_i pi_i d_i^2;  reduced density  t~ = t - e^2

The reduced density equals the variance of the degree function, so t~ >= 0
with equality exactly on constant-degree graphons.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

__all__ = [
    "GraphonError",
    "DomainError",
    "SeriesDivergenceError",
    "PatternCostError",
    "StepGraphon",
    "StepFunction",
    "StepKernel",
    "BipodalParams",
    "DensityPoint",
    "SubgraphPattern",
    "Decomposition",
    "EDGE_PATTERN",
    "TWOSTAR_PATTERN",
    "TRIANGLE_PATTERN",
    "entropy_H",
    "entropy_H_prime",
    "entropy_H_double_prime",
    "h_even_derivative_at_half",
    "entropy_S",
    "entropy_via_series",
    "degree_function",
    "edge_density",
    "twostar_density",
    "subgraph_density",
    "complement",
    "moments",
    "decompose",
    "refine_common",
]

# Breakpoints closer than this are fused; fused-away podes have zero measure
# and are invisible to every functional.
CUT_FUSE_TOL = 1e-14

# Values may drift out of [0,1] by at most this much before construction
# fails; anything smaller is clamped.
VALUE_SLACK = 1e-12

MAX_PATTERN_VERTICES = 10


class GraphonError(Exception):
    """Base error for this package."""


class DomainError(GraphonError, ValueError):
    """An argument lies outside the mathematical domain of the operation."""


class SeriesDivergenceError(GraphonError):
    """Entropy series requested for a graphon with values at or near {0,1}."""


class PatternCostError(GraphonError):
    """Subgraph pattern too large for exact pode-assignment summation."""


# ---------------------------------------------------------------------------
# entropy density and its derivatives


def entropy_H(u: float) -> float:
    """Pointwise entropy H(u) = -(u ln u + (1-u) ln(1-u))/2, H(0)=H(1)=0."""
    if u < 0.0 or u > 1.0:
        raise DomainError(f"entropy argument {u} outside [0, 1]")
    if u == 0.0 or u == 1.0:
        return 0.0
    return -0.5 * (u * math.log(u) + (1.0 - u) * math.log1p(-u))


def entropy_H_prime(u: float) -> float:
    """H'(u) = -log(u/(1-u))/2; diverges at the endpoints."""
    if u <= 0.0 or u >= 1.0:
        raise DomainError(f"H' argument {u} outside (0, 1)")
    return -0.5 * (math.log(u) - math.log1p(-u))


def entropy_H_double_prime(u: float) -> float:
    """H''(u) = -1/(2u(1-u)); equals -2 at u = 1/2."""
    if u <= 0.0 or u >= 1.0:
        raise DomainError(f"H'' argument {u} outside (0, 1)")
    return -1.0 / (2.0 * u * (1.0 - u))


def h_even_derivative_at_half(order: int) -> float:
    """Even derivative H^(2k)(1/2) = -(2k-2)! * 2^(2k-1) for k >= 1.

    Differentiating H'(u) = -(ln u - ln(1-u))/2 repeatedly gives
    H^(n)(u) = -(n-2)!/2 * ((-1)^n u^(1-n) + (1-u)^(1-n)) for n >= 2;
    at u = 1/2 with n = 2k both terms contribute 2^(2k-1) * (2k-2)!/2.
    """
    if order < 2 or order % 2 != 0:
        raise DomainError("order must be an even integer >= 2")
    k = order // 2
    return -math.factorial(2 * k - 2) * 2.0 ** (2 * k - 1)


def _entropy_H_vec(values: np.ndarray) -> np.ndarray:
    v = np.asarray(values, dtype=float)
    out = np.zeros_like(v)
    interior = (v > 0.0) & (v < 1.0)
    u = v[interior]
    out[interior] = -0.5 * (u * np.log(u) + (1.0 - u) * np.log1p(-u))
    return out


# ---------------------------------------------------------------------------
# step objects


def _prepare_partition(cuts: Iterable[float]) -> np.ndarray:
    """Validate and fuse breakpoints; returns the cleaned cut array."""
    c = np.asarray(sorted(float(x) for x in cuts), dtype=float)
    if c.size and (c[0] < 0.0 or c[-1] > 1.0):
        raise DomainError("cuts must lie in [0, 1]")
    # drop cuts indistinguishable from the interval ends or from each other
    keep = []
    prev = 0.0
    for x in c:
        if x - prev > CUT_FUSE_TOL and 1.0 - x > CUT_FUSE_TOL:
            keep.append(x)
            prev = x
    return np.asarray(keep, dtype=float)


def _measures(cuts: np.ndarray) -> np.ndarray:
    edges = np.concatenate(([0.0], cuts, [1.0]))
    return np.diff(edges)


def _clean_values(values, lo: float, hi: float) -> np.ndarray:
    v = np.asarray(values, dtype=float)
    if v.ndim != 2 or v.shape[0] != v.shape[1]:
        raise DomainError("values must be a square matrix")
    if not np.allclose(v, v.T, atol=1e-12, rtol=0.0):
        raise DomainError("values must be symmetric")
    v = 0.5 * (v + v.T)
    if v.min() < lo - VALUE_SLACK or v.max() > hi + VALUE_SLACK:
        raise DomainError(f"values outside [{lo}, {hi}]")
    return np.clip(v, lo, hi)


def _fuse_groups(raw_cuts: Sequence[float]) -> tuple[np.ndarray, np.ndarray]:
    """Cleaned cuts plus, for each surviving pode, a representative raw pode.

    The representative is the raw pode of largest measure among those fused
    into the surviving pode, so zero-measure slivers never contribute values.
    """
    raw = np.asarray(sorted(float(x) for x in raw_cuts), dtype=float)
    clean = _prepare_partition(raw)
    edges = np.concatenate(([0.0], clean, [1.0]))
    raw_edges = np.concatenate(([0.0], raw, [1.0]))
    raw_measures = np.diff(raw_edges)
    centers = 0.5 * (raw_edges[:-1] + raw_edges[1:])
    group = np.clip(np.searchsorted(edges, centers) - 1, 0, len(edges) - 2)
    rep = np.zeros(len(edges) - 1, dtype=int)
    best = np.full(len(edges) - 1, -1.0)
    for raw_i, g in enumerate(group):
        if raw_measures[raw_i] > best[g]:
            best[g] = raw_measures[raw_i]
            rep[g] = raw_i
    return clean, rep


@dataclass(frozen=True)
class StepGraphon:
    """Symmetric step function on [0,1]^2 with values in [0,1].

    ``cuts`` are the strictly increasing interior breakpoints of the pode
    partition; ``values[i][j]`` is the constant value on pode i x pode j.
    Zero-measure podes are fused away on construction.
    """

    cuts: tuple[float, ...]
    values: tuple[tuple[float, ...], ...]

    def __init__(self, cuts: Iterable[float], values) -> None:
        raw = list(cuts)
        clean, rep = _fuse_groups(raw)
        v = _clean_values(values, 0.0, 1.0)
        if v.shape[0] != len(raw) + 1:
            raise DomainError(
                f"values shape {v.shape} does not match {len(raw) + 1} podes"
            )
        if len(clean) + 1 != len(raw) + 1:
            v = v[np.ix_(rep, rep)]
        object.__setattr__(self, "cuts", tuple(clean))
        object.__setattr__(self, "values", tuple(map(tuple, v)))

    @property
    def n_podes(self) -> int:
        return len(self.cuts) + 1

    @property
    def measures(self) -> np.ndarray:
        return _measures(np.asarray(self.cuts))

    @property
    def value_matrix(self) -> np.ndarray:
        return np.asarray(self.values, dtype=float)

    @classmethod
    def constant(cls, p: float) -> "StepGraphon":
        return cls((), [[p]])

    def to_json(self) -> str:
        return json.dumps(
            {"cuts": list(self.cuts), "values": [list(r) for r in self.values]}
        )

    @classmethod
    def from_json(cls, text: str) -> "StepGraphon":
        obj = json.loads(text)
        return cls(obj["cuts"], obj["values"])


@dataclass(frozen=True)
class StepFunction:
    """Piecewise-constant function on [0,1]: degree functions, basis vectors."""

    cuts: tuple[float, ...]
    values: tuple[float, ...]

    def __init__(self, cuts: Iterable[float], values: Sequence[float]) -> None:
        raw = list(cuts)
        clean, rep = _fuse_groups(raw)
        v = np.asarray(values, dtype=float)
        if v.ndim != 1 or v.size != len(raw) + 1:
            raise DomainError("values length does not match pode count")
        if len(clean) + 1 != v.size:
            v = v[rep]
        object.__setattr__(self, "cuts", tuple(clean))
        object.__setattr__(self, "values", tuple(v))

    @property
    def measures(self) -> np.ndarray:
        return _measures(np.asarray(self.cuts))

    @property
    def value_array(self) -> np.ndarray:
        return np.asarray(self.values, dtype=float)

    def mean(self) -> float:
        return float(self.measures @ self.value_array)


@dataclass(frozen=True)
class StepKernel:
    """Signed symmetric step kernel on [0,1]^2, values in [-1,1].

    Differences of two graphons live here; this is the input type of the
    cut-norm machinery and the residual part of a degree decomposition.
    """

    cuts: tuple[float, ...]
    values: tuple[tuple[float, ...], ...]

    def __init__(self, cuts: Iterable[float], values) -> None:
        raw = list(cuts)
        clean, rep = _fuse_groups(raw)
        v = _clean_values(values, -1.0, 1.0)
        if v.shape[0] != len(raw) + 1:
            raise DomainError("values shape does not match pode count")
        if len(clean) + 1 != len(raw) + 1:
            v = v[np.ix_(rep, rep)]
        object.__setattr__(self, "cuts", tuple(clean))
        object.__setattr__(self, "values", tuple(map(tuple, v)))

    @property
    def measures(self) -> np.ndarray:
        return _measures(np.asarray(self.cuts))

    @property
    def value_matrix(self) -> np.ndarray:
        return np.asarray(self.values, dtype=float)

    def l2_norm(self) -> float:
        pi = self.measures
        return float(np.sqrt(np.einsum("i,j,ij->", pi, pi, self.value_matrix**2)))


@dataclass(frozen=True)
class BipodalParams:
    """Two-pode graphon: diagonal values a, b, off-diagonal d, first pode size c.

    The canonical representative of the pode-swap symmetry
    (a, b, c, d) ~ (b, a, 1-c, d) has c <= 1/2.
    """

    a: float
    b: float
    c: float
    d: float

    def __post_init__(self) -> None:
        for name in ("a", "b", "c", "d"):
            x = getattr(self, name)
            if not 0.0 <= x <= 1.0:
                raise DomainError(f"bipodal parameter {name}={x} outside [0, 1]")

    def canonical(self, tie_tol: float = 1e-9) -> "BipodalParams":
        """Pode-swapped form with c <= 1/2; ties at c = 1/2 take a >= b."""
        a, b, c, d = self.a, self.b, self.c, self.d
        if c > 0.5 + tie_tol:
            return BipodalParams(b, a, 1.0 - c, d)
        if abs(c - 0.5) <= tie_tol and a < b:
            return BipodalParams(b, a, 1.0 - c, d)
        return self

    def swapped(self) -> "BipodalParams":
        return BipodalParams(self.b, self.a, 1.0 - self.c, self.d)

    def to_graphon(self) -> StepGraphon:
        if self.c <= CUT_FUSE_TOL:
            return StepGraphon.constant(self.b)
        if self.c >= 1.0 - CUT_FUSE_TOL:
            return StepGraphon.constant(self.a)
        return StepGraphon(
            (self.c,), [[self.a, self.d], [self.d, self.b]]
        )

    def to_json(self) -> str:
        return json.dumps({"a": self.a, "b": self.b, "c": self.c, "d": self.d})

    @classmethod
    def from_json(cls, text: str) -> "BipodalParams":
        obj = json.loads(text)
        return cls(obj["a"], obj["b"], obj["c"], obj["d"])


@dataclass(frozen=True)
class DensityPoint:
    """Constraint coordinates: edge density e, 2star density t, reduced t~."""

    e: float
    t: float
    t_tilde: float

    def __post_init__(self) -> None:
        if not 0.0 <= self.e <= 1.0:
            raise DomainError(f"edge density {self.e} outside [0, 1]")
        if abs(self.t_tilde - (self.t - self.e**2)) > 1e-12:
            raise DomainError("t_tilde inconsistent with t - e^2")

    @classmethod
    def from_e_t(cls, e: float, t: float) -> "DensityPoint":
        return cls(e, t, t - e * e)

    @classmethod
    def from_e_ttilde(cls, e: float, t_tilde: float) -> "DensityPoint":
        return cls(e, t_tilde + e * e, t_tilde)


@dataclass(frozen=True)
class SubgraphPattern:
    """Simple pattern graph: vertex count plus an edge list (0-indexed)."""

    n_vertices: int
    edges: tuple[tuple[int, int], ...]

    def __init__(self, n_vertices: int, edges: Iterable[tuple[int, int]]) -> None:
        norm = []
        seen = set()
        for s, f in edges:
            if s == f:
                raise DomainError("pattern has a self-loop")
            if not (0 <= s < n_vertices and 0 <= f < n_vertices):
                raise DomainError("pattern edge endpoint out of range")
            key = (min(s, f), max(s, f))
            if key in seen:
                raise DomainError("pattern has a duplicate edge")
            seen.add(key)
            norm.append(key)
        object.__setattr__(self, "n_vertices", int(n_vertices))
        object.__setattr__(self, "edges", tuple(norm))


EDGE_PATTERN = SubgraphPattern(2, [(0, 1)])
TWOSTAR_PATTERN = SubgraphPattern(3, [(0, 1), (0, 2)])
TRIANGLE_PATTERN = SubgraphPattern(3, [(0, 1), (1, 2), (0, 2)])


@dataclass(frozen=True)
class Decomposition:
    """g(x,y) = d(x) + d(y) - e + residual(x,y) with zero-marginal residual."""

    degree: StepFunction
    residual: StepKernel
    e: float

    @property
    def residual_l2(self) -> float:
        return self.residual.l2_norm()


# ---------------------------------------------------------------------------
# functionals


def entropy_S(g: StepGraphon) -> float:
    """Graphon entropy sum_ij pi_i pi_j H(v_ij)."""
    pi = g.measures
    return float(np.einsum("i,j,ij->", pi, pi, _entropy_H_vec(g.value_matrix)))


def degree_function(g: StepGraphon) -> StepFunction:
    """d_i = sum_j pi_j v_ij; the mean of d is the edge density."""
    d = g.value_matrix @ g.measures
    return StepFunction(g.cuts, d)


def edge_density(g: StepGraphon) -> float:
    pi = g.measures
    return float(pi @ (g.value_matrix @ pi))


def twostar_density(g: StepGraphon) -> DensityPoint:
    """Edge and 2star densities of g as a DensityPoint."""
    pi = g.measures
    d = g.value_matrix @ pi
    e = float(pi @ d)
    t = float(pi @ (d * d))
    return DensityPoint.from_e_t(e, t)


def subgraph_density(g: StepGraphon, pattern: SubgraphPattern) -> float:
    """Exact homomorphism density of a pattern in a step graphon.

    Sums over all assignments of pattern vertices to podes; the cost is
    n_podes ** n_vertices, so patterns beyond MAX_PATTERN_VERTICES vertices
    are refused.
    """
    if pattern.n_vertices > MAX_PATTERN_VERTICES:
        raise PatternCostError(
            f"pattern with {pattern.n_vertices} vertices exceeds the "
            f"{MAX_PATTERN_VERTICES}-vertex cost guard"
        )
    pi = g.measures
    v = g.value_matrix
    # tensor contraction with one index per pattern vertex
    operands = []
    subscripts = []
    for vertex in range(pattern.n_vertices):
        operands.append(pi)
        subscripts.append([vertex])
    for s, f in pattern.edges:
        operands.append(v)
        subscripts.append([s, f])
    args = []
    for op, sub in zip(operands, subscripts):
        args.extend((op, sub))
    return float(np.einsum(*args, [], optimize=True))


def complement(g: StepGraphon) -> StepGraphon:
    """The graphon 1 - g; swaps e -> 1-e, preserves t~ and the entropy."""
    return StepGraphon(g.cuts, 1.0 - g.value_matrix)


def moments(g: StepGraphon, kmax: int) -> tuple[np.ndarray, np.ndarray]:
    """Centered degree and value moments about 1/2.

    Returns (nu, mu): nu[k-1] = int (d(x)-1/2)^k for k = 1..kmax and
    mu[k-1] = int (g(x,y)-1/2)^k for k = 1..2*kmax.  Identities
    nu_1 = e - 1/2 and nu_2 = t~ + (e-1/2)^2 hold exactly.
    """
    if kmax < 1:
        raise DomainError("kmax must be >= 1")
    pi = g.measures
    d = g.value_matrix @ pi
    dc = d - 0.5
    vc = g.value_matrix - 0.5
    nu = np.array([float(pi @ dc**k) for k in range(1, kmax + 1)])
    mu = np.array(
        [float(np.einsum("i,j,ij->", pi, pi, vc**k)) for k in range(1, 2 * kmax + 1)]
    )
    return nu, mu


def entropy_via_series(g: StepGraphon, kmax: int) -> float:
    """Entropy from the power series about the constant-1/2 graphon.

    S(g) = H(1/2) + sum_{k>=1} mu_2k / (2k)! * H^(2k)(1/2)
         = H(1/2) - sum_{k>=1} mu_2k * 2^(2k-1) / (2k (2k-1)).

    The series converges for |g - 1/2| < 1/2; values at or within 1e-9 of
    {0, 1} are refused.  Truncation error is bounded by the tail of
    (2r)^(2k)/(2k(2k-1)) with r = max|g - 1/2|.
    """
    if kmax < 0:
        raise DomainError("kmax must be >= 0")
    v = g.value_matrix
    radius = float(np.max(np.abs(v - 0.5)))
    if radius >= 0.5 - 1e-9:
        raise SeriesDivergenceError(
            "entropy series diverges for values at or near {0, 1}"
        )
    total = entropy_H(0.5)
    if kmax == 0:
        return total
    pi = g.measures
    vc = v - 0.5
    pair = np.einsum("i,j->ij", pi, pi)
    power = vc * vc
    square = vc * vc
    for k in range(1, kmax + 1):
        mu2k = float(np.sum(pair * power))
        total -= mu2k * 2.0 ** (2 * k - 1) / (2 * k * (2 * k - 1))
        power = power * square
    return total


def decompose(g: StepGraphon) -> Decomposition:
    """Split g into its degree part d(x)+d(y)-e and a zero-marginal residual."""
    pi = g.measures
    v = g.value_matrix
    d = v @ pi
    e = float(pi @ d)
    residual = v - d[:, None] - d[None, :] + e
    return Decomposition(
        degree=StepFunction(g.cuts, d),
        residual=StepKernel(g.cuts, residual),
        e=e,
    )


# ---------------------------------------------------------------------------
# partition refinement


def _merge_cuts(c1: Sequence[float], c2: Sequence[float]) -> np.ndarray:
    return _prepare_partition(list(c1) + list(c2))


def _cell_owners(own_cuts: Sequence[float], merged: np.ndarray) -> np.ndarray:
    """For each merged pode, the index of the original pode containing it."""
    edges = np.concatenate(([0.0], np.asarray(own_cuts, dtype=float), [1.0]))
    merged_edges = np.concatenate(([0.0], merged, [1.0]))
    centers = 0.5 * (merged_edges[:-1] + merged_edges[1:])
    idx = np.searchsorted(edges, centers) - 1
    return np.clip(idx, 0, len(edges) - 2)


def _refine_matrix(cuts: Sequence[float], values: np.ndarray, merged: np.ndarray):
    owner = _cell_owners(cuts, merged)
    return values[np.ix_(owner, owner)]


def refine_common(g1: StepGraphon, g2: StepGraphon) -> tuple[StepGraphon, StepGraphon]:
    """Re-express both graphons on the merged partition.

    Pointwise values are preserved, so every functional is invariant under
    this operation.
    """
    merged = _merge_cuts(g1.cuts, g2.cuts)
    r1 = StepGraphon(merged, _refine_matrix(g1.cuts, g1.value_matrix, merged))
    r2 = StepGraphon(merged, _refine_matrix(g2.cuts, g2.value_matrix, merged))
    return r1, r2


def refine_kernel_pair(a: StepGraphon, b: StepGraphon) -> StepKernel:
    """The difference a - b as a signed kernel on the merged partition."""
    merged = _merge_cuts(a.cuts, b.cuts)
    va = _refine_matrix(a.cuts, a.value_matrix, merged)
    vb = _refine_matrix(b.cuts, b.value_matrix, merged)
    return StepKernel(merged, va - vb)
