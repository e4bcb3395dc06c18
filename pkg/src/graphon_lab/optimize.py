"""Constrained entropy maximization over bipodal graphons.

The stationarity system for a bipodal graphon (a, b, c, d) at fixed edge
and 2star densities (e0, t0) is

    grad S = a_s grad e + b_s grad t,    e = e0,    t = t0,

six equations in the six unknowns (a, b, c, d, a_s, b_s).  The solver runs
damped Newton iterations on this system with the four graphon parameters
reparameterized through a logistic transform so iterates cannot leave
(0, 1).  Gradients and Hessians of e, t, S are closed forms.

``maximize_entropy`` wraps the solver in a deterministic multistart
(structured seeds plus seeded random ones), clusters the distinct converged
stationary points as a uniqueness probe, checks that adding a third or
fourth pode does not improve the entropy, and returns the best report.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Iterable, Sequence

import numpy as np
from scipy.linalg import eigh, null_space
from scipy.special import expit, logit

from graphon_lab.core import (
    BipodalParams,
    DensityPoint,
    GraphonError,
    StepFunction,
    StepGraphon,
    degree_function,
    entropy_H,
    entropy_H_double_prime,
    entropy_H_prime,
    entropy_S,
    twostar_density,
)
from graphon_lab.region import (
    InfeasibleAnsatzError,
    NonexistentFamilyError,
    RegionVerdict,
    SingularPointError,
    ansatz_graphon,
    query_region,
    symmetric_graphon,
    t_tilde_max,
)
from graphon_lab.stationarity import LagrangeState, stationarity_residual

__all__ = [
    "InfeasibleTargetError",
    "MaxIterationsError",
    "SingularJacobianError",
    "NoConvergedStartError",
    "DegeneratePointError",
    "PhaseLabel",
    "Phase",
    "BipodalFunctionals",
    "SolveOptions",
    "SearchConfig",
    "OptimumReport",
    "PodeProbe",
    "PhaseDiagramRow",
    "bipodal_functionals",
    "bipodal_hessians",
    "solve_bipodal",
    "maximize_entropy",
    "classify",
    "constrained_hessian",
    "scan",
    "thread_count",
]

ENV_THREADS = "GRAPHON_LAB_THREADS"


def thread_count() -> int:
    """Worker cap for parallel maps; set via GRAPHON_LAB_THREADS, default 1."""
    raw = os.environ.get(ENV_THREADS, "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


class InfeasibleTargetError(GraphonError):
    """Requested (e, t~) is not in the interior of the feasible region."""


class MaxIterationsError(GraphonError):
    """Newton iteration did not reach the residual tolerance."""


class SingularJacobianError(GraphonError):
    """Newton system became singular; diagnostics carried on the exception."""

    def __init__(self, message: str, diagnostics: dict | None = None) -> None:
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class NoConvergedStartError(GraphonError):
    """No multistart seed produced a converged stationary point."""


class DegeneratePointError(GraphonError):
    """Constraint Jacobian is rank-deficient; no 2-dim tangent space."""


# ---------------------------------------------------------------------------
# closed-form functionals on bipodal parameters


@dataclass(frozen=True)
class BipodalFunctionals:
    """Densities, entropy, degrees, and their gradients over (a, b, c, d)."""

    e: float
    t: float
    t_tilde: float
    entropy: float
    d1: float
    d2: float
    grad_e: np.ndarray
    grad_t: np.ndarray
    grad_S: np.ndarray


def bipodal_functionals(p: BipodalParams) -> BipodalFunctionals:
    """Closed forms for e, t, S and their gradients.

    Gradients require interior values (H' diverges at 0 and 1).
    """
    a, b, c, d = p.a, p.b, p.c, p.d
    cc = 1.0 - c
    d1 = c * a + cc * d
    d2 = c * d + cc * b
    e = c * d1 + cc * d2
    t = c * d1 * d1 + cc * d2 * d2
    S = c * c * entropy_H(a) + cc * cc * entropy_H(b) + 2 * c * cc * entropy_H(d)
    grad_e = np.array(
        [c * c, cc * cc, 2 * c * a - 2 * cc * b + (2 - 4 * c) * d, 2 * c * cc]
    )
    grad_t = np.array(
        [
            2 * c * c * d1,
            2 * cc * cc * d2,
            d1 * d1 - d2 * d2 + 2 * c * d1 * (a - d) + 2 * cc * d2 * (d - b),
            2 * c * cc * (d1 + d2),
        ]
    )
    grad_S = np.array(
        [
            c * c * entropy_H_prime(a),
            cc * cc * entropy_H_prime(b),
            2 * c * entropy_H(a) - 2 * cc * entropy_H(b) + (2 - 4 * c) * entropy_H(d),
            2 * c * cc * entropy_H_prime(d),
        ]
    )
    return BipodalFunctionals(e, t, t - e * e, S, d1, d2, grad_e, grad_t, grad_S)


def bipodal_hessians(p: BipodalParams) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Hessians of (e, t, S) over (a, b, c, d), in that order."""
    a, b, c, d = p.a, p.b, p.c, p.d
    cc = 1.0 - c
    d1 = c * a + cc * d
    d2 = c * d + cc * b

    he = np.zeros((4, 4))
    he[0, 2] = he[2, 0] = 2 * c
    he[1, 2] = he[2, 1] = -2 * cc
    he[2, 2] = 2 * a + 2 * b - 4 * d
    he[2, 3] = he[3, 2] = 2 - 4 * c

    ht = np.zeros((4, 4))
    ht[0, 0] = 2 * c**3
    ht[1, 1] = 2 * cc**3
    ht[3, 3] = 2 * c * cc
    ht[0, 3] = ht[3, 0] = 2 * c * c * cc
    ht[1, 3] = ht[3, 1] = 2 * cc * cc * c
    ht[0, 2] = ht[2, 0] = 4 * c * d1 + 2 * c * c * (a - d)
    ht[1, 2] = ht[2, 1] = -4 * cc * d2 + 2 * cc * cc * (d - b)
    ht[2, 3] = ht[3, 2] = (2 - 4 * c) * (d1 + d2) + 2 * c * cc * (a - b)
    ht[2, 2] = (
        4 * d1 * (a - d)
        - 4 * d2 * (d - b)
        + 2 * c * (a - d) ** 2
        + 2 * cc * (d - b) ** 2
    )

    hs = np.zeros((4, 4))
    hs[0, 0] = c * c * entropy_H_double_prime(a)
    hs[1, 1] = cc * cc * entropy_H_double_prime(b)
    hs[3, 3] = 2 * c * cc * entropy_H_double_prime(d)
    hs[0, 2] = hs[2, 0] = 2 * c * entropy_H_prime(a)
    hs[1, 2] = hs[2, 1] = -2 * cc * entropy_H_prime(b)
    hs[2, 3] = hs[3, 2] = (2 - 4 * c) * entropy_H_prime(d)
    hs[2, 2] = 2 * entropy_H(a) + 2 * entropy_H(b) - 4 * entropy_H(d)
    return he, ht, hs


# ---------------------------------------------------------------------------
# classification


class PhaseLabel(Enum):
    CLIQUE_LIKE = "CliqueLike"
    ANTI_CLIQUE_LIKE = "AntiCliqueLike"
    SYMMETRIC = "Symmetric"
    OTHER = "Other"


@dataclass(frozen=True)
class Phase:
    """Label plus the rearranged-L1 distance scores that produced it."""

    label: PhaseLabel
    clique_distance: float
    anticlique_distance: float
    symmetric_distance: float


def _profile(values: Sequence[float], measures: Sequence[float]):
    pairs = sorted(zip(values, measures), key=lambda vm: -vm[0])
    return [(float(v), float(m)) for v, m in pairs if m > 0.0]


def _rearranged_l1(f: StepFunction, profile) -> float:
    """L1 distance between decreasing rearrangements of two step functions."""
    own = _profile(f.values, f.measures)
    other = list(profile)
    total = 0.0
    i = j = 0
    rem_i = own[0][1] if own else 0.0
    rem_j = other[0][1] if other else 0.0
    while i < len(own) and j < len(other):
        m = min(rem_i, rem_j)
        total += m * abs(own[i][0] - other[j][0])
        rem_i -= m
        rem_j -= m
        if rem_i <= 1e-15:
            i += 1
            rem_i = own[i][1] if i < len(own) else 0.0
        if rem_j <= 1e-15:
            j += 1
            rem_j = other[j][1] if j < len(other) else 0.0
    return total


def classify(g: StepGraphon, threshold: float = 0.1) -> Phase:
    """Label a graphon by the rearranged-L1 distance of its degree function.

    Reference profiles: clique degrees (sqrt(e) on mass sqrt(e), else 0),
    the complementary anti-clique profile, and the symmetric-family profile
    1/2 +- sqrt(t~) on equal masses (plus an |e - 1/2| penalty, since that
    family lives on the line e = 1/2).
    """
    dp = twostar_density(g)
    d = degree_function(g)
    e = dp.e

    s = math.sqrt(e)
    clique_profile = [(s, s), (0.0, 1.0 - s)] if s < 1.0 else [(1.0, 1.0)]
    dist_clique = _rearranged_l1(d, _normalize_profile(clique_profile))

    s2 = math.sqrt(1.0 - e)
    anti_profile = [(1.0, 1.0 - s2), (1.0 - s2, s2)] if s2 > 0.0 else [(1.0, 1.0)]
    dist_anti = _rearranged_l1(d, _normalize_profile(anti_profile))

    mu = math.sqrt(max(dp.t_tilde, 0.0))
    sym_profile = [(0.5 + mu, 0.5), (0.5 - mu, 0.5)]
    dist_sym = _rearranged_l1(d, _normalize_profile(sym_profile)) + abs(e - 0.5)

    scores = {
        PhaseLabel.CLIQUE_LIKE: dist_clique,
        PhaseLabel.ANTI_CLIQUE_LIKE: dist_anti,
        PhaseLabel.SYMMETRIC: dist_sym,
    }
    best = min(scores, key=scores.get)
    label = best if scores[best] <= threshold else PhaseLabel.OTHER
    return Phase(label, dist_clique, dist_anti, dist_sym)


def _normalize_profile(profile):
    return [(v, m) for v, m in profile if m > 0.0]


# ---------------------------------------------------------------------------
# Newton solver


@dataclass(frozen=True)
class SolveOptions:
    tol: float = 1e-10
    max_iterations: int = 120
    max_backtracks: int = 40


@dataclass(frozen=True)
class PodeProbe:
    """Outcome of trying one extra-pode refinement."""

    n_podes: int
    entropy_gain: float
    collapsed: bool


@dataclass(frozen=True)
class OptimumReport:
    """Solver output: parameters, multipliers, certificates, diagnostics.

    ``lagrange`` carries the logistic-formula coefficients consumed by the
    stationarity module; ``entropy_multipliers`` are the (a_s, b_s) of
    dS = a_s de + b_s dt, related by a factor of -2.  ``beta_ratio`` is
    b_s / H''(1/2), reported instead of asserting either normalization.
    """

    params: BipodalParams | StepGraphon
    lagrange: LagrangeState
    entropy: float
    densities: DensityPoint
    classification: Phase
    residuals: tuple[float, float]
    converged: bool
    iterations: int
    multistart_cluster_count: int
    entropy_multipliers: tuple[float, float]
    beta_ratio: float
    cluster_params: tuple[BipodalParams, ...] = ()
    pode_probes: tuple[PodeProbe, ...] = ()
    seeds_converged: int = 1
    seeds_total: int = 1

    def graphon(self) -> StepGraphon:
        if isinstance(self.params, BipodalParams):
            return self.params.to_graphon()
        return self.params

    def to_dict(self) -> dict:
        if isinstance(self.params, BipodalParams):
            params = {
                "a": self.params.a,
                "b": self.params.b,
                "c": self.params.c,
                "d": self.params.d,
            }
        else:
            params = {
                "cuts": list(self.params.cuts),
                "values": [list(r) for r in self.params.values],
            }
        return {
            "params": params,
            "alpha": self.lagrange.alpha,
            "beta": self.lagrange.beta,
            "alpha_ds": self.entropy_multipliers[0],
            "beta_ds": self.entropy_multipliers[1],
            "beta_ratio": self.beta_ratio,
            "entropy": self.entropy,
            "e": self.densities.e,
            "t": self.densities.t,
            "t_tilde": self.densities.t_tilde,
            "phase": self.classification.label.value,
            "phase_scores": {
                "clique": self.classification.clique_distance,
                "anticlique": self.classification.anticlique_distance,
                "symmetric": self.classification.symmetric_distance,
            },
            "graphon_residual": self.residuals[0],
            "degree_residual": self.residuals[1],
            "converged": self.converged,
            "iterations": self.iterations,
            "clusters": self.multistart_cluster_count,
            "pode_probes": [
                {
                    "n_podes": pr.n_podes,
                    "entropy_gain": pr.entropy_gain,
                    "collapsed": pr.collapsed,
                }
                for pr in self.pode_probes
            ],
            "seeds_converged": self.seeds_converged,
            "seeds_total": self.seeds_total,
        }


_VALUE_CLIP = 1e-12
_LOGIT_CAP = 36.0  # expit(+-36) is already 1 / 2.3e-16 away from {1, 0}


def _to_unconstrained(p: BipodalParams) -> np.ndarray:
    x = np.clip(
        np.array([p.a, p.b, p.c, p.d]), _VALUE_CLIP, 1.0 - _VALUE_CLIP
    )
    return np.clip(logit(x), -_LOGIT_CAP, _LOGIT_CAP)


def _residual_and_jacobian(y: np.ndarray, e0: float, t0: float):
    x = expit(y[:4])
    a_s, b_s = y[4], y[5]
    p = BipodalParams(*x)
    f = bipodal_functionals(p)
    he, ht, hs = bipodal_hessians(p)
    F = np.empty(6)
    F[:4] = f.grad_S - a_s * f.grad_e - b_s * f.grad_t
    F[4] = f.e - e0
    F[5] = f.t - t0
    sigma = x * (1.0 - x)
    J = np.zeros((6, 6))
    J[:4, :4] = (hs - a_s * he - b_s * ht) * sigma[None, :]
    J[:4, 4] = -f.grad_e
    J[:4, 5] = -f.grad_t
    J[4, :4] = f.grad_e * sigma
    J[5, :4] = f.grad_t * sigma
    return F, J, p, f


def _initial_multipliers(p: BipodalParams) -> tuple[float, float]:
    f = bipodal_functionals(p)
    A = np.stack([f.grad_e, f.grad_t], axis=1)
    sol, *_ = np.linalg.lstsq(A, f.grad_S, rcond=None)
    return float(sol[0]), float(sol[1])


def solve_bipodal(
    e: float,
    t_tilde: float,
    init: BipodalParams,
    opts: SolveOptions | None = None,
) -> OptimumReport:
    """Newton-solve the six-equation stationarity system at fixed (e, t~).

    Values stay interior through the logit reparameterization; a
    backtracking line search on the residual norm damps steps in the stiff
    near-boundary regime.  Converged means max-norm residual <= opts.tol.
    """
    opts = opts or SolveOptions()
    if query_region(e, t_tilde).verdict is not RegionVerdict.INTERIOR:
        raise InfeasibleTargetError(
            f"(e={e}, t_tilde={t_tilde}) is not interior to the feasible region"
        )
    t0 = t_tilde + e * e
    y = np.empty(6)
    y[:4] = _to_unconstrained(init)
    y[4], y[5] = _initial_multipliers(
        BipodalParams(*expit(y[:4]))
    )
    F, J, p, f = _residual_and_jacobian(y, e, t0)
    norm = float(np.linalg.norm(F))
    iterations = 0
    for iterations in range(1, opts.max_iterations + 1):
        if float(np.max(np.abs(F))) <= opts.tol:
            break
        try:
            step = np.linalg.solve(J, -F)
        except np.linalg.LinAlgError as exc:
            raise SingularJacobianError(
                "singular Newton system",
                diagnostics={
                    "params": (p.a, p.b, p.c, p.d),
                    "multipliers": (y[4], y[5]),
                    "residual_norm": norm,
                    "iteration": iterations,
                },
            ) from exc
        scale = 1.0
        for _ in range(opts.max_backtracks):
            y_new = y + scale * step
            y_new[:4] = np.clip(y_new[:4], -_LOGIT_CAP, _LOGIT_CAP)
            F_new, J_new, p_new, f_new = _residual_and_jacobian(y_new, e, t0)
            norm_new = float(np.linalg.norm(F_new))
            if norm_new < (1.0 - 1e-4 * scale) * norm or norm_new < opts.tol:
                break
            scale *= 0.5
        else:
            raise MaxIterationsError(
                f"line search stalled at residual {norm:.3e} after "
                f"{iterations} iterations"
            )
        y, F, J, p, f = y_new, F_new, J_new, p_new, f_new
        norm = norm_new
    converged = float(np.max(np.abs(F))) <= opts.tol
    if not converged:
        raise MaxIterationsError(
            f"no convergence after {opts.max_iterations} iterations "
            f"(residual {norm:.3e})"
        )
    return _build_report(p, y[4], y[5], iterations)


def _build_report(
    p: BipodalParams,
    a_s: float,
    b_s: float,
    iterations: int,
    clusters: int = 1,
    cluster_params: tuple[BipodalParams, ...] = (),
    pode_probes: tuple[PodeProbe, ...] = (),
    seeds_converged: int = 1,
    seeds_total: int = 1,
) -> OptimumReport:
    canonical = p.canonical()
    g = canonical.to_graphon()
    ls = LagrangeState(-2.0 * a_s, -2.0 * b_s)
    residuals = stationarity_residual(g, ls)
    return OptimumReport(
        params=canonical,
        lagrange=ls,
        entropy=entropy_S(g),
        densities=twostar_density(g),
        classification=classify(g),
        residuals=residuals,
        converged=True,
        iterations=iterations,
        multistart_cluster_count=clusters,
        entropy_multipliers=(a_s, b_s),
        beta_ratio=b_s / entropy_H_double_prime(0.5),
        cluster_params=cluster_params or (canonical,),
        pode_probes=pode_probes,
        seeds_converged=seeds_converged,
        seeds_total=seeds_total,
    )


# ---------------------------------------------------------------------------
# multistart search


@dataclass(frozen=True)
class SearchConfig:
    max_podes: int = 4
    n_random_seeds: int = 16
    master_seed: int = 0
    cluster_tol: float = 1e-4
    solve: SolveOptions = field(default_factory=SolveOptions)


def _structured_seeds(e: float, t_tilde: float) -> list[BipodalParams]:
    seeds: list[BipodalParams] = []
    try:
        seeds.append(ansatz_graphon(e, t_tilde))
    except (SingularPointError, InfeasibleAnsatzError):
        pass
    delta = 0.08
    s = math.sqrt(e)
    c_cl = min(max(s + (1.5 * s - 1.0) * delta, 0.05), 0.95)
    seeds.append(BipodalParams(1.0 - delta, delta**3, c_cl, delta))
    s2 = math.sqrt(1.0 - e)
    c_ac = min(max(s2 + (1.5 * s2 - 1.0) * delta, 0.05), 0.95)
    seeds.append(
        BipodalParams(delta**3, 1.0 - delta, 1.0 - c_ac, 1.0 - delta).canonical()
    )
    try:
        seeds.append(symmetric_graphon(t_tilde))
    except NonexistentFamilyError:
        pass
    return seeds


def _cluster(params: Iterable[BipodalParams], tol: float):
    reps: list[np.ndarray] = []
    members: list[BipodalParams] = []
    for p in params:
        vec = np.array([p.a, p.b, p.c, p.d])
        if not any(np.max(np.abs(vec - r)) <= tol for r in reps):
            reps.append(vec)
            members.append(p)
    return members


def maximize_entropy(
    e: float,
    t_tilde: float,
    config: SearchConfig | None = None,
) -> OptimumReport:
    """Best stationary bipodal graphon at (e, t~) from a deterministic multistart.

    Structured seeds (ansatz, clique-like, anti-clique-like, symmetric) are
    tried first, then ``n_random_seeds`` random interior seeds drawn from a
    generator keyed by the master seed.  Distinct converged stationary
    points (canonical parameter distance > cluster_tol) are counted as a
    uniqueness probe.  Extra-pode refinements up to ``max_podes`` verify
    that a third or fourth pode does not raise the entropy.
    """
    config = config or SearchConfig()
    if query_region(e, t_tilde).verdict is not RegionVerdict.INTERIOR:
        raise InfeasibleTargetError(
            f"(e={e}, t_tilde={t_tilde}) is not interior to the feasible region"
        )
    rng = np.random.default_rng(np.random.SeedSequence((config.master_seed, 0x5EED)))
    seeds = _structured_seeds(e, t_tilde)
    for _ in range(config.n_random_seeds):
        seeds.append(BipodalParams(*rng.uniform(0.05, 0.95, size=4)))

    solutions: list[tuple[BipodalParams, float, float, float, int]] = []
    for seed in seeds:
        try:
            rep = _solve_raw(e, t_tilde, seed, config.solve)
        except (MaxIterationsError, SingularJacobianError):
            continue
        solutions.append(rep)
    if not solutions:
        raise NoConvergedStartError(
            f"no converged start among {len(seeds)} seeds at "
            f"(e={e}, t_tilde={t_tilde})"
        )

    clusters = _cluster((s[0] for s in solutions), config.cluster_tol)
    # best by entropy; deterministic lexicographic tie-break
    def sort_key(sol):
        p = sol[0]
        return (-sol[1], p.a, p.b, p.c, p.d)

    best = min(solutions, key=sort_key)
    p_best, _, a_s, b_s, iterations = best

    probes = []
    if config.max_podes >= 3:
        probes = _pode_probes(
            p_best, e, t_tilde, config.max_podes, config.master_seed
        )

    return _build_report(
        p_best,
        a_s,
        b_s,
        iterations,
        clusters=len(clusters),
        cluster_params=tuple(clusters),
        pode_probes=tuple(probes),
        seeds_converged=len(solutions),
        seeds_total=len(seeds),
    )


def _solve_raw(e, t_tilde, seed, opts):
    """solve_bipodal without the report construction; returns raw solution."""
    t0 = t_tilde + e * e
    y = np.empty(6)
    y[:4] = _to_unconstrained(seed)
    y[4], y[5] = _initial_multipliers(BipodalParams(*expit(y[:4])))
    F, J, p, f = _residual_and_jacobian(y, e, t0)
    norm = float(np.linalg.norm(F))
    opts_max = opts.max_iterations
    for iterations in range(1, opts_max + 1):
        if float(np.max(np.abs(F))) <= opts.tol:
            return (p.canonical(), f.entropy, y[4], y[5], iterations)
        try:
            step = np.linalg.solve(J, -F)
        except np.linalg.LinAlgError as exc:
            raise SingularJacobianError("singular Newton system") from exc
        scale = 1.0
        for _ in range(opts.max_backtracks):
            y_new = y + scale * step
            y_new[:4] = np.clip(y_new[:4], -_LOGIT_CAP, _LOGIT_CAP)
            F_new, J_new, p_new, f_new = _residual_and_jacobian(y_new, e, t0)
            norm_new = float(np.linalg.norm(F_new))
            if norm_new < (1.0 - 1e-4 * scale) * norm or norm_new < opts.tol:
                break
            scale *= 0.5
        else:
            raise MaxIterationsError("line search stalled")
        y, F, J, p, f = y_new, F_new, J_new, p_new, f_new
        norm = norm_new
    if float(np.max(np.abs(F))) <= opts.tol:
        return (p.canonical(), f.entropy, y[4], y[5], opts_max)
    raise MaxIterationsError("no convergence")


# ---------------------------------------------------------------------------
# extra-pode probe


def _pode_probes(p: BipodalParams, e: float, t_tilde: float, max_podes: int, seed):
    """Check that splitting podes cannot raise the entropy.

    For each target pode count, the best bipodal solution is re-expressed on
    a finer partition (largest podes split in half), value entries get a
    small symmetric perturbation, and the entropy is locally maximized over
    the value matrix at fixed partition under both density constraints.
    Since the bipodal optimum is representable on the finer partition, a
    positive gain would mean a genuinely multipodal improvement.
    """
    base = p.canonical().to_graphon()
    base_entropy = entropy_S(base)
    rng = np.random.default_rng(np.random.SeedSequence((seed, 0xB0DE)))
    probes = []
    for m in range(3, max_podes + 1):
        split = _split_graphon(base, m)
        refined, gain = _refine_values(split, e, t_tilde, base_entropy, rng)
        collapsed = gain <= 1e-7 or _is_effectively_bipodal(refined)
        probes.append(PodeProbe(m, gain, collapsed))
    return probes


def _split_graphon(g: StepGraphon, target_podes: int) -> StepGraphon:
    cuts = list(g.cuts)
    values = g.value_matrix
    while len(cuts) + 1 < target_podes:
        pi = np.diff([0.0, *cuts, 1.0])
        i = int(np.argmax(pi))
        edges = [0.0, *cuts, 1.0]
        mid = 0.5 * (edges[i] + edges[i + 1])
        values = np.insert(values, i, values[i, :], axis=0)
        values = np.insert(values, i, values[:, i], axis=1)
        cuts = sorted(cuts + [mid])
    return StepGraphon(cuts, values)


def _refine_values(g, e0, t0_tilde, base_entropy, rng, steps=400):
    """Projected gradient ascent on S over values at fixed partition."""
    t0 = t0_tilde + e0 * e0
    pi = g.measures
    m = len(pi)
    v = g.value_matrix.copy()
    v = np.clip(
        v + 1e-3 * _sym_noise(rng, m), 1e-9, 1.0 - 1e-9
    )
    v = _project_constraints(v, pi, e0, t0)
    w = np.outer(pi, pi)
    lr = 0.5
    for _ in range(steps):
        with np.errstate(divide="ignore"):
            gs = w * (-0.5) * (np.log(v) - np.log1p(-v))
        d = v @ pi
        ge = w
        gt = w * (d[:, None] + d[None, :])
        # project ascent direction onto the constraint tangent space
        direction = _tangent_project(gs, [ge, gt])
        if np.max(np.abs(direction)) < 1e-12:
            break
        v_new = np.clip(v + lr * direction, 1e-9, 1.0 - 1e-9)
        v_new = _project_constraints(v_new, pi, e0, t0)
        if v_new is None:
            lr *= 0.5
            continue
        s_old = float(np.sum(w * _h_matrix(v)))
        s_new = float(np.sum(w * _h_matrix(v_new)))
        if s_new < s_old - 1e-14:
            lr *= 0.5
            if lr < 1e-6:
                break
            continue
        v = v_new
    refined = StepGraphon(g.cuts, v)
    return refined, entropy_S(refined) - base_entropy


def _h_matrix(v: np.ndarray) -> np.ndarray:
    out = np.zeros_like(v)
    mask = (v > 0.0) & (v < 1.0)
    u = v[mask]
    out[mask] = -0.5 * (u * np.log(u) + (1 - u) * np.log1p(-u))
    return out


def _sym_noise(rng, m):
    n = rng.normal(size=(m, m))
    return 0.5 * (n + n.T)


def _tangent_project(grad, constraints):
    flat = grad.ravel()
    basis = []
    for c in constraints:
        b = c.ravel().astype(float)
        for prev in basis:
            b = b - (b @ prev) * prev
        norm = np.linalg.norm(b)
        if norm > 1e-13:
            basis.append(b / norm)
    for b in basis:
        flat = flat - (flat @ b) * b
    return flat.reshape(grad.shape)


def _project_constraints(v, pi, e0, t0, iters=60):
    """Small Newton flow restoring e and t at fixed partition."""
    w = np.outer(pi, pi)
    for _ in range(iters):
        d = v @ pi
        e = float(pi @ d)
        t = float(pi @ (d * d))
        r = np.array([e - e0, t - t0])
        if np.max(np.abs(r)) <= 1e-13:
            return v
        ge = w
        gt = w * (d[:, None] + d[None, :])
        A = np.array(
            [
                [np.sum(ge * ge), np.sum(ge * gt)],
                [np.sum(gt * ge), np.sum(gt * gt)],
            ]
        )
        try:
            lam = np.linalg.solve(A, r)
        except np.linalg.LinAlgError:
            return None
        v = np.clip(v - lam[0] * ge - lam[1] * gt, 1e-9, 1.0 - 1e-9)
    d = v @ pi
    e = float(pi @ d)
    t = float(pi @ (d * d))
    if max(abs(e - e0), abs(t - t0)) <= 1e-9:
        return v
    return None


def _is_effectively_bipodal(g: StepGraphon, tol: float = 1e-3) -> bool:
    v = g.value_matrix
    m = v.shape[0]
    groups: list[int] = []
    for i in range(m):
        for j in groups:
            if np.max(np.abs(v[i] - v[j])) <= tol:
                break
        else:
            groups.append(i)
    return len(groups) <= 2


# ---------------------------------------------------------------------------
# constrained second-order test


def constrained_hessian(
    p: BipodalParams,
    e: float | None = None,
    t_tilde: float | None = None,
) -> list[float]:
    """Eigenvalues of the Lagrangian Hessian on the constraint tangent space.

    Multipliers come from the least-squares fit of grad S in the span of
    grad e and grad t (exact at stationary points).  The tangent space is
    the null space of the 2x4 constraint Jacobian; a rank-deficient
    Jacobian (e.g. exactly on the Erdos-Renyi curve, where grad t is
    parallel to grad e) raises DegeneratePointError.
    """
    f = bipodal_functionals(p)
    if e is not None and abs(f.e - e) > 1e-8:
        raise DomainErrorLike(f"params have e={f.e}, expected {e}")
    if t_tilde is not None and abs(f.t_tilde - t_tilde) > 1e-8:
        raise DomainErrorLike(
            f"params have t_tilde={f.t_tilde}, expected {t_tilde}"
        )
    A = np.stack([f.grad_e, f.grad_t])
    sv = np.linalg.svd(A, compute_uv=False)
    if sv[-1] <= 1e-10 * sv[0]:
        raise DegeneratePointError(
            "constraint Jacobian is rank-deficient at this point"
        )
    mults, *_ = np.linalg.lstsq(A.T, f.grad_S, rcond=None)
    he, ht, hs = bipodal_hessians(p)
    h_lag = hs - mults[0] * he - mults[1] * ht
    Q = null_space(A)
    projected = Q.T @ h_lag @ Q
    return sorted(float(x) for x in eigh(projected, eigvals_only=True))


class DomainErrorLike(GraphonError, ValueError):
    """Inputs inconsistent with the declared constraint point."""


# ---------------------------------------------------------------------------
# phase-diagram scan


@dataclass(frozen=True)
class PhaseDiagramRow:
    """One grid cell of a phase scan."""

    e: float
    t_tilde: float
    verdict: RegionVerdict
    entropy: float | None = None
    phase: PhaseLabel | None = None
    params: BipodalParams | None = None
    lagrange: LagrangeState | None = None
    clusters: int | None = None
    jump: bool = False
    error: str | None = None

    def to_csv_fields(self) -> list[str]:
        def fmt(x):
            return "" if x is None else repr(x)

        p = self.params
        return [
            repr(self.e),
            repr(self.t_tilde),
            self.verdict.value,
            fmt(self.entropy),
            self.phase.value if self.phase else "",
            fmt(p.a if p else None),
            fmt(p.b if p else None),
            fmt(p.c if p else None),
            fmt(p.d if p else None),
            fmt(self.lagrange.alpha if self.lagrange else None),
            fmt(self.lagrange.beta if self.lagrange else None),
            fmt(self.clusters),
            "1" if self.jump else "0",
            self.error or "",
        ]


PHASE_CSV_HEADER = [
    "e",
    "t_tilde",
    "verdict",
    "entropy",
    "phase",
    "a",
    "b",
    "c",
    "d",
    "alpha",
    "beta",
    "clusters",
    "jump",
    "error",
]

JUMP_THRESHOLD = 0.1


def scan(
    e_values: Sequence[float],
    t_values: Sequence[float],
    config: SearchConfig | None = None,
) -> list[PhaseDiagramRow]:
    """Row-per-cell phase scan over a rectangular (e, t~) grid.

    Rows are emitted t-major (for each t~, sweep e ascending).  Each
    feasible cell runs ``maximize_entropy`` with an RNG keyed by
    (master seed, cell index); per-cell errors are recorded in the row.  A
    jump marker is set where the off-diagonal parameter d changes by more
    than 0.1 between adjacent converged e-cells, flagging a discontinuous
    transition.
    """
    config = config or SearchConfig()
    cells = [
        (float(e), float(t)) for t in t_values for e in e_values
    ]

    def solve_cell(item):
        index, (e, t) = item
        verdict = query_region(e, t).verdict
        if verdict is not RegionVerdict.INTERIOR:
            return PhaseDiagramRow(e, t, verdict)
        cell_config = replace(
            config, master_seed=_cell_seed(config.master_seed, index)
        )
        try:
            rep = maximize_entropy(e, t, cell_config)
        except GraphonError as exc:
            return PhaseDiagramRow(
                e, t, verdict, error=f"{type(exc).__name__}: {exc}"
            )
        return PhaseDiagramRow(
            e,
            t,
            verdict,
            entropy=rep.entropy,
            phase=rep.classification.label,
            params=rep.params if isinstance(rep.params, BipodalParams) else None,
            lagrange=rep.lagrange,
            clusters=rep.multistart_cluster_count,
        )

    workers = thread_count()
    items = list(enumerate(cells))
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(solve_cell, items))
    else:
        rows = [solve_cell(item) for item in items]

    # mark discontinuities along each constant-t row
    n_e = len(e_values)
    marked: list[PhaseDiagramRow] = []
    for idx, row in enumerate(rows):
        jump = False
        if idx % n_e != 0:
            prev = rows[idx - 1]
            if row.params is not None and prev.params is not None:
                jump = abs(row.params.d - prev.params.d) > JUMP_THRESHOLD
        marked.append(replace(row, jump=jump) if jump else row)
    return marked


def _cell_seed(master_seed: int, index: int) -> int:
    ss = np.random.SeedSequence((master_seed, index))
    return int(ss.generate_state(1, dtype=np.uint64)[0])
