"""Entropy-optimal step graphons under edge and 2star constraints.

Library layout:

- ``core``         step graphons and exact functionals
- ``region``       feasible (e, t~) region, extremal and ansatz constructors
- ``stationarity`` Euler-Lagrange structure: logistic graphon, k(z) map
- ``optimize``     constrained Newton solver, multistart, phase scans
- ``bifurcation``  symmetric-family stability and the critical point
- ``ensemble``     finite-graph census, MCMC window sampling, cut distance
- ``cli``          scriptable front end over all of the above
"""

from graphon_lab.core import (
    BipodalParams,
    DensityPoint,
    StepFunction,
    StepGraphon,
    StepKernel,
    SubgraphPattern,
    complement,
    decompose,
    degree_function,
    edge_density,
    entropy_H,
    entropy_S,
    entropy_via_series,
    moments,
    refine_common,
    subgraph_density,
    twostar_density,
)
from graphon_lab.region import (
    anticlique_graphon,
    ansatz_graphon,
    clique_graphon,
    er_graphon,
    query_region,
    symmetric_graphon,
    t_max,
    t_tilde_max,
)

__version__ = "0.1.0"

__all__ = [
    "BipodalParams",
    "DensityPoint",
    "StepFunction",
    "StepGraphon",
    "StepKernel",
    "SubgraphPattern",
    "complement",
    "decompose",
    "degree_function",
    "edge_density",
    "entropy_H",
    "entropy_S",
    "entropy_via_series",
    "moments",
    "refine_common",
    "subgraph_density",
    "twostar_density",
    "anticlique_graphon",
    "ansatz_graphon",
    "clique_graphon",
    "er_graphon",
    "query_region",
    "symmetric_graphon",
    "t_max",
    "t_tilde_max",
    "__version__",
]
