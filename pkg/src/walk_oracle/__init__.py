"""Local access to random walks on regular graphs.

Oracles answer ``position(t)`` queries in any order while keeping the joint
law of the answers close to that of a genuine random walk:

* :class:`ExpanderOracle` for undirected graphs with a spectral bound,
* :class:`AbelianOracle` for Cayley graphs of products of cyclic groups,
* :class:`DenseOracle` and the product combinators for small dense graphs.

The :mod:`walk_oracle.adversary` module attacks oracles that probe too little.
"""

from .graph_core import (GraphInputError, GroupSpec, ProbeSession, QueryBudgetExceeded,
                         RegularGraph, read_graph, write_graph)
from .oracle_abelian import AbelianOracle, apply_label_counts, new_abelian_oracle
from .oracle_expander import ExpanderOracle, new_expander_oracle, stitch_bridge
from .oracle_product import (CartesianOracle, DenseOracle, TensorOracle, build_power_oracle)

__version__ = "0.1.0"

__all__ = [
    "AbelianOracle", "CartesianOracle", "DenseOracle", "ExpanderOracle", "GraphInputError",
    "GroupSpec", "ProbeSession", "QueryBudgetExceeded", "RegularGraph", "TensorOracle",
    "apply_label_counts", "build_power_oracle", "new_abelian_oracle", "new_expander_oracle",
    "read_graph", "stitch_bridge", "write_graph",
]
