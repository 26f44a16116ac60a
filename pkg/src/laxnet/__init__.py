"""Lax flows on quiver networks with Kirchhoff matching.

Combinatorics (quivers, homotopy moves, cobordism classes), a compact
matrix group kernel, discretized field machinery on graph edges, and the
finite-dimensional cotangent model with its moment maps.
"""

__version__ = "0.1.0"

from .groups import GROUPS, SO3, SU2, UNIT_CIRCLE, GroupSpec, group_by_name
from .quiver import Edge, Quiver, SpanningTree, VertexClass

__all__ = [
    "__version__",
    "GROUPS",
    "SO3",
    "SU2",
    "UNIT_CIRCLE",
    "GroupSpec",
    "group_by_name",
    "Edge",
    "Quiver",
    "SpanningTree",
    "VertexClass",
]
