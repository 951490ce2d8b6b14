"""Numerical regular-operator calculus and Fredholm stability experiments.

Operators are dense complex matrices (numpy arrays). A genuinely unbounded
operator is represented by a :class:`~regfred.fredholm.TruncatedFamily`, one
matrix per truncation level.
"""

from regfred.matalg import adjoint, herm_apply, is_unitary, module_inner, op_norm
from regfred.regop import (
    RegularOperator,
    TransformBundle,
    cayley,
    cayley_factorization_check,
    double,
    graph_gram,
    inverse_cayley,
    resolvent,
    transforms,
)
from regfred.gapmetric import (
    cayley_sandwich,
    d_metric,
    doubling_isometry_check,
    gap,
    graph_projection,
)
from regfred.fredholm import (
    FredholmVerdict,
    TruncatedFamily,
    cayley_criterion,
    compact_resolvent_check,
    essential_profile,
    fredholm_detect,
    stability_radius,
)

__version__ = "0.1.0"

__all__ = [
    "FredholmVerdict",
    "RegularOperator",
    "TransformBundle",
    "TruncatedFamily",
    "adjoint",
    "cayley",
    "cayley_criterion",
    "cayley_factorization_check",
    "cayley_sandwich",
    "compact_resolvent_check",
    "d_metric",
    "double",
    "doubling_isometry_check",
    "essential_profile",
    "fredholm_detect",
    "gap",
    "graph_gram",
    "graph_projection",
    "herm_apply",
    "inverse_cayley",
    "is_unitary",
    "module_inner",
    "op_norm",
    "resolvent",
    "stability_radius",
    "transforms",
]
