"""Constraint propagation over variable-indexed images and preimages.

The two central constraints tie a sequence of integer variables to a pair
of set variables: one makes T the image of the variables indexed by S, the
other makes S the set of indices whose variable lands in T.  A catalog of
counting and occurrence constraints is built by decomposition onto these
plus a handful of primitive set links, and an enumeration oracle provides
ground-truth semantics and exact consistency filtering for testing.
"""

from .catalog import TAGS, ConstraintSpec, post_global
from .core import CHANGED, FAILED, NOOP, Store, interval_mask, mask_of, values_of
from .engine import Model, Propagator, solve
from .oracle import (
    CapExceeded,
    enumerate_solutions,
    filter_bc,
    filter_hc,
    holds,
    register_checker,
)
from .range import OccursPropagator, RangePropagator, occurs_hc, propag_range
from .roots import BC, HC, classify_conditions, post_roots

__all__ = [
    "BC",
    "CHANGED",
    "CapExceeded",
    "ConstraintSpec",
    "FAILED",
    "HC",
    "Model",
    "NOOP",
    "OccursPropagator",
    "Propagator",
    "RangePropagator",
    "Store",
    "TAGS",
    "classify_conditions",
    "enumerate_solutions",
    "filter_bc",
    "filter_hc",
    "holds",
    "interval_mask",
    "mask_of",
    "occurs_hc",
    "post_global",
    "post_roots",
    "propag_range",
    "register_checker",
    "solve",
    "values_of",
]
