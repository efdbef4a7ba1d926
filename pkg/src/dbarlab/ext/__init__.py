"""Extension operators: Whitney E_r, Stein-type E, and the commutator [dbar, E]."""

from .stein import (MomentKernel, SteinExtension, commutator, load_field, save_field,
                    smoothstep, stein_extend_halfspace)
from .whitney import (BallSet, DomainSet, HalfSpaceSet, JetField, LatticeSet,
                      RegularizedDefining, WhitneyCubeSet, WhitneyExtension, locate, real_jets,
                      taylor_remainder_bound, whitney_decompose, whitney_extend)

__all__ = [
    "MomentKernel", "SteinExtension", "commutator", "load_field", "save_field", "smoothstep",
    "stein_extend_halfspace", "BallSet", "DomainSet", "HalfSpaceSet", "JetField", "LatticeSet",
    "RegularizedDefining", "WhitneyCubeSet", "WhitneyExtension", "locate", "real_jets",
    "taylor_remainder_bound", "whitney_decompose", "whitney_extend",
]
