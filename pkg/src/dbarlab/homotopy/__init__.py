"""Homotopy operators for dbar and the mixed D-complex."""

from .zform import MixedForm, ZForm, canonical_index, insert_index, mixed_split
from .solver import (HomotopySolver, SolveReport, dbar_of, interior_mask, mesh_spacing,
                     refinement_study, solve_boundary, solve_H0, solve_Hq, solve_top_degree,
                     solve_Tq_classical, verify_homotopy, volume_constant)

__all__ = [
    "ZForm", "MixedForm", "mixed_split", "canonical_index", "insert_index", "HomotopySolver",
    "SolveReport", "solve_Hq", "solve_H0", "solve_Tq_classical", "solve_boundary",
    "solve_top_degree", "verify_homotopy", "refinement_study", "dbar_of", "interior_mask",
    "mesh_spacing", "volume_constant",
]

from .dcomplex import StarBox, d_t, poincare_Rq, poincare_residual, solve_D_complex, theta_rule

__all__ += ["StarBox", "poincare_Rq", "poincare_residual", "d_t", "solve_D_complex", "theta_rule"]

from .rates import BoundaryRate, blowup_rates, cusp_form

__all__ += ["BoundaryRate", "blowup_rates", "cusp_form"]
