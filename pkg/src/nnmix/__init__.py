"""EM fixed points and nonnegative-rank-3 boundaries for mixture models.

Subpackages by concern:

* :mod:`nnmix.exactla`: dual-backend (rational/float) dense linear algebra;
* :mod:`nnmix.em`: the EM iteration, likelihood, gradient, criticality;
* :mod:`nnmix.rank3cert`: exact nonnegative-rank-3 membership, brackets,
  constructive factorization, nested polygons;
* :mod:`nnmix.boundary`: topological-boundary classification, stratum
  counts and patterns, stratum sampling;
* :mod:`nnmix.families`: closed-form parametric families and their
  maximizers;
* :mod:`nnmix.harness`: seeded Monte-Carlo experiments;
* :mod:`nnmix.cli`: the command-line front end.
"""

from .exactla import Matrix, determinant, matrix_rank, parse_matrix, rank_factorize
from .em import (DataMatrix, EMResult, ParameterTriple, e_step, gradient_matrix,
                 fixed_point_residual, is_critical, log_likelihood, m_step,
                 model_dimension, parameter_dimension, run_em, run_em_restarts)
from .rank3cert import (MembershipDecision, Witness, bracket3, meet_join,
                        nested_polygons, nnrank3_membership,
                        nonneg_rank3_factorize, six_three)
from .boundary import (BoundaryClassification, ZeroPattern, boundary_test,
                       component_count, enumerate_zero_patterns,
                       sample_algebraic_boundary)
from .families import (greencurve_matrix, rectangle_family, rectangle_in_model,
                       uab_closed_form_mle, uab_in_model, uab_matrix)

__version__ = "0.1.0"

__all__ = [
    "Matrix", "determinant", "matrix_rank", "parse_matrix", "rank_factorize",
    "DataMatrix", "EMResult", "ParameterTriple", "e_step", "gradient_matrix",
    "fixed_point_residual", "is_critical", "log_likelihood", "m_step",
    "model_dimension", "parameter_dimension", "run_em", "run_em_restarts",
    "MembershipDecision", "Witness", "bracket3", "meet_join",
    "nested_polygons", "nnrank3_membership", "nonneg_rank3_factorize",
    "six_three",
    "BoundaryClassification", "ZeroPattern", "boundary_test",
    "component_count", "enumerate_zero_patterns", "sample_algebraic_boundary",
    "greencurve_matrix", "rectangle_family", "rectangle_in_model",
    "uab_closed_form_mle", "uab_in_model", "uab_matrix",
]
