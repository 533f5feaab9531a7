"""Ribbon-graph expansions of matrix valued Gaussian free fields on electrical networks."""

from .algebra import Quaternion, embed_complex, hermitian_eigenvalues, quat_mul, re_trace
from .expansion import (
    ExpansionTerm, MomentPolynomial, evaluate_trace_spec, expansion_terms, grouped_measure,
    one_matrix_moment, symbolic_measure,
)
from .fields import GaussianModel, sample_gbe, sample_matrix_gff, sample_twisted_matrix_gff
from .gauge import (
    Connection, apply_gauge, holonomy, is_flat, sample_haar, tensor_connection, wilson_loop,
)
from .harness import (
    Experiment, lhs_exact, rhs_exact, verify_iso, verify_vector_iso, wilson_decomposition,
)
from .network import Network, green, holonomy_green, path_measure_mass, sample_path
from .ribbon import (
    BorderData, Composition, RibbonPairing, Trail, border_cycles, classify_surface,
    enumerate_pairings, oriented_trails, trails, weight,
)
from .wick import wick_oracle

__all__ = [
    "Quaternion", "embed_complex", "hermitian_eigenvalues", "quat_mul", "re_trace",
    "ExpansionTerm", "MomentPolynomial", "evaluate_trace_spec", "expansion_terms",
    "grouped_measure", "one_matrix_moment", "symbolic_measure", "GaussianModel", "sample_gbe",
    "sample_matrix_gff", "sample_twisted_matrix_gff", "Connection", "apply_gauge", "holonomy",
    "is_flat", "sample_haar", "tensor_connection", "wilson_loop", "Experiment", "lhs_exact",
    "rhs_exact", "verify_iso", "verify_vector_iso", "wilson_decomposition", "Network", "green",
    "holonomy_green", "path_measure_mass", "sample_path", "BorderData", "Composition",
    "RibbonPairing", "Trail", "border_cycles", "classify_surface", "enumerate_pairings",
    "oriented_trails", "trails", "weight", "wick_oracle",
]

__version__ = "0.1.0"
