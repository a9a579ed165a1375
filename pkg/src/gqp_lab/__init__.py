"""Geometric quantum potential laboratory.

Curvature and normal-field densities on surfaces of revolution, integrated
invariants of the Gauss map, and bound states of the surface Hamiltonian.
"""
__version__ = "0.1.0"

from .errors import (DegreeIndeterminateError, DiscretizationError, GqpError, InvalidInputError,
                     InvariantViolation, IrregularPointError, NonConvergedError, OutOfDomainError)
from .potential import NATURAL, PhysicalUnits, discrepancy_report, gqp, potential_fields
from .spectral import (SpectralProblem, SpectralResult, count_bound_states, cross_check_2d,
                       discretize_1d, reduce_axisymmetric)
from .surfaces import (SurfaceChart, catenoid, bilayer_neck, curvatures, evaluate, make_chart, plane,
                       sigma_densities, sphere, torus)
from .topology import TopoReport, analyze_topology, build_grid, gauss_map_degrees, truncation_study
from .tridiag import SymTridiagonal, eigen_lowest

__all__ = [
    "__version__",
    "GqpError", "InvalidInputError", "OutOfDomainError", "IrregularPointError", "DiscretizationError",
    "DegreeIndeterminateError", "NonConvergedError", "InvariantViolation",
    "PhysicalUnits", "NATURAL", "gqp", "potential_fields", "discrepancy_report",
    "SurfaceChart", "make_chart", "plane", "sphere", "catenoid", "torus", "bilayer_neck",
    "evaluate", "curvatures", "sigma_densities",
    "build_grid", "analyze_topology", "gauss_map_degrees", "truncation_study", "TopoReport",
    "SpectralProblem", "SpectralResult", "reduce_axisymmetric", "discretize_1d",
    "count_bound_states", "cross_check_2d",
    "SymTridiagonal", "eigen_lowest",
]
