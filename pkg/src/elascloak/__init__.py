"""Two-dimensional linear elasticity toolkit for transformation-based
elastic cloaking.

The package builds annular cloaks by pushing an isotropic background
through a regularized radial blow-up map, in two constitutive flavors
(minor-symmetry-breaking and coupled-first-order), approximates them by
fully symmetric and by layered isotropic media, and measures how well
each hides an inclusion from boundary observations. A small unstructured
triangle mesher, P1/P2 elasticity solvers for transmission problems and
their soft/hard contrast limits, and reproducible sweep runners with CSV
and JSON artifacts round out the toolkit.
"""

from .analysis import (ALUMINIUM, ALUMINIUM_DENSITY, DESK_H, STEEL,
                       STEEL_DENSITY, AnalysisError, SweepResult,
                       fit_loglog_slope, norm_l2_boundary, norm_l2_region,
                       run_contrast_sweep, run_convergence_study,
                       run_defect_size_sweep, run_layered_comparison,
                       run_nearcloak_sweep)
from .fem import (CoefficientField, FemError, Field, FunctionSpace,
                  boundary_pairing, pointwise_source, solve_dirichlet,
                  solve_elastodynamic, solve_hard_limit, solve_neumann,
                  solve_soft_limit, solve_transmission, solve_willis)
from .layered import (BackusModuli, LaminateSpec, LayeredCloak,
                      RealizabilityError, backus_effective, backus_target,
                      build_layered_cloak, invert_backus,
                      symmetrize_cosserat, symmetrized_tensor_at)
from .materials import (ConvexityError, IsotropicMaterial, Tensor4,
                        derived_moduli, isotropic_tensor, quadratic_form)
from .mesh import (Disk, Ellipse, GeometrySpec, Mesh, MeshError, Rectangle,
                   build_mesh, refine)
from .output import (write_boundary_trace, write_csv, write_field_csv,
                     write_json, write_vtk)
from .transform import (KohnMap, WillisPointTensors, cloak_gauge_constraints,
                        cosserat_cloak_polar, cosserat_tensor_at, kohn_radial,
                        kohn_radial_inverse, polar_to_cartesian,
                        pushforward_cosserat, pushforward_willis,
                        willis_cloak_polar, willis_tensors_at)

__version__ = "0.1.0"

__all__ = [
    "ALUMINIUM", "ALUMINIUM_DENSITY", "AnalysisError", "BackusModuli",
    "CoefficientField", "ConvexityError", "DESK_H", "Disk", "Ellipse",
    "FemError", "Field", "FunctionSpace", "GeometrySpec", "IsotropicMaterial",
    "KohnMap", "LaminateSpec", "LayeredCloak", "Mesh", "MeshError",
    "Rectangle", "RealizabilityError", "STEEL", "STEEL_DENSITY",
    "SweepResult", "Tensor4", "WillisPointTensors", "backus_effective",
    "backus_target", "boundary_pairing", "build_layered_cloak", "build_mesh",
    "cloak_gauge_constraints", "cosserat_cloak_polar", "cosserat_tensor_at",
    "derived_moduli", "fit_loglog_slope", "invert_backus", "isotropic_tensor",
    "kohn_radial", "kohn_radial_inverse", "norm_l2_boundary",
    "norm_l2_region", "pointwise_source", "polar_to_cartesian",
    "pushforward_cosserat", "pushforward_willis", "quadratic_form", "refine",
    "run_contrast_sweep", "run_convergence_study", "run_defect_size_sweep",
    "run_layered_comparison", "run_nearcloak_sweep", "solve_dirichlet",
    "solve_elastodynamic", "solve_hard_limit", "solve_neumann",
    "solve_soft_limit", "solve_transmission", "solve_willis",
    "symmetrize_cosserat", "symmetrized_tensor_at", "willis_cloak_polar",
    "willis_tensors_at", "write_boundary_trace", "write_csv",
    "write_field_csv", "write_json", "write_vtk",
]
