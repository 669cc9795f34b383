"""Primitive integral points on level sets of integral quadratic forms:
enumeration, local arithmetic, orthogonal-lattice shapes and grids, and
equidistribution diagnostics."""

from .forms import IntegralQuadraticForm, Q4, diagonal_form, tau, theta, make_aT
from .enumerate import enum_definite, enum_hyperbolic_sliced, enum_primitive_ball
from .localarith import hilbert_symbol, coisotropic, transitivity_witness, enumerate_residue_levelset
from .orthogeom import ortho_lattice, complete_to_sl, shape_descriptor, grid_descriptor
from .scalingmaps import scale_map, dual_scale_map, unipotent_comparator, project_levelset

__version__ = "0.1.0"

__all__ = [
    "IntegralQuadraticForm",
    "Q4",
    "diagonal_form",
    "tau",
    "theta",
    "make_aT",
    "enum_definite",
    "enum_hyperbolic_sliced",
    "enum_primitive_ball",
    "hilbert_symbol",
    "coisotropic",
    "transitivity_witness",
    "enumerate_residue_levelset",
    "ortho_lattice",
    "complete_to_sl",
    "shape_descriptor",
    "grid_descriptor",
    "scale_map",
    "dual_scale_map",
    "unipotent_comparator",
    "project_levelset",
]
