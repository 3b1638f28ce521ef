"""Seamless parametrization metrics with prescribed holonomy via Newton
iteration in Penner coordinates on intrinsic Delaunay triangulations."""

from .errors import *  # noqa: F401,F403
from .fixtures import genus2, octahedron, tetrahedron, torus_grid, torus_of_revolution
from .holonomy import (
    ConstraintSystem,
    DualLoop,
    HolonomySignature,
    ValidationReport,
    auto_trivial_signature,
    build_constraints,
    holonomy_angle,
    homology_basis,
    parse_signature,
    read_signature,
    reroute_loop_after_flip,
    signature_document,
    validate_signature,
)
from .layout import LayoutResult, lay_out, rmsre, seamlessness_report, symmetric_stretch
from .mesh import Mesh, build_mesh, edge_lengths, log_lengths, read_obj
from .metric import (
    FlipTrace,
    angle_gradient,
    corner_angles,
    diff_make_delaunay,
    diff_ptolemy_row,
    is_delaunay,
    make_delaunay,
    ptolemy_flip,
    vertex_angle_sums,
)
from .preprocess import PreprocessOptions, interpolate_metric
from .solver import (
    SolveOptions,
    SolveResult,
    conformal_solve,
    constraint_jacobian,
    constraint_residual,
    newton_solve,
)

__version__ = "0.1.0"
