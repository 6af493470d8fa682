"""Numerics for singular quasilinear Dirichlet problems reduced to semilinear form."""

from .coefficients import (
    AuditReport,
    BoundedBlend,
    CoefficientFamily,
    FamilyError,
    GridSpec,
    PowerTail,
    audit_assumptions,
    custom_family,
    make_example_family,
)
from .tables import DomainError, MonotoneTable, QuadratureError, empirical_limit
from .transform import (
    TransformPack,
    build_transform,
    const_F_zero,
    const_g_infinity,
    const_g_zero,
    const_h_zero,
    convexity_transform,
)
from .phi import PhiProfile, build_phi, const_phi_zero_oracle, const_phi_zero_paper, constant_table
from .bvp import Ball, Interval, Mesh, NewtonError, SolverConfig, Solution, build_mesh, solve
from .analysis import classify_regularity

__version__ = "0.1.0"
