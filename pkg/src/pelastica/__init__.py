"""Flat-core pinned p-elasticae: special functions, curve construction, stability checks."""

from ._kernels import backend, set_backend, use_backend
from .curves import PinnedBoundary, SampledCurve, concat, concat_all, evaluate, loop, prepend_point, restrict, segment
from .energy import bending_energy, energy_report, signed_curvature, sobolev_distance, tangential_angle
from .errors import (
    DomainError,
    GeometryError,
    GluingError,
    IndexTooSmallError,
    InputError,
    LocationError,
    NumericalError,
    PElasticaError,
    ResolutionError,
    UnsupportedError,
)
from .flatcore import (
    FlatCoreSpec,
    build,
    classify_arrangement,
    model_boundary,
    required_segment_budget,
    stability_verdict,
    validate_against_boundary,
)
from .optimize import Polyline, criticality_residual, discretize, relax, stability_probe
from .perturbations import (
    check_condition_C,
    cyclic_shift,
    detect_joints,
    insert_segments_at_joints,
    locate_perturbed_joints,
    rotation_perturbation,
)
from .special import PContext, amplitude, complete_K, derivative_identities, p_elliptic_F, sech_p, tanh_p

__version__ = "0.1.0"
