"""Density ridge estimation with subspace-constrained mean shift.

Kernel and mixture density models with analytic derivatives, the SCMS and
SuRF ridge finders, integral-curve diagnostics, geometric metrics,
synthetic hidden-manifold samplers and scaling experiments.
"""
__version__ = "0.1.0"

from .density import (DensityUnderflowError, GaussianKDE, GaussianMixtureDensity,
                      LocalDensityInfo, density_from_dict, manifold_oracle,
                      silverman_bandwidth)
from .experiments import (ExperimentReport, bandwidth_sweep, bias_experiment,
                          fit_loglog_slope, oracle_ridge, rate_experiment,
                          stability_experiment)
from .geometry import (Circle, PointSet, Segments, dilation_components,
                       distance_to_manifold, distance_to_set, hausdorff,
                       hausdorff_to_manifold)
from .io import DataFormatError, read_points, write_points_csv
from .ridge import (IntegralCurve, PathDiagnostics, RidgeEstimate,
                    SubspaceRidgeFinder, SurfConfig, integral_curve,
                    path_diagnostics, scms_run, scms_step, surf)
from .spectral import (SpectralFrame, check_conditions, jacobi_eigh,
                       perturbation_bounds, spectral_frame)
from .synth import HiddenManifoldModel, cosmic_web, sample

__all__ = [
    "Circle", "DataFormatError", "DensityUnderflowError", "ExperimentReport",
    "GaussianKDE", "GaussianMixtureDensity", "HiddenManifoldModel",
    "IntegralCurve", "LocalDensityInfo", "PathDiagnostics", "PointSet",
    "RidgeEstimate", "Segments", "SpectralFrame", "SubspaceRidgeFinder",
    "SurfConfig", "bandwidth_sweep", "bias_experiment", "check_conditions",
    "cosmic_web", "density_from_dict", "dilation_components",
    "distance_to_manifold", "distance_to_set", "fit_loglog_slope", "hausdorff",
    "hausdorff_to_manifold", "integral_curve", "jacobi_eigh", "manifold_oracle",
    "oracle_ridge", "path_diagnostics", "perturbation_bounds", "rate_experiment",
    "read_points", "sample", "scms_run", "scms_step", "silverman_bandwidth",
    "spectral_frame", "stability_experiment", "surf", "write_points_csv",
]
