"""Pairwise concurrence and ground-state geometric phase of free-fermion lattices."""

from .analysis import critical_scan, derivative, scaling_fit
from .concurrence import concurrence_closed, wootters_oracle
from .correlators import CorrelationSet, correlations_tl, geometric_phase_tl, gp_gamma_zero
from .finite import check_bounds, correlations_finite, diagonalize, many_body_oracle, site_gp
from .model import ModelParams, build_couplings, dispersion, phase_label
from .quadrature import QuadratureSpec, integrate_bz, refine_until

__version__ = "0.1.0"

__all__ = [
    "CorrelationSet",
    "ModelParams",
    "QuadratureSpec",
    "build_couplings",
    "check_bounds",
    "concurrence_closed",
    "correlations_finite",
    "correlations_tl",
    "critical_scan",
    "derivative",
    "diagonalize",
    "dispersion",
    "geometric_phase_tl",
    "gp_gamma_zero",
    "integrate_bz",
    "many_body_oracle",
    "phase_label",
    "refine_until",
    "scaling_fit",
    "site_gp",
    "wootters_oracle",
]
