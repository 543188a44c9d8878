"""Bound states of a bosonic mode coupled to a gapped reservoir.

Detects and characterizes dissipation-resilient bound states two independent
ways: an exact long-term solution of the quadratic model, and a parallel
reaction-coordinate mapping whose arrowhead eigenvalue problem reproduces the
same bound-state frequency.  A truncated-Fock Lindblad simulation measures the
bound-state lifetime once a weak quartic anharmonicity is switched on.
"""
from .exact import (
    BoundStateReport,
    LongTermMoments,
    bound_state_exists,
    bound_state_frequency,
    bound_state_report,
    commutator_value,
    critical_coupling,
    long_term_moments,
)
from .excitation import ArrowheadMatrix, EigenvalueBounds, ExcitationSpectrum
from .rcmap import RcDecomposition, RcMode, decompose
from .spectral import Band, SpectralFunction, SystemParams, bose_occupation

__version__ = "0.1.0"

__all__ = [
    "ArrowheadMatrix",
    "Band",
    "BoundStateReport",
    "EigenvalueBounds",
    "ExcitationSpectrum",
    "LongTermMoments",
    "RcDecomposition",
    "RcMode",
    "SpectralFunction",
    "SystemParams",
    "bose_occupation",
    "bound_state_exists",
    "bound_state_frequency",
    "bound_state_report",
    "commutator_value",
    "critical_coupling",
    "decompose",
    "long_term_moments",
    "__version__",
]
