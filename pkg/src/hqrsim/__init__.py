"""Closed-form model, brute-force oracle and optimiser for one squeezed-light repeater segment."""

from .link import LinkResult, UndefinedConditionalState, UnphysicalParameters, evaluate, fidelity, success_probability
from .numerics import QuadratureSpec, erf_complex, integrate_adaptive, maximize
from .states import LinkConfig, MeasurementConfig, SqueezedQumode, transmittance

__all__ = [
    "LinkConfig",
    "LinkResult",
    "MeasurementConfig",
    "QuadratureSpec",
    "SqueezedQumode",
    "UndefinedConditionalState",
    "UnphysicalParameters",
    "erf_complex",
    "evaluate",
    "fidelity",
    "integrate_adaptive",
    "maximize",
    "success_probability",
    "transmittance",
]
