from .controller import ControllerState, SlsController, controller_step
from .data_driven import DataSegment, data_driven_synthesize
from .hankel import HankelMatrix, build_hankel, persistence_check
from .model_based import SlsProblem, SystemResponse, locality_masks, synthesize, validate_achievability
from .robust import synthesize_robust
from .solver import equality_constrained_lstsq, psd_sqrt
from .validation import ClosedLoopReport, finite_horizon_lqr, validate_closed_loop

__all__ = [
    "ControllerState",
    "SlsController",
    "controller_step",
    "DataSegment",
    "data_driven_synthesize",
    "HankelMatrix",
    "build_hankel",
    "persistence_check",
    "SlsProblem",
    "SystemResponse",
    "locality_masks",
    "synthesize",
    "validate_achievability",
    "synthesize_robust",
    "equality_constrained_lstsq",
    "psd_sqrt",
    "ClosedLoopReport",
    "finite_horizon_lqr",
    "validate_closed_loop",
]
