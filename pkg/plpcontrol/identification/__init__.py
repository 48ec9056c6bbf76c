from .consistent_set import ConsistentSet, narrow_and_estimate, residual_consistent_set
from .tpm import TpmEstimate, point_estimate, update_tpm

__all__ = [
    "ConsistentSet",
    "narrow_and_estimate",
    "residual_consistent_set",
    "TpmEstimate",
    "point_estimate",
    "update_tpm",
]
