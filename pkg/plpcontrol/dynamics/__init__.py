from .chain import ModeSequence, sample_mode_sequence
from .network import hop_neighborhood, jump_system_from_topology, topology_to_dynamics
from .simulation import FixedDisturbance, GaussianDisturbance, UniformDisturbance, simulate

__all__ = [
    "ModeSequence",
    "sample_mode_sequence",
    "hop_neighborhood",
    "jump_system_from_topology",
    "topology_to_dynamics",
    "FixedDisturbance",
    "GaussianDisturbance",
    "UniformDisturbance",
    "simulate",
]
