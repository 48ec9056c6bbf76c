from __future__ import annotations

import numpy as np
import pytest

from plpcontrol.dynamics import FixedDisturbance, UniformDisturbance, sample_mode_sequence, simulate
from plpcontrol.dynamics.chain import transition_frequencies
from plpcontrol.dynamics.network import hop_neighborhood, is_connected, path_edges, random_topology, topology_to_dynamics
from plpcontrol.dynamics.simulation import realization_hash
from plpcontrol.errors import DivergenceError, NonStochasticMatrixError
from plpcontrol.models import JumpLinearSystem, ModeChain, NetworkTopology, switch_times_of


def test_alternating_chain_switches_every_dwell(alternating_chain):
    sequence = sample_mode_sequence(alternating_chain, num_steps=6, dwell=2, seed=3)

    assert sequence.modes.tolist() == [0, 0, 1, 1, 0, 0]
    assert sequence.switch_times == [2, 4]
    assert sequence.epoch_modes.tolist() == [0, 1, 0]


def test_switches_only_on_epoch_boundaries():
    chain = ModeChain(tpm=np.array([[0.1, 0.6, 0.3], [0.5, 0.2, 0.3], [0.3, 0.3, 0.4]]))
    sequence = sample_mode_sequence(chain, num_steps=500, dwell=7, seed=11)

    assert all(t % 7 == 0 for t in sequence.switch_times)
    assert len(sequence) == 500


def test_transition_frequencies_approach_tpm():
    tpm = np.array([[0.2, 0.8], [0.6, 0.4]])
    sequence = sample_mode_sequence(ModeChain(tpm=tpm), num_steps=20_000, seed=5)

    assert np.allclose(transition_frequencies(sequence.epoch_modes, 2), tpm, atol=0.03)


def test_same_seed_same_sequence(fair_coin):
    first = sample_mode_sequence(fair_coin, num_steps=50, seed=9)
    second = sample_mode_sequence(fair_coin, num_steps=50, seed=9)

    assert np.array_equal(first.modes, second.modes)


def test_chain_validation():
    with pytest.raises(NonStochasticMatrixError):
        ModeChain(tpm=np.array([[0.5, 0.4], [0.5, 0.5]]))
    with pytest.raises(NonStochasticMatrixError):
        ModeChain(tpm=np.array([[1.2, -0.2], [0.5, 0.5]]))
    with pytest.raises(ValueError):
        ModeChain(tpm=np.eye(2), initial_mode=2)


def test_irreducibility(alternating_chain):
    assert alternating_chain.is_irreducible()
    assert not ModeChain(tpm=np.eye(2)).is_irreducible()


def test_laplacian_dynamics_preserve_consensus():
    topo = NetworkTopology(num_nodes=3, edges_per_mode=(path_edges(3),), coupling_gain=0.2)
    A = topology_to_dynamics(topo, 0)

    expected = np.array([[0.8, 0.2, 0.0], [0.2, 0.6, 0.2], [0.0, 0.2, 0.8]])
    assert np.allclose(A, expected)
    assert np.allclose(A @ np.ones(3), np.ones(3))


def test_hop_neighborhood_on_path():
    topo = NetworkTopology(num_nodes=5, edges_per_mode=(path_edges(5),))

    assert hop_neighborhood(topo, 0, 2, 0) == frozenset({2})
    assert hop_neighborhood(topo, 0, 2, 1) == frozenset({1, 2, 3})
    assert hop_neighborhood(topo, 0, 0, 2) == frozenset({0, 1, 2})


def test_topology_rejects_self_loops():
    with pytest.raises(ValueError):
        NetworkTopology(num_nodes=3, edges_per_mode=(((1, 1),),))


def test_random_topology_is_connected():
    topo = random_topology(num_nodes=8, num_modes=3, edge_prob=0.1, seed=4, coupling_gain=0.1)

    assert topo.num_modes == 3
    assert all(is_connected(topo, mode) for mode in range(3))


def test_simulate_scalar_open_loop():
    system = JumpLinearSystem(per_mode=((np.array([[0.5]]), np.array([[1.0]])),))
    trajectory = simulate(system, [0, 0, 0], None, FixedDisturbance(np.zeros((3, 1))), horizon=3, x0=np.array([1.0]))

    assert np.allclose(trajectory.states[:, 0], [1.0, 0.5, 0.25, 0.125])
    assert trajectory.switch_times == []


def test_simulate_applies_the_active_mode(scalar_system):
    trajectory = simulate(scalar_system, [0, 1, 1], None, FixedDisturbance(np.zeros((3, 1))), horizon=3, x0=np.array([1.0]))

    assert np.allclose(trajectory.states[:, 0], [1.0, 0.5, -0.25, 0.125])
    assert trajectory.switch_times == [1]
    assert trajectory.segments() == [(0, 1, 0), (1, 3, 1)]


def test_divergence_keeps_partial_states():
    system = JumpLinearSystem(per_mode=((np.array([[10.0]]), np.array([[1.0]])),))

    with pytest.raises(DivergenceError) as info:
        simulate(system, [0] * 20, None, UniformDisturbance(0.0), horizon=20, x0=np.array([1.0]))

    assert info.value.step == 13
    assert info.value.partial_states.shape == (14, 1)


def test_realization_hash_depends_on_draws():
    modes = np.array([0, 1, 1])
    draws = UniformDisturbance(0.1).sample(3, 2, np.random.default_rng(0))
    again = UniformDisturbance(0.1).sample(3, 2, np.random.default_rng(0))

    assert realization_hash(modes, draws) == realization_hash(modes, again)
    assert realization_hash(modes, draws) != realization_hash(np.array([0, 0, 1]), draws)


def test_switch_times_of():
    assert switch_times_of([0, 0, 1, 1, 2, 0]) == [2, 4, 5]
