"""The batched qubit kernels against the single-trajectory matrix implementations."""

import numpy as np
import pytest
from conftest import EQUATOR

from nkfb.engine import StepConfig, run_trajectory_from_noise
from nkfb.kernels import QubitModel, TrajectoryError, bloch_density, rotation_matrix, simulate_batch
from nkfb.noise import NoiseStream
from nkfb.quantum import bloch_to_density, dephasing_operator, rabi_hamiltonian
from nkfb.sme import run_sme_trajectory

W = 2 * np.pi
DRIVES = {"x": rabi_hamiltonian(W, "x"), "z": rabi_hamiltonian(W, "z"), "none": np.zeros((2, 2))}


def _noise(n_traj, n_steps, dt, seed=3):
    return np.stack([NoiseStream(seed, i).samples(n_steps, dt) for i in range(n_traj)])


@pytest.mark.parametrize("drive", sorted(DRIVES))
@pytest.mark.parametrize("method", ["operational", "ito", "stratonovich"])
@pytest.mark.parametrize("feedback", [True, False])
def test_matches_matrix_path(drive, method, feedback):
    dt, n, kappa = 1e-3, 400, 25
    H, L = DRIVES[drive], dephasing_operator(0.8)
    cfg = StepConfig(H, L, dt, kappa, feedback)
    noise = _noise(3, n, dt)
    model = QubitModel.from_operators(H, L, dt)
    batch = simulate_batch(method, model, EQUATOR, range(3), 0, n, 10, kappa, feedback, noise=noise)
    rho0 = bloch_to_density(EQUATOR)
    for i in range(3):
        if method == "operational":
            ref = run_trajectory_from_noise(cfg, rho0, noise[i], 10).bloch
        else:
            ref = run_sme_trajectory(method, cfg, rho0, noise[i], 10).bloch
        assert np.max(np.abs(batch[i] - ref)) <= 1e-12


def test_streams_match_explicit_noise():
    dt, n = 1e-3, 2500  # crosses a noise block boundary
    model = QubitModel.from_operators(DRIVES["x"], dephasing_operator(1.0), dt)
    a = simulate_batch("operational", model, EQUATOR, [4, 9], 77, n, 50, 10)
    noise = np.stack([NoiseStream(77, i).samples(n, dt) for i in (4, 9)])
    b = simulate_batch("operational", model, EQUATOR, [4, 9], 77, n, 50, 10, noise=noise)
    assert np.array_equal(a, b)


def test_batch_composition_is_bitwise_invariant():
    dt, n = 1e-3, 300
    model = QubitModel.from_operators(DRIVES["x"], dephasing_operator(1.0), dt)
    for method in ("operational", "ito", "stratonovich"):
        whole = simulate_batch(method, model, EQUATOR, range(7), 5, n, 1, 20)
        parts = np.concatenate([simulate_batch(method, model, EQUATOR, idx, 5, n, 1, 20) for idx in ([0, 1], [2], [3, 4, 5, 6])])
        assert np.array_equal(whole, parts)


def test_first_record_is_initial_state():
    model = QubitModel.from_operators(DRIVES["z"], dephasing_operator(1.0), 1e-3)
    out = simulate_batch("operational", model, EQUATOR, range(4), 1, 10)
    assert np.array_equal(out[:, 0], np.broadcast_to(EQUATOR, (4, 3)))


def test_failure_reports_stream_index():
    model = QubitModel.from_operators(DRIVES["none"], dephasing_operator(1.0), 0.05)
    noise = np.zeros((3, 5))
    noise[2, 1] = np.nan  # corrupt record on trajectory 12; Kraus steps never leave the ball
    with pytest.raises(TrajectoryError) as err:
        simulate_batch("ito", model, EQUATOR, [10, 11, 12], 0, 5, kappa=1, noise=noise)
    assert err.value.stream_index == 12


def test_rejects_zero_delay_sme():
    model = QubitModel.from_operators(DRIVES["none"], dephasing_operator(1.0), 1e-3)
    with pytest.raises(ValueError, match="operational"):
        simulate_batch("stratonovich", model, EQUATOR, [0], 0, 10, kappa=0)


def test_rejects_qutrits():
    with pytest.raises(Exception):
        QubitModel.from_operators(np.eye(3), np.eye(3), 1e-3)


def test_helpers():
    R = rotation_matrix([0, 0, 1], np.pi / 2)
    assert np.allclose(R @ [1, 0, 0], [0, 1, 0])
    assert np.allclose(bloch_density(np.array([EQUATOR])), bloch_to_density(EQUATOR)[None])
