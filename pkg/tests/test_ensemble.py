import numpy as np
import pytest
from conftest import EQUATOR

from nkfb.engine import StepConfig
from nkfb.ensemble import (
    EnsembleTask,
    reduce_samples,
    run_ensemble,
    validate_against_oracle,
    z_scores,
)
from nkfb.kernels import TrajectoryError
from nkfb.oracles import OracleCurve, frozen_average, lindblad_propagate, rabi_reference
from nkfb.quantum import ValidationError, bloch_to_density, dephasing_operator, rabi_hamiltonian

W = 2 * np.pi
RHO0 = bloch_to_density(EQUATOR)
ZERO = np.zeros((2, 2))


def task(H=ZERO, gamma=1.0, dt=1e-3, kappa=0, feedback=True, n_steps=100, record_every=1, method="operational"):
    step = StepConfig(H, dephasing_operator(gamma), dt, kappa, feedback)
    return EnsembleTask(step, RHO0, n_steps, record_every, method)


def curve(fn, times, label=""):
    return OracleCurve.from_function(fn, times, label)


class TestReduction:
    def test_single_trajectory(self):
        res = run_ensemble(task(H=rabi_hamiltonian(W, "x"), kappa=10), 1, 7, keep_samples=True)
        assert np.array_equal(res.mean_bloch, res.samples[0])
        assert np.all(res.sem_bloch == 0)

    def test_sem_matches_numpy(self):
        x = np.random.default_rng(0).normal(size=(500, 4, 3))
        mean, sem = reduce_samples(x)
        assert np.allclose(mean, x.mean(axis=0), atol=1e-14)
        assert np.allclose(sem, x.std(axis=0, ddof=1) / np.sqrt(500), atol=1e-14)

    def test_constant_columns_are_exact(self):
        x = np.full((7, 2, 3), 0.1)
        mean, sem = reduce_samples(x)
        assert np.all(mean == 0.1) and np.all(sem == 0)

    def test_initial_record_exact(self):
        res = run_ensemble(task(kappa=5), 33, 1)
        assert np.array_equal(res.mean_bloch[0], EQUATOR)
        assert np.all(res.sem_bloch[0] == 0)

    def test_rejects_empty(self):
        with pytest.raises(ValidationError):
            run_ensemble(task(), 0, 1)


class TestDeterminism:
    @pytest.mark.parametrize("method", ["operational", "ito", "stratonovich"])
    def test_worker_count_invariance(self, method):
        t = task(H=rabi_hamiltonian(W, "x"), kappa=20, n_steps=200, record_every=10, method=method)
        ref = run_ensemble(t, 40, 99, workers=1).to_bytes()
        for w in (4, 16):
            assert run_ensemble(t, 40, 99, workers=w).to_bytes() == ref

    def test_seed_changes_result(self):
        t = task(kappa=10, n_steps=50)
        a, b = run_ensemble(t, 20, 1), run_ensemble(t, 20, 2)
        assert a.to_bytes() != b.to_bytes()
        assert a.config_digest != b.config_digest

    def test_prefix_consistency(self):
        """Trajectory i always uses stream i, so a larger ensemble contains the smaller one."""
        t = task(H=rabi_hamiltonian(W, "x"), kappa=10, n_steps=80)
        small = run_ensemble(t, 10, 5, keep_samples=True).samples
        large = run_ensemble(t, 25, 5, keep_samples=True).samples
        assert np.array_equal(small, large[:10])


def test_sem_scaling():
    t = task(H=rabi_hamiltonian(W, "x"), gamma=0.5, kappa=100, n_steps=600, record_every=20)
    small = run_ensemble(t, 2500, 11)
    big = run_ensemble(t, 10000, 11)
    ratio = np.median(small.sem_bloch[1:]) / np.median(big.sem_bloch[1:])
    assert 1.7 <= ratio <= 2.3


class TestPhysics:
    def test_lindblad_without_feedback(self):
        res = run_ensemble(task(feedback=False, n_steps=100), 5000, 2024)
        sx, sem = res.mean_bloch[-1, 0], res.sem_bloch[-1, 0]
        assert 0.003 < sem < 0.012
        assert abs(sx - np.exp(-0.2) / np.sqrt(2)) <= 4 * sem

    def test_frozen_plateau(self):
        res = run_ensemble(task(kappa=100, n_steps=1000, record_every=50), 5000, 2024)
        sx, sem = res.mean_bloch[-1, 0], res.sem_bloch[-1, 0]
        assert abs(sx - np.exp(-0.2) / np.sqrt(2)) <= 4 * sem

    @pytest.mark.parametrize("method", ["operational", "ito", "stratonovich"])
    def test_lindblad_before_feedback(self, method):
        H, L = rabi_hamiltonian(W, "x"), dephasing_operator(0.5)
        t = task(H=H, gamma=0.5, kappa=400, n_steps=800, record_every=20, method=method)
        res = run_ensemble(t, 2000, 8)
        oracle = curve(lambda s: lindblad_propagate(RHO0, H, L, s), res.times)
        report = validate_against_oracle(res, oracle, k_sigma=4.0, min_fraction=1.0, t_range=(0.0, 0.4 - 1e-3))
        assert report.passed, report.summary()


@pytest.fixture(scope="module")
def case1():
    return run_ensemble(task(kappa=300, n_steps=3000, record_every=30), 5000, 31)


class TestValidation:
    def test_self_consistency(self, case1):
        own = OracleCurve(case1.times, case1.mean_bloch)
        report = validate_against_oracle(case1, own)
        assert report.passed and np.all(report.max_abs_z == 0)

    def test_positive_control(self, case1):
        oracle = curve(lambda s: frozen_average(RHO0, dephasing_operator(1.0), 0.3, s), case1.times)
        report = validate_against_oracle(case1, oracle, k_sigma=4.0)
        assert report.passed, report.summary()

    def test_negative_control(self, case1):
        oracle = curve(lambda s: rabi_reference(RHO0, W, "z", s), case1.times)
        assert not validate_against_oracle(case1, oracle, k_sigma=4.0).passed

    def test_grid_mismatch(self, case1):
        with pytest.raises(ValidationError):
            validate_against_oracle(case1, OracleCurve(case1.times[:-1], case1.mean_bloch[:-1]))

    def test_summary_text(self, case1):
        own = OracleCurve(case1.times, case1.mean_bloch)
        assert validate_against_oracle(case1, own).summary().startswith("PASS")


def test_z_scores_zero_sem():
    z = z_scores(np.array([1.0, 1.0]), np.array([0.0, 0.0]), np.array([1.0, 1.1]))
    assert z[0] == 0 and np.isinf(z[1])


def test_failures_carry_stream_index(monkeypatch):
    import nkfb.ensemble as ens

    def boom(*args, **kwargs):
        raise TrajectoryError(int(args[3][0]), RuntimeError("bad"))

    monkeypatch.setattr(ens, "simulate_batch", boom)
    with pytest.raises(TrajectoryError) as err:
        run_ensemble(task(kappa=3), 5, 1)
    assert err.value.stream_index == 0


def test_sme_requires_delay():
    with pytest.raises(ValidationError):
        task(method="ito", kappa=0)
