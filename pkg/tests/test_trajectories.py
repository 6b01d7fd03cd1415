import math

import numpy as np
import pytest

from relclock import _accel
from relclock.correlators import EnvironmentSpec
from relclock.gkls import DensityMatrix, GKLSModel, qubit_decay_model
from relclock.kernels import GaussianKernel
from relclock.trajectories import (
    dump_trajectories,
    ensemble_compare,
    sample_colored_noise,
    unravel_linear,
    write_ensemble_csv,
)

SZ = np.array([[1, 0], [0, -1]], dtype=complex)
SM = np.array([[0, 0], [1, 0]], dtype=complex)


class TestColoredNoise:
    def test_target_covariance_psd_and_hermitian(self):
        env = EnvironmentSpec()
        field = sample_colored_noise(env, GaussianKernel(1.0), np.linspace(0, 4, 16), 100, seed=1)
        M = field.target_covariance
        assert np.abs(M - M.conj().T).max() <= 1e-12 * np.abs(M).max()
        assert np.linalg.eigvalsh(M).min() >= -1e-8 * np.real(np.diag(M)).max()

    def test_sample_covariance_converges(self):
        env = EnvironmentSpec()
        field = sample_colored_noise(env, GaussianKernel(1.0), np.linspace(0, 4, 24), 20_000, seed=3)
        err = np.linalg.norm(field.sample_covariance() - field.target_covariance)
        assert err / np.linalg.norm(field.target_covariance) <= 0.05

    def test_coupling_off_gives_zero(self):
        env = EnvironmentSpec(coupling_g=0.0)
        field = sample_colored_noise(env, GaussianKernel(1.0), np.linspace(0, 2, 8), 50, seed=5)
        assert np.all(field.samples == 0.0)

    def test_single_point_variance(self):
        env = EnvironmentSpec()
        n = 4000
        field = sample_colored_noise(env, GaussianKernel(1.0), [0.0], n, seed=9)
        c0 = field.target_covariance[0, 0].real
        var = np.mean(np.abs(field.samples) ** 2)
        assert abs(var - c0) <= 3.0 / math.sqrt(n) * c0

    def test_seed_reproducibility(self):
        env = EnvironmentSpec()
        a = sample_colored_noise(env, GaussianKernel(1.0), np.linspace(0, 2, 8), 64, seed=11)
        b = sample_colored_noise(env, GaussianKernel(1.0), np.linspace(0, 2, 8), 64, seed=11)
        assert np.array_equal(a.samples, b.samples)

    def test_grid_size_limit(self):
        with pytest.raises(ValueError):
            sample_colored_noise(EnvironmentSpec(), GaussianKernel(1.0), np.zeros(300), 2, seed=1)


class TestUnravelLinear:
    def test_mean_matches_master_equation(self):
        m = qubit_decay_model(1.0, 1.0)
        rho0 = DensityMatrix.pure([1, 0])
        ens = unravel_linear(m, rho0, t=1.0, dt=1e-3, n_traj=2000, seed=2)
        max_dev, max_sigma = ensemble_compare(ens, m, rho0)
        stat = ens.stat_error.max()
        assert max_dev <= max(0.05, 5.0 * stat)
        assert max_sigma <= 5.0

    def test_mean_trace_within_errors(self):
        m = qubit_decay_model(1.0, 1.0)
        rho0 = DensityMatrix.pure([1, 0])
        ens = unravel_linear(m, rho0, t=1.0, dt=1e-3, n_traj=2000, seed=4)
        for ms, se in zip(ens.mean_state, ens.stat_error):
            assert abs(np.trace(ms).real - 1.0) <= max(3.0 * se, 1e-12)

    def test_zero_dissipation_is_deterministic(self):
        m = GKLSModel(2, 0.5 * SZ, [(SM, -1.0)], np.zeros((1, 1)))
        rho0 = DensityMatrix.pure([0.6, 0.8])
        ens = unravel_linear(m, rho0, t=0.5, dt=1e-3, n_traj=32, seed=6)
        spread = np.abs(ens.states - ens.states[:1]).max()
        assert spread <= 1e-12
        max_dev, _ = ensemble_compare(ens, m, rho0)
        assert max_dev <= 1e-5  # euler phase error only

    def test_single_trajectory_norm_drifts(self):
        m = qubit_decay_model(1.0, 1.0)
        ens = unravel_linear(m, DensityMatrix.pure([1, 0]), 1.0, 1e-3, 1, seed=8)
        assert ens.states.shape == (1, 11, 2)
        norm_final = np.linalg.norm(ens.states[0, -1])
        assert norm_final != pytest.approx(1.0, abs=1e-3)

    def test_chunk_schedule_independence(self):
        # trajectory r depends only on (seed, r): a run with more
        # trajectories reproduces the small run bit for bit
        m = qubit_decay_model(1.0, 1.0)
        rho0 = DensityMatrix.pure([1, 0])
        small = unravel_linear(m, rho0, 0.2, 1e-3, 5, seed=13, n_out=5)
        large = unravel_linear(m, rho0, 0.2, 1e-3, 300, seed=13, n_out=5)
        assert np.array_equal(small.states, large.states[:5])

    def test_mc_scaling(self):
        m = qubit_decay_model(1.0, 1.0)
        rho0 = DensityMatrix.pure([1, 0])
        dev1 = ensemble_compare(unravel_linear(m, rho0, 1.0, 1e-3, 500, seed=21), m, rho0)[0]
        dev4 = ensemble_compare(unravel_linear(m, rho0, 1.0, 1e-3, 2000, seed=21), m, rho0)[0]
        ratio = dev1 / dev4
        assert 2.0 / 1.4 <= ratio <= 2.0 * 1.4

    def test_preconditions(self):
        m = qubit_decay_model(1.0, 1.0)
        mixed = DensityMatrix.maximally_mixed(2)
        with pytest.raises(ValueError):
            unravel_linear(m, mixed, 1.0, 1e-3, 10, seed=1)
        with pytest.raises(ValueError):
            unravel_linear(m, DensityMatrix.pure([1, 0]), 1.0, 0.5, 10, seed=1)
        K = np.array([[1.0, 0.2], [0.2, 1.0]], dtype=complex)
        m2 = GKLSModel(2, 0.5 * SZ, [(SM, -1.0), (SM, -1.0)], K)
        with pytest.raises(ValueError):
            unravel_linear(m2, DensityMatrix.pure([1, 0]), 1.0, 1e-3, 10, seed=1)

    def test_site_noise_streams_uncorrelated(self):
        # hypersurface-white discretization: channels at distinct sites draw
        # independent increments; their sample cross covariance vanishes
        n_traj, n_steps = 400, 200
        dt = 1e-2
        acc = 0.0
        for r in range(n_traj):
            g = np.random.Generator(
                np.random.Philox(key=np.array([99, r], dtype=np.uint64))
            ).standard_normal((n_steps, 2, 2))
            xi = math.sqrt(dt / 2) * (g[..., 0] + 1j * g[..., 1])
            acc += np.sum(xi[:, 0] * np.conj(xi[:, 1]))
        cross = abs(acc) / (n_traj * n_steps * dt)
        assert cross <= 4.0 / math.sqrt(n_traj)


class TestBackends:
    def test_step_kernels_agree(self):
        if _accel.step_chunk_numba is None:
            pytest.skip("numba unavailable")
        rng = np.random.default_rng(0)
        d, steps, chunk = 2, 50, 8
        psi0 = np.array([1.0, 0.0], dtype=complex)
        heff_dt = -1j * 1e-2 * (0.5 * SZ - 0.25j * (SM.conj().T @ SM))
        ls = np.array([SM], dtype=complex)
        noise = (rng.normal(size=(chunk, steps, 1)) + 1j * rng.normal(size=(chunk, steps, 1))) * 0.07
        out_a = np.empty((chunk, 6, d), dtype=complex)
        out_b = np.empty((chunk, 6, d), dtype=complex)
        _accel.step_chunk_numpy(psi0, heff_dt, ls, noise, 10, out_a)
        _accel.step_chunk_numba(psi0, heff_dt, ls, noise, 10, out_b)
        assert np.abs(out_a - out_b).max() <= 1e-12

    def test_fv_kernels_agree(self):
        if _accel.fv_step_numba is None:
            pytest.skip("numba unavailable")
        rng = np.random.default_rng(1)
        blocks = rng.normal(size=(32, 2, 2)) + 1j * rng.normal(size=(32, 2, 2))
        V = np.array([[2.0, 0.0], [0.0, -2.0]])
        a = _accel.fv_step_numpy(blocks, V, 1.0, 0.25, 1e-3)
        b = _accel.fv_step_numba(blocks, V, 1.0, 0.25, 1e-3)
        assert np.abs(a - b).max() <= 1e-13
        # advection-only branch
        a0 = _accel.fv_step_numpy(blocks, V, 0.0, 0.25, 1e-3)
        b0 = _accel.fv_step_numba(blocks, V, 0.0, 0.25, 1e-3)
        assert np.abs(a0 - b0).max() <= 1e-13


class TestArtifacts:
    def test_binary_dump_roundtrip(self, tmp_path):
        m = qubit_decay_model(1.0, 1.0)
        ens = unravel_linear(m, DensityMatrix.pure([1, 0]), 0.1, 1e-3, 7, seed=3, n_out=6)
        path = tmp_path / "traj.bin"
        dump_trajectories(ens, path)
        back = np.fromfile(path, dtype="<c8").reshape(7, 6, 2)
        assert np.abs(back - ens.states).max() <= 1e-6  # complex64 rounding

    def test_csv_columns(self, tmp_path):
        m = qubit_decay_model(1.0, 1.0)
        ens = unravel_linear(m, DensityMatrix.pure([1, 0]), 0.1, 1e-3, 7, seed=3, n_out=6)
        path = tmp_path / "ens.csv"
        write_ensemble_csv(ens, path)
        header = path.read_text().splitlines()[0].split(",")
        assert header[0] == "t"
        assert header[-1] == "stat_error"
        assert "re_rho_01" in header
