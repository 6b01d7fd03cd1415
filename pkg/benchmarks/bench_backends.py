#!/usr/bin/env python3
"""Benchmark the numba kernels against the pure-numpy fallback.

Times the two hot paths (trajectory stepping and the finite-volume
drift-diffusion step) on identical inputs and checks that the backends agree
to roundoff.  Run after `pip install -e .`:

    python benchmarks/bench_backends.py [--traj 2048] [--steps 2000] [--cells 256]
"""

import argparse
import math
import time

import numpy as np
from scipy.linalg import expm

from relclock import _accel


def time_call(fn, *args, repeat=3):
    best = math.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best, out


def bench_trajectories(n_traj, n_steps):
    rng = np.random.default_rng(0)
    dt = 1e-3
    sz = np.array([[1, 0], [0, -1]], dtype=complex)
    sm = np.array([[0, 0], [1, 0]], dtype=complex)
    h_eff = 0.5 * sz - 0.5j * (sm.conj().T @ sm)
    u_step = np.ascontiguousarray(expm(-1j * dt * h_eff))
    ls = np.ascontiguousarray(np.array([sm]))
    psi0 = np.array([1.0, 0.0], dtype=complex)
    noise = math.sqrt(dt / 2) * (
        rng.normal(size=(n_traj, n_steps, 1)) + 1j * rng.normal(size=(n_traj, n_steps, 1))
    )
    stride = n_steps // 10
    out_np = np.empty((n_traj, 11, 2), dtype=complex)
    t_np, _ = time_call(_accel.step_chunk_numpy, psi0, u_step, ls, noise, stride, out_np)
    print(f"trajectory stepping  numpy: {t_np * 1e3:9.1f} ms")
    if _accel.step_chunk_numba is not None:
        out_nb = np.empty_like(out_np)
        _accel.step_chunk_numba(psi0, u_step, ls, noise, stride, out_nb)  # compile
        t_nb, _ = time_call(_accel.step_chunk_numba, psi0, u_step, ls, noise, stride, out_nb)
        diff = np.abs(out_np - out_nb).max()
        print(f"trajectory stepping  numba: {t_nb * 1e3:9.1f} ms "
              f"(speedup {t_np / t_nb:5.1f}x, max |diff| {diff:.2e})")
        assert diff <= 1e-10
    else:
        print("trajectory stepping  numba: unavailable")


def bench_fv(n_cells, n_steps):
    rng = np.random.default_rng(1)
    blocks = rng.normal(size=(n_cells, 2, 2)) + 1j * rng.normal(size=(n_cells, 2, 2))
    blocks = 0.5 * (blocks + blocks.conj().transpose(0, 2, 1))
    V = np.array([[4.0, 0.0], [0.0, -4.0]])
    dz, dt, D = 0.25, 1e-3, 1.0

    def run(step):
        b = blocks.copy()
        for _ in range(n_steps):
            b = step(b, V, D, dz, dt)
        return b

    t_np, ref = time_call(run, _accel.fv_step_numpy, repeat=2)
    print(f"finite-volume step   numpy: {t_np * 1e3:9.1f} ms")
    if _accel.fv_step_numba is not None:
        run(_accel.fv_step_numba)  # compile
        t_nb, got = time_call(run, _accel.fv_step_numba, repeat=2)
        diff = np.abs(ref - got).max()
        print(f"finite-volume step   numba: {t_nb * 1e3:9.1f} ms "
              f"(speedup {t_np / t_nb:5.1f}x, max |diff| {diff:.2e})")
        assert diff <= 1e-10
    else:
        print("finite-volume step   numba: unavailable")


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--traj", type=int, default=2048)
    ap.add_argument("--steps", type=int, default=2000)
    ap.add_argument("--cells", type=int, default=256)
    args = ap.parse_args()
    print(f"active backend: {_accel.backend_name()}")
    bench_trajectories(args.traj, args.steps)
    bench_fv(args.cells, args.steps)


if __name__ == "__main__":
    main()
