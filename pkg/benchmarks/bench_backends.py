#!/usr/bin/env python3
"""Benchmark the numba kernels against the pure-numpy fallback.

Runs the two hot Monte-Carlo workloads (controlled-path value estimation and
two-sided exit estimation) under both backends and prints a timing table.
The backend is swapped in-process by flipping divbarrier.sim.NUMBA_ENABLED,
which is exactly what DIVBARRIER_NUMBA=0 does at import time.

Usage:
    python benchmarks/bench_backends.py [--paths 20000] [--dt 1e-3]
"""

import argparse
import time

import divbarrier.sim as simmod
from divbarrier import ModelParams, solve_barriers
from divbarrier.scale import build_context
from divbarrier.sim import SimConfig, estimate_exit_both, estimate_value_mc


def run_workloads(n_paths: int, dt: float):
    p = ModelParams(0.1, 0.5, 0.1, 0.5, a=1.0, q=1.0, beta=0.25)
    pair = solve_barriers(build_context(p)).best
    cfg = SimConfig(dt=dt, horizon=10.0, n_paths=n_paths, seed=42, antithetic=True)
    t0 = time.perf_counter()
    est = estimate_value_mc(p, pair, cfg, 0.8)
    t_value = time.perf_counter() - t0

    pe = ModelParams(0.0, 0.0, 0.5, 0.5, a=1.0, q=0.2, beta=0.3)
    cfg_e = SimConfig(dt=dt, horizon=30.0, n_paths=n_paths, seed=7)
    t0 = time.perf_counter()
    dn, up = estimate_exit_both(pe, cfg_e, 1.0, 0.3, 1.9)
    t_exit = time.perf_counter() - t0
    return t_value, t_exit, est.mean, dn.mean


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--paths", type=int, default=20000)
    ap.add_argument("--dt", type=float, default=1e-3)
    args = ap.parse_args()

    if not simmod.NUMBA_ENABLED:
        raise SystemExit(
            "numba backend is disabled (DIVBARRIER_NUMBA=0?); run with it enabled "
            "so both backends can be compared in one process"
        )

    print(f"workloads: value MC + exit MC, {args.paths} paths, dt={args.dt}")
    # warm-up pass compiles the kernels so the timing is steady-state
    run_workloads(min(args.paths, 1024), args.dt)
    results = {}
    checks = {}
    for backend in ("numba", "numpy"):
        simmod.NUMBA_ENABLED = backend == "numba"
        t_value, t_exit, v_mean, d_mean = run_workloads(args.paths, args.dt)
        results[backend] = (t_value, t_exit)
        checks[backend] = (v_mean, d_mean)
        print(f"{backend:>6}: value {t_value:8.2f}s   exit {t_exit:8.2f}s")
    simmod.NUMBA_ENABLED = True
    sp_v = results["numpy"][0] / results["numba"][0]
    sp_e = results["numpy"][1] / results["numba"][1]
    print(f"speedup numba vs numpy: value x{sp_v:.1f}, exit x{sp_e:.1f}")
    same = checks["numba"] == checks["numpy"]
    print(f"backend outputs identical: {same}")
    if not same:
        raise SystemExit("backend mismatch: " + repr(checks))


if __name__ == "__main__":
    main()
