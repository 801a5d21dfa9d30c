"""Benchmark the compiled kernels against the pure-numpy fallback.

Times the two hot kernels in isolation and two end-to-end samplers that
lean on them.  Both backends produce bit-identical output (asserted here),
so the only difference is wall time.

Run:  python benchmarks/bench_backends.py [--quick]
"""

import argparse
import time

import numpy as np

from proplimit import backend
from proplimit import _kernels_py
from proplimit.sampling import bartlett_chain_draws, make_stream


def best_of(fn, repeats=5):
    times = []
    for _ in range(repeats):
        start = time.perf_counter()
        fn()
        times.append(time.perf_counter() - start)
    return min(times)


def bench_chain(kernels, n_samples, depth, dim):
    rng = make_stream(1234, 0)
    diag, low = bartlett_chain_draws(64, dim, depth, rng)
    diag = np.ascontiguousarray(
        np.broadcast_to(diag, (n_samples,) + diag.shape).reshape(n_samples, depth, dim)
    )
    low = np.ascontiguousarray(
        np.broadcast_to(low, (n_samples,) + low.shape).reshape(n_samples, depth, -1)
    )
    out = {}

    def run(mod=kernels):
        out["value"] = mod.lt_chain_multiply(diag, low)

    elapsed = best_of(run)
    return elapsed, out["value"]


def bench_suffix(kernels, steps, repeats_inner=200):
    gen = np.random.default_rng(7)
    w = np.exp(gen.standard_normal(steps) * 0.1)
    g = gen.standard_normal(steps + 1)
    dw = gen.standard_normal(steps) / np.sqrt(steps)
    out = {}

    def run():
        for _ in range(repeats_inner):
            out["value"] = kernels.suffix_mac(w, g, dw)

    elapsed = best_of(run) / repeats_inner
    return elapsed, out["value"]


def bench_end_to_end(name, n_samples, steps):
    # Import-time selection is fixed; route through get_kernels by patching
    # the module-level dispatch for the duration of the call.
    from proplimit import limit, prior

    kernels = backend.get_kernels(name)
    saved = backend._active
    backend._active = kernels
    try:
        start = time.perf_counter()
        finite = prior.vbar_finite_samples(200, 64, 3, n_samples, 5, phase=1)
        t_finite = time.perf_counter() - start
        start = time.perf_counter()
        lim = limit.vbar_limit_samples(0.5, 3, steps, max(n_samples // 8, 8), 5, phase=2)
        t_limit = time.perf_counter() - start
    finally:
        backend._active = saved
    return t_finite, t_limit, finite, lim


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--quick", action="store_true", help="smaller problem sizes")
    args = parser.parse_args()

    n_chain = 500 if args.quick else 4000
    depth, dim = 100 if args.quick else 400, 3
    steps = 1024 if args.quick else 8192

    names = backend.available_backends()
    print(f"available backends: {', '.join(names)} (active: {backend.active_backend()})")
    if "cython" not in names:
        print("compiled extension missing; timing the fallback only")

    rows = []
    results = {}
    for name in names:
        kernels = backend.get_kernels(name)
        t_chain, v_chain = bench_chain(kernels, n_chain, depth, dim)
        t_suffix, v_suffix = bench_suffix(kernels, steps)
        t_finite, t_limit, finite, lim = bench_end_to_end(name, n_chain, steps)
        rows.append((name, t_chain, t_suffix, t_finite, t_limit))
        results[name] = (v_chain, v_suffix, finite, lim)

    if len(names) == 2:
        for a, b in zip(results["cython"], results["python"]):
            assert np.array_equal(a, b), "backends disagree bitwise"
        print("bitwise agreement between backends: OK")

    header = (
        f"{'backend':<8} {'chain[s]':>10} {'suffix[us]':>11} "
        f"{'finite-e2e[s]':>14} {'limit-e2e[s]':>13}"
    )
    print()
    print(f"chain: {n_chain} samples x depth {depth} x dim {dim}; "
          f"suffix: {steps} steps; end-to-end includes RNG")
    print(header)
    print("-" * len(header))
    for name, t_chain, t_suffix, t_finite, t_limit in rows:
        print(
            f"{name:<8} {t_chain:>10.4f} {t_suffix * 1e6:>11.2f} "
            f"{t_finite:>14.3f} {t_limit:>13.3f}"
        )
    if len(rows) == 2:
        base = {row[0]: row for row in rows}
        speedup = base["python"][1] / base["cython"][1]
        print(f"\nkernel speedup (chain, python/cython): {speedup:.1f}x")


if __name__ == "__main__":
    main()
