#!/usr/bin/env python3
"""Benchmark the numba kernels against the pure-numpy fallbacks.

Runs each hot kernel on realistic workloads (likelihood tables over a
4097-node phase grid, 2000-trial posterior batches) and prints the
timing ratio.  Select what the library itself uses at import time with
PHASELAB_BACKEND=numba|numpy|auto.
"""

import time

import numpy as np

import phaselab._kernels_numba as knb
import phaselab._kernels_numpy as knp


def timeit(fn, *args, repeats=5):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    rng = np.random.default_rng(0)

    # Bessel tables: all orders 0..32 over a grid of |j * theta| values
    x_grid = np.abs(32.0 * np.linspace(-np.pi / 4, np.pi / 4, 4097))
    # Pairwise evaluation at scattered (order, argument) points
    q_pairs = rng.integers(0, 64, 20000)
    x_pairs = rng.uniform(0.0, 120.0, 20000)

    # Posterior batch: 2000 trials on a 4097-node grid
    nodes = np.linspace(-np.pi / 4, np.pi / 4, 4097)
    spacing = nodes[1] - nodes[0]
    trap = np.full(nodes.size, spacing)
    trap[0] *= 0.5
    trap[-1] *= 0.5
    sharpness = rng.uniform(20.0, 2000.0, size=(2000, 1))
    centers = rng.uniform(-0.5, 0.5, size=(2000, 1))
    logw = -sharpness * (nodes[None, :] - centers) ** 2
    stats_args = (
        np.ascontiguousarray(logw),
        nodes,
        np.cos(nodes),
        np.sin(nodes),
        trap,
        -np.log(np.pi / 2),
    )

    cases = [
        ("bessel_orders(32, grid[4097])", (32, x_grid)),
        ("bessel_pairs(20000 points)", (q_pairs, x_pairs)),
        ("posterior_stats(2000 x 4097)", stats_args),
    ]
    fns = {
        "bessel_orders(32, grid[4097])": (knb.bessel_orders, knp.bessel_orders),
        "bessel_pairs(20000 points)": (knb.bessel_pairs, knp.bessel_pairs),
        "posterior_stats(2000 x 4097)": (knb.posterior_stats, knp.posterior_stats),
    }

    # trigger JIT compilation outside the timed region
    knb.bessel_orders(32, x_grid[:8])
    knb.bessel_pairs(q_pairs[:8], x_pairs[:8])
    knb.posterior_stats(logw[:2], *stats_args[1:])

    print(f"{'kernel':36s} {'numba':>10s} {'numpy':>10s} {'speedup':>8s}")
    for name, args in cases:
        f_nb, f_np = fns[name]
        t_nb = timeit(f_nb, *args)
        t_np = timeit(f_np, *args)
        print(f"{name:36s} {t_nb * 1e3:9.2f}ms {t_np * 1e3:9.2f}ms {t_np / t_nb:7.2f}x")


if __name__ == "__main__":
    main()
