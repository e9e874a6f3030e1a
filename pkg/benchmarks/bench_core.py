"""Time the compiled core against the numpy fallback on the hot loops.

    python3 benchmarks/bench_core.py [--repeat 3]

Every kernel is checked for agreement between backends before timing.
"""
import argparse
import time

import numpy as np

from volterra import backend, quadrature
from volterra.grid import TimeGrid
from volterra.kernel import make_kernel
from volterra.spectral_operator import make_laplacian_1d
from volterra.wiener import QCovariance, sample_seeds


def cases():
    kernel = make_kernel("exponential")
    grid = TimeGrid(1.0, 2000)
    op = make_laplacian_1d(16)
    weights = np.ascontiguousarray(quadrature.uniform_node_weights(kernel, grid))
    f = np.ones(len(grid))
    mus = np.ascontiguousarray(op.eigenvalues)
    vals = np.ascontiguousarray(np.random.default_rng(0).standard_normal((16, len(grid))))
    noise = np.ascontiguousarray(sample_seeds(QCovariance.power_law(16), grid, range(10)).coeffs)
    v = np.ascontiguousarray(np.broadcast_to(np.exp(-np.outer(op.eigenvalues, grid.points)), (16, len(grid))))
    mem, first = quadrature.memory_toeplitz(kernel, grid)
    lam = op.eigenvalues
    decay, phi = np.exp(-lam * grid.dt), -np.expm1(-lam * grid.dt) / lam
    small = TimeGrid(1.0, 1000)
    path = np.ascontiguousarray(vals[:, : len(small)].T)
    return {
        "volterra_sweep (K=16, N=2000)": lambda m: m.volterra_sweep(weights, f, mus)[0],
        "packed_apply (K=16, N=2000)": lambda m: m.packed_apply(weights, vals),
        "lower_toeplitz (10x16, N=2000)": lambda m: m.lower_toeplitz(v, noise),
        "reformulated_sweep (10x16, N=2000)": lambda m: m.reformulated_sweep(decay, phi, lam, 1.0, mem, first, noise)[2],
        "slobodeckij_sum (K=16, N=1000)": lambda m: m.slobodeckij_sum(path, small.points, small.trapezoid_weights(), 2.0),
    }


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--repeat", type=int, default=3)
    args = parser.parse_args()
    impls = backend.implementations()
    if "compiled" not in impls:
        print("compiled core not built; timing the fallback only")
    print(f"{'kernel':38s}" + "".join(f"{name:>12s}" for name in impls) + (f"{'speedup':>10s}" if len(impls) > 1 else ""))
    for label, fn in cases().items():
        results = {name: np.asarray(fn(mod)) for name, mod in impls.items()}
        ref = results["python"]
        for name, res in results.items():
            if not np.allclose(res, ref, rtol=1e-9, atol=1e-12 * max(1.0, np.abs(ref).max())):
                raise SystemExit(f"{label}: {name} disagrees with the fallback")
        times = {}
        for name, mod in impls.items():
            best = np.inf
            for _ in range(args.repeat):
                t0 = time.perf_counter()
                fn(mod)
                best = min(best, time.perf_counter() - t0)
            times[name] = best
        row = f"{label:38s}" + "".join(f"{times[n] * 1e3:10.2f}ms" for n in impls)
        if len(impls) > 1:
            row += f"{times['python'] / times['compiled']:9.1f}x"
        print(row)


if __name__ == "__main__":
    main()
