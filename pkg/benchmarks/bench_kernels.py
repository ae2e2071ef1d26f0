"""Compare the integration kernels across backends on identical inputs.

Reports wall time per backend and verifies the outputs agree bit for bit,
which is the contract that makes the backend choice invisible to results.

    python3 benchmarks/bench_kernels.py --paths 20000 --steps 5000 --repeat 3
"""

import argparse
import time

import numpy as np

from timearrow import backends


def run(paths: int, steps: int, repeat: int, seed: int) -> int:
    rng = np.random.default_rng(seed)
    x0 = rng.standard_normal(paths)
    z = rng.standard_normal((paths, steps))
    xbar = rng.standard_normal(steps + 1)
    a = 1e-3
    sigma = (2.0 * 0.5 * 1e-3) ** 0.5

    names = backends.available_backends()
    results = {}
    for name in names:
        kernel = backends.get_kernel(name)
        kernel(x0[:64], z[:64], xbar, a, sigma)  # warm up
        best = float("inf")
        for _ in range(repeat):
            t0 = time.perf_counter()
            out = kernel(x0, z, xbar, a, sigma)
            best = min(best, time.perf_counter() - t0)
        results[name] = (best, out)
        rate = paths * steps / best / 1e6
        print(f"{name:>7}: {best:8.3f} s   {rate:8.1f} M steps/s")

    if len(results) == 2:
        (eta_a, acc_a), (eta_b, acc_b) = (results[n][1] for n in names)
        identical = np.array_equal(eta_a, eta_b) and np.array_equal(acc_a, acc_b)
        print(f"bitwise identical: {identical}")
        if not identical:
            return 1
        fast, slow = sorted(results[n][0] for n in names)
        print(f"speedup: {slow / fast:.2f}x")
    else:
        print("single backend available; nothing to compare")
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--paths", type=int, default=20_000)
    parser.add_argument("--steps", type=int, default=5_000)
    parser.add_argument("--repeat", type=int, default=3)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args(argv)
    return run(args.paths, args.steps, args.repeat, args.seed)


if __name__ == "__main__":
    raise SystemExit(main())
