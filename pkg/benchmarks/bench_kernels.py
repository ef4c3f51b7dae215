"""Compare the numba and numpy trial kernels.

    python benchmarks/bench_kernels.py [--trials N] [--repeat R]

Both backends consume the same uniforms, so the script also checks that their
counts agree before timing them.
"""

import argparse
import time

import numpy as np

from tsqc.ensemble import EnsembleConfig, Mode, run_pre_post_selected
from tsqc.kernels import available_backends, build_cdf, simulate_chain
from tsqc.scenarios import random_scenario


def chain_for(dim: int, seed: int):
    s = random_scenario(dim, seed)
    M = s.candidate_measurements[0]
    rng = np.random.default_rng(seed)
    first = rng.dirichlet(np.ones(len(M)))[None, :]
    then = rng.dirichlet(np.ones(dim), size=len(M))
    return s, M, build_cdf([first, then])


def best_of(fn, repeat: int) -> float:
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--trials", type=int, default=1_000_000)
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args()
    backends = available_backends()
    print(f"backends: {', '.join(backends)}; trials={args.trials}; best of {args.repeat}")

    for dim in (2, 4, 6):
        s, M, cdf = chain_for(dim, 1)
        u = np.random.default_rng(0).random((args.trials, 2))
        results = {b: simulate_chain(cdf, u, 0, 1, 0, cdf.shape[2], backend=b) for b in backends}
        ref = results[backends[0]]
        assert all(np.array_equal(r[0], ref[0]) and r[1] == ref[1] for r in results.values())
        row = [f"kernel dim={dim}"]
        for b in backends:
            t = best_of(lambda: simulate_chain(cdf, u, 0, 1, 0, cdf.shape[2], backend=b), args.repeat)
            row.append(f"{b} {t * 1e3:8.1f} ms ({args.trials / t / 1e6:6.1f} Mtrials/s)")
        print("  ".join(row))

        row = [f"oracle dim={dim}"]
        for b in backends:
            cfg = EnsembleConfig(args.trials, 3, Mode.PRE_AND_POSTSELECTED, backend=b)
            t = best_of(lambda: run_pre_post_selected(s.two_state.pre, M, s.final_measurement, "b", cfg),
                        args.repeat)
            row.append(f"{b} {t * 1e3:8.1f} ms")
        print("  ".join(row))


if __name__ == "__main__":
    main()
