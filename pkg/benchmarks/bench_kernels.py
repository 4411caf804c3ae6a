"""Compare the compiled and numpy kernels on workloads from the decay paths.

    python3 benchmarks/bench_kernels.py [--repeat 3]

Timings are best-of-N wall clock. The compiled rows are skipped when the
extension is not built.
"""

import argparse
import time

import numpy as np

from chaindecay import kernels, make_params
from chaindecay.model import chain_arrays
from chaindecay.spectrum import band_rule


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def workloads():
    p = make_params(1.0, 0.4)
    eps, w = band_rule(p, 4096)
    t_uniform = np.linspace(0.0, 300.0, 30001)
    t_scattered = np.sort(np.random.default_rng(0).uniform(0.0, 300.0, 30001))
    d, e = chain_arrays(p, 2048)
    d8, e8 = chain_arrays(p, 8192)
    return {
        "spectral_sum uniform (4096 x 30001)": lambda b: kernels.spectral_sum(eps, w, t_uniform, backend=b),
        "spectral_sum scattered (4096 x 30001)": lambda b: kernels.spectral_sum(eps, w, t_scattered, backend=b),
        "tridiag_first_row M=2048": lambda b: kernels.tridiag_first_row(d, e, backend=b),
        "tridiag_first_row M=8192": lambda b: kernels.tridiag_first_row(d8, e8, backend=b),
    }


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    backends = ["python"] + (["compiled"] if kernels.HAVE_COMPILED else [])
    print(f"threads: {kernels.num_threads()}  default backend: {kernels.BACKEND}")
    print(f"{'workload':40s}" + "".join(f"{b:>12s}" for b in backends) + ("     speedup" if len(backends) == 2 else ""))
    for name, fn in workloads().items():
        row = [best_of(lambda: fn(b), args.repeat) for b in backends]
        line = f"{name:40s}" + "".join(f"{x:11.3f}s" for x in row)
        if len(row) == 2:
            line += f"{row[0] / row[1]:11.1f}x"
        print(line)


if __name__ == "__main__":
    main()
