"""Time the compiled 1-D k-means kernels against the pure-Python fallback.

    python benchmarks/bench_kernels.py [--repeat N]

Both backends are imported directly, so the environment switch that forces
the fallback has no effect here. Exits non-zero if the extension is not built.
"""

import argparse
import sys
import timeit

import numpy as np

from offload_rl.kernels import _pure

try:
    from offload_rl.kernels import _fast
except ImportError:
    _fast = None


def cases():
    rng = np.random.default_rng(0)
    for n, k in ((5, 3), (25, 4), (200, 5), (1000, 8)):
        xs = np.sort(rng.exponential(2.0, size=n))
        init = list(np.quantile(xs, np.linspace(0.1, 0.9, k)))
        yield n, k, xs, init


def main(argv=None) -> int:
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)
    if _fast is None:
        print("compiled extension not built; run `pip install -e . --no-build-isolation`", file=sys.stderr)
        return 1
    print(f"{'kernel':<14}{'n':>6}{'k':>4}{'python (ms)':>14}{'compiled (ms)':>16}{'speedup':>10}")
    for n, k, xs, init in cases():
        for name, call in (("lloyd_1d", lambda m: m.lloyd_1d(xs, init)),
                           ("dp_kmeans_1d", lambda m: m.dp_kmeans_1d(xs, k))):
            if name == "dp_kmeans_1d" and n > 200:
                continue  # quadratic in n; the pure version takes seconds here
            number = max(1, 2000 // n)
            py = min(timeit.repeat(lambda: call(_pure), number=number, repeat=args.repeat)) / number
            cy = min(timeit.repeat(lambda: call(_fast), number=number, repeat=args.repeat)) / number
            print(f"{name:<14}{n:>6}{k:>4}{py * 1e3:>14.4f}{cy * 1e3:>16.4f}{py / cy:>9.1f}x")
    return 0


if __name__ == "__main__":
    sys.exit(main())
