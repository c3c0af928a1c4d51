"""Time the compiled kernels against the numpy fallback.

    python3 benchmarks/bench_kernels.py [--repeat N] [--json out.json]

Each kernel runs on inputs sized like training (batch 20, 30 steps, 64 hidden
units) and like preprocessing (one 120,000-sample recording).
"""
import argparse
import json
import sys
import timeit

import numpy as np

from gazekit import kernels


def cases(rng):
    xw = rng.normal(size=(20, 30, 256))
    U = rng.normal(size=(64, 256)) * 0.1
    dh = rng.normal(size=(20, 30, 64))
    x = rng.uniform(0, 1900, 120_000)
    y = rng.uniform(0, 1000, 120_000)
    v = (rng.random(120_000) > 0.001).astype(np.uint8)
    codes = np.repeat(rng.integers(-1, 5, 400), 9)
    valid = (rng.random(3600) > 0.002).astype(np.uint8)
    target = np.ones(3600, dtype=np.uint8)

    def prep(mod):
        _, cs, acts = mod.lstm_recurrence(xw, U)
        return {
            "lstm_recurrence": lambda: mod.lstm_recurrence(xw, U),
            "lstm_recurrence_backward": lambda: mod.lstm_recurrence_backward(dh, U, cs, acts),
            "resample_means": lambda: mod.resample_means(x, y, v),
            "run_lengths": lambda: mod.run_lengths(codes),
            "window_starts": lambda: mod.window_starts(valid, target, 30),
        }
    return prep


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--json", help="also write results here")
    args = ap.parse_args(argv)
    backends = kernels.available_backends()
    if "cython" not in backends:
        print("compiled backend not built; only the fallback is timed", file=sys.stderr)
    prep = cases(np.random.default_rng(0))
    results = {}
    for name in backends:
        for kernel, fn in prep(kernels.load_backend(name)).items():
            n, _ = timeit.Timer(fn).autorange()
            best = min(timeit.Timer(fn).repeat(args.repeat, n)) / n
            results.setdefault(kernel, {})[name] = best * 1e3
    print(f"{'kernel':28s}" + "".join(f"{b + ' ms':>14s}" for b in backends) + "   speedup")
    for kernel, row in results.items():
        speed = row["python"] / row["cython"] if "cython" in row else float("nan")
        print(f"{kernel:28s}" + "".join(f"{row[b]:14.4f}" for b in backends) + f"   {speed:6.1f}x")
    if args.json:
        with open(args.json, "w") as fh:
            json.dump(results, fh, indent=2, sort_keys=True)
    return results


if __name__ == "__main__":
    main()
