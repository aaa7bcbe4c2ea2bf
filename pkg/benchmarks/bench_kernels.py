"""Compare the compiled and pure-Python kernel backends.

    python benchmarks/bench_kernels.py [--repeat N]

Each kernel is timed on identical inputs under both backends and the
outputs are checked for equality before timing is reported.
"""

import argparse
import importlib
import math
import time

import numpy as np


def _best_of(fn, repeat):
    best = math.inf
    for _ in range(repeat):
        start = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - start)
    return best


def matching_case(seed=0, n_segments=10000, n_queries=2000, n_cand=60):
    rng = np.random.default_rng(seed)
    x0, y0 = rng.uniform(-2000, 2000, (2, n_segments))
    ang = rng.uniform(0, 2 * math.pi, n_segments)
    length = rng.uniform(5, 60, n_segments)
    x1, y1 = x0 + length * np.sin(ang), y0 + length * np.cos(ang)
    keys = rng.integers(0, 1 << 40, (n_segments, 3)).astype(np.int64)
    queries = [
        (np.sort(rng.choice(n_segments, n_cand, replace=False)).astype(np.int64),
         float(rng.uniform(-2000, 2000)), float(rng.uniform(-2000, 2000)), float(rng.uniform(0, 2 * math.pi)))
        for _ in range(n_queries)
    ]
    return (x0, y0, x1, y1, ang, keys), queries


def run_matching(mod, arrays, queries):
    x0, y0, x1, y1, bearing, keys = arrays
    return [mod.best_segment(c, px, py, h, 1e9, 5.0, x0, y0, x1, y1, bearing, keys) for c, px, py, h in queries]


def run_within(mod, arrays, queries):
    x0, y0, x1, y1 = arrays[:4]
    return [mod.within_radius(c, px, py, 300.0, x0, y0, x1, y1).tobytes() for c, px, py, _ in queries]


def resample_case(seed=0, width=4096):
    from streetlabel.pano import CropSpec, crop_pixel_map

    rng = np.random.default_rng(seed)
    src = rng.integers(0, 256, (width // 2, width, 3), dtype=np.uint8)
    sx, sy = crop_pixel_map(CropSpec(width, width // 2, yaw=0.7))
    return src, sx, sy


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()

    backends = {"python": importlib.import_module("streetlabel._pykernels")}
    try:
        backends["cython"] = importlib.import_module("streetlabel._ckernels")
    except ImportError:
        print("compiled kernels not built; timing the pure-Python backend only")

    arrays, queries = matching_case()
    src, sx, sy = resample_case()
    cases = {
        "best_segment (2000 queries x 60 candidates)": lambda m: run_matching(m, arrays, queries),
        "within_radius (2000 queries x 60 candidates)": lambda m: run_within(m, arrays, queries),
        "bilinear_sample (227x227 crop of 4096x2048)": lambda m: m.bilinear_sample(src, sx, sy).tobytes(),
    }

    print(f"{'kernel':<46} " + " ".join(f"{name:>10}" for name in backends) + f" {'speedup':>8}")
    for label, fn in cases.items():
        results = {name: fn(mod) for name, mod in backends.items()}
        if len(set(map(repr, results.values()))) != 1:
            raise SystemExit(f"{label}: backends disagree")
        times = {name: _best_of(lambda m=mod: fn(m), args.repeat) for name, mod in backends.items()}
        speedup = times["python"] / times["cython"] if "cython" in times else float("nan")
        print(f"{label:<46} " + " ".join(f"{t * 1e3:>8.1f}ms" for t in times.values()) + f" {speedup:>7.1f}x")


if __name__ == "__main__":
    main()
