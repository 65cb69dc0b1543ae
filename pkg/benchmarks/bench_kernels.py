"""Benchmark the numba kernels against the pure-numpy fallback.

The backend is chosen at import time from MNISTFORGE_NUMBA, so this script
re-executes itself once per backend and prints a comparison table:

    python3 benchmarks/bench_kernels.py
"""

import json
import os
import subprocess
import sys
import time

import numpy as np

CASES = {
    "resize 512x512x3 -> 28x28": ("bilinear_resize", (512, 512, 3), (28, 28)),
    "resize 224x224x3 -> 64x64": ("bilinear_resize", (224, 224, 3), (64, 64)),
    "sobel 224x224": ("sobel_magnitude", (224, 224), ()),
    "sobel 512x512": ("sobel_magnitude", (512, 512), ()),
    "rotate 64x64x3 by 15deg": ("rotate_bilinear", (64, 64, 3), (15.0,)),
}


def run_single() -> dict:
    from mnistforge import kernels

    rng = np.random.default_rng(0)
    results = {"backend": "numba" if kernels.USING_NUMBA else "numpy"}
    for label, (fn_name, shape, args) in CASES.items():
        fn = getattr(kernels, fn_name)
        data = rng.uniform(0, 255, size=shape)
        fn(data, *args)  # warmup / JIT
        reps, elapsed = 0, 0.0
        start = time.perf_counter()
        while elapsed < 0.5:
            fn(data, *args)
            reps += 1
            elapsed = time.perf_counter() - start
        results[label] = elapsed / reps * 1e3  # ms per call
    return results


def main() -> None:
    if "--single" in sys.argv:
        print(json.dumps(run_single()))
        return
    rows = {}
    for flag in ("1", "0"):
        env = dict(os.environ, MNISTFORGE_NUMBA=flag)
        out = subprocess.run(
            [sys.executable, __file__, "--single"], env=env,
            capture_output=True, text=True, check=True,
        )
        data = json.loads(out.stdout.strip().splitlines()[-1])
        rows[data.pop("backend")] = data

    numba_times = rows.get("numba")
    numpy_times = rows.get("numpy")
    if numba_times is None:
        print("numba unavailable; numpy timings only")
        for label, ms in numpy_times.items():
            print(f"{label:<34} {ms:8.3f} ms")
        return
    print(f"{'case':<34} {'numba':>10} {'numpy':>10} {'speedup':>9}")
    for label in CASES:
        a, b = numba_times[label], numpy_times[label]
        print(f"{label:<34} {a:8.3f}ms {b:8.3f}ms {b / a:8.1f}x")


if __name__ == "__main__":
    main()
