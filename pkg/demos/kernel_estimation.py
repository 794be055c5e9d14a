"""Estimate angular, arc-cosine and Gaussian kernels with structured projections.

Run: python3 demos/kernel_estimation.py
"""

import numpy as np

import structembed as se

n, seed = 256, 7
gen = np.random.default_rng(seed)  # inputs only; pipelines use their own seeds
v1, v2 = gen.standard_normal((2, n))
v1 /= np.linalg.norm(v1)
v2 = 0.6 * v1 + 0.8 * v2 / np.linalg.norm(v2)
v2 /= np.linalg.norm(v2)

print(f"angle between inputs: {np.degrees(np.arccos(v1 @ v2)):.1f} degrees\n")
seeds = range(20)
print(f"{'f':<12}{'family':<14}{'m':>6}{'mean est':>11}{'std':>9}{'exact':>9}   (over {len(seeds)} seeds)")
for f in ("heaviside", "relu", "sincos"):
    scale = 0.3 if f == "sincos" else 1.0  # keep the Gaussian kernel away from 0
    a, b = scale * v1, scale * v2
    exact = se.exact_kernel(f, a, b)
    for family in ("unstructured", "circulant", "toeplitz"):
        for m in (64, 256):
            est = [se.estimate_pair(se.make_pipeline(family, m, n, f, s), a, b) for s in seeds]
            print(f"{f:<12}{family:<14}{m:>6}{np.mean(est):>11.4f}{np.std(est):>9.4f}{exact:>9.4f}")
    print()

# A circulant row costs n random numbers instead of m*n, and a matvec costs O(n log n).
M = se.build("circulant", n, n, seed)
print(f"circulant budget length t = {M.budget.t} for a {M.m}x{M.n} matrix")
