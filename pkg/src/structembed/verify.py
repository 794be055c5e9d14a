"""Acceptance suites, each returning a :class:`Criterion` with pass/fail and detail.

The suites run at their stated scale; ``run_all`` is what ``structembed
verify`` executes. Ground truth comes from oracles written independently of
the fast code paths: explicit selector matrices built entry by entry,
dense products, brute-force Monte Carlo and arbitrary-precision sums.
"""

import math
import statistics
import time
from dataclasses import dataclass

import numpy as np

from . import bounds, diagnostics, kernels, structured, transforms
from .errors import ResourceLimit
from .structured import StructuredFamily, build

DEFAULT_SEED = 0x5EED


@dataclass
class Criterion:
    number: int
    name: str
    passed: bool
    detail: str
    seconds: float = 0.0
    soft: bool = False

    def line(self):
        status = "PASS" if self.passed else "FAIL"
        if self.soft:
            status += " (soft)"
        return f"[{status}] {self.number:>2} {self.name}: {self.detail} ({self.seconds:.1f}s)"


def _gen(seed, number):
    return transforms.rng(seed, 0xACC, number)


# --- independent oracles -----------------------------------------------------

def oracle_entry_source(tag, n, i, j):
    """(budget index, sign) feeding entry ``(i, j)``, written from the entry conventions."""
    if tag == "circulant":
        return (j - i) % n, 1
    if tag == "skew_circulant":
        return (j - i) % n, (-1 if j < i else 1)
    if tag == "toeplitz":
        return (j - i, 1) if j >= i else (n + i - j - 1, 1)
    if tag == "hankel":
        return oracle_entry_source("toeplitz", n, i, n - 1 - j)
    raise ValueError(tag)


def oracle_selector(tag, m, n, i):
    """Integer selector ``P_i`` for a shift family, entry by entry."""
    t = n if tag in ("circulant", "skew_circulant") else n + m - 1
    P = [[0] * n for _ in range(t)]
    for j in range(n):
        src, sign = oracle_entry_source(tag, n, i, j)
        P[src][j] = sign
    return P


def oracle_sigma_table(tag, m, n):
    """``table[i1][i2][n1][n2]`` of exact integer column dot products."""
    Ps = [oracle_selector(tag, m, n, i) for i in range(m)]
    cols = [[tuple(row[c] for row in P) for c in range(n)] for P in Ps]
    return [[[[sum(a * b for a, b in zip(cols[i1][n1], cols[i2][n2])) for n2 in range(n)]
               for n1 in range(n)] for i2 in range(m)] for i1 in range(m)]


def theorem1_mp(p, dps=50):
    """Direct arbitrary-precision summation of the general failure bound."""
    import mpmath as mp

    with mp.workdps(dps):
        L = mp.log(p.n)
        chi, mu = mp.mpf(p.chi), mp.mpf(p.mu)
        denom = 8 * chi ** 2 * mu ** 2
        t1 = 2 * p.k * p.m * chi * mp.e ** (-p.n / (denom * L ** 6))
        t2 = p.k ** 2 * p.m ** 2 * chi * mp.e ** (-mp.mpf(p.eps) ** 2 * mp.sqrt(p.n) / (denom * L ** 4))
        bal = 2 * p.n * p.k * mp.e ** (-L ** 2 / 8)
        proj = mp.sqrt(mp.mpf(2 * p.m * p.k) / mp.pi) * mp.e ** (-mp.mpf(p.m * p.k) / 2)
        pm = mp.mpf(p.p_lambda_eps) * p.m
        tail = mp.fsum(pm ** j / mp.factorial(j) for j in range(p.m_bar + 1, p.m + 1))
        rho_sq = mp.fsum(mp.mpf(r) ** 2 for r in p.rho)
        mcd = 2 * mp.e ** (-2 * mp.mpf(p.K) ** 2 / rho_sq)
        return mp.binomial(p.N, p.k) * (t1 + t2 + bal + proj + tail + mcd)


def random_theorem1_params(gen):
    N = int(gen.integers(2, 5000))
    k = int(gen.integers(1, min(N, 4) + 1))
    m = int(gen.integers(1, 300))
    return bounds.Theorem1Params(
        N=N, k=k, m=m, n=int(gen.integers(2, 1 << 16)),
        chi=float(gen.integers(1, 6)), mu=float(gen.uniform(0.05, 2.0)),
        mu_tilde=float(gen.uniform(0.0, 1.0)), eps=float(gen.uniform(0.01, 1.0)),
        K=float(gen.uniform(0.01, 1.0)), m_bar=int(gen.integers(0, m + 1)),
        p_lambda_eps=float(gen.uniform(0.0, 0.5)),
        rho=tuple(gen.uniform(0.5, 1.5, size=m * k) / m),
        delta_M=1.0 / m, delta_lambda=0.1 / m)


def random_unit(gen, n, size=None):
    shape = (n,) if size is None else (size, n)
    v = gen.standard_normal(shape)
    return v / np.linalg.norm(v, axis=-1, keepdims=True)


def random_unit_pairs(gen, n, count):
    """``count`` independent unit pairs as rows ``2q, 2q+1`` of one array."""
    X = random_unit(gen, n, 2 * count)
    return X, [(2 * q, 2 * q + 1) for q in range(count)]


# --- criteria ----------------------------------------------------------------

def c1_dense_equivalence(seed):
    gen = _gen(seed, 1)
    fams = [StructuredFamily(t) for t in structured.FAMILIES if t != "ldr"] + [StructuredFamily("ldr", 2, 2)]
    worst = 0.0
    for fam in fams:
        for _ in range(100):
            n = int(gen.integers(2, 257))
            m = int(gen.integers(1, min(64, n) + 1))
            M = build(fam, m, n, int(gen.integers(0, 1 << 63)))
            v = random_unit(gen, n)
            worst = max(worst, float(np.abs(M.matvec(v) - M.materialize() @ v).max()))
    return worst < 1e-9, f"max |matvec - dense| over 600 triples = {worst:.2e} (< 1e-9)"


def c2_sigma_closed_forms(seed):
    mismatches = {}
    checked = 0
    for tag in ("circulant", "toeplitz"):
        bad = 0
        for n in range(1, 17):
            for m in range(1, min(8, n) + 1):
                M = build(tag, m, n, seed)
                table = oracle_sigma_table(tag, m, n)
                for i1 in range(m):
                    for i2 in range(m):
                        for n1 in range(n):
                            row_ = table[i1][i2][n1]
                            for n2 in range(n):
                                s = diagnostics.sigma(M, i1, i2, n1, n2)
                                checked += 1
                                if s != row_[n2]:
                                    bad += 1
                                elif tag == "toeplitz" and s and (n1 - n2 - (i1 - i2)) % n:
                                    bad += 1
        mismatches[tag] = bad
    ok = not any(mismatches.values())
    return ok, f"{checked} quadruples checked for exact integer equality; mismatches {mismatches}"


def c3_chromatic(seed):
    notes, ok = [], True
    G = diagnostics.coherence_graph(build("circulant", 2, 5, seed), 0, 1)
    degrees = sorted(len(a) for a in G.adjacency)
    comps = diagnostics._components(G.adjacency)
    cycle = len(G.vertices) == 5 and degrees == [2] * 5 and len(comps) == 1
    chi5 = diagnostics.exact_chromatic(G)
    ok &= cycle and chi5 == 3
    notes.append(f"n=5 circulant graph 5-cycle={cycle}, chi={chi5}")
    toe = {(n, m): diagnostics.model_stats(build("toeplitz", m, n, seed), exact=True)
           for n in range(3, 17) for m in range(2, min(8, n) + 1)}
    toe_ok = all(s.chi == 2 and s.chi_is_exact for s in toe.values())
    ok &= toe_ok
    notes.append(f"toeplitz exact chi=2 on all {len(toe)} shapes n<=16 m<=8: {toe_ok}")
    circ = diagnostics.model_stats(build("circulant", 8, 16, seed), exact=True)
    ok &= circ.chi <= 3 and circ.mu_tilde == 0.0
    notes.append(f"circulant n=16 m=8 chi={circ.chi}, mu_tilde={circ.mu_tilde}")
    return ok, "; ".join(notes)


def c4_normalization(seed):
    ok, notes = True, []
    for tag in structured.SHIFT_FAMILIES:
        for n in (2, 4, 8, 16, 32, 64):
            for m in sorted({1, max(1, n // 2), n}):
                M = build(tag, m, n, seed)
                good = diagnostics.check_normalized(M, tol=0.0) and diagnostics.check_orthogonality(M, tol=0.0)
                ok &= good
                if not good:
                    notes.append(f"{tag} n={n} m={m} failed")
    for r, a in ((1, 2), (2, 2), (3, 4)):
        M = build(StructuredFamily("ldr", r, a), 16, 64, seed)
        good = diagnostics.check_normalized(M, tol=1e-12)
        ok &= good
        if not good:
            notes.append(f"ldr r={r} a={a} normalization failed")
    return ok, "; ".join(notes) or "shift families exact at n<=64; ldr columns 1 +- 1e-12"


def c5_unbiasedness(seed, S=20_000, oracle_trials=1_000_000, n=64, m=8, pairs=10):
    gen = _gen(seed, 5)
    X, idx = random_unit_pairs(gen, n, pairs)
    I, J = np.array(idx).T
    fs = [kernels.Nonlinearity("identity"), kernels.Nonlinearity("heaviside")]
    oracle = {(str(f), q): kernels.mc_oracle(f, X[I[q]], X[J[q]], oracle_trials,
                                             kernels.derive_seed(seed, 5, q, k))
              for k, f in enumerate(fs) for q in range(pairs)}
    ok, notes = True, []
    for tag in ("circulant", "toeplitz"):
        sums = {str(f): np.zeros((2, pairs)) for f in fs}
        for s in range(S):
            P = kernels.make_pipeline(tag, m, n, "identity", kernels.derive_seed(seed, 5, s))
            Y = kernels.project(P, X)
            for f in fs:
                est = np.mean(f(Y[I]) * f(Y[J]), axis=1)
                sums[str(f)][0] += est
                sums[str(f)][1] += est * est
        for f in fs:
            mean = sums[str(f)][0] / S
            var = (sums[str(f)][1] / S - mean ** 2) * S / (S - 1)
            se = np.sqrt(var / S)
            hits = 0
            for q in range(pairs):
                om, ose = oracle[str(f), q]
                hits += abs(mean[q] - om) <= 4 * math.hypot(se[q], ose)
            ok &= hits >= 9
            notes.append(f"{tag}/{f}: {hits}/10")
    return ok, "pairs within 4 combined SE: " + ", ".join(notes)


def c6_s_identities(seed):
    gen = _gen(seed, 6)
    worst = 0.0
    for tag in ("circulant", "toeplitz"):
        M = build(tag, 4, 16, seed)
        for _ in range(20):
            Q, _r = np.linalg.qr(gen.standard_normal((16, 2)))
            d1 = 2.0 * gen.integers(0, 2, size=16) - 1.0
            worst = max(worst, diagnostics.verify_s_identities(M, d1, Q.T).max_deviation)
    return worst <= 1e-9, f"max deviation over 40 orthonormal pairs = {worst:.2e} (<= 1e-9)"


def c7_balancedness(seed, n=1024, trials=1000):
    gen = _gen(seed, 7)
    theta = math.log(n)
    good = 0
    for q in range(trials):
        d0 = transforms.sample_signs(kernels.derive_seed(seed, 7, q), n)
        good += diagnostics.is_balanced(transforms.fwht(d0.d * random_unit(gen, n)), theta)
    frac = good / trials
    return frac >= 0.99, f"{good}/{trials} log(n)-balanced after HD0 (>= 99%)"


def c8_concentration(seed, n=256):
    gen = _gen(seed, 8)
    X, idx = random_unit_pairs(gen, n, 100)
    thr = min(0.4303, bounds.cor1_threshold(64, 0.25))
    rows = kernels.error_sweep(X, "toeplitz", "heaviside", [64], 20, kernels.derive_seed(seed, 8, 0), pairs=idx)
    below = sum(e < thr for e in rows[0].rep_max_abs)
    ok1 = below >= 19
    rows = kernels.error_sweep(X, "toeplitz", "identity", [64, 256], 50, kernels.derive_seed(seed, 8, 1), pairs=idx)
    ratios = [a / b for a, b in zip(rows[0].rep_rmse, rows[1].rep_rmse)]
    med = statistics.median(ratios)
    ok2 = 2 * 0.6 <= med <= 2 * 1.4
    return ok1 and ok2, (f"heaviside max error < {thr:.4f} in {below}/20 runs (>= 19); "
                         f"identity median rmse ratio m=64/m=256 = {med:.3f} in [1.2, 2.8]")


def c9_gaussian_kernel(seed, n=256, m=512, pairs=50):
    gen = _gen(seed, 9)
    X = random_unit(gen, n, 2 * pairs) * gen.uniform(size=(2 * pairs, 1)) ** (1.0 / n)
    idx = [(2 * q, 2 * q + 1) for q in range(pairs)]
    rows = kernels.error_sweep(X, "circulant", "sincos", [m], 1, kernels.derive_seed(seed, 9), pairs=idx)
    return rows[0].rmse < 0.05, f"rmse vs exp(-|d|^2/2) = {rows[0].rmse:.4f} (< 0.05)"


def c10_p0_flip(seed, trials=100_000):
    p, se = kernels.p0_flip_mc(64, 0.01, trials, kernels.derive_seed(seed, 10))
    bound = bounds.p0_eps_angular(10, 0.01)
    return p <= bound + 3 * se, f"flip probability {p:.5f} (se {se:.5f}) <= {bound:.5f} + 3 se"


def c11_bound_oracle(seed, grids=100):
    gen = _gen(seed, 11)
    worst, mono_bad = 0.0, 0
    for _ in range(grids):
        p = random_theorem1_params(gen)
        ref = theorem1_mp(p)
        got = bounds.theorem1_bound(p).probability_bound
        if math.isfinite(got):
            rel = abs(got - float(ref)) / float(ref)
        else:
            import mpmath as mp
            rel = abs(bounds.theorem1_log_bound(p) - float(mp.log(ref))) / abs(float(mp.log(ref)))
        worst = max(worst, rel)
        base = bounds.theorem1_log_bound(p)
        for field_, val in (("N", p.N * 2), ("chi", p.chi * 2), ("mu", p.mu * 2)):
            if bounds.theorem1_log_bound(_replace(p, **{field_: val})) < base - 1e-12 * abs(base):
                mono_bad += 1
        t_before = bounds.theorem1_log_terms(p)[1]["mcdiarmid"]
        t_after = bounds.theorem1_log_terms(_replace(p, K=p.K * 1.5))[1]["mcdiarmid"]
        mono_bad += t_after > t_before
    ok = worst < 5e-7 and mono_bad == 0
    return ok, f"max relative deviation from mpmath = {worst:.2e} (< 5e-7); monotonicity violations {mono_bad}"


def _replace(p, **kw):
    import dataclasses
    return dataclasses.replace(p, **kw)


def time_matvec(M, v, reps=20, dense_cap=1 << 28):
    """Median wall times ``(structured, dense)``; dense is ``None`` when it cannot be built."""
    M.matvec(v)
    fast = []
    for _ in range(reps):
        t0 = time.perf_counter()
        M.matvec(v)
        fast.append(time.perf_counter() - t0)
    try:
        D = M.materialize(cap=dense_cap)
    except (MemoryError, ResourceLimit):
        return statistics.median(fast), None
    D @ v
    slow = []
    for _ in range(reps):
        t0 = time.perf_counter()
        D @ v
        slow.append(time.perf_counter() - t0)
    del D
    return statistics.median(fast), statistics.median(slow)


def c12_performance(seed, n=1 << 14, reps=20):
    M = build("circulant", n, n, seed)
    v = random_unit(_gen(seed, 12), n)
    fast, slow = time_matvec(M, v, reps)
    if slow is None:
        return False, f"dense baseline could not be allocated; structured median {fast * 1e3:.3f} ms"
    speed = slow / fast
    return speed >= 5.0, f"n=m={n}: structured {fast * 1e3:.3f} ms, dense {slow * 1e3:.3f} ms, speedup {speed:.1f}x (>= 5)"


CRITERIA = [
    (1, "dense_equivalence", c1_dense_equivalence),
    (2, "sigma_closed_forms", c2_sigma_closed_forms),
    (3, "chromatic", c3_chromatic),
    (4, "normalization", c4_normalization),
    (5, "unbiasedness", c5_unbiasedness),
    (6, "s_identities", c6_s_identities),
    (7, "balancedness", c7_balancedness),
    (8, "concentration", c8_concentration),
    (9, "gaussian_kernel", c9_gaussian_kernel),
    (10, "p0_flip", c10_p0_flip),
    (11, "bound_oracle", c11_bound_oracle),
    (12, "performance", c12_performance),
]
PERF = "performance"


def select(only=None):
    """Criteria whose name or number appears in ``only`` (all when empty)."""
    if not only:
        return list(CRITERIA)
    wanted = {str(w).strip() for w in only}
    chosen = [c for c in CRITERIA if c[1] in wanted or str(c[0]) in wanted]
    unknown = wanted - {c[1] for c in chosen} - {str(c[0]) for c in chosen}
    if unknown:
        raise KeyError(f"unknown criteria: {sorted(unknown)}")
    return chosen


def run_one(number, name, fn, seed=DEFAULT_SEED, perf_soft=False):
    t0 = time.perf_counter()
    passed, detail = fn(seed)
    soft = False
    if name == PERF and perf_soft and not passed:
        passed, soft = True, True
    return Criterion(number, name, bool(passed), detail, time.perf_counter() - t0, soft)


def run_all(only=None, seed=DEFAULT_SEED, perf_soft=False, report=None):
    """Run the selected criteria in order; ``report`` is called with each result."""
    out = []
    for number, name, fn in select(only):
        res = run_one(number, name, fn, seed, perf_soft)
        out.append(res)
        if report is not None:
            report(res)
    return out
