"""Nonlinear embeddings through structured matrices and the kernels they estimate.

A pipeline maps ``v`` to ``f(A D1 H D0 v)``. Pair estimates average
``f(y1_i) * f(y2_i)`` over the ``m`` rows; the expectation over a fully
Gaussian row is the kernel ``E[f(<r, v1>) f(<r, v2>)]``.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from . import transforms
from .errors import InvalidArgument
from .structured import as_family, build

TAGS = ("identity", "heaviside", "arccos_power", "sine", "cosine", "sincos")

# Closed forms pinned after checking them against mc_oracle (see tests).
EXACT_FORMS = {
    "identity": "<v1,v2>",
    "heaviside": "(pi - theta) / (2 pi)",
    "arccos_power(0)": "(pi - theta) / (2 pi)",
    "arccos_power(1)": "|v1||v2| (sin theta + (pi - theta) cos theta) / (2 pi)",
    "arccos_power(2)": "|v1|^2|v2|^2 (3 sin theta cos theta + (pi - theta)(1 + 2 cos^2 theta)) / (2 pi)",
    "sine": "(exp(-|v1-v2|^2/2) - exp(-|v1+v2|^2/2)) / 2",
    "cosine": "(exp(-|v1-v2|^2/2) + exp(-|v1+v2|^2/2)) / 2",
    "sincos": "exp(-|v1-v2|^2/2)",
}


@dataclass(frozen=True)
class Nonlinearity:
    tag: str
    b: int = 0

    def __post_init__(self):
        if self.tag not in TAGS:
            raise InvalidArgument(f"unknown nonlinearity {self.tag!r}")
        if self.tag == "arccos_power" and self.b < 0:
            raise InvalidArgument("arccos_power needs b >= 0")

    @classmethod
    def parse(cls, text):
        """Accepts ``identity``, ``heaviside``, ``relu``, ``arccos2``,
        ``arccos_power(2)``, ``sine``, ``cosine``, ``sincos``."""
        s = str(text).strip().lower().replace(" ", "")
        if s == "relu":
            return cls("arccos_power", 1)
        if s.startswith("arccos"):
            digits = "".join(ch for ch in s[len("arccos"):] if ch.isdigit())
            if not digits:
                raise InvalidArgument(f"missing power in {text!r}")
            return cls("arccos_power", int(digits))
        if s in ("sin",):
            s = "sine"
        if s in ("cos",):
            s = "cosine"
        return cls(s)

    def __str__(self):
        return f"arccos_power({self.b})" if self.tag == "arccos_power" else self.tag

    @property
    def f_max(self):
        """Bound on ``|f|``, or ``None`` when ``f`` is unbounded."""
        if self.tag in ("heaviside", "sine", "cosine", "sincos"):
            return 1.0
        if self.tag == "arccos_power" and self.b == 0:
            return 1.0
        return None

    def __call__(self, y):
        y = np.asarray(y, dtype=float)
        if self.tag == "identity":
            return y
        if self.tag == "heaviside":
            return (y >= 0).astype(float)
        if self.tag == "arccos_power":
            return np.where(y >= 0, np.maximum(y, 0.0) ** self.b, 0.0)
        if self.tag == "sine":
            return np.sin(y)
        if self.tag == "cosine":
            return np.cos(y)
        out = np.empty(y.shape[:-1] + (2 * y.shape[-1],))
        out[..., 0::2] = np.sin(y)
        out[..., 1::2] = np.cos(y)
        return out


def as_nonlinearity(f):
    return f if isinstance(f, Nonlinearity) else Nonlinearity.parse(f)


def derive_seed(base, *path):
    """Independent 64-bit seed for the task at ``path`` under ``base``."""
    ss = np.random.SeedSequence(int(base), spawn_key=tuple(int(p) for p in path))
    return int(ss.generate_state(1, np.uint64)[0])


@dataclass(frozen=True, eq=False)
class EmbeddingPipeline:
    matrix: object
    d0: transforms.SignDiagonal
    d1: transforms.SignDiagonal
    f: Nonlinearity

    def __post_init__(self):
        n = self.matrix.n
        if self.d0.n != n or self.d1.n != n or not transforms.is_pow2(n):
            raise InvalidArgument("pipeline dimensions must agree and be a power of two")

    @property
    def padded_n(self):
        return self.matrix.n

    @property
    def m(self):
        return self.matrix.m

    @property
    def seed(self):
        return self.matrix.seed


def make_pipeline(family, m, n, f, seed):
    """Pipeline for inputs of dimension up to ``n`` (padded to a power of two)."""
    padded = transforms.next_pow2(n)
    M = build(as_family(family), m, padded, seed)
    d0 = transforms.sample_signs(seed, padded, transforms.STREAM_D0)
    d1 = transforms.sample_signs(seed, padded, transforms.STREAM_D1)
    return EmbeddingPipeline(M, d0, d1, as_nonlinearity(f))


def project(P, v):
    """Linear part ``A D1 H D0 pad(v)`` for a vector or a batch of rows."""
    v = np.asarray(v, dtype=float)
    if not np.all(np.isfinite(v)):
        raise InvalidArgument("input contains non-finite values")
    d = v.shape[-1]
    if d > P.padded_n:
        raise InvalidArgument(f"input length {d} exceeds pipeline dimension {P.padded_n}")
    if d < P.padded_n:
        v = np.concatenate((v, np.zeros(v.shape[:-1] + (P.padded_n - d,))), axis=-1)
    return P.matrix.matvec(transforms.preprocess(v, P.d0, P.d1))


def embed(P, v):
    return P.f(project(P, v))


def _pair_values(f, y1, y2):
    if f.tag == "sincos":
        # sin*sin + cos*cos per row, written so identical inputs give exactly 1
        return np.cos(y1 - y2)
    return f(y1) * f(y2)


def estimate_pair(P, v1, v2):
    """Mean over rows of ``f(y1_i) f(y2_i)``; sin/cos pairs count as one row."""
    y = project(P, np.stack([np.asarray(v1, float), np.asarray(v2, float)]))
    return float(np.mean(_pair_values(P.f, y[0], y[1])))


def estimate_pairs(P, X, pairs):
    """Vectorized :func:`estimate_pair` for index pairs into the rows of ``X``."""
    Y = project(P, X)
    I, J = np.asarray(pairs).T
    return np.mean(_pair_values(P.f, Y[I], Y[J]), axis=1)


def estimate_tuple(P, beta, psi, vs):
    """``psi(beta(features of coordinate 1), ..., beta(features of coordinate m))``.

    ``beta`` receives one array per input vector (all coordinates at once)
    and must act elementwise; ``psi`` receives the resulting vector.
    """
    vs = np.atleast_2d(np.asarray(vs, dtype=float))
    if len(vs) < 1:
        raise InvalidArgument("need at least one vector")
    F = embed(P, vs)
    return psi(beta(*F))


def _angle(v1, v2):
    n1, n2 = np.linalg.norm(v1), np.linalg.norm(v2)
    if n1 == 0 or n2 == 0:
        raise InvalidArgument("angle-based kernels need nonzero vectors")
    c = float(np.clip(np.dot(v1, v2) / (n1 * n2), -1.0, 1.0))
    return n1, n2, math.acos(c)


def exact_kernel(f, v1, v2):
    """Closed form of ``E[f(<r, v1>) f(<r, v2>)]``, or ``None`` if unavailable."""
    f = as_nonlinearity(f)
    v1 = np.asarray(v1, dtype=float)
    v2 = np.asarray(v2, dtype=float)
    if f.tag == "identity":
        return float(np.dot(v1, v2))
    if f.tag in ("sine", "cosine", "sincos"):
        minus = math.exp(-float(np.sum((v1 - v2) ** 2)) / 2)
        if f.tag == "sincos":
            return minus
        plus = math.exp(-float(np.sum((v1 + v2) ** 2)) / 2)
        return (minus - plus) / 2 if f.tag == "sine" else (minus + plus) / 2
    b = 0 if f.tag == "heaviside" else f.b
    n1, n2, th = _angle(v1, v2)
    s, c = math.sin(th), math.cos(th)
    if b == 0:
        return (math.pi - th) / (2 * math.pi)
    if b == 1:
        return n1 * n2 * (s + (math.pi - th) * c) / (2 * math.pi)
    if b == 2:
        return (n1 * n2) ** 2 * (3 * s * c + (math.pi - th) * (1 + 2 * c * c)) / (2 * math.pi)
    return None


def exact_form(f):
    return EXACT_FORMS.get(str(as_nonlinearity(f)))


def mc_oracle(f, v1, v2, trials, seed, chunk=100_000):
    """Brute-force mean and standard error of ``f(<r, v1>) f(<r, v2>)`` over Gaussian ``r``."""
    f = as_nonlinearity(f)
    if trials < 100:
        raise InvalidArgument("mc_oracle needs at least 100 trials")
    V = np.stack([np.asarray(v1, float), np.asarray(v2, float)])
    if not np.all(np.isfinite(V)):
        raise InvalidArgument("input contains non-finite values")
    gen = transforms.rng(seed, 0xC0FFEE)
    total = total_sq = 0.0
    done = 0
    while done < trials:
        b = min(chunk, trials - done)
        y = gen.standard_normal((b, V.shape[1])) @ V.T
        vals = _pair_values(f, y[:, 0], y[:, 1])
        total += float(vals.sum())
        total_sq += float(np.dot(vals, vals))
        done += b
    mean = total / trials
    var = max(total_sq / trials - mean ** 2, 0.0) * trials / (trials - 1)
    return mean, math.sqrt(var / trials)


@dataclass
class EstimateReport:
    estimate: float
    m: int
    family: str
    f: str
    seed: int
    exact: float = None
    oracle: tuple = None
    pair_id: str = ""
    exact_form: str = None

    @property
    def abs_error(self):
        return None if self.exact is None else abs(self.estimate - self.exact)


def estimate_report(P, v1, v2, pair_id="", oracle_trials=None, oracle_seed=0):
    est = estimate_pair(P, v1, v2)
    exact = exact_kernel(P.f, v1, v2)
    oracle = None
    if oracle_trials:
        oracle = mc_oracle(P.f, v1, v2, oracle_trials, oracle_seed)
    return EstimateReport(est, P.m, str(P.matrix.family), str(P.f), P.seed, exact, oracle,
                          pair_id, exact_form(P.f) if exact is not None else None)


@dataclass
class SweepRow:
    m: int
    family: str
    f: str
    rmse: float
    max_abs_error: float
    reps: int
    rep_rmse: list = field(default_factory=list)
    rep_max_abs: list = field(default_factory=list)
    rep_seeds: list = field(default_factory=list)


def all_pairs(N):
    return [(i, j) for i in range(N) for j in range(i + 1, N)]


def error_sweep(dataset, family, f, m_values, reps, seed, pairs=None, max_pairs=10_000, n=None):
    """Estimation error against the closed-form kernel, per ``m``.

    Every ``(m, rep)`` run draws its pipeline from ``derive_seed(seed, m, rep)``.
    ``pairs`` defaults to all index pairs, sampled down to ``max_pairs``.
    For structured families the input is zero-padded up to ``max(m_values)``
    when that exceeds the data dimension.
    """
    X = np.atleast_2d(np.asarray(dataset, dtype=float))
    if X.size == 0 or len(X) < 2:
        raise InvalidArgument("dataset needs at least two vectors")
    if not m_values:
        raise InvalidArgument("m_values must be nonempty")
    if reps < 1:
        raise InvalidArgument("reps must be >= 1")
    f = as_nonlinearity(f)
    if pairs is None:
        pairs = all_pairs(len(X))
        if len(pairs) > max_pairs:
            pick = transforms.rng(seed, 0x5A3B).choice(len(pairs), size=max_pairs, replace=False)
            pairs = [pairs[k] for k in sorted(pick)]
    pairs = np.asarray(pairs, dtype=int)
    exact = np.array([exact_kernel(f, X[i], X[j]) for i, j in pairs], dtype=object)
    if any(e is None for e in exact):
        raise InvalidArgument(f"no closed-form kernel for {f}")
    exact = exact.astype(float)
    dim = X.shape[1] if n is None else n
    if as_family(family).tag != "unstructured":
        # square-or-wide families need m <= n; extra zero padding keeps inputs intact
        dim = max(dim, max(m_values))
    rows = []
    for m in m_values:
        if m < 1:
            raise InvalidArgument("m must be >= 1")
        sq, mx, seeds = [], [], []
        all_sq = 0.0
        for rep in range(reps):
            s = derive_seed(seed, m, rep)
            P = make_pipeline(family, m, dim, f, s)
            err = estimate_pairs(P, X, pairs) - exact
            sq.append(float(np.sqrt(np.mean(err ** 2))))
            mx.append(float(np.max(np.abs(err))))
            seeds.append(s)
            all_sq += float(np.sum(err ** 2))
        rmse = math.sqrt(all_sq / (reps * len(pairs)))
        rows.append(SweepRow(int(m), str(as_family(family)), str(f), rmse, max(mx), reps, sq, mx, seeds))
    return rows


# --- layered (recursive) embeddings ------------------------------------------

def make_layers(family, ms, n, f, seed):
    """Chain of pipelines; layer ``l`` maps dimension ``ms[l-1]`` (or ``n``) to ``ms[l]``."""
    layers, dim = [], n
    for depth, m in enumerate(ms):
        layers.append(make_pipeline(family, m, dim, f, derive_seed(seed, depth)))
        dim = m
    return layers


def embed_layers(layers, v):
    """Feed ``v`` through every pipeline in turn, passing raw features on."""
    out = np.asarray(v, dtype=float)
    for P in layers:
        out = embed(P, out)
    return out


def layered_estimate_pair(layers, v1, v2):
    """Product-mean estimate on the last layer's features (no closed form; compare to sampling)."""
    a = embed_layers(layers[:-1], v1) if len(layers) > 1 else np.asarray(v1, float)
    b = embed_layers(layers[:-1], v2) if len(layers) > 1 else np.asarray(v2, float)
    return estimate_pair(layers[-1], a, b)


# --- perturbation sensitivity of sign hashes ---------------------------------

def p0_flip_mc(n, eps, trials, seed, chunk=50_000):
    """Monte-Carlo probability that a box perturbation ``|zeta|_inf <= eps`` of the
    projections ``(<r, v1>, <r, v2>)`` can change ``heaviside(y1) * heaviside(y2)``.

    Each trial draws a fresh random unit pair in dimension ``n`` and a Gaussian
    ``r``. The product is 1 exactly on the closed quadrant, so the perturbed
    value can differ iff ``-eps <= min(y1, y2) < eps``. Returns ``(p, stderr)``.
    """
    if n < 2 or eps <= 0 or trials < 1:
        raise InvalidArgument("need n >= 2, eps > 0 and trials >= 1")
    gen = transforms.rng(seed, 0xF11B)
    hits = done = 0
    while done < trials:
        b = min(chunk, trials - done)
        V = gen.standard_normal((b, 2, n))
        V /= np.linalg.norm(V, axis=2, keepdims=True)
        r = gen.standard_normal((b, n))
        y = np.einsum("bkn,bn->bk", V, r)
        low = y.min(axis=1)
        hits += int(np.count_nonzero((low >= -eps) & (low < eps)))
        done += b
    p = hits / trials
    return p, math.sqrt(p * (1 - p) / trials)
