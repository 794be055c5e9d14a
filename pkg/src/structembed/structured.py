"""Structured Gaussian matrices built from a shared budget of randomness.

Row ``i`` of every matrix equals ``g @ P_i`` for a budget ``g`` of length
``t`` and a fixed selector matrix ``P_i`` of shape ``(t, n)``. Rows and
columns are indexed from 0.

Entry conventions (``g`` is the budget, ``i`` the row, ``j`` the column):

* circulant       ``g[(j - i) % n]``
* skew_circulant  ``g[(j - i) % n]``, negated when ``j < i``
* toeplitz        ``g[j - i]`` on and above the diagonal, ``g[n + i - j - 1]`` below
* hankel          the Toeplitz row with the same budget, reversed
* ldr             first ``m`` rows of ``sum_k Z1(g^k) Zm1(h^k)`` where ``Z1`` and
  ``Zm1`` are the circulant and skew-circulant matrices above, ``g^k`` is the
  k-th length-``n`` slice of the budget and ``h^k`` a sparse random sign vector
* unstructured    ``g[i * n + j]``
"""

from dataclasses import dataclass
from functools import cached_property

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from . import transforms
from .errors import InvalidArgument, ResourceLimit

FAMILIES = ("unstructured", "circulant", "skew_circulant", "toeplitz", "hankel", "ldr")
SHIFT_FAMILIES = ("circulant", "skew_circulant", "toeplitz", "hankel")

DEFAULT_P_CAP = 1 << 24
DEFAULT_DENSE_CAP = 1 << 26
# Below this n, matvec multiplies by the (cached) dense matrix instead.
FAST_PATH_MIN_N = 64


@dataclass(frozen=True)
class StructuredFamily:
    tag: str
    r: int = 1
    a: int = 2

    def __post_init__(self):
        if self.tag not in FAMILIES:
            raise InvalidArgument(f"unknown family {self.tag!r}; expected one of {FAMILIES}")
        if self.tag == "ldr" and (self.r < 1 or self.a < 1):
            raise InvalidArgument("ldr needs r >= 1 and a >= 1")

    def budget_length(self, m, n):
        return {
            "unstructured": m * n,
            "circulant": n,
            "skew_circulant": n,
            "toeplitz": n + m - 1,
            "hankel": n + m - 1,
            "ldr": self.r * n,
        }[self.tag]

    def __str__(self):
        if self.tag == "ldr":
            return f"ldr(r={self.r},a={self.a})"
        return self.tag


def as_family(family):
    if isinstance(family, StructuredFamily):
        return family
    return StructuredFamily(str(family))


@dataclass(frozen=True, eq=False)
class StructuredMatrix:
    family: StructuredFamily
    m: int
    n: int
    t: int
    seed: int
    budget: transforms.RandomnessBudget
    h: np.ndarray = None  # (r, n) sign patterns, ldr only

    @property
    def g(self):
        return self.budget.g

    @property
    def shape(self):
        return (self.m, self.n)

    def row(self, i):
        return row(self, i)

    def p_matrix(self, i, cap=DEFAULT_P_CAP):
        return p_matrix(self, i, cap)

    def materialize(self, cap=DEFAULT_DENSE_CAP):
        return materialize(self, cap)

    def matvec(self, v):
        return matvec(self, v)

    def __matmul__(self, v):
        return matvec(self, v)

    @cached_property
    def _small_dense(self):
        return materialize(self)


def build(family, m, n, seed, g=None, h=None):
    """Build an ``m x n`` structured matrix.

    ``g`` (and ``h`` for ldr) override the seeded draws; tests use this to
    probe the matrix with unit budgets.
    """
    family = as_family(family)
    m, n = int(m), int(n)
    if m < 1 or n < 1:
        raise InvalidArgument(f"need m, n >= 1, got m={m}, n={n}")
    if family.tag in SHIFT_FAMILIES or family.tag == "ldr":
        if m > n:
            raise InvalidArgument(f"{family.tag} needs m <= n, got m={m}, n={n}")
    if family.tag == "ldr" and family.a > n:
        raise InvalidArgument(f"ldr needs a <= n, got a={family.a}, n={n}")
    t = family.budget_length(m, n)
    if g is None:
        budget = transforms.sample_gaussian(seed, t)
    else:
        g = np.asarray(g, dtype=float)
        if g.shape != (t,):
            raise InvalidArgument(f"budget must have length {t}, got {g.shape}")
        budget = transforms.RandomnessBudget(int(seed), t, transforms._frozen(g))
    if family.tag == "ldr":
        h = _ldr_h(family, n, seed) if h is None else np.asarray(h, dtype=float)
        if h.shape != (family.r, n):
            raise InvalidArgument(f"h must have shape {(family.r, n)}")
        h = transforms._frozen(h)
    else:
        h = None
    return StructuredMatrix(family, m, n, t, int(seed), budget, h)


def _ldr_h(family, n, seed):
    gen = transforms.rng(seed, transforms.STREAM_LDR)
    h = np.zeros((family.r, n))
    scale = 1.0 / np.sqrt(family.a * family.r)
    for k in range(family.r):
        pos = gen.choice(n, size=family.a, replace=False)
        h[k, pos] = np.where(gen.integers(0, 2, size=family.a) == 1, scale, -scale)
    return h


# --- dense forms -----------------------------------------------------------

def _offset_kernel(M, g=None):
    """Entries of a Toeplitz-like matrix by offset ``j - i``.

    Returns ``(first_row, below)`` where ``T[i, j] = first_row[j - i]`` for
    ``j >= i`` and ``below[i - j - 1]`` otherwise. Hankel is handled by its
    callers through column reversal.
    """
    n = M.n
    g = M.g if g is None else g
    tag = M.family.tag
    if tag == "circulant":
        return g[:n], g[::-1][: n - 1]
    if tag == "skew_circulant":
        return g[:n], -g[::-1][: n - 1]
    if tag in ("toeplitz", "hankel"):
        return g[:n], g[n:]
    raise AssertionError(tag)


def _toeplitz_rows(first_row, below, m):
    n = len(first_row)
    w = np.concatenate((np.asarray(below[: m - 1])[::-1], first_row))
    return sliding_window_view(w, n)[::-1]


def _skew_dense(h):
    n = len(h)
    return np.array(_toeplitz_rows(h, -h[::-1][: n - 1], n))


def _circ_dense(g, m):
    n = len(g)
    return np.array(_toeplitz_rows(g, g[::-1][: n - 1], m))


def materialize(M, cap=DEFAULT_DENSE_CAP):
    """Dense ``m x n`` copy of ``M``."""
    if M.m * M.n > cap:
        raise ResourceLimit(f"materialize of {M.m}x{M.n} exceeds cap {cap}")
    tag = M.family.tag
    if tag == "unstructured":
        return M.g.reshape(M.m, M.n).copy()
    if tag == "ldr":
        n = M.n
        out = np.zeros((M.m, n))
        for k in range(M.family.r):
            out += _circ_dense(M.g[k * n:(k + 1) * n], M.m) @ _skew_dense(M.h[k])
        return out
    rows = _toeplitz_rows(*_offset_kernel(M), M.m)
    if tag == "hankel":
        rows = rows[:, ::-1]
    return np.array(rows)


def row(M, i):
    """Row ``i`` (0-based) of ``M`` without materializing the matrix."""
    i = _check_row(M, i)
    tag = M.family.tag
    n = M.n
    if tag == "unstructured":
        return M.g[i * n:(i + 1) * n].copy()
    if tag == "ldr":
        out = np.zeros(n)
        for k in range(M.family.r):
            gk = M.g[k * n:(k + 1) * n]
            out += np.roll(gk, i) @ _skew_dense(M.h[k])
        return out
    first, below = _offset_kernel(M)
    w = np.concatenate((np.asarray(below[: M.m - 1])[::-1], first))
    r = w[M.m - 1 - i: M.m - 1 - i + n].copy()
    return r[::-1].copy() if tag == "hankel" else r


def _check_row(M, i):
    i = int(i)
    if not 0 <= i < M.m:
        raise InvalidArgument(f"row index {i} out of range [0, {M.m})")
    return i


def _toeplitz_source(n, i, c):
    """Budget index feeding entry ``(i, c)`` of a Toeplitz matrix."""
    return c - i if c >= i else n + i - c - 1


def p_matrix(M, i, cap=DEFAULT_P_CAP):
    """Explicit selector ``P_i`` of shape ``(t, n)`` with ``g @ P_i == row(i)``."""
    i = _check_row(M, i)
    t, n = M.t, M.n
    if t * n > cap:
        raise ResourceLimit(f"P_i of size {t}x{n} exceeds cap {cap}")
    P = np.zeros((t, n))
    cols = np.arange(n)
    tag = M.family.tag
    if tag == "unstructured":
        P[i * n + cols, cols] = 1.0
    elif tag == "circulant":
        P[(cols - i) % n, cols] = 1.0
    elif tag == "skew_circulant":
        P[(cols - i) % n, cols] = np.where(cols < i, -1.0, 1.0)
    elif tag == "toeplitz":
        src = [_toeplitz_source(n, i, c) for c in cols]
        P[src, cols] = 1.0
    elif tag == "hankel":
        src = [_toeplitz_source(n, i, n - 1 - c) for c in cols]
        P[src, cols] = 1.0
    else:
        # block k: rows of Zm1(h^k) shifted up (circularly) by i
        for k in range(M.family.r):
            P[k * n:(k + 1) * n] = np.roll(_skew_dense(M.h[k]), -i, axis=0)
    return P


# --- fast products ---------------------------------------------------------

def circular_convolve(a, b):
    """``out[k] = sum_j a[j] * b[(k - j) % n]`` along the last axis, via FFT."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    n = a.shape[-1]
    if b.shape[-1] != n:
        raise InvalidArgument(f"length mismatch: {n} vs {b.shape[-1]}")
    if not transforms.is_pow2(n):
        raise InvalidArgument(f"circular_convolve needs a power-of-two length, got {n}")
    return np.fft.irfft(np.fft.rfft(a) * np.fft.rfft(b), n)


def _toeplitz_matvec(first_row, below, m, v):
    """First ``m`` rows of a Toeplitz-like matrix times ``v`` via circulant embedding."""
    n = len(first_row)
    L = transforms.next_pow2(n + m - 1)
    kern = np.zeros(L)
    kern[0] = first_row[0]
    kern[L - n + 1:] = first_row[1:][::-1]
    kern[1:m] = below[: m - 1]
    vpad = np.zeros(v.shape[:-1] + (L,))
    vpad[..., :n] = v
    return circular_convolve(kern, vpad)[..., :m]


def _circulant_matvec(g, m, v):
    n = len(g)
    if transforms.is_pow2(n):
        g_rev = np.roll(g[::-1], 1)  # g_rev[k] = g[-k % n]
        return circular_convolve(g_rev, v)[..., :m]
    return _toeplitz_matvec(g, g[::-1][: n - 1], m, v)


def matvec(M, v):
    """``M @ v`` for a vector or a batch of row vectors of length ``n``."""
    v = np.asarray(v, dtype=float)
    if v.shape[-1] != M.n:
        raise InvalidArgument(f"vector length {v.shape[-1]} does not match n={M.n}")
    tag = M.family.tag
    if tag == "unstructured":
        return v @ M.g.reshape(M.m, M.n).T
    if M.n < FAST_PATH_MIN_N:
        return v @ M._small_dense.T
    if tag == "circulant":
        return _circulant_matvec(M.g, M.m, v)
    if tag == "ldr":
        n = M.n
        out = 0.0
        for k in range(M.family.r):
            hk = M.h[k]
            u = _toeplitz_matvec(hk, -hk[::-1][: n - 1], n, v)
            out = out + _circulant_matvec(M.g[k * n:(k + 1) * n], M.m, u)
        return out
    first, below = _offset_kernel(M)
    if tag == "hankel":
        v = v[..., ::-1]
    return _toeplitz_matvec(first, below, M.m, v)
