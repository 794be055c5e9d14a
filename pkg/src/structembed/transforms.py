"""Seeded randomness and the randomized Hadamard preprocessing ``D1 H D0``.

Every random quantity in the package is drawn from a Philox counter-based
generator keyed by ``(seed, stream)``, so a given seed reproduces the same
numbers regardless of call order or thread count.
"""

from dataclasses import dataclass

import numpy as np

from .errors import InvalidArgument

# Stream ids for the independent draws a pipeline needs from one seed.
STREAM_BUDGET = 0
STREAM_D0 = 1
STREAM_D1 = 2
STREAM_LDR = 3

_SEED_LIMIT = 1 << 64


def rng(seed, *stream):
    """Return a Philox generator for ``seed`` and the integer ``stream`` path."""
    seed = int(seed)
    if not 0 <= seed < _SEED_LIMIT:
        raise InvalidArgument(f"seed must be a 64-bit unsigned integer, got {seed}")
    ss = np.random.SeedSequence(seed, spawn_key=tuple(int(s) for s in stream))
    return np.random.Generator(np.random.Philox(ss))


def _frozen(a):
    a = np.ascontiguousarray(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class RandomnessBudget:
    """The ``t`` i.i.d. standard normals shared by all rows of a structured matrix."""

    seed: int
    t: int
    g: np.ndarray

    def __post_init__(self):
        if self.g.shape != (self.t,):
            raise InvalidArgument(f"budget vector must have length {self.t}")


@dataclass(frozen=True, eq=False)
class SignDiagonal:
    """Diagonal of a random +-1 matrix."""

    seed: int
    n: int
    d: np.ndarray


def sample_gaussian(seed, t, stream=STREAM_BUDGET):
    """Draw a budget of ``t`` standard normal variates."""
    if t < 1:
        raise InvalidArgument(f"budget length must be >= 1, got {t}")
    g = rng(seed, stream).standard_normal(int(t))
    return RandomnessBudget(int(seed), int(t), _frozen(g))


def sample_signs(seed, n, stream=STREAM_D0):
    """Draw ``n`` independent fair signs."""
    if n < 1:
        raise InvalidArgument(f"sign diagonal length must be >= 1, got {n}")
    bits = rng(seed, stream).integers(0, 2, size=int(n))
    return SignDiagonal(int(seed), int(n), _frozen(2.0 * bits - 1.0))


def is_pow2(n):
    return n >= 1 and (n & (n - 1)) == 0


def next_pow2(n):
    return 1 << max(0, int(n) - 1).bit_length()


def fwht(x):
    """Orthonormal Walsh-Hadamard transform along the last axis.

    Uses the Sylvester ordering, so ``fwht(e_0)`` is the constant vector
    ``1/sqrt(n)``. The transform is its own inverse.
    """
    y = np.array(x, dtype=float)
    n = y.shape[-1] if y.ndim else 0
    if not is_pow2(n):
        raise InvalidArgument(f"fwht needs a power-of-two length, got {n}")
    batch = y.shape[:-1]
    h = 1
    while h < n:
        y = y.reshape(*batch, n // (2 * h), 2, h)
        a = y[..., 0, :]
        b = y[..., 1, :]
        y = np.stack((a + b, a - b), axis=-2)
        h *= 2
    return y.reshape(*batch, n) / np.sqrt(n)


def preprocess(v, d0, d1):
    """Apply ``D1 H D0`` to ``v`` (or to each row of a 2-D batch)."""
    v = np.asarray(v, dtype=float)
    n = v.shape[-1]
    if d0.n != n or d1.n != n:
        raise InvalidArgument(
            f"length mismatch: vector {n}, d0 {d0.n}, d1 {d1.n}"
        )
    return d1.d * fwht(d0.d * v)


def pad_pow2(v):
    """Zero-pad the last axis up to the next power of two."""
    v = np.asarray(v, dtype=float)
    n = v.shape[-1] if v.ndim else 0
    if n < 1:
        raise InvalidArgument("cannot pad an empty vector")
    p = next_pow2(n)
    if p == n:
        return v
    width = [(0, 0)] * (v.ndim - 1) + [(0, p - n)]
    return np.pad(v, width)
