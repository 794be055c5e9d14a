import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.spatial.transform import Rotation

from structembed import kernels as K
from structembed import transforms as T
from structembed.errors import InvalidArgument
from structembed.kernels import Nonlinearity

import oracles


def unit(rng, n):
    v = rng.standard_normal(n)
    return v / np.linalg.norm(v)


def with_angle(theta, n=8):
    v1 = np.zeros(n)
    v2 = np.zeros(n)
    v1[0] = 1.0
    v2[0], v2[1] = math.cos(theta), math.sin(theta)
    return v1, v2


# --- nonlinearities ------------------------------------------------------------

def test_nonlinearity_values():
    y = np.array([-2.0, -0.0, 0.0, 1.5])
    assert np.array_equal(Nonlinearity("heaviside")(y), [0, 1, 1, 1])
    relu = Nonlinearity.parse("relu")
    assert relu == Nonlinearity("arccos_power", 1)
    assert np.array_equal(relu(y), [0, 0, 0, 1.5])
    assert np.array_equal(Nonlinearity("arccos_power", 0)(y), Nonlinearity("heaviside")(y))
    assert np.array_equal(Nonlinearity.parse("arccos2")(y), [0, 0, 0, 2.25])
    sc = Nonlinearity("sincos")(y)
    assert sc.shape == (8,) and np.array_equal(sc[0::2], np.sin(y)) and np.array_equal(sc[1::2], np.cos(y))


def test_nonlinearity_parsing():
    assert str(Nonlinearity.parse("arccos_power(3)")) == "arccos_power(3)"
    assert Nonlinearity.parse("sin").tag == "sine"
    with pytest.raises(InvalidArgument):
        Nonlinearity.parse("tanh")
    with pytest.raises(InvalidArgument):
        Nonlinearity("arccos_power", -1)


# --- pipeline ------------------------------------------------------------------

def test_pipeline_dimensions():
    P = K.make_pipeline("toeplitz", 8, 50, "identity", 3)
    assert P.padded_n == 64 and P.d0.n == P.d1.n == P.matrix.n == 64


def test_embed_matches_dense_pipeline():
    rng = np.random.default_rng(0)
    P = K.make_pipeline("unstructured", 16, 64, "identity", 9)
    v = rng.standard_normal(64)
    A = P.matrix.materialize()
    dense = A @ np.diag(P.d1.d) @ oracles.hadamard(64) @ np.diag(P.d0.d)
    assert np.abs(K.embed(P, v) - dense @ v).max() < 1e-9
    for fam in ("circulant", "toeplitz", "hankel", "skew_circulant"):
        Q = K.make_pipeline(fam, 16, 64, "identity", 9)
        dense = Q.matrix.materialize() @ np.diag(Q.d1.d) @ oracles.hadamard(64) @ np.diag(Q.d0.d)
        assert np.abs(K.embed(Q, v) - dense @ v).max() < 1e-9


def test_embed_pads_short_inputs():
    P = K.make_pipeline("circulant", 8, 5, "identity", 1)
    v = np.arange(1.0, 6.0)
    assert np.array_equal(K.embed(P, v), K.embed(P, np.concatenate([v, np.zeros(3)])))


def test_embed_codomain_and_zero():
    P = K.make_pipeline("circulant", 8, 64, "heaviside", 1)
    out = K.embed(P, np.random.default_rng(0).standard_normal(64))
    assert set(np.unique(out)) <= {0.0, 1.0}
    Q = K.make_pipeline("circulant", 8, 64, "identity", 1)
    assert np.array_equal(K.embed(Q, np.zeros(64)), np.zeros(8))
    assert K.embed(K.make_pipeline("circulant", 8, 64, "sincos", 1), np.ones(64)).shape == (16,)


def test_embed_rejects_bad_input():
    P = K.make_pipeline("circulant", 8, 64, "identity", 1)
    with pytest.raises(InvalidArgument):
        K.embed(P, np.full(64, np.nan))
    with pytest.raises(InvalidArgument):
        K.embed(P, np.ones(65))


def test_jl_recovery_bit_identical():
    rng = np.random.default_rng(1)
    P = K.make_pipeline("unstructured", 32, 64, "identity", 4)
    v1, v2 = rng.standard_normal(64), rng.standard_normal(64)
    Y = (P.d1.d * T.fwht(P.d0.d * np.stack([v1, v2]))) @ P.matrix.g.reshape(32, 64).T
    assert K.estimate_pair(P, v1, v2) == float(np.mean(Y[0] * Y[1]))


def test_heaviside_self_estimate_is_positive_fraction():
    rng = np.random.default_rng(2)
    P = K.make_pipeline("toeplitz", 64, 64, "heaviside", 2)
    v = unit(rng, 64)
    y = K.project(P, v)
    assert K.estimate_pair(P, v, v) == np.mean(y >= 0)


def test_heaviside_self_estimate_expectation():
    rng = np.random.default_rng(3)
    v = unit(rng, 64)
    est = [K.estimate_pair(K.make_pipeline("circulant", 8, 64, "heaviside", s), v, v) for s in range(4000)]
    assert abs(np.mean(est) - 0.5) <= 4 * np.std(est) / math.sqrt(len(est))


def test_identity_self_estimate_over_seeds():
    v = unit(np.random.default_rng(4), 64)
    est = [K.estimate_pair(K.make_pipeline("circulant", 8, 64, "identity", s), v, v) for s in range(10_000)]
    assert abs(np.mean(est) - 1.0) <= 4 * np.std(est) / math.sqrt(len(est))


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 2**63), fam=st.sampled_from(["circulant", "toeplitz", "unstructured", "hankel"]))
def test_sincos_self_similarity_exact(seed, fam):
    v = np.random.default_rng(seed % 2**32).standard_normal(40)
    assert K.estimate_pair(K.make_pipeline(fam, 16, 40, "sincos", seed), v, v) == 1.0


def test_estimate_tuple_specializations():
    rng = np.random.default_rng(5)
    P = K.make_pipeline("circulant", 16, 64, "heaviside", 5)
    v1, v2 = rng.standard_normal(64), rng.standard_normal(64)
    assert K.estimate_tuple(P, lambda a, b: a * b, np.mean, [v1, v2]) == K.estimate_pair(P, v1, v2)
    assert K.estimate_tuple(P, lambda a, b: a * b, lambda z: 3.5, [v1, v2]) == 3.5

    def boom(*a):
        raise RuntimeError("beta failed")

    with pytest.raises(RuntimeError):
        K.estimate_tuple(P, boom, np.mean, [v1, v2])


def test_estimate_tuple_odd_moment():
    e1 = np.eye(16)[0]
    vals = [K.estimate_tuple(K.make_pipeline("unstructured", 8, 16, "identity", s),
                             lambda x, y, z: x * y * z, np.mean, [e1, e1, e1]) for s in range(10_000)]
    assert abs(np.mean(vals)) <= 4 * np.std(vals) / math.sqrt(len(vals))


# --- exact kernels and the Monte-Carlo arbiter -------------------------------------

def test_exact_kernel_basic_values():
    v1, v2 = np.eye(8)[0], np.eye(8)[1]
    assert K.exact_kernel("identity", v1, v2) == 0.0
    assert K.exact_kernel("heaviside", v1, v1) == 0.5
    assert K.exact_kernel("heaviside", v1, v2) == pytest.approx(0.25)
    assert K.exact_kernel("sincos", v1, v1) == 1.0
    assert K.exact_kernel("arccos_power(1)", 2 * v1, v1) == pytest.approx(2 * math.pi / (2 * math.pi))
    assert K.exact_kernel("arccos_power(5)", v1, v2) is None
    with pytest.raises(InvalidArgument):
        K.exact_kernel("heaviside", v1, np.zeros(8))


def test_heaviside_constant_confirmed_by_sampling():
    # at 60 degrees the two candidate constants give 1/3 and 1/6
    v1, v2 = with_angle(math.pi / 3)
    mean, se = K.mc_oracle("heaviside", v1, v2, 1_000_000, 11)
    assert abs(mean - (math.pi - math.pi / 3) / (2 * math.pi)) <= 4 * se
    assert abs(mean - (math.pi / 3) / (2 * math.pi)) > 100 * se
    assert K.exact_kernel("heaviside", v1, v2) == pytest.approx(1 / 3)


@pytest.mark.parametrize("f", ["heaviside", "relu", "arccos2", "sine", "cosine", "sincos", "identity"])
@pytest.mark.parametrize("theta", [0.3, 1.2, 2.5])
def test_exact_kernels_against_oracle(f, theta):
    v1, v2 = with_angle(theta)
    v1, v2 = 0.8 * v1, 1.3 * v2
    mean, se = K.mc_oracle(f, v1, v2, 400_000, 17)
    assert abs(mean - K.exact_kernel(f, v1, v2)) <= 4.5 * se


def test_mc_oracle_reference_cases():
    e1 = np.eye(4)[0]
    mean, se = K.mc_oracle("identity", e1, e1, 1_000_000, 1)
    assert abs(mean - 1) <= 4 * se and se == pytest.approx(math.sqrt(2) / 1000, rel=0.05)
    mean, se = K.mc_oracle("heaviside", e1, e1, 100_000, 2)
    assert abs(mean - 0.5) <= 4 * se
    v2 = np.zeros(4)  # ||v1 - v2|| = 1
    mean, se = K.mc_oracle("sincos", e1, v2, 200_000, 3)
    assert abs(mean - math.exp(-0.5)) <= 4 * se
    with pytest.raises(InvalidArgument):
        K.mc_oracle("identity", e1, e1, 99, 0)


def test_heaviside_orthogonal_oracle_precision():
    v1, v2 = with_angle(math.pi / 2)
    mean, se = K.mc_oracle("heaviside", v1, v2, 1_000_000, 5)
    assert se < 1e-3 and abs(mean - 0.25) <= 4 * se


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**32))
def test_heaviside_kernel_rotation_invariant(seed):
    rng = np.random.default_rng(seed)
    v1, v2 = rng.standard_normal(3), rng.standard_normal(3)
    R = Rotation.random(random_state=seed).as_matrix()
    assert abs(K.exact_kernel("heaviside", v1, v2) - K.exact_kernel("heaviside", R @ v1, R @ v2)) < 1e-12


def test_report_metadata():
    rng = np.random.default_rng(6)
    P = K.make_pipeline("circulant", 16, 32, "heaviside", 6)
    v1, v2 = unit(rng, 32), unit(rng, 32)
    rep = K.estimate_report(P, v1, v2, "0-1", oracle_trials=1000)
    assert rep.abs_error == abs(rep.estimate - rep.exact)
    assert rep.exact_form == "(pi - theta) / (2 pi)" and rep.seed == 6 and rep.m == 16
    assert rep.oracle is not None and len(rep.oracle) == 2


# --- sweeps --------------------------------------------------------------------

def test_error_sweep_shapes_and_seeds():
    X = np.random.default_rng(7).standard_normal((6, 20))
    rows = K.error_sweep(X, "circulant", "identity", [4, 8], 3, 99)
    assert [r.m for r in rows] == [4, 8] and all(len(r.rep_rmse) == 3 for r in rows)
    assert rows[0].rep_seeds == [K.derive_seed(99, 4, k) for k in range(3)]
    again = K.error_sweep(X, "circulant", "identity", [8], 3, 99)
    assert again[0].rmse == rows[1].rmse
    for r in rows:
        assert r.max_abs_error >= max(r.rep_rmse) > 0


def test_error_sweep_validation():
    X = np.ones((3, 4))
    with pytest.raises(InvalidArgument):
        K.error_sweep(np.zeros((0, 4)), "circulant", "identity", [4], 1, 0)
    with pytest.raises(InvalidArgument):
        K.error_sweep(X, "circulant", "identity", [0], 1, 0)
    with pytest.raises(InvalidArgument):
        K.error_sweep(X, "circulant", "identity", [], 1, 0)
    with pytest.raises(InvalidArgument):
        K.error_sweep(X, "circulant", "arccos5", [2], 1, 0)


def test_error_sweep_pair_sampling_cap():
    X = np.random.default_rng(8).standard_normal((30, 8))
    rows = K.error_sweep(X, "toeplitz", "identity", [4], 1, 0, max_pairs=20)
    assert rows[0].rmse > 0


def test_error_decreases_with_m():
    rng = np.random.default_rng(9)
    X = rng.standard_normal((40, 256))
    X /= np.linalg.norm(X, axis=1, keepdims=True)
    wins = 0
    for s in range(10):
        r64, r256 = K.error_sweep(X, "toeplitz", "identity", [64, 256], 1, s)
        wins += r256.rmse < r64.rmse
    assert wins >= 9


def test_error_ratio_identity_m64_m1024():
    rng = np.random.default_rng(10)
    X = rng.standard_normal((20, 1024))
    X /= np.linalg.norm(X, axis=1, keepdims=True)
    rows = K.error_sweep(X, "circulant", "identity", [64, 1024], 50, 10)
    ratios = np.array(rows[0].rep_rmse) / np.array(rows[1].rep_rmse)
    assert 2.4 <= np.median(ratios) <= 5.6


# --- layered embeddings and flip probabilities ------------------------------------

def test_layered_embedding_against_sampling():
    rng = np.random.default_rng(12)
    v1, v2 = unit(rng, 32), unit(rng, 32)
    est = [K.layered_estimate_pair(K.make_layers("circulant", [32, 32], 32, "relu", s), v1, v2)
           for s in range(300)]
    # reference: two layers of dense Gaussian relu features
    ref = []
    for s in range(300):
        g = np.random.default_rng(10_000 + s)
        W1, W2 = g.standard_normal((32, 32)), g.standard_normal((32, 32))
        h1, h2 = np.maximum(W1 @ v1, 0), np.maximum(W1 @ v2, 0)
        ref.append(np.mean(np.maximum(W2 @ h1, 0) * np.maximum(W2 @ h2, 0)))
    se = math.hypot(np.std(est) / math.sqrt(300), np.std(ref) / math.sqrt(300))
    assert abs(np.mean(est) - np.mean(ref)) <= 4 * se


def test_p0_flip_probability():
    p, se = K.p0_flip_mc(64, 0.01, 100_000, 3)
    # min of two correlated standard normals has density about 0.4 at zero
    assert 0.004 < p < 0.012 and se > 0
    with pytest.raises(InvalidArgument):
        K.p0_flip_mc(1, 0.01, 10, 0)
