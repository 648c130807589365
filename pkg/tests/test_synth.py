import numpy as np
import pytest
from hypothesis import given, strategies as st

from bsgl.core import certificate_holds, check_balance
from bsgl.errors import InputError, ParameterError
from bsgl.synth import SynthSpec, corrupt, generate_er_balanced, make_instance, sample_gmrf


def _edges(W):
    return int(np.count_nonzero(np.triu(W, 1)))


def test_edge_count_matches_binomial_expectation():
    spec = SynthSpec(n_nodes=50, edge_prob=0.2)
    counts = [_edges(generate_er_balanced(spec, np.random.default_rng(s)).W) for s in range(200)]
    pairs = 50 * 49 // 2
    assert 0.2 * pairs == 245
    sd_mean = np.sqrt(pairs * 0.2 * 0.8 / 200)
    assert abs(np.mean(counts) - 245) <= 3 * sd_mean


@given(st.integers(0, 2**31), st.integers(5, 40), st.floats(0.1, 0.6))
def test_generated_graphs_are_balanced_pd_and_in_range(seed, n, p):
    spec = SynthSpec(n_nodes=n, edge_prob=p, seed=seed)
    gt = generate_er_balanced(spec)
    L = gt.L.L
    assert check_balance(L, laplacian=True).balanced
    assert certificate_holds(L, gt.beta)
    assert np.linalg.eigvalsh(L).min() > 0
    W = gt.W
    off = np.triu(W, 1)
    mag = np.abs(off[off != 0])
    assert np.all((mag >= spec.weight_lo) & (mag <= spec.weight_hi))
    i, j = np.nonzero(off)
    np.testing.assert_array_equal(np.sign(off[i, j]), gt.beta[i] * gt.beta[j])
    neg = np.clip(-(W - np.diag(np.diag(W))), 0, None).sum(axis=1)
    np.testing.assert_allclose(np.diag(W), 2.5 * neg)


def test_generation_is_deterministic():
    a = generate_er_balanced(SynthSpec(n_nodes=20, seed=3))
    b = generate_er_balanced(SynthSpec(n_nodes=20, seed=3))
    np.testing.assert_array_equal(a.L.L, b.L.L)
    np.testing.assert_array_equal(a.beta, b.beta)


def test_small_sparse_draws_are_redrawn_until_pd():
    for s in range(30):
        gt = generate_er_balanced(SynthSpec(n_nodes=10, edge_prob=0.2, seed=s))
        assert np.linalg.eigvalsh(gt.L.L).min() > 0


@pytest.mark.parametrize("kw", [dict(n_nodes=1), dict(n_obs=1), dict(edge_prob=0.0),
                                dict(edge_prob=1.5), dict(weight_lo=0.0),
                                dict(weight_lo=2.0, weight_hi=1.0), dict(noise_sigma=-1.0),
                                dict(selfloop_factor=1.0)])
def test_spec_validation(kw):
    with pytest.raises(ParameterError):
        SynthSpec(**kw)


def test_gmrf_on_scaled_identity():
    X = sample_gmrf(2.0 * np.eye(3), 100_000, seed=0)
    np.testing.assert_allclose(X.var(axis=1), 0.5, rtol=0.05)


def test_gmrf_sample_covariance_converges_like_inverse_sqrt_k():
    gt = generate_er_balanced(SynthSpec(n_nodes=10, edge_prob=0.4, seed=1))
    Sigma = np.linalg.inv(gt.L.L)
    err = {}
    for k in (100, 10_000):
        errs = []
        for s in range(10):
            X = sample_gmrf(gt.L, k, seed=s)
            errs.append(np.linalg.norm(X @ X.T / k - Sigma) / np.linalg.norm(Sigma))
        err[k] = np.mean(errs)
    # a 100x larger sample should shrink the error ~10x
    assert 5 < err[100] / err[10_000] < 20


def test_gmrf_is_bitwise_reproducible():
    L = generate_er_balanced(SynthSpec(n_nodes=8, seed=2)).L
    np.testing.assert_array_equal(sample_gmrf(L, 50, seed=7), sample_gmrf(L, 50, seed=7))


def test_gmrf_rejects_non_pd_precision():
    with pytest.raises(InputError):
        sample_gmrf(np.array([[1.0, 2.0], [2.0, 1.0]]), 5, seed=0)


def test_awgn_zero_sigma_is_identity():
    X = np.random.default_rng(0).standard_normal((4, 6))
    np.testing.assert_array_equal(corrupt(X, "awgn", 0.0, seed=1), X)


def test_awgn_variance():
    Z = corrupt(np.zeros((1000, 1000)), "awgn", 0.25, seed=0)
    assert Z.var() == pytest.approx(0.0625, rel=0.02)


def test_dropout_extremes_and_count():
    X = np.random.default_rng(1).standard_normal((10, 7)) + 5.0
    np.testing.assert_array_equal(corrupt(X, "bernoulli_drop", 0.0, seed=0), X)
    assert np.all(corrupt(X, "bernoulli_drop", 1.0, seed=0) == 0)
    Y = corrupt(X, "bernoulli_drop", 0.35, seed=0)
    assert np.all((Y == 0).sum(axis=0) == 3)


def test_corrupt_validates_levels():
    with pytest.raises(ParameterError):
        corrupt(np.zeros((2, 2)), "awgn", -0.1)
    with pytest.raises(ParameterError):
        corrupt(np.zeros((2, 2)), "bernoulli_drop", 1.5)
    with pytest.raises(ParameterError):
        corrupt(np.zeros((2, 2)), "salt", 0.1)


def test_make_instance_is_reproducible_and_noisy_when_asked():
    spec = SynthSpec(n_nodes=12, n_obs=30, seed=5)
    a = make_instance(spec)
    b = make_instance(spec)
    np.testing.assert_array_equal(a[1], b[1])
    noisy = make_instance(SynthSpec(n_nodes=12, n_obs=30, seed=5, noise_sigma=0.25))
    np.testing.assert_array_equal(noisy[0].L.L, a[0].L.L)
    assert not np.array_equal(noisy[1], a[1])
