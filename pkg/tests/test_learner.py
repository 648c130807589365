import io
import json

import numpy as np
import pytest

from bsgl.core import ObservationMatrix, SampleCovariance, certificate_holds
from bsgl.errors import InputError, ParameterError
from bsgl.learner import LearnConfig, learn
from bsgl.synth import SynthSpec, make_instance


@pytest.fixture(scope="module")
def small():
    gt, X = make_instance(SynthSpec(n_nodes=10, n_obs=200, edge_prob=0.3, seed=4))
    return gt, X


@pytest.fixture(scope="module")
def small_run(small):
    buf = io.StringIO()
    res = learn(small[1], LearnConfig(max_sweeps=6), progress=buf)
    return res, buf.getvalue()


@pytest.mark.filterwarnings("ignore::bsgl.polarity.DegenerateCovarianceWarning")
def test_identity_covariance_gives_a_diagonal_laplacian():
    C = SampleCovariance(np.eye(4), n_obs=100)
    res = learn(C, LearnConfig(max_sweeps=5))
    L = res.L.L
    np.testing.assert_allclose(L - np.diag(np.diag(L)), 0.0, atol=1e-8)
    assert np.all(np.diag(L) > 0)
    # the first sweep already reaches the fixed point
    assert res.report["sweeps"] <= 2


def test_anticorrelated_pair_gets_opposite_camps():
    rng = np.random.default_rng(0)
    z = rng.standard_normal(400)
    X = np.vstack([z + 0.3 * rng.standard_normal(400), -z + 0.3 * rng.standard_normal(400)])
    res = learn(X, LearnConfig(max_sweeps=5))
    assert list(res.beta) == [1, -1]
    assert res.L.L[0, 1] > 0


def test_result_is_symmetric_and_certified(small_run):
    res, _ = small_run
    L = res.L.L
    np.testing.assert_array_equal(L, L.T)
    assert certificate_holds(L, res.beta)
    assert res.beta[0] == 1
    assert np.linalg.eigvalsh(L).min() > 0


def test_l1_history_is_non_increasing(small_run):
    res, _ = small_run
    h = res.report["l1_history"]
    assert all(b - a <= 1e-9 * max(1.0, a) for a, b in zip(h, h[1:]))


def test_progress_stream_has_one_json_line_per_sweep(small_run):
    res, text = small_run
    recs = [json.loads(line) for line in text.splitlines()]
    assert [r["sweep"] for r in recs] == list(range(1, res.report["sweeps"] + 1))
    assert [r["l1"] for r in recs] == res.report["l1_history"]


@pytest.mark.filterwarnings("ignore::bsgl.polarity.DegenerateCovarianceWarning")
def test_progress_callback():
    seen = []
    learn(SampleCovariance(np.eye(3), n_obs=50), LearnConfig(max_sweeps=2), progress=seen.append)
    assert seen and set(seen[0]) == {"sweep", "l1", "flips"}


def test_learning_is_deterministic(small, small_run):
    again = learn(small[1], LearnConfig(max_sweeps=6))
    np.testing.assert_array_equal(again.L.L, small_run[0].L.L)
    np.testing.assert_array_equal(again.beta, small_run[0].beta)


def test_tall_and_dense_modes_agree(small):
    _, X = small
    Xs = X[:, :4]
    cfg = dict(max_sweeps=3)
    a = learn(Xs, LearnConfig(mode="dense", **cfg))
    b = learn(Xs, LearnConfig(mode="tall", **cfg))
    assert b.report["mode"] == "tall"
    np.testing.assert_allclose(a.L.L, b.L.L, atol=1e-4)


def test_fixed_rule_keeps_the_supplied_polarities(small):
    gt, X = small
    res = learn(X, LearnConfig(max_sweeps=3, polarity_rule="fixed"), beta0=gt.beta)
    b = gt.beta if gt.beta[0] == 1 else -gt.beta
    np.testing.assert_array_equal(res.beta, b)
    assert sum(res.report["flips"]) == 0


def test_learn_accepts_observation_containers(small):
    _, X = small
    res = learn(ObservationMatrix(X[:, :50]), LearnConfig(max_sweeps=1))
    assert res.L.L.shape == (10, 10)


def test_input_validation():
    with pytest.raises(InputError):
        learn(np.ones((1, 20)))
    with pytest.raises(ParameterError):
        learn(SampleCovariance(np.eye(3)))
    with pytest.raises(ParameterError):
        learn(SampleCovariance(np.eye(3), n_obs=2), LearnConfig(mode="tall"))
    with pytest.raises(ParameterError):
        LearnConfig(polarity_rule="coin")
    with pytest.raises(ParameterError):
        LearnConfig(max_sweeps=0)
