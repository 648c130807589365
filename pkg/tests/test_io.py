import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from bsgl import io as bio
from bsgl.errors import InputError


@settings(max_examples=20)
@given(st.integers(1, 6), st.integers(1, 6), st.integers(0, 2**31))
def test_csv_matrix_round_trip_is_exact(tmp_path_factory, r, c, seed):
    M = np.random.default_rng(seed).standard_normal((r, c)) * 10.0 ** np.random.default_rng(
        seed).integers(-20, 20)
    path = tmp_path_factory.mktemp("io") / "m.csv"
    bio.write_matrix_csv(path, M)
    np.testing.assert_array_equal(bio.read_matrix_csv(path), M)


def test_csv_header_is_skipped(tmp_path):
    path = tmp_path / "m.csv"
    bio.write_matrix_csv(path, np.eye(2), header=["a", "b"])
    np.testing.assert_array_equal(bio.read_matrix_csv(path, header=True), np.eye(2))


def test_ragged_or_non_numeric_csv_is_rejected(tmp_path):
    path = tmp_path / "m.csv"
    path.write_text("1,2\n3\n")
    with pytest.raises(InputError):
        bio.read_matrix_csv(path)
    path.write_text("1,a\n")
    with pytest.raises(InputError):
        bio.read_matrix_csv(path)


def test_matrix_market_round_trip(tmp_path):
    A = np.random.default_rng(0).standard_normal((5, 5))
    S = A + A.T
    bio.write_matrix(tmp_path / "s.mtx", S, "mm")
    np.testing.assert_array_equal(bio.read_matrix(tmp_path / "s.mtx", "mm"), S)


def test_vector_and_polarity_round_trip(tmp_path):
    v = np.array([1.5, -2.25, 1e-300])
    bio.write_vector_csv(tmp_path / "v.csv", v)
    np.testing.assert_array_equal(bio.read_vector_csv(tmp_path / "v.csv"), v)
    b = np.array([1, -1, -1, 1], dtype=np.int8)
    bio.write_polarity(tmp_path / "b.json", b)
    np.testing.assert_array_equal(bio.read_polarity(tmp_path / "b.json"), b)


def test_polarity_must_be_plus_minus_one(tmp_path):
    (tmp_path / "b.json").write_text("[1, 0, -1]")
    with pytest.raises(InputError):
        bio.read_polarity(tmp_path / "b.json")


def test_report_round_trip_handles_numpy_values(tmp_path):
    rep = dict(a=np.float64(0.5), b=np.arange(3), c=[np.int8(1)], d=float("inf"))
    bio.write_report(tmp_path / "r.json", rep)
    back = bio.read_report(tmp_path / "r.json")
    assert back["a"] == 0.5 and back["b"] == [0, 1, 2] and back["c"] == [1]
