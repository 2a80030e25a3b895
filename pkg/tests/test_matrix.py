import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from bpgmf.matrix import (
    FactorPair,
    MaskedMatrix,
    ShapeError,
    atomic_write_text,
    dense,
    fro_inner,
    fro_norm,
    gemm,
    read_dense_csv,
    write_dense_csv,
)

finite = st.floats(-1e3, 1e3, allow_nan=False)


def mats(shape):
    return arrays(np.float64, shape, elements=finite)


def test_fro_norm_examples():
    assert fro_norm(np.array([[3.0, 4.0]])) == 5.0
    assert fro_norm(np.zeros((2, 2))) == 0.0
    assert fro_norm(np.eye(2)) == pytest.approx(1.41421356, abs=1e-8)


def test_fro_inner_examples():
    assert fro_inner(np.eye(2), np.eye(2)) == 2.0
    m = np.arange(6.0).reshape(2, 3)
    assert fro_inner(m, np.zeros_like(m)) == 0.0
    assert fro_inner(np.array([[1.0, 2], [3, 4]]), np.array([[4.0, 3], [2, 1]])) == 20.0


def test_gemm_examples():
    m = np.arange(6.0).reshape(2, 3)
    np.testing.assert_array_equal(gemm(np.eye(2), m), m)
    np.testing.assert_array_equal(gemm(m, np.zeros((3, 2))), np.zeros((2, 2)))
    np.testing.assert_array_equal(gemm(np.array([[1.0, 2]]), np.array([[3.0], [4]])), [[11.0]])


def test_shape_errors():
    with pytest.raises(ShapeError):
        gemm(np.ones((2, 3)), np.ones((2, 3)))
    with pytest.raises(ShapeError):
        fro_inner(np.ones((2, 3)), np.ones((3, 2)))
    with pytest.raises((ShapeError, ValueError)):
        dense(np.ones(3))


@given(mats((3, 4)), mats((3, 4)))
def test_inner_symmetric_and_norm_consistent(a, b):
    assert fro_inner(a, b) == pytest.approx(fro_inner(b, a), rel=1e-12, abs=1e-9)
    assert fro_norm(a) ** 2 == pytest.approx(fro_inner(a, a), rel=1e-12, abs=1e-9)


@given(mats((3, 2)), mats((2, 4)))
def test_factor_pair_algebra(u, z):
    x = FactorPair(u, z)
    y = x * 2.0 - x
    assert y.same_as(x)
    assert (x + (-x)).norm() == 0.0
    assert x.norm_sq() == pytest.approx(fro_norm(u) ** 2 + fro_norm(z) ** 2, rel=1e-12, abs=1e-9)
    assert x.rank == 2


def test_factor_pair_rejects_mismatch():
    with pytest.raises((ShapeError, ValueError)):
        FactorPair(np.ones((3, 2)), np.ones((3, 4)))


def test_masked_from_triples_validation():
    with pytest.raises(ValueError, match="duplicate"):
        MaskedMatrix.from_triples((2, 2), [0, 0], [1, 1], [1.0, 2.0])
    with pytest.raises(ValueError):
        MaskedMatrix.from_triples((2, 2), [2], [0], [1.0])
    with pytest.raises(ValueError):
        MaskedMatrix.from_triples((2, 2), [0], [0], [math.nan])


def test_masked_sorted_and_predict(rng):
    a = rng.standard_normal((5, 4))
    mask = rng.uniform(size=(5, 4)) < 0.5
    mm = MaskedMatrix.from_dense(a, mask)
    order = mm.rows * 4 + mm.cols
    assert np.all(np.diff(order) > 0)
    u, z = rng.standard_normal((5, 2)), rng.standard_normal((2, 4))
    np.testing.assert_allclose(mm.predict(u, z), (u @ z)[mask], rtol=1e-13, atol=1e-13)
    np.testing.assert_array_equal(mm.to_dense(), np.where(mask, a, 0.0))
    assert mm.norm() == pytest.approx(fro_norm(np.where(mask, a, 0.0)), rel=1e-14)


def test_masked_save_load_roundtrip(tmp_path, rng):
    mm = MaskedMatrix.from_dense(rng.standard_normal((4, 3)), rng.uniform(size=(4, 3)) < 0.6)
    mm.save(tmp_path / "m.csv")
    back = MaskedMatrix.load(tmp_path / "m.csv")
    assert back.shape == mm.shape
    np.testing.assert_array_equal(back.rows, mm.rows)
    np.testing.assert_array_equal(back.vals, mm.vals)


def test_dense_csv_roundtrip_and_atomic(tmp_path, rng):
    m = rng.standard_normal((3, 5))
    write_dense_csv(tmp_path / "a.csv", m)
    np.testing.assert_array_equal(read_dense_csv(tmp_path / "a.csv"), m)
    atomic_write_text(tmp_path / "t.txt", "x\n")
    assert (tmp_path / "t.txt").read_text() == "x\n"
    assert [p.name for p in tmp_path.iterdir()] and not any(p.name.startswith(".") for p in tmp_path.iterdir())
