import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from bpgmf.matrix import FactorPair, MaskedMatrix
from bpgmf.oracle import grad_check, random_point, random_problem
from bpgmf.problems import (
    BlockReg,
    Full,
    GraphReg,
    Masked,
    ProblemSpec,
    SymPenalty,
    dg_bregman,
    nonsmooth_value,
    objective,
    semiconvexity,
    smooth_grad,
    smooth_value,
)

VARIANTS = ("full", "masked", "graph", "sym")


def test_smooth_value_examples(rng):
    u, z = rng.standard_normal((3, 2)), rng.standard_normal((2, 4))
    p = ProblemSpec.build(Full(u @ z), 2)
    assert smooth_value(p, FactorPair(u, z)) == pytest.approx(0.0, abs=1e-25)
    a = rng.standard_normal((3, 4))
    p = ProblemSpec.build(Full(a), 2)
    assert smooth_value(p, FactorPair(np.zeros((3, 2)), z)) == pytest.approx(0.5 * np.sum(a * a))
    one = FactorPair(np.ones((1, 1)), np.ones((1, 1)))
    mm = MaskedMatrix.from_triples((1, 1), [0], [0], [2.0])
    assert smooth_value(ProblemSpec.build(Masked(mm), 1), one) == 0.5


def test_smooth_grad_examples(rng):
    a = rng.standard_normal((3, 4))
    p = ProblemSpec.build(Full(a), 2)
    g = smooth_grad(p, FactorPair(rng.standard_normal((3, 2)), np.zeros((2, 4))))
    assert not g.u.any()
    g = smooth_grad(p, FactorPair(np.zeros((3, 2)), rng.standard_normal((2, 4))))
    assert not g.z.any()


def test_nonsmooth_examples():
    p = ProblemSpec.build(Full(np.ones((1, 1))), 2)
    x = FactorPair(np.array([[1.0, -2.0]]), np.zeros((2, 1)))
    assert nonsmooth_value(p, x) == 0.0
    p = ProblemSpec.build(Full(np.ones((1, 1))), 2, BlockReg(l1=0.1), BlockReg(l1=0.1))
    assert nonsmooth_value(p, x) == pytest.approx(0.3)
    p = ProblemSpec.build(Full(np.ones((1, 1))), 2, BlockReg(nonneg=True), BlockReg())
    assert nonsmooth_value(p, x) == math.inf
    assert objective(p, x) == math.inf


def test_objective_compositions(rng):
    a = rng.standard_normal((3, 3))
    x = FactorPair(np.abs(rng.standard_normal((3, 2))), np.abs(rng.standard_normal((2, 3))))
    for ru, rz in [(BlockReg(l2=0.2), BlockReg(l1=0.3)), (BlockReg(nuclear=0.5), BlockReg()),
                   (BlockReg(nonneg=True, sparsity=4), BlockReg(nonneg=True))]:
        p = ProblemSpec.build(Full(a), 2, ru, rz)
        assert objective(p, x) == pytest.approx(smooth_value(p, x) + nonsmooth_value(p, x))


def test_masked_ignores_unobserved(rng):
    a = rng.standard_normal((4, 5))
    mask = rng.uniform(size=a.shape) < 0.5
    mask[0, 0] = True
    b = np.where(mask, a, rng.standard_normal(a.shape) * 100)
    pa = ProblemSpec.build(Masked(MaskedMatrix.from_dense(a, mask)), 2)
    pb = ProblemSpec.build(Masked(MaskedMatrix.from_dense(b, mask)), 2)
    x = random_point(pa, rng)
    assert smooth_value(pa, x) == smooth_value(pb, x)
    assert smooth_grad(pa, x).same_as(smooth_grad(pb, x))


def test_masked_matches_dense_oracle(rng):
    a = rng.standard_normal((5, 4))
    mask = rng.uniform(size=a.shape) < 0.6
    p = ProblemSpec.build(Masked(MaskedMatrix.from_dense(a, mask)), 3)
    x = random_point(p, rng)
    r = np.where(mask, a - x.u @ x.z, 0.0)
    assert smooth_value(p, x) == pytest.approx(0.5 * np.sum(r * r), rel=1e-13)
    g = smooth_grad(p, x)
    np.testing.assert_allclose(g.u, -r @ x.z.T, rtol=1e-12, atol=1e-12)
    np.testing.assert_allclose(g.z, -x.u.T @ r, rtol=1e-12, atol=1e-12)


@pytest.mark.parametrize("variant", VARIANTS)
def test_gradients_finite_difference(variant):
    p = random_problem(variant, np.random.default_rng(5), 5, 4, 3)
    rep = grad_check(p, 20, seed=1)
    assert rep.passed, rep.line()


def test_gradient_with_l2_in_smooth():
    p = random_problem("full", np.random.default_rng(2), 4, 4, 2, BlockReg(l2=0.4), BlockReg(l2=0.1))
    p = ProblemSpec(p.data, p.reg_u, p.reg_z, p.dims, l2_in_smooth=True)
    assert grad_check(p, 10, seed=0).passed


@pytest.mark.parametrize("variant", VARIANTS)
@given(seed=st.integers(0, 2**31))
def test_dg_matches_definition(variant, seed):
    rng = np.random.default_rng(seed)
    p = random_problem(variant, rng, 4, 4, 2)
    x, y = random_point(p, rng), random_point(p, rng)
    g = smooth_grad(p, y)
    ref = smooth_value(p, x) - smooth_value(p, y) - g.inner(x - y)
    scale = 1 + abs(smooth_value(p, x)) + abs(smooth_value(p, y))
    assert dg_bregman(p, x, y) == pytest.approx(ref, abs=1e-10 * scale)
    assert dg_bregman(p, x, x) == 0.0


def test_problem_validation(rng):
    with pytest.raises(ValueError):
        SymPenalty(np.ones((2, 3)), 1.0)
    with pytest.raises(ValueError):
        GraphReg(np.ones((2, 3)), np.eye(3), 1.0)
    with pytest.raises(ValueError):
        BlockReg(l1=0.1, nuclear=0.2)
    with pytest.raises(ValueError):
        BlockReg(l1=-1)
    with pytest.raises(ValueError):
        ProblemSpec.build(Full(np.ones((2, 2))), 0)
    p = ProblemSpec.build(Full(np.ones((2, 2))), 1)
    with pytest.raises(ValueError):
        p.check_point(FactorPair(np.ones((2, 2)), np.ones((2, 2))))


def test_semiconvexity():
    a = np.ones((2, 2))
    assert semiconvexity(ProblemSpec.build(Full(a), 1, BlockReg(l1=1))) == 0.0
    assert semiconvexity(ProblemSpec.build(Full(a), 1, BlockReg(sparsity=1))) is None
