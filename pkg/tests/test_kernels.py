import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from bpgmf.kernels import KernelSpec, bregman_distance, kernel_for_problem, kernel_grad, kernel_value
from bpgmf.matrix import FactorPair, MaskedMatrix
from bpgmf.problems import BlockReg, Full, GraphReg, Masked, ProblemSpec, SymPenalty


def pair(rng, m=3, n=4, k=2, scale=1.0):
    return FactorPair(rng.standard_normal((m, k)) * scale, rng.standard_normal((k, n)) * scale)


def naive_breg(k, x, y):
    g = kernel_grad(k, y)
    return kernel_value(k, x) - kernel_value(k, y) - g.inner(x - y)


def test_kernel_value_examples(rng):
    one = FactorPair(np.ones((1, 1)), np.ones((1, 1)))
    assert kernel_value(KernelSpec(3, 2), one) == 5.0
    x = pair(rng)
    assert kernel_value(KernelSpec(1.3, 0.7, 0.2, 0.9), FactorPair.zeros(3, 4, 2)) == 0.0
    assert kernel_value(KernelSpec(0, 1), x) == pytest.approx(0.5 * x.norm_sq(), rel=1e-15)


def test_kernel_grad_examples(rng):
    z = FactorPair.zeros(3, 4, 2)
    assert kernel_grad(KernelSpec(3, 5, 1, 2), z).norm() == 0.0
    x = pair(rng)
    assert kernel_grad(KernelSpec(0, 1), x).same_as(x)


def test_kernel_grad_finite_difference(rng):
    k = KernelSpec(3, 1.7, 0.4, 0.0)
    x, d = pair(rng), pair(rng)
    h = 1e-6
    fd = (kernel_value(k, x + d * h) - kernel_value(k, x - d * h)) / (2 * h)
    assert fd == pytest.approx(kernel_grad(k, x).inner(d), rel=1e-7)


def test_bregman_examples(rng):
    x, y = pair(rng), pair(rng)
    assert bregman_distance(KernelSpec(3, 2, 1, 1), x, x) == 0.0
    d = x - y
    assert bregman_distance(KernelSpec(0, 1), x, y) == pytest.approx(0.5 * d.norm_sq(), rel=1e-14)
    zero = FactorPair.zeros(3, 4, 2)
    h1 = (0.5 * x.norm_sq()) ** 2
    assert bregman_distance(KernelSpec(3, 0), x, zero) == pytest.approx(3 * h1, rel=1e-14)


@given(st.integers(0, 2**32 - 1), st.floats(0, 5), st.floats(0, 5), st.floats(0, 3), st.floats(0, 3))
def test_bregman_matches_definition_and_nonneg(seed, c1, c2, au, az):
    rng = np.random.default_rng(seed)
    k = KernelSpec(c1, c2, au, az)
    x, y = pair(rng), pair(rng)
    d = bregman_distance(k, x, y)
    ref = naive_breg(k, x, y)
    assert d >= 0
    assert d == pytest.approx(ref, rel=1e-9, abs=1e-9 * (1 + kernel_value(k, x) + kernel_value(k, y)))


def test_bregman_stable_near_diagonal(rng):
    k = KernelSpec(3, 2)
    y = pair(rng, scale=10)
    x = y + pair(rng) * 1e-9
    assert bregman_distance(k, x, y) > 0


def test_bregman_shape_check(rng):
    with pytest.raises(ValueError):
        bregman_distance(KernelSpec(1, 1), pair(rng, 3, 4), pair(rng, 2, 4))


def test_kernel_coefficients_validated():
    with pytest.raises(ValueError):
        KernelSpec(-1, 1)
    assert KernelSpec(3, 2, 0.5, 0.1).sigma == pytest.approx(2.1)


def test_kernel_for_problem_c2_examples():
    a = np.zeros((2, 2))
    a[0, 0] = 7.0
    k = kernel_for_problem(ProblemSpec.build(Full(a), 2))
    assert (k.c1, k.c2, k.aug_u, k.aug_z) == (3, 7, 0, 0)
    lap = np.zeros((2, 2))
    lap[0, 0] = 1.5
    assert kernel_for_problem(ProblemSpec.build(GraphReg(a, lap, 2.0), 2)).c2 == pytest.approx(10.0)
    mm = MaskedMatrix.from_triples((2, 3), [1], [2], [4.0])
    assert kernel_for_problem(ProblemSpec.build(Masked(mm), 1)).c2 == 4.0
    assert kernel_for_problem(ProblemSpec.build(SymPenalty(a, 0.5), 2)).c2 == pytest.approx(8.0)


def test_kernel_for_problem_l2_routing():
    a = np.full((2, 2), 1.0)
    only_u = ProblemSpec.build(Full(a), 1, BlockReg(l2=0.3), BlockReg())
    k = kernel_for_problem(only_u)
    assert (k.aug_u, k.aug_z) == (0.0, 0.3)
    both = ProblemSpec.build(Full(a), 1, BlockReg(l2=0.3), BlockReg(l2=0.5), l2_in_smooth=True)
    assert kernel_for_problem(both).c2 == pytest.approx(2.0 + 0.5)
