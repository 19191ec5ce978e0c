import math
from fractions import Fraction

import numpy as np
import pytest

import roeforge as rf
from roeforge import FinitePropOp, NotSelfAdjointError, SpectralError
from roeforge.spectral import (
    dense_power_norms,
    extreme_eig_matvec,
    matvec_power_norm,
    operator_seed,
    require_self_adjoint,
)
from conftest import random_rational_op, spectral_norm


def sym_op(rng, sp, density=0.5):
    a = random_rational_op(rng, sp, density=density)
    return a + a.adjoint()


def test_value_is_largest_modulus_not_largest_eigenvalue():
    sp = rf.disjoint_union([rf.make_complete(1), rf.make_cycle(3)])
    op = FinitePropOp.diagonal(sp, {0: Fraction(3), 1: Fraction(-5)})
    res = rf.sym_extreme_eig(op)
    assert res.value == 5.0
    assert res.method == "dense"


def test_zero_operator_short_circuits():
    res = rf.sym_extreme_eig(FinitePropOp.zero(rf.make_cycle(4)))
    assert res.value == 0.0 and res.iterations == 0


def test_which_selector_is_checked():
    with pytest.raises(ValueError):
        rf.sym_extreme_eig(FinitePropOp.identity(rf.make_cycle(3)), which="min")


def test_rejects_non_self_adjoint():
    sp = rf.make_cycle(4)
    op = FinitePropOp(sp, {(0, 1): Fraction(1)})
    with pytest.raises(NotSelfAdjointError):
        rf.sym_extreme_eig(op)


def test_self_adjoint_float_tolerance():
    sp = rf.make_cycle(4)
    near = FinitePropOp(sp, {(0, 1): 1.0, (1, 0): 1.0 + 1e-15}, mode="float")
    require_self_adjoint(near)  # within tolerance
    off = FinitePropOp(sp, {(0, 1): 1.0, (1, 0): 1.001}, mode="float")
    with pytest.raises(NotSelfAdjointError):
        require_self_adjoint(off)


def test_dense_matches_numpy_oracle():
    rng = np.random.default_rng(5)
    for _ in range(10):
        sp = rf.make_complete(int(rng.integers(3, 12)))
        op = sym_op(rng, sp)
        got = rf.sym_extreme_eig(op).value
        want = float(np.max(np.abs(np.linalg.eigvalsh(op.to_dense().astype(float)))))
        assert got == pytest.approx(want, abs=1e-12)


def test_iterative_agrees_with_dense():
    """Forcing the Lanczos path on a small operator reproduces the dense value."""
    rng = np.random.default_rng(17)
    sp = rf.make_cycle(30)
    op = sym_op(rng, sp)
    dense = rf.sym_extreme_eig(op)
    iterative = rf.sym_extreme_eig(op, dense_cutoff=0)
    assert iterative.method == "iterative"
    assert iterative.iterations > 0
    assert iterative.value == pytest.approx(dense.value, rel=1e-9)


def test_iterative_is_deterministic():
    sp = rf.make_cycle(25)
    op = sym_op(np.random.default_rng(2), sp)
    a = rf.sym_extreme_eig(op, dense_cutoff=0)
    b = rf.sym_extreme_eig(op, dense_cutoff=0)
    assert (a.value, a.iterations, a.seed) == (b.value, b.iterations, b.seed)


def test_iterative_refuses_complex():
    sp = rf.make_cycle(10)
    op = FinitePropOp(sp, {(0, 1): 1j, (1, 0): -1j}, mode="float")
    assert rf.sym_extreme_eig(op).value == pytest.approx(1.0)  # dense is fine
    with pytest.raises(SpectralError):
        rf.sym_extreme_eig(op, dense_cutoff=0)


def test_tiny_spaces_refuse_iterative():
    with pytest.raises(ValueError):
        extreme_eig_matvec(lambda x: x, 2, seed=0)


def test_operator_seed_sensitivity():
    sp = rf.make_cycle(4)
    a = FinitePropOp.diagonal(sp, {0: Fraction(1)})
    b = FinitePropOp.diagonal(sp, {0: Fraction(2)})
    assert operator_seed(a) == operator_seed(a)
    assert operator_seed(a) != operator_seed(b)
    assert operator_seed(a) != operator_seed(a, extra=b"component:0")


def test_op_norm_known_values():
    sp = rf.make_cycle(5)
    assert rf.op_norm(rf.PermutationOp.from_swaps(sp, [(0, 1)]).op).value == pytest.approx(1.0)
    assert rf.op_norm(FinitePropOp.zero(sp)).value == 0.0
    n = 6
    sp6 = rf.make_complete(n)
    flat = FinitePropOp(sp6, {(i, j): Fraction(1, n) for i in range(n) for j in range(n)})
    assert rf.op_norm(flat).value == pytest.approx(1.0)


def test_op_norm_matches_svd_oracle():
    rng = np.random.default_rng(23)
    for _ in range(10):
        sp = rf.make_complete(int(rng.integers(3, 10)))
        op = random_rational_op(rng, sp, density=0.6)
        assert rf.op_norm(op).value == pytest.approx(spectral_norm(op.to_dense()), abs=1e-10)


def test_op_norm_submultiplicative_and_star_invariant():
    rng = np.random.default_rng(29)
    for _ in range(10):
        sp = rf.make_complete(int(rng.integers(3, 9)))
        a = random_rational_op(rng, sp, density=0.6)
        b = random_rational_op(rng, sp, density=0.6)
        na, nb = rf.op_norm(a).value, rf.op_norm(b).value
        assert rf.op_norm(a @ b).value <= na * nb + 1e-9
        assert rf.op_norm(a.adjoint()).value == pytest.approx(na, abs=1e-10)


def test_dense_power_norms_matches_matrix_power():
    rng = np.random.default_rng(31)
    m = rng.normal(size=(8, 8))
    m = (m + m.T) / 8
    ks = [1, 2, 3, 7, 16, 40]
    got = dense_power_norms(m, ks)
    for k in ks:
        want = spectral_norm(np.linalg.matrix_power(m, k))
        assert got[k] == pytest.approx(want, rel=1e-10)


def test_dense_power_norms_survives_tiny_norms():
    """Scaled squaring keeps accuracy where naive powering would round to
    junk: a rank-one projection scaled by 1/2 has norm exactly 2^-k."""
    v = np.ones(4) / 2.0
    m = 0.5 * np.outer(v, v) / np.dot(v, v)  # half a rank-one projection
    got = dense_power_norms(m, [600])
    assert got[600] == pytest.approx(0.5**600, rel=1e-9)


def test_dense_power_norms_k_one_is_plain_norm():
    m = np.diag([0.25, -0.75])
    assert dense_power_norms(m, [1])[1] == pytest.approx(0.75)


def test_matvec_power_norm_matches_dense():
    rng = np.random.default_rng(37)
    sp = rf.make_cycle(20)
    op = sym_op(rng, sp)
    d = op.to_dense().astype(float)
    csr = op.to_csr()
    for k in (1, 2, 5):
        got, count, _ = matvec_power_norm(lambda x: csr @ x, 20, k, seed=1234)
        want = spectral_norm(np.linalg.matrix_power(d, k))
        assert got == pytest.approx(want, rel=1e-8)
        assert count % k == 0


def test_residual_is_certified():
    sp = rf.make_cycle(40)
    op = sym_op(np.random.default_rng(41), sp)
    res = rf.sym_extreme_eig(op, dense_cutoff=0)
    assert res.residual <= max(1e-10, 64 * np.finfo(float).eps) * max(1.0, res.value)
