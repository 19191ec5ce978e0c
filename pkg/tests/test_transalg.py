import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

import roeforge as rf
from roeforge import (
    FinitePropOp,
    NotUniformSumError,
    OperatorParseError,
    PartialTranslation,
    PermutationOp,
    ScalarModeError,
    SpaceMismatchError,
    UncontrolledSupportError,
)
from conftest import random_rational_op, random_space


def pair_space():
    return rf.space_from_graph(["a", "b"], [(0, 1, 1)], name="pair")


def two_blocks():
    # two 2-point components with distinct block names
    return rf.disjoint_union([rf.make_complete(2), rf.make_hypercube(1)])


def test_construction_drops_zeros_and_sorts():
    sp = pair_space()
    op = FinitePropOp(sp, {(1, 0): Fraction(2), (0, 0): Fraction(0), (0, 1): Fraction(1)})
    assert op.nnz == 2
    assert list(op.entries) == [(0, 1), (1, 0)]  # sorted pair order
    assert op.entries == {(0, 1): Fraction(1), (1, 0): Fraction(2)}


def test_construction_rejects_infinite_pairs():
    sp = two_blocks()
    with pytest.raises(UncontrolledSupportError):
        FinitePropOp(sp, {(0, 2): Fraction(1)})


def test_construction_rejects_bool_entries():
    sp = pair_space()
    with pytest.raises(TypeError):
        FinitePropOp(sp, {(0, 1): True})


def test_mode_validation():
    sp = pair_space()
    with pytest.raises(ValueError):
        FinitePropOp(sp, {}, mode="decimal")
    with pytest.raises(TypeError):
        FinitePropOp(sp, {(0, 1): 0.5}, mode="rational")
    # rationals are coerced on the way into float mode, not rejected
    assert FinitePropOp(sp, {(0, 1): Fraction(1, 2)}, mode="float").entries == {(0, 1): 0.5}


def test_identity_diagonal_zero():
    sp = rf.make_cycle(3)
    ident = FinitePropOp.identity(sp)
    assert ident.propagation == 0.0
    assert ident @ ident == ident
    diag = FinitePropOp.diagonal(sp, {0: Fraction(2), 2: Fraction(-1)})
    assert diag.nnz == 2
    zero = FinitePropOp.zero(sp)
    assert zero.nnz == 0 and zero.propagation == 0.0
    assert ident + zero == ident


def test_propagation_is_max_support_distance():
    sp = rf.make_cycle(6)
    op = FinitePropOp(sp, {(0, 2): Fraction(1), (1, 2): Fraction(1)})
    assert op.propagation == 2.0


def test_arithmetic_matches_dense():
    sp = rf.make_cycle(4)
    rng = np.random.default_rng(7)
    a = random_rational_op(rng, sp)
    b = random_rational_op(rng, sp)
    assert np.array_equal((a + b).to_dense(), a.to_dense() + b.to_dense())
    assert np.array_equal((a - b).to_dense(), a.to_dense() - b.to_dense())
    assert np.array_equal((a @ b).to_dense(), a.to_dense() @ b.to_dense())
    assert np.array_equal((-a).to_dense(), -a.to_dense())
    assert np.array_equal((3 * a).to_dense(), 3 * a.to_dense())
    assert rf.op_add(a, b) == a + b
    assert rf.op_mul(a, b) == a @ b
    assert rf.op_adjoint(a) == a.adjoint()


def test_scalar_multiplication_by_fraction():
    sp = pair_space()
    op = FinitePropOp(sp, {(0, 1): Fraction(3, 2)})
    assert (Fraction(2, 3) * op).entries == {(0, 1): Fraction(1)}


def test_adjoint_transposes_and_conjugates():
    sp = pair_space()
    op = FinitePropOp(sp, {(0, 1): 1 + 2j}, mode="float")
    adj = op.adjoint()
    assert adj.entries == {(1, 0): 1 - 2j}
    rat = FinitePropOp(sp, {(0, 1): Fraction(3, 7)})
    assert rat.adjoint().adjoint() == rat


def test_mixed_modes_refuse_silently_promoting():
    sp = pair_space()
    rat = FinitePropOp.identity(sp)
    flo = FinitePropOp.identity(sp, mode="float")
    with pytest.raises(ScalarModeError):
        rat + flo
    with pytest.raises(ScalarModeError):
        rat @ flo
    assert rat.to_float() + flo == 2.0 * flo


def test_to_float_is_cached():
    op = FinitePropOp.identity(rf.make_cycle(3))
    assert op.to_float() is op.to_float()


def test_cross_space_operations_rejected():
    a = FinitePropOp.identity(rf.make_cycle(3))
    b = FinitePropOp.identity(rf.make_cycle(4))
    with pytest.raises(SpaceMismatchError):
        a + b


def test_dense_csr_matvec_agree():
    sp = rf.make_cycle(5)
    op = random_rational_op(np.random.default_rng(11), sp)
    d = op.to_dense().astype(float)
    x = np.random.default_rng(0).normal(size=5)
    assert np.allclose(op.to_csr() @ x, d @ x)
    assert np.allclose(op.matvec(x), d @ x)
    assert op.to_csr() is op.to_csr()


def test_sup_entry_norm_and_support():
    sp = rf.make_cycle(4)
    op = FinitePropOp(sp, {(0, 1): Fraction(-5, 2), (2, 2): Fraction(1)})
    assert op.sup_entry_norm == Fraction(5, 2)
    assert op.support().pairs == frozenset([(0, 1), (2, 2)])


def test_row_sum_diagonal():
    """Row sums of [[1,2],[3,4]] land on the diagonal as (3, 7)."""
    sp = pair_space()
    op = FinitePropOp(sp, {(0, 0): Fraction(1), (0, 1): Fraction(2),
                           (1, 0): Fraction(3), (1, 1): Fraction(4)})
    phi = rf.row_sum_diagonal(op)
    assert phi == FinitePropOp.diagonal(sp, {0: Fraction(3), 1: Fraction(7)})


def test_uniform_sum_detection():
    sp = rf.make_cycle(4)
    ident = FinitePropOp.identity(sp)
    assert rf.uniform_sum_value(ident) == 1
    assert rf.uniform_sum(ident) == 1
    skew = FinitePropOp.diagonal(sp, {0: Fraction(1)})
    assert rf.uniform_sum_value(skew) is None
    with pytest.raises(NotUniformSumError):
        rf.uniform_sum(skew)


def test_uniform_sum_needs_column_sums_too():
    sp = pair_space()
    # rows both sum to 1 but columns do not
    op = FinitePropOp(sp, {(0, 0): Fraction(1), (1, 0): Fraction(1)})
    assert rf.uniform_sum_value(op) is None


def test_uniform_sum_zero_operator():
    assert rf.uniform_sum_value(FinitePropOp.zero(rf.make_cycle(3))) == 0


def test_uniform_sum_float_tolerance():
    sp = pair_space()
    op = FinitePropOp(sp, {(0, 0): 1.0, (1, 1): 1.0 + 1e-14}, mode="float")
    assert rf.uniform_sum_value(op) == pytest.approx(1.0)
    off = FinitePropOp(sp, {(0, 0): 1.0, (1, 1): 1.5}, mode="float")
    assert rf.uniform_sum_value(off) is None
    with pytest.raises(ValueError):
        rf.uniform_sum_value(FinitePropOp.identity(sp), tol=1e-9)  # exact mode


def test_partial_translation_basics():
    sp = rf.make_cycle(4)
    t = PartialTranslation(sp, {0: 1, 2: 3})
    assert t.domain == (0, 2)
    assert t.image == (1, 3)
    assert t.graph == ((1, 0), (3, 2))
    op = t.as_operator()
    assert op.entries == {(1, 0): 1, (3, 2): 1}
    assert op @ op.adjoint() == FinitePropOp.diagonal(sp, {1: 1, 3: 1})


def test_partial_translation_rejects_non_injective():
    sp = rf.make_cycle(4)
    with pytest.raises(ValueError):
        PartialTranslation(sp, {0: 1, 2: 1})


def test_partial_translation_rejects_uncontrolled():
    sp = two_blocks()
    with pytest.raises(UncontrolledSupportError):
        PartialTranslation(sp, {0: 2})


def test_identity_on():
    sp = rf.make_cycle(5)
    t = PartialTranslation.identity_on(sp, [1, 3])
    assert t.as_operator() == FinitePropOp.diagonal(sp, {1: 1, 3: 1})


def test_permutation_op():
    sp = rf.make_cycle(4)
    swap = PermutationOp.from_swaps(sp, [(0, 1), (2, 3)])
    assert swap.is_involution
    assert swap.op @ swap.op == FinitePropOp.identity(sp)
    assert swap.adjoint() == swap
    assert swap.op is swap.op  # cached
    ident = PermutationOp.identity(sp)
    assert ident.op == FinitePropOp.identity(sp)


def test_permutation_rejects_non_bijection():
    sp = rf.make_cycle(3)
    with pytest.raises(ValueError):
        PermutationOp(sp, [0, 0, 1])


def test_permutation_adjoint_inverts():
    sp = rf.make_complete(3)
    cyc = PermutationOp(sp, [1, 2, 0])
    assert not cyc.is_involution
    assert (cyc.adjoint().op @ cyc.op) == FinitePropOp.identity(sp)


def test_invariance_defect_swap():
    """A swap moves the first basis vector to the second: defect 2*sqrt(2)
    against the vector (1, -1)."""
    sp = pair_space()
    v = PermutationOp.from_swaps(sp, [(0, 1)]).op
    assert rf.invariance_defect(v, [1.0, -1.0]) == pytest.approx(2 * math.sqrt(2))
    assert rf.invariance_defect(v, [1.0, 1.0]) == pytest.approx(0.0)


def test_invariance_defect_requires_translation_structure():
    sp = pair_space()
    not01 = FinitePropOp(sp, {(0, 1): Fraction(2)})
    with pytest.raises(ValueError):
        rf.invariance_defect(not01, [1.0, 0.0])
    two_in_row = FinitePropOp(sp, {(0, 0): Fraction(1), (0, 1): Fraction(1)})
    with pytest.raises(ValueError):
        rf.invariance_defect(two_in_row, [1.0, 0.0])


def test_single_pair_translations_enumeration():
    sp = rf.make_complete(3)
    ts = rf.single_pair_translations(sp)
    assert len(ts) == 6
    sp2 = two_blocks()
    assert len(rf.single_pair_translations(sp2)) == 4  # no cross-component moves


def test_invariant_subspace_is_component_constants():
    sp = rf.disjoint_union([rf.make_cycle(3), rf.make_complete(2)])
    basis = rf.invariant_subspace_basis(sp)
    assert basis.shape == (5, 2)
    for col in basis.T:
        assert np.allclose(col[:3], col[0])
        assert np.allclose(col[3:], col[3])


def test_invariant_subspace_default_family_size_cap():
    with pytest.raises(ValueError):
        rf.invariant_subspace_basis(rf.make_cycle(65))
    # explicit families are fine at any size
    sp = rf.make_cycle(65)
    ops = [t.as_operator() for t in rf.single_pair_translations(sp)[:4]]
    basis = rf.invariant_subspace_basis(sp, ops=ops)
    assert basis.shape[0] == 65


def test_operator_text_round_trip_rational():
    sp = pair_space()
    op = FinitePropOp(sp, {(0, 0): Fraction(3, 2), (1, 0): Fraction(-2)})
    text = rf.operator_to_text(op)
    assert text == "operator pair rational 1.0\nentry a a 3/2\nentry b a -2\n"
    assert rf.operator_from_text(text, sp) == op


def test_operator_text_round_trip_float():
    sp = pair_space()
    op = FinitePropOp(sp, {(0, 1): 0.1, (1, 1): -2.5}, mode="float")
    text = rf.operator_to_text(op)
    assert rf.operator_from_text(text, sp) == op
    assert "0.1" in text  # repr round-trips shortest form


def test_operator_text_errors():
    sp = pair_space()
    op_text = "operator pair rational 1.0\nentry a a 3/2\n"
    with pytest.raises(OperatorParseError):
        rf.operator_from_text(op_text.replace("pair", "other"), sp)
    with pytest.raises(OperatorParseError) as err:
        rf.operator_from_text(op_text + "entry a a 1\n", sp)  # duplicate
    assert err.value.line == 3
    with pytest.raises(OperatorParseError):
        rf.operator_from_text(op_text + "entry a q 1\n", sp)  # unknown point
    with pytest.raises(OperatorParseError) as err:
        rf.operator_from_text("operator pair rational 1.0\nentry a a x\n", sp)
    assert err.value.line == 2
    # header propagation must match the recomputed value
    with pytest.raises(OperatorParseError):
        rf.operator_from_text("operator pair rational 0.0\nentry a b 1\n", sp)


def test_operator_text_rejects_spacey_point_names():
    sp = rf.FiniteSpace(["a b", "c"], [[0, 1], [1, 0]])
    with pytest.raises(ValueError):
        rf.operator_to_text(FinitePropOp.identity(sp))


# -- property-based algebra axioms -------------------------------------------

def _ops_from_seed(seed, n, count):
    rng = np.random.default_rng(seed)
    sp = random_space(rng, max_points=n, max_blocks=2)
    return [random_rational_op(rng, sp, density=0.5) for _ in range(count)]


@settings(deadline=None, max_examples=40)
@given(st.integers(0, 10**6), st.integers(3, 8))
def test_ring_axioms(seed, n):
    a, b, c = _ops_from_seed(seed, n, 3)
    assert (a + b) @ c == a @ c + b @ c
    assert a @ (b + c) == a @ b + a @ c
    assert (a @ b) @ c == a @ (b @ c)
    assert a + b == b + a


@settings(deadline=None, max_examples=40)
@given(st.integers(0, 10**6), st.integers(3, 8))
def test_star_and_propagation_axioms(seed, n):
    a, b = _ops_from_seed(seed, n, 2)
    assert (a @ b).adjoint() == b.adjoint() @ a.adjoint()
    assert (a + b).adjoint() == a.adjoint() + b.adjoint()
    assert a.adjoint().adjoint() == a
    assert (a @ b).propagation <= a.propagation + b.propagation
    assert (a + b).propagation <= max(a.propagation, b.propagation)
    assert a.adjoint().propagation == a.propagation


@settings(deadline=None, max_examples=40)
@given(st.integers(0, 10**6), st.integers(3, 8))
def test_row_sums_are_additive(seed, n):
    a, b = _ops_from_seed(seed, n, 2)
    assert rf.row_sum_diagonal(a + b) == rf.row_sum_diagonal(a) + rf.row_sum_diagonal(b)
