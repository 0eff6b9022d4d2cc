import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from perronrate import topical
from perronrate.maps import (BuiltinMap, Digraph, ExprMap, MatrixMap, Max, Min, ModelError,
                             Monomial, NondifferentiableError, Sum, TensorMap,
                             finite_difference_jacobian, log_conjugate, variable)


def tensor():
    return TensorMap(3, 2, [((0, 0, 0), 1.0), ((0, 1, 1), 2.0), ((1, 0, 1), 1.0)])


def test_matrix_eval_and_graph():
    f = MatrixMap([[1.0, 1.0], [0.0, 2.0]])
    assert list(f.evaluate([1.0, 2.0])) == [3.0, 4.0]
    assert f.digraph().arcs == frozenset({(0, 0), (0, 1), (1, 1)})


@pytest.mark.parametrize("A", [[[1.0, 0.0], [0.0, 0.0]], [[1.0, -1.0], [1.0, 1.0]], [[1.0, 2.0]]])
def test_matrix_rejects(A):
    with pytest.raises(ModelError):
        MatrixMap(A)


def test_tensor_hand_values():
    # f_1 = sqrt(x1^2 + 2 x2^2), f_2 = sqrt(x1 x2)
    f = tensor()
    assert f.evaluate([1.0, 1.0]) == pytest.approx([math.sqrt(3.0), 1.0])
    assert f.evaluate([2.0, 8.0]) == pytest.approx([math.sqrt(4 + 128), 4.0])
    J = f.jacobian([1.0, 1.0])
    assert J == pytest.approx(np.array([[1 / math.sqrt(3), 2 / math.sqrt(3)], [0.5, 0.5]]))
    assert f.digraph().arcs == frozenset({(0, 0), (0, 1), (1, 0), (1, 1)})


def test_tensor_duplicates_summed_and_zero_row_rejected():
    f = TensorMap(2, 2, [((0, 1), 1.0), ((0, 1), 2.0), ((1, 0), 1.0)])
    assert f.evaluate([1.0, 1.0]) == pytest.approx([3.0, 1.0])
    with pytest.raises(ModelError):
        TensorMap(2, 2, [((0, 1), 1.0)])
    with pytest.raises(ModelError):
        TensorMap(2, 2, [((0, 2), 1.0), ((1, 0), 1.0)])


def test_monomial_exponents_must_sum_to_one():
    with pytest.raises(ModelError):
        Monomial(1.0, (0.5, 0.6))
    with pytest.raises(ModelError):
        Monomial(1.0, (1.5, -0.5))


def test_expr_values_flags_and_min_graph():
    x1, x2 = variable(0, 2), variable(1, 2)
    f = ExprMap([Min((x1, x2)), x2])
    assert list(f.evaluate([3.0, 2.0])) == [2.0, 2.0]
    assert not f.multiplicatively_convex and not f.analytic
    # a Min node keeps only arcs common to every branch
    assert f.digraph().arcs == frozenset({(1, 1)})
    g = ExprMap([Sum((Monomial(1.0, (0.5, 0.5)), x1)), Max((x1, x2))])
    assert g.multiplicatively_convex and not g.analytic
    assert g.evaluate([4.0, 1.0]) == pytest.approx([6.0, 4.0])


def test_expr_jacobian_tie_raises():
    x1, x2 = variable(0, 2), variable(1, 2)
    f = ExprMap([Max((x1, x2)), x2])
    with pytest.raises(NondifferentiableError):
        f.jacobian([1.0, 1.0])
    assert f.jacobian([2.0, 1.0]) == pytest.approx(np.array([[1.0, 0.0], [0.0, 1.0]]))


def test_builtin_examples():
    e1, e2 = BuiltinMap("example1"), BuiltinMap("example2")
    a = math.atan(1.0)
    assert e1.evaluate([math.exp(-1), math.e]) == pytest.approx([math.exp(-a), math.exp(a)])
    assert e2.evaluate([math.exp(-1), 1.0]) == pytest.approx([math.exp(-a), 1.0])
    assert np.allclose(e1.jacobian([1.0, 1.0]), np.eye(2))
    assert e1.analytic and not e1.multiplicatively_convex
    assert e2.multiplicatively_convex and not e2.analytic
    with pytest.raises(ModelError):
        BuiltinMap("example3")


@pytest.mark.parametrize("model", [MatrixMap([[1.0, 2.0], [3.0, 1.0]]), tensor(),
                                   BuiltinMap("example1"),
                                   ExprMap([Sum((Monomial(2.0, (0.3, 0.7)), variable(0, 2))),
                                            Monomial(1.0, (0.5, 0.5))])])
def test_jacobian_matches_finite_differences(model):
    x = np.array([0.7, 1.9])
    assert model.jacobian(x) == pytest.approx(finite_difference_jacobian(model, x), rel=1e-5, abs=1e-7)


def test_log_conjugate_is_minmax_of_affine():
    x1, x2 = variable(0, 2), variable(1, 2)
    f = ExprMap([Max((Monomial(math.e, (1.0, 0.0)), x2)), Min((x1, x2))])
    T = log_conjugate(f)
    assert isinstance(T, topical.MinMaxMap)
    assert T(np.array([0.0, 2.0])) == pytest.approx([2.0, 0.0])


def test_digraph_validation():
    with pytest.raises(ValueError):
        Digraph(2, [(0, 2)])
    assert Digraph.complete(2).arcs == frozenset({(0, 0), (0, 1), (1, 0), (1, 1)})


@settings(max_examples=100, deadline=None)
@given(st.lists(st.floats(0.05, 5.0), min_size=4, max_size=4),
       st.lists(st.floats(-3, 3), min_size=2, max_size=2),
       st.floats(-4, 4))
def test_matrix_homogeneous_and_monotone(entries, logx, logt):
    f = MatrixMap(np.reshape(entries, (2, 2)))
    x, t = np.exp(logx), math.exp(logt)
    assert f.evaluate(t * x) == pytest.approx(t * f.evaluate(x), rel=1e-12)
    assert np.all(f.evaluate(x) <= f.evaluate(x * 1.5) * (1 + 1e-12))
