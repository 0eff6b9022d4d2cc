import itertools
import warnings

import numpy as np
import pytest

from perronrate.maps import BuiltinMap, Digraph, ExprMap, MatrixMap, Min, variable
from perronrate.structure import (StructureWarning, classify, cw_number, cyclicity,
                                  has_positive_eigenvector, is_type_k, period,
                                  recurrent_vertices, scc)


def reach(n, arcs):
    R = np.eye(n, dtype=bool)
    for i, j in arcs:
        R[i, j] = True
    for k in range(n):
        R |= R[:, [k]] & R[[k], :]
    return R


def check_scc(n, arcs):
    g = Digraph(n, arcs)
    R = reach(n, arcs)
    comps = scc(g)
    where = {v: i for i, c in enumerate(comps) for v in c}
    assert sorted(where) == list(range(n))
    for i in range(n):
        for j in range(n):
            assert (R[i, j] and R[j, i]) == (where[i] == where[j])
            if R[i, j] and where[i] != where[j]:
                assert where[i] < where[j]


def test_scc_exhaustive_small():
    for n in (1, 2, 3):
        pairs = list(itertools.product(range(n), repeat=2))
        for mask in range(2 ** len(pairs)):
            check_scc(n, [p for b, p in enumerate(pairs) if mask >> b & 1])


def test_scc_random():
    rng = np.random.default_rng(0)
    for _ in range(500):
        n = int(rng.integers(1, 7))
        A = rng.random((n, n)) < rng.uniform(0.05, 0.5)
        check_scc(n, [(int(i), int(j)) for i, j in zip(*np.nonzero(A))])


def test_scc_long_chain_is_iterative():
    n = 5000
    comps = scc(Digraph(n, [(i, i + 1) for i in range(n - 1)]))
    assert comps[0] == (0,) and len(comps) == n


def test_classes_of_triangular_matrix():
    dec = classify(MatrixMap([[1.0, 1.0], [0.0, 2.0]]))
    assert dec.classes == ((0,), (1,))
    assert dec.is_final == (False, True)
    assert dec.cw_numbers == pytest.approx((1.0, 2.0))
    assert dec.basic_classes() == [(1,)] == dec.final_classes()
    assert dec.r_global == pytest.approx(2.0)


def test_existence_verdicts():
    assert has_positive_eigenvector(MatrixMap([[1.0, 1.0], [0.0, 2.0]])).exists
    assert not has_positive_eigenvector(MatrixMap([[2.0, 1.0], [0.0, 1.0]])).exists
    # equal radii: both classes basic, only one final
    assert not has_positive_eigenvector(MatrixMap([[1.0, 1.0], [0.0, 1.0]])).exists


def test_existence_warns_outside_exact_hypotheses():
    x1, x2 = variable(0, 2), variable(1, 2)
    with pytest.warns(StructureWarning):
        cert = has_positive_eigenvector(ExprMap([Min((x1, x2)), x2]))
    assert not cert.exact


def test_cw_number_of_boundary_restriction():
    # f = (min(x1, x2), x2) restricted to {1} is identically zero there
    x1, x2 = variable(0, 2), variable(1, 2)
    cw = cw_number(ExprMap([Min((x1, x2)), x2]), [0])
    assert cw.value == 0.0 and cw.converged


def test_cw_number_matches_spectral_radius():
    A = np.array([[1.0, 2.0, 0.0], [0.5, 0.0, 1.0], [1.0, 1.0, 1.0]])
    cw = cw_number(MatrixMap(A), [0, 1, 2])
    assert cw.converged
    assert float(cw) == pytest.approx(max(abs(np.linalg.eigvals(A))), rel=1e-9)


def test_type_k():
    assert is_type_k(MatrixMap([[2.0, 1.0], [1.0, 2.0]]))
    assert not is_type_k(MatrixMap([[0.0, 1.0], [1.0, 0.0]]))
    assert is_type_k(BuiltinMap("example1"))


def test_period_three_cycle_with_loop_is_three():
    # arcs 1->2, 2->3, 3->1 plus a loop at 1: cyclicity 1 but walks of length
    # 1 and 2 do not return to 2 and 3, so the first power with loops everywhere is 3
    g = Digraph(3, [(0, 1), (1, 2), (2, 0), (0, 0)])
    assert cyclicity(g, (0, 1, 2)) == 1
    assert period(g) == 3


def test_period_of_permutations():
    assert period(MatrixMap([[0.0, 1.0], [1.0, 0.0]])) == 2
    assert period(Digraph(3, [(0, 1), (1, 2), (2, 0)])) == 3
    assert period(MatrixMap(np.eye(2))) == 1


def test_period_brute_force_small():
    rng = np.random.default_rng(1)
    for _ in range(200):
        n = int(rng.integers(1, 5))
        A = (rng.random((n, n)) < 0.4).astype(int)
        g = Digraph(n, [(int(i), int(j)) for i, j in zip(*np.nonzero(A))])
        rec = recurrent_vertices(g)
        if not rec:
            continue
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            p = period(g)
        P = np.eye(n, dtype=int)
        first = None
        for q in range(1, 200):
            P = np.minimum(P @ A, 1)
            if all(P[v, v] for v in rec):
                first = q
                break
        assert p == first
