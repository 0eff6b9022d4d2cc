import math

import numpy as np
import pytest

from perronrate.iteration import SolveOptions, solve
from perronrate.maps import BuiltinMap, Digraph, MatrixMap
from perronrate.rates import (RateError, combine_rates, empirical_rate, is_primitive,
                              jacobian_rate_bound, pad_distances, rate_equivalence_check)


def test_geometric_sequence():
    est = empirical_rate(0.5 ** np.arange(60))
    assert est.classification == "linear"
    assert est.theta_hat == pytest.approx(0.5, abs=1e-9)


def test_polynomial_prefactor_still_linear():
    k = np.arange(200)
    est = empirical_rate((k + 1) * 0.8 ** k)
    assert est.classification == "linear" and abs(est.theta_hat - 0.8) < 0.02


def test_arctan_sequence_sublinear():
    a = [1.0]
    for _ in range(199):
        a.append(math.atan(a[-1]))
    assert empirical_rate(a).classification == "sublinear"


def test_short_or_bad_input():
    with pytest.raises(RateError):
        empirical_rate([1.0] * 5)
    with pytest.raises(RateError):
        empirical_rate([1.0, -1.0] * 20)
    assert len(pad_distances([1.0, 0.5])) == 20


def test_exact_convergence_is_linear():
    # only two usable points: the fit is exact and gives their ratio
    est = empirical_rate([1.0, 0.1] + [0.0] * 30)
    assert est.classification == "linear" and est.theta_hat == pytest.approx(0.1)


def test_primitivity():
    assert is_primitive(Digraph(2, [(0, 1), (1, 0), (0, 0)]))
    assert not is_primitive(Digraph(2, [(0, 1), (1, 0)]))
    assert not is_primitive(Digraph(2, [(0, 0), (0, 1), (1, 1)]))


def test_jacobian_bound():
    sb = jacobian_rate_bound(MatrixMap([[2.0, 1.0], [1.0, 2.0]]), [1.0, 1.0])
    assert sb.bound == pytest.approx(1 / 3)
    with pytest.raises(RateError):
        jacobian_rate_bound(MatrixMap([[2.0, 1.0], [1.0, 2.0]]), [1.0, 2.0])


def test_example1_has_no_certificate():
    sb = jacobian_rate_bound(BuiltinMap("example1"), [1.0, 1.0])
    assert sb.bound is None and sb.ratio == pytest.approx(1.0)


def test_combine_rates_spot_values():
    lam, rate = combine_rates(0.5, 0.5)
    assert lam == pytest.approx(0.5) and rate == pytest.approx(math.sqrt(0.5))
    lam, rate = combine_rates(0.1, 0.01)
    assert lam == pytest.approx(2 / 3) and rate == pytest.approx(0.1 ** (2 / 3))
    with pytest.raises(RateError):
        combine_rates(1.0, 0.5)


def test_rate_equivalence_on_matrix():
    A = MatrixMap([[3.0, 1.0], [1.0, 1.0]])
    res = solve(A, [1.0, 3.0], SolveOptions(tolerance=1e-14, record_trace=True))
    eq = rate_equivalence_check(A, res.trace, res.eigenvector, res.eigenvalue)
    moduli = sorted(abs(np.linalg.eigvals(A.A)))
    assert eq.agree
    assert eq.theta_hilbert == pytest.approx(moduli[0] / moduli[1], abs=0.02)
