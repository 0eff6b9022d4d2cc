import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from perronrate.cone import (ConeError, hilbert, m_lower, m_upper, normalize_sup,
                             positive_vector, thompson)

logs = st.lists(st.floats(-20, 20), min_size=2, max_size=6)


def test_worked_values():
    x, y = [1.0, 4.0], [2.0, 1.0]
    assert m_upper(x, y) == 4.0 and m_lower(x, y) == 0.5
    assert thompson(x, y) == pytest.approx(math.log(4.0))
    assert hilbert(x, y) == pytest.approx(math.log(8.0))


def test_hilbert_zero_on_rays():
    assert hilbert([1.0, 2.0, 3.0], [2.0, 4.0, 6.0]) == pytest.approx(0.0, abs=1e-15)
    assert thompson([1.0, 2.0], [2.0, 4.0]) == pytest.approx(math.log(2.0))


@pytest.mark.parametrize("bad", [[], [1.0, 0.0], [1.0, -1.0], [1.0, np.nan], [np.inf, 1.0]])
def test_positive_vector_rejects(bad):
    with pytest.raises(ConeError):
        positive_vector(bad)


def test_dimension_mismatch():
    with pytest.raises(ConeError):
        hilbert([1.0, 2.0], [1.0, 2.0, 3.0])


def test_normalize_sup_read_only():
    z = normalize_sup([2.0, 8.0])
    assert list(z) == [0.25, 1.0]
    with pytest.raises(ValueError):
        z[0] = 3.0


@settings(max_examples=200, deadline=None)
@given(logs, st.data())
def test_metric_axioms(a, data):
    n = len(a)
    b = data.draw(st.lists(st.floats(-20, 20), min_size=n, max_size=n))
    x, y = np.exp(a), np.exp(b)
    dt, dh = thompson(x, y), hilbert(x, y)
    assert dt == pytest.approx(thompson(y, x))
    assert dh <= 2 * dt * (1 + 1e-12) + 1e-12
    # oracle: both metrics are sup-norm / oscillation of the log difference
    r = np.array(a) - np.array(b)
    assert dt == pytest.approx(np.max(np.abs(r)), abs=1e-9)
    assert dh == pytest.approx(r.max() - r.min(), abs=1e-9)
