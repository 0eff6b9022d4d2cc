import numpy as np
import pytest

from perronrate.eigen import MAX_DIM, eig_moduli, eigvals, hessenberg


def test_hessenberg_structure_and_similarity():
    A = np.random.default_rng(0).normal(size=(7, 7))
    H = hessenberg(A)
    assert np.allclose(np.tril(H, -2), 0.0)
    assert np.trace(H) == pytest.approx(np.trace(A))
    assert np.linalg.norm(H) == pytest.approx(np.linalg.norm(A))


def test_known_spectra():
    assert np.allclose(eig_moduli([[2.0, 1.0], [1.0, 2.0]]), [3.0, 1.0])
    rot = np.array([[0.0, -1.0], [1.0, 0.0]])
    assert sorted(eigvals(rot).imag) == pytest.approx([-1.0, 1.0])
    # companion matrix of (t - 1)(t - 2)(t - 3)
    C = np.array([[6.0, -11.0, 6.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]])
    assert sorted(eigvals(C).real) == pytest.approx([1.0, 2.0, 3.0])


@pytest.mark.parametrize("n", [1, 2, 5, 20, 60])
def test_matches_numpy_oracle(n):
    rng = np.random.default_rng(n)
    A = rng.uniform(0, 1, (n, n))
    got = np.sort_complex(eigvals(A))
    ref = np.sort_complex(np.linalg.eigvals(A))
    assert np.allclose(np.sort(np.abs(got)), np.sort(np.abs(ref)), atol=1e-8)


def test_permutation_invariance():
    rng = np.random.default_rng(3)
    A = rng.normal(size=(6, 6))
    p = rng.permutation(6)
    assert np.allclose(eig_moduli(A), eig_moduli(A[np.ix_(p, p)]), atol=1e-9)


def test_rejects_bad_shapes():
    with pytest.raises(ValueError):
        eigvals(np.ones((2, 3)))
    with pytest.raises(ValueError):
        eigvals(np.eye(MAX_DIM + 1))
