import numpy as np
import pytest
from hypothesis import given, strategies as st

from conegap.errors import DimensionMismatch
from conegap.linalg import (eigenvalues, is_frame, orth_complement, qr_orthonormalize,
                            random_frame, random_matrix, singular_values, sort_by_modulus,
                            spectral_norm)

from conftest import seeds


def test_qr_identity_columns():
    q, r = qr_orthonormalize(np.eye(4)[:, :3])
    assert np.allclose(q, np.eye(4)[:, :3]) and np.allclose(r, np.eye(3))


def test_qr_single_column():
    q, r = qr_orthonormalize(np.array([[3], [4j]]))
    assert np.allclose(q[:, 0], [0.6, 0.8j])
    assert np.allclose(r, [[5]])
    assert np.allclose(q.conj().T @ q, 1) and np.allclose(q @ r, [[3], [4j]])


@given(seeds)
def test_qr_reconstruction_and_positive_diagonal(seed):
    a = random_matrix(np.random.default_rng(seed), 6, 3)
    q, r = qr_orthonormalize(a)
    assert np.linalg.norm(q @ r - a) <= 1e-10
    assert is_frame(q)
    d = np.diag(r)
    assert np.all(np.abs(d.imag) == 0) and np.all(d.real > 0)
    assert np.allclose(np.tril(r, -1), 0)


@given(seeds)
def test_qr_idempotent_on_frames(seed):
    q = random_frame(np.random.default_rng(seed), 7, 4)
    q2, r = qr_orthonormalize(q)
    assert np.max(np.abs(r - np.eye(4))) <= 1e-10
    assert np.max(np.abs(q2 - q)) <= 1e-10


def test_singular_values_examples():
    assert np.allclose(singular_values(np.diag([3.0, 1.0, 2.0])), [3, 2, 1])
    assert np.allclose(singular_values(np.zeros((3, 3))), 0)
    assert spectral_norm(np.diag([3.0, -7.0])) == pytest.approx(7.0)


@given(seeds)
def test_singular_values_against_gram_eigenvalues(seed):
    m = random_matrix(np.random.default_rng(seed), 5)
    oracle = np.sqrt(np.sort(np.linalg.eigvalsh(m.conj().T @ m))[::-1].clip(0))
    assert np.allclose(singular_values(m), oracle, atol=1e-8)


@given(seeds)
def test_singular_value_product_is_abs_det(seed):
    m = random_matrix(np.random.default_rng(seed), 6) + 3 * np.eye(6)
    assert np.prod(singular_values(m)) == pytest.approx(abs(np.linalg.det(m)), rel=1e-7)


def test_eigenvalues_examples():
    assert np.allclose(eigenvalues(np.diag([1.0, 5.0, 4.0])), [5, 4, 1])
    vals = eigenvalues(np.array([[0, 1], [-1, 0]]))
    assert sorted(vals, key=lambda z: z.imag) == pytest.approx([-1j, 1j])


@given(seeds)
def test_eigenvalues_trace(seed):
    m = random_matrix(np.random.default_rng(seed), 8)
    assert abs(np.sum(eigenvalues(m)) - np.trace(m)) <= 1e-8


@given(seeds, st.integers(min_value=2, max_value=8))
def test_eigenvalues_of_mn_and_nm_agree(seed, n):
    rng = np.random.default_rng(seed)
    a, b = random_matrix(rng, n), random_matrix(rng, n)
    ab, ba = eigenvalues(a @ b), eigenvalues(b @ a)
    # match as multisets
    rest = list(ba)
    for z in ab:
        k = int(np.argmin([abs(z - w) for w in rest]))
        assert abs(z - rest.pop(k)) <= 1e-7 * max(1, abs(z))


def test_eigenvalues_size_cap():
    with pytest.raises(DimensionMismatch):
        eigenvalues(np.eye(33))


def test_sort_by_modulus_breaks_ties_deterministically():
    vals = sort_by_modulus([1j, -1, 1, -1j])
    assert list(vals) == [1, 1j, -1j, -1]


def test_orth_complement(rng):
    q = random_frame(rng, 6, 2)
    c = orth_complement(q)
    assert c.shape == (6, 4)
    assert is_frame(np.hstack([q, c]))
