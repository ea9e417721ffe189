import numpy as np
import pytest

from monoscat import (DefinitenessError, InputError, SingularMatrixError,
                      eigh, geneig_definite, hermitian_part, solve_dense)
from monoscat.linalg import frobenius_norm, spectral_norm

from conftest import random_hermitian, random_spd


class TestEigh:
    def test_identity(self):
        es = eigh(np.eye(3))
        assert np.allclose(es.values, [1.0, 1.0, 1.0])

    def test_diagonal(self):
        es = eigh(np.diag([2.0, -1.0]))
        assert np.allclose(es.values, [2.0, -1.0])
        # standard basis vectors up to sign
        assert np.allclose(np.abs(es.vectors), np.eye(2))

    def test_reconstruction(self, rng):
        a = random_hermitian(rng, 8)
        es = eigh(a)
        rebuilt = (es.vectors * es.values) @ es.vectors.conj().T
        assert np.linalg.norm(a - rebuilt) / np.linalg.norm(a) < 1e-12

    def test_descending_and_orthonormal(self, rng):
        es = eigh(random_hermitian(rng, 12))
        assert np.all(np.diff(es.values) <= 0)
        gram = es.vectors.conj().T @ es.vectors
        assert np.linalg.norm(gram - np.eye(12)) < 1e-12

    def test_trace_and_frobenius_identities(self, rng):
        a = random_hermitian(rng, 10)
        es = eigh(a)
        assert np.isclose(np.trace(a).real, es.values.sum(), rtol=1e-10)
        assert np.isclose(np.linalg.norm(a) ** 2, (es.values ** 2).sum(),
                          rtol=1e-10)

    def test_nonfinite_rejected(self):
        with pytest.raises(InputError):
            eigh(np.array([[np.nan, 0.0], [0.0, 1.0]]))


class TestGeneigDefinite:
    def test_proportional_pencil(self, rng):
        b = random_spd(rng, 5)
        mu, _ = geneig_definite(b, b)
        assert np.allclose(mu, 1.0)

    def test_scaled_pencil(self, rng):
        b = random_spd(rng, 5)
        mu, _ = geneig_definite(3.0 * b, b)
        assert np.allclose(mu, 3.0)

    def test_residual_and_b_orthonormality(self, rng):
        a = random_hermitian(rng, 6)
        b = random_spd(rng, 6)
        mu, x = geneig_definite(a, b)
        scale = np.linalg.norm(a, 2) + np.linalg.norm(b, 2)
        for j in range(6):
            resid = a @ x[:, j] - mu[j] * (b @ x[:, j])
            assert np.linalg.norm(resid) <= 1e-10 * scale
        assert np.linalg.norm(x.conj().T @ b @ x - np.eye(6)) < 1e-10
        assert np.all(np.diff(mu) >= 0)

    def test_sylvester_inertia(self, rng):
        # inertia of A - beta B must match the generalized eigenvalue counts
        c = rng.standard_normal((6, 6)) + 1j * rng.standard_normal((6, 6))
        b = c @ c.conj().T + np.eye(6)
        a = random_hermitian(rng, 6, scale=3.0)
        mu, _ = geneig_definite(a, b)
        for beta in rng.uniform(mu.min() - 1, mu.max() + 1, 5):
            neg = np.sum(eigh(a - beta * b).values < 0)
            assert neg == np.sum(mu < beta)

    def test_indefinite_b_rejected(self, rng):
        a = random_hermitian(rng, 4)
        with pytest.raises(DefinitenessError):
            geneig_definite(a, np.diag([1.0, 1.0, -1.0, 1.0]))


class TestSolveDense:
    def test_identity(self, rng):
        b = rng.standard_normal(4)
        assert np.allclose(solve_dense(np.eye(4), b), b)

    def test_scaled_identity(self):
        x = solve_dense(2.0 * np.eye(2), np.array([4.0, 6.0]))
        assert np.allclose(x, [2.0, 3.0])

    def test_residual(self, rng):
        a = rng.standard_normal((16, 16)) + 1j * rng.standard_normal((16, 16))
        a += 16 * np.eye(16)
        b = rng.standard_normal(16)
        x = solve_dense(a, b)
        assert np.linalg.norm(a @ x - b) <= 1e-10 * np.linalg.norm(a) \
            * np.linalg.norm(x)

    def test_singular_reports_pivot(self):
        a = np.array([[1.0, 2.0], [2.0, 4.0]])
        with pytest.raises(SingularMatrixError) as err:
            solve_dense(a, np.ones(2))
        assert err.value.pivot is not None

    def test_nonsquare_rejected(self):
        with pytest.raises(InputError):
            solve_dense(np.ones((2, 3)), np.ones(2))


class TestNorms:
    def test_zero(self):
        assert spectral_norm(np.zeros((3, 3))) == 0.0

    def test_diagonal(self):
        assert np.isclose(spectral_norm(np.diag([3.0, -5.0])), 5.0)

    def test_against_eigh_of_gram(self, rng):
        a = rng.standard_normal((7, 7)) + 1j * rng.standard_normal((7, 7))
        top = eigh(a.conj().T @ a).values[0]
        assert np.isclose(spectral_norm(a), np.sqrt(top), rtol=1e-10)

    def test_spectral_below_frobenius(self, rng):
        a = rng.standard_normal((6, 6))
        assert spectral_norm(a) <= frobenius_norm(a) + 1e-14

    def test_rank_one_equality(self, rng):
        u = rng.standard_normal(5)
        v = rng.standard_normal(5)
        a = np.outer(u, v)
        assert np.isclose(spectral_norm(a), frobenius_norm(a), rtol=1e-12)


def test_hermitian_part_is_hermitian(rng):
    a = rng.standard_normal((5, 5)) + 1j * rng.standard_normal((5, 5))
    h = hermitian_part(a)
    assert np.linalg.norm(h - h.conj().T) == 0.0
