"""Unit tests for `windowsketch.linalg`"""

import numpy as np
import pytest

from windowsketch.errors import NumericalError, ShapeError
from windowsketch.linalg import (
    Matrix,
    fd_shrink,
    gram,
    scaled_rows,
    spectral_norm_sym,
    svd_thin,
    sym_eig,
)


def _power_iteration_norm(m: Matrix, iterations: int = 500) -> float:
    # Iterating on M^2 finds the largest |eigenvalue| whatever its sign.
    square = m @ m
    vector = np.random.default_rng(7).standard_normal(m.shape[0])
    for _ in range(iterations):
        vector = square @ vector
        vector /= np.linalg.norm(vector)
    return float(np.sqrt(vector @ square @ vector))


class TestSvdThin:
    def test_identity(self) -> None:
        result = svd_thin(np.eye(2))

        assert np.allclose(result.singular_values, [1.0, 1.0])
        product = result.u @ result.vt
        assert np.allclose(product @ product.T, np.eye(2))

    def test_diagonal(self) -> None:
        result = svd_thin(np.diag([3.0, 2.0]))

        assert np.allclose(result.singular_values, [3.0, 2.0])

    def test_reconstructs_random_matrix(self) -> None:
        m = np.random.default_rng(0).standard_normal((8, 4))
        result = svd_thin(m)

        assert result.u.shape == (8, 4)
        assert result.vt.shape == (4, 4)
        assert np.all(np.diff(result.singular_values) <= 0)
        rebuilt = result.u @ np.diag(result.singular_values) @ result.vt
        assert np.linalg.norm(rebuilt - m) <= 1e-8 * max(1.0, np.linalg.norm(m))

    def test_empty_matrix(self) -> None:
        result = svd_thin(np.zeros((0, 5)))

        assert result.singular_values.size == 0
        assert result.vt.shape == (0, 5)

    @pytest.mark.parametrize("value", [np.nan, np.inf])
    def test_rejects_non_finite_entries(self, value: float) -> None:
        with pytest.raises(NumericalError):
            svd_thin(np.array([[1.0, value]]))

    def test_rejects_vectors(self) -> None:
        with pytest.raises(ShapeError):
            svd_thin(np.ones(3))


class TestSymEig:
    def test_diagonal(self) -> None:
        eigenvalues, _ = sym_eig(np.diag([1.0, 5.0]))

        assert np.allclose(eigenvalues, [5.0, 1.0])

    def test_one_by_one(self) -> None:
        eigenvalues, eigenvectors = sym_eig(np.array([[4.0]]))

        assert np.allclose(eigenvalues, [4.0])
        assert np.allclose(np.abs(eigenvectors), [[1.0]])

    def test_gram_eigenvalues_are_squared_singular_values(self) -> None:
        d = np.random.default_rng(1).standard_normal((6, 9))
        eigenvalues, eigenvectors = sym_eig(d @ d.T)

        singular_values = svd_thin(d).singular_values
        assert np.allclose(eigenvalues, singular_values**2, atol=1e-8)
        rebuilt = eigenvectors @ np.diag(eigenvalues) @ eigenvectors.T
        assert np.linalg.norm(rebuilt - d @ d.T) <= 1e-8 * np.linalg.norm(d @ d.T)

    def test_rejects_non_square(self) -> None:
        with pytest.raises(ShapeError):
            sym_eig(np.zeros((2, 3)))


class TestSpectralNormSym:
    def test_zero_matrix(self) -> None:
        assert spectral_norm_sym(np.zeros((4, 4))) == 0.0

    def test_negative_eigenvalue_dominates(self) -> None:
        assert spectral_norm_sym(np.diag([-3.0, 2.0])) == pytest.approx(3.0)

    def test_matches_power_iteration(self) -> None:
        rng = np.random.default_rng(2)
        q, _ = np.linalg.qr(rng.standard_normal((16, 16)))
        eigenvalues = np.concatenate([[-6.0, 4.5], rng.uniform(-3.0, 3.0, 14)])
        m = q @ np.diag(eigenvalues) @ q.T

        expected = _power_iteration_norm(m)
        assert spectral_norm_sym(m) == pytest.approx(expected, rel=1e-6)
        assert spectral_norm_sym(m) == pytest.approx(6.0)

    def test_rejects_non_square(self) -> None:
        with pytest.raises(ShapeError):
            spectral_norm_sym(np.zeros((3, 2)))


class TestFdShrink:
    def test_diagonal_example(self) -> None:
        m = np.array([[3.0, 0.0], [0.0, 2.0], [0.0, 0.0]])

        shrunk = fd_shrink(m, 2)

        assert np.allclose(np.abs(shrunk), [[np.sqrt(5.0), 0.0], [0.0, 0.0]])

    def test_zero_matrix(self) -> None:
        assert np.all(fd_shrink(np.zeros((4, 3)), 2) == 0.0)

    def test_random_bound(self) -> None:
        m = np.random.default_rng(3).standard_normal((12, 6))

        shrunk = fd_shrink(m, 3)

        assert shrunk.shape == (3, 6)
        deficit = gram(m) - gram(shrunk)
        assert spectral_norm_sym(deficit) <= np.sum(m**2) / 3
        assert np.linalg.eigvalsh(deficit).min() >= -1e-8
        assert np.all(np.diff(np.linalg.norm(shrunk, axis=1)) <= 1e-12)
        assert np.linalg.norm(shrunk[-1]) <= 1e-12

    @pytest.mark.parametrize("ell", [0, 4])
    def test_rejects_bad_ell(self, ell: int) -> None:
        with pytest.raises(ShapeError):
            fd_shrink(np.ones((3, 2)), ell)


def test_scaled_rows_pads_with_zeros() -> None:
    rows = scaled_rows(np.array([2.0]), np.array([[0.0, 1.0]]), 3)

    assert np.array_equal(rows, [[0.0, 2.0], [0.0, 0.0], [0.0, 0.0]])
