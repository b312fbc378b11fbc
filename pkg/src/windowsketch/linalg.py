"""Dense linear algebra shared by every sketch in this package.
"""

from typing import NamedTuple

import numpy as np
import numpy.typing as npt

from windowsketch.errors import NumericalError, ShapeError

Matrix = npt.NDArray[np.float64]

# Singular values below this fraction of the largest one are treated as zero.
RELATIVE_FLOOR = 1e-12


class SvdResult(NamedTuple):
    u: Matrix
    singular_values: Matrix
    vt: Matrix


class EigResult(NamedTuple):
    eigenvalues: Matrix
    eigenvectors: Matrix


def _as_matrix(m: npt.ArrayLike) -> Matrix:
    matrix = np.asarray(m, dtype=np.float64)
    if matrix.ndim != 2:
        raise ShapeError(f"expected a 2-d matrix, got shape {matrix.shape}")
    if not np.all(np.isfinite(matrix)):
        raise NumericalError("matrix contains NaN or infinite entries")
    return matrix


def _as_square(m: npt.ArrayLike) -> Matrix:
    matrix = _as_matrix(m)
    if matrix.shape[0] != matrix.shape[1]:
        raise ShapeError(f"expected a square matrix, got shape {matrix.shape}")
    return matrix


def svd_thin(m: npt.ArrayLike) -> SvdResult:
    """Thin SVD with min(rows, cols) factors, singular values non-increasing."""
    matrix = _as_matrix(m)
    rows, cols = matrix.shape
    if rows == 0 or cols == 0:
        return SvdResult(np.zeros((rows, 0)), np.zeros(0), np.zeros((0, cols)))
    try:
        u, s, vt = np.linalg.svd(matrix, full_matrices=False)
    except np.linalg.LinAlgError as e:
        raise NumericalError(f"SVD did not converge: {e}") from e
    return SvdResult(u, s, vt)


def sym_eig(k: npt.ArrayLike) -> EigResult:
    """Eigendecomposition of a symmetric matrix, eigenvalues non-increasing."""
    matrix = _as_square(k)
    if matrix.shape[0] == 0:
        return EigResult(np.zeros(0), np.zeros((0, 0)))
    symmetric = (matrix + matrix.T) / 2.0
    try:
        eigenvalues, eigenvectors = np.linalg.eigh(symmetric)
    except np.linalg.LinAlgError as e:
        raise NumericalError(f"eigendecomposition did not converge: {e}") from e
    # eigh returns ascending order
    return EigResult(eigenvalues[::-1].copy(), eigenvectors[:, ::-1].copy())


def spectral_norm_sym(m: npt.ArrayLike) -> float:
    matrix = _as_square(m)
    if matrix.size == 0:
        return 0.0
    try:
        eigenvalues = np.linalg.eigvalsh((matrix + matrix.T) / 2.0)
    except np.linalg.LinAlgError as e:
        raise NumericalError(f"eigendecomposition did not converge: {e}") from e
    return float(np.max(np.abs(eigenvalues)))


def gram(m: npt.ArrayLike) -> Matrix:
    matrix = np.asarray(m, dtype=np.float64)
    return matrix.T @ matrix


def numerical_rank(singular_values: Matrix) -> int:
    if singular_values.size == 0 or singular_values[0] <= 0.0:
        return 0
    floor = RELATIVE_FLOOR * singular_values[0]
    return int(np.count_nonzero(singular_values > floor))


def scaled_rows(singular_values: Matrix, vt: Matrix, ell: int) -> Matrix:
    """Returns ``diag(singular_values) @ vt`` cut or zero-padded to ``ell`` rows."""
    cols = vt.shape[1]
    out = np.zeros((ell, cols))
    count = min(ell, singular_values.size)
    out[:count] = singular_values[:count, None] * vt[:count]
    return out


def shrunk_singular_values(singular_values: Matrix, ell: int) -> Matrix:
    """Subtracts the ell-th squared singular value from every squared singular value."""
    if singular_values.size == 0:
        return singular_values
    floored = np.where(
        singular_values > RELATIVE_FLOOR * singular_values[0], singular_values, 0.0
    )
    pivot = floored[ell - 1] if floored.size >= ell else 0.0
    return np.sqrt(np.maximum(floored**2 - pivot**2, 0.0))


def fd_shrink(m: npt.ArrayLike, ell: int) -> Matrix:
    """Forgets the least significant direction of ``m``, leaving ``ell`` rows."""
    matrix = _as_matrix(m)
    if ell < 1 or ell > matrix.shape[0]:
        raise ShapeError(f"cannot shrink {matrix.shape[0]} rows to {ell}")
    result = svd_thin(matrix)
    shrunk = shrunk_singular_values(result.singular_values, ell)
    return scaled_rows(shrunk, result.vt, ell)
