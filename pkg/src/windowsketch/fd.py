"""FrequentDirections sketches and the merge used by every query path.
"""

from typing import Optional, Sequence

import numpy as np
import numpy.typing as npt

from windowsketch.errors import ShapeError
from windowsketch.linalg import (
    Matrix,
    numerical_rank,
    scaled_rows,
    shrunk_singular_values,
    svd_thin,
)


def as_row(a: npt.ArrayLike, d: int) -> Matrix:
    row = np.asarray(a, dtype=np.float64).reshape(-1)
    if row.shape[0] != d:
        raise ShapeError(f"expected a {d}-dimensional row, got {row.shape[0]}")
    return row


def reduce_rows(stack: Matrix, ell: int) -> Matrix:
    """Compresses ``stack`` to ``ell`` rows in singular-value order.

    The rows are rotated without loss whenever the stack has numerical rank at
    most ``ell``; otherwise the FD shrink is applied.
    """
    result = svd_thin(stack)
    singular_values = result.singular_values
    if numerical_rank(singular_values) > ell:
        singular_values = shrunk_singular_values(singular_values, ell)
    return scaled_rows(singular_values, result.vt, ell)


class FdSketch:
    """An FD summary of the rows it has been fed.

    In eager mode the sketch always holds exactly ``ell`` rows in
    ``diag(sigma) @ Vt`` form, so the first row is the top singular direction.
    In fast mode rows are buffered and only reduced once ``2 * ell`` of them
    have piled up.
    """

    def __init__(self, ell: int, d: int, *, fast: bool = False) -> None:
        if ell < 1 or d < 1:
            raise ShapeError(f"invalid sketch shape ell={ell}, d={d}")
        self.ell = ell
        self.d = d
        self.fast = fast
        self.total_mass = 0.0
        self._rows: Matrix = np.zeros((0 if fast else ell, d))

    @property
    def rows(self) -> Matrix:
        return self._rows

    @property
    def memory_rows(self) -> int:
        return int(self._rows.shape[0])

    def update(self, a: npt.ArrayLike) -> None:
        row = as_row(a, self.d)
        self.total_mass += float(row @ row)
        stacked = np.vstack([self._rows, row])
        if not self.fast:
            self._rows = reduce_rows(stacked, self.ell)
        elif stacked.shape[0] >= 2 * self.ell:
            self._rows = reduce_rows(stacked, self.ell)
        else:
            self._rows = stacked

    def top_mass(self) -> float:
        if self._rows.shape[0] == 0:
            return 0.0
        return float(self._rows[0] @ self._rows[0])

    def pop_top(self) -> Matrix:
        """Removes the first row; the rest shift up and a zero row fills the bottom."""
        top = self._rows[0].copy()
        self._rows = np.vstack([self._rows[1:], np.zeros((1, self.d))])
        return top

    def sketch(self) -> Matrix:
        """The summary as exactly ``ell`` rows."""
        if self._rows.shape[0] == 0:
            return np.zeros((self.ell, self.d))
        return reduce_rows(self._rows, self.ell)


def fd_merge(
    ell: int, groups: Sequence[npt.ArrayLike], d: Optional[int] = None
) -> Matrix:
    """Stacks every group and reduces the stack to ``ell`` rows in one shrink."""
    matrices = [np.asarray(g, dtype=np.float64) for g in groups]
    if d is None:
        if not matrices:
            raise ShapeError("cannot infer the dimension of an empty merge")
        d = int(matrices[0].shape[-1])

    parts = []
    for matrix in matrices:
        if matrix.size == 0:
            continue
        matrix = matrix.reshape(-1, matrix.shape[-1])
        if matrix.shape[1] != d:
            raise ShapeError(
                f"cannot merge a {matrix.shape[1]}-column group into dimension {d}"
            )
        parts.append(matrix)

    if not parts:
        return np.zeros((ell, d))
    return reduce_rows(np.vstack(parts), ell)
