"""Unit tests for `windowsketch.fd`"""

import numpy as np
import pytest

from windowsketch.errors import ShapeError
from windowsketch.fd import FdSketch, fd_merge
from windowsketch.linalg import Matrix, gram, spectral_norm_sym


def _covariance_error(a: Matrix, b: Matrix) -> float:
    return spectral_norm_sym(gram(a) - gram(b))


def _feed(sketch: FdSketch, rows: Matrix) -> FdSketch:
    for row in rows:
        sketch.update(row)
    return sketch


# --------------------------------------------------------------------------------------
# Eager updates
# --------------------------------------------------------------------------------------
class TestEagerUpdate:
    def test_first_row_lands_in_a_zero_row(self) -> None:
        sketch = FdSketch(4, 4)

        sketch.update([1.0, 0.0, 0.0, 0.0])

        assert sketch.rows.shape == (4, 4)
        assert np.allclose(gram(sketch.rows), np.diag([1.0, 0.0, 0.0, 0.0]))
        assert np.all(sketch.rows[1:] == 0.0)

    def test_exact_when_ell_equals_d(self) -> None:
        d = 5
        rows = np.eye(d)[np.arange(40) % d]

        sketch = _feed(FdSketch(d, d), rows)

        assert np.allclose(gram(sketch.rows), gram(rows))

    def test_random_unit_rows(self) -> None:
        rows = np.random.default_rng(0).standard_normal((50, 8))
        rows /= np.linalg.norm(rows, axis=1, keepdims=True)

        sketch = _feed(FdSketch(4, 8), rows)

        assert _covariance_error(rows, sketch.rows) <= 50 / 4
        assert sketch.total_mass == pytest.approx(50.0)

    def test_rows_in_non_increasing_norm_order(self) -> None:
        rows = np.random.default_rng(1).standard_normal((30, 6))

        sketch = _feed(FdSketch(3, 6), rows)

        norms = np.linalg.norm(sketch.rows, axis=1)
        assert np.all(np.diff(norms) <= 1e-12)
        assert sketch.top_mass() == pytest.approx(norms[0] ** 2)

    def test_pop_top_shifts_rows_up(self) -> None:
        sketch = _feed(FdSketch(3, 3), np.diag([3.0, 2.0, 1.0]))

        top = sketch.pop_top()

        assert float(top @ top) == pytest.approx(9.0)
        assert sketch.rows.shape == (3, 3)
        assert np.allclose(gram(sketch.rows), np.diag([0.0, 4.0, 1.0]))
        assert np.all(sketch.rows[-1] == 0.0)

    def test_rejects_wrong_dimension(self) -> None:
        with pytest.raises(ShapeError):
            FdSketch(2, 3).update([1.0, 2.0])

    def test_guarantee_on_random_streams(self) -> None:
        rng = np.random.default_rng(2)
        for _ in range(100):
            n = int(rng.integers(1, 501))
            d = int(rng.integers(1, 17))
            ell = int(rng.choice([2, 4, 8]))
            rows = rng.standard_normal((n, d)) * rng.uniform(0.1, 3.0, (n, 1))

            sketch = _feed(FdSketch(ell, d), rows)

            deficit = gram(rows) - gram(sketch.rows)
            assert spectral_norm_sym(deficit) <= np.sum(rows**2) / ell + 1e-9
            assert np.linalg.eigvalsh(deficit).min() >= -1e-8
            assert np.sum(sketch.rows**2) <= sketch.total_mass + 1e-9


# --------------------------------------------------------------------------------------
# Fast updates
# --------------------------------------------------------------------------------------
class TestFastUpdate:
    def test_buffers_below_trigger(self) -> None:
        sketch = _feed(FdSketch(2, 3, fast=True), np.ones((3, 3)))

        assert sketch.rows.shape == (3, 3)
        assert sketch.memory_rows == 3

    def test_shrinks_at_trigger(self) -> None:
        sketch = _feed(FdSketch(2, 3, fast=True), np.eye(3)[[0, 1, 2, 0]])

        assert sketch.rows.shape == (2, 3)

    def test_random_rows(self) -> None:
        rows = np.random.default_rng(3).standard_normal((200, 16))

        sketch = _feed(FdSketch(8, 16, fast=True), rows)

        assert sketch.memory_rows < 16
        assert _covariance_error(rows, sketch.rows) <= np.sum(rows**2) / 8
        assert _covariance_error(rows, sketch.sketch()) <= np.sum(rows**2) / 8

    def test_empty_sketch(self) -> None:
        assert np.all(FdSketch(3, 2, fast=True).sketch() == np.zeros((3, 2)))


# --------------------------------------------------------------------------------------
# Merging
# --------------------------------------------------------------------------------------
class TestMerge:
    def test_zero_matrix(self) -> None:
        assert np.all(fd_merge(3, [np.zeros((2, 4))]) == np.zeros((3, 4)))

    def test_empty_input_with_dimension(self) -> None:
        assert fd_merge(2, [], d=5).shape == (2, 5)

    def test_empty_input_without_dimension(self) -> None:
        with pytest.raises(ShapeError):
            fd_merge(2, [])

    def test_disjoint_one_hot_stacks_are_kept(self) -> None:
        first = np.eye(5)[[0, 1]]
        second = 2.0 * np.eye(5)[[3]]

        merged = fd_merge(4, [first, second])

        assert merged.shape == (4, 5)
        assert np.allclose(gram(merged), gram(np.vstack([first, second])))
        assert np.all(merged[-1] == 0.0)

    def test_random_groups(self) -> None:
        rng = np.random.default_rng(4)
        groups = [rng.standard_normal((10, 6)) for _ in range(3)]
        stack = np.vstack(groups)

        merged = fd_merge(5, groups)

        assert _covariance_error(stack, merged) <= np.sum(stack**2) / 5

    def test_rejects_mismatched_groups(self) -> None:
        with pytest.raises(ShapeError):
            fd_merge(2, [np.ones((1, 3)), np.ones((1, 4))])
