"""Unit tests for `windowsketch.dsfd`"""

import math
import time
from typing import Type

import numpy as np
import pytest

from windowsketch.baselines.exact import ExactWindow
from windowsketch.dsfd import (
    DsFd,
    DsFdConfig,
    FastDsFd,
    SnapshotQueue,
    _FastProcess,
    deflate,
    sketch_size,
)
from windowsketch.errors import ConfigurationError, InputError
from windowsketch.linalg import Matrix, gram, spectral_norm_sym


def _unit_rows(n: int, d: int, seed: int) -> Matrix:
    rows = np.random.default_rng(seed).standard_normal((n, d))
    return rows / np.linalg.norm(rows, axis=1, keepdims=True)


# --------------------------------------------------------------------------------------
# Configuration
# --------------------------------------------------------------------------------------
@pytest.mark.parametrize(
    ["epsilon", "d", "ell"],
    [
        (0.1, 32, 10),
        (0.05, 32, 20),
        (0.3, 32, 4),
        (0.01, 16, 16),
        (1.0, 8, 1),
    ],
)
def test_sketch_size(epsilon: float, d: int, ell: int) -> None:
    assert sketch_size(epsilon, d) == ell


@pytest.mark.parametrize("epsilon", [0.0, -0.5, 1.5])
def test_sketch_size_rejects_epsilon(epsilon: float) -> None:
    with pytest.raises(ConfigurationError):
        sketch_size(epsilon, 4)


@pytest.mark.parametrize(
    ["d", "ell", "window_n", "theta"],
    [(0, 1, 1, 1.0), (2, 0, 1, 1.0), (2, 1, 0, 1.0), (2, 1, 1, 0.0)],
)
def test_config_validation(d: int, ell: int, window_n: int, theta: float) -> None:
    with pytest.raises(ConfigurationError):
        DsFdConfig(d=d, ell=ell, window_n=window_n, theta=theta)


def test_config_for_epsilon() -> None:
    config = DsFdConfig.for_epsilon(d=32, epsilon=0.1, window_n=500)

    assert config.ell == 10
    assert config.theta == pytest.approx(50.0)


# --------------------------------------------------------------------------------------
# Snapshot queues
# --------------------------------------------------------------------------------------
class TestSnapshotQueue:
    def test_coverage_start_of_empty_queue(self) -> None:
        assert SnapshotQueue().coverage_start == 1
        assert SnapshotQueue(prev_t=40).coverage_start == 41

    def test_snapshots_chain_their_coverage(self) -> None:
        queue = SnapshotQueue()
        queue.append(np.ones(2), 3)
        queue.append(np.ones(2), 7)

        assert [(snapshot.s, snapshot.t) for snapshot in queue] == [(1, 3), (4, 7)]

    def test_expire_keeps_prev_t(self) -> None:
        queue = SnapshotQueue()
        queue.append(np.ones(2), 3)
        queue.append(np.ones(2), 7)

        queue.expire(now=13, window_n=10)

        assert len(queue) == 1
        assert queue.coverage_start == 4
        queue.expire(now=17, window_n=10)
        assert len(queue) == 0
        assert queue.coverage_start == 8

    def test_trim(self) -> None:
        queue = SnapshotQueue()
        for t in range(1, 6):
            queue.append(np.full(2, t), t)

        queue.trim(2)

        assert [snapshot.t for snapshot in queue] == [4, 5]
        assert queue.vectors(2).shape == (2, 2)

    def test_vectors_of_empty_queue(self) -> None:
        assert SnapshotQueue().vectors(3).shape == (0, 3)


# --------------------------------------------------------------------------------------
# DS-FD
# --------------------------------------------------------------------------------------
class TestDsFd:
    def test_fresh_state(self) -> None:
        sketch = DsFd(DsFdConfig(d=4, ell=2, window_n=10, theta=2.0))

        assert sketch.step == 0
        assert sketch.memory_rows == 4
        assert np.all(sketch.query_rows() == 0.0)
        assert np.all(sketch.query() == np.zeros((2, 4)))

    def test_dump_on_repeated_row(self) -> None:
        sketch = DsFd(DsFdConfig(d=2, ell=1, window_n=4, theta=2.0))

        sketch.update([1.0, 0.0])
        assert len(sketch.main_queue) == 0
        sketch.update([1.0, 0.0])

        assert len(sketch.main_queue) == 1
        (snapshot,) = sketch.main_queue
        assert np.allclose(np.abs(snapshot.v), [math.sqrt(2.0), 0.0])
        assert (snapshot.s, snapshot.t) == (1, 2)
        assert np.all(sketch.main.rows == 0.0)
        assert np.allclose(gram(sketch.query_rows()), np.diag([2.0, 0.0]))

    def test_orthogonal_row_below_threshold_is_not_dumped(self) -> None:
        sketch = DsFd(DsFdConfig(d=3, ell=3, window_n=10, theta=1.5))

        sketch.update([0.0, 0.0, 1.0])

        assert len(sketch.main_queue) == 0
        assert len(sketch.aux_queue) == 0

    def test_rejects_unnormalized_rows(self) -> None:
        sketch = DsFd(DsFdConfig.for_epsilon(d=2, epsilon=0.5, window_n=4))

        with pytest.raises(InputError):
            sketch.update([1.0, 1.0])
        assert sketch.step == 0

    def test_main_queue_stays_short(self) -> None:
        sketch = DsFd(DsFdConfig.for_epsilon(d=8, epsilon=0.1, window_n=100))

        for row in _unit_rows(300, 8, seed=0):
            sketch.update(row)
            assert len(sketch.main_queue) <= 20

    def test_restart_adopts_auxiliary_process(self) -> None:
        sketch = DsFd(DsFdConfig(d=2, ell=1, window_n=3, theta=2.0))
        for _ in range(3):
            sketch.update([1.0, 0.0])
        aux_queue = sketch.aux_queue

        sketch.update([0.0, 1.0])

        assert sketch.main_queue is aux_queue
        assert sketch.aux_queue.coverage_start == 4
        assert sketch.epoch == 2

    def test_no_expired_snapshot_survives(self) -> None:
        config = DsFdConfig.for_epsilon(d=4, epsilon=0.25, window_n=20)
        sketch = DsFd(config)

        for row in _unit_rows(200, 4, seed=1):
            sketch.update(row)
            ts = [snapshot.t for snapshot in sketch.main_queue]
            assert all(t + config.window_n > sketch.step for t in ts)
            assert ts == sorted(ts)


@pytest.mark.parametrize("sketch_cls", [DsFd, FastDsFd])
@pytest.mark.parametrize("epsilon", [0.1, 0.05])
def test_window_guarantees(sketch_cls: Type[DsFd], epsilon: float) -> None:
    n, d, window_n = 4000, 32, 500
    config = DsFdConfig.for_epsilon(d=d, epsilon=epsilon, window_n=window_n)
    sketch = sketch_cls(config)
    oracle = ExactWindow(d, window_n)
    queue_cap = math.ceil(2 / epsilon)
    if sketch_cls.fast:
        # Each process buffers fewer than 2 * ell rows between merges.
        memory_cap = 4 * config.ell + 2 * queue_cap
    else:
        memory_cap = 2 * config.ell + 2 * queue_cap

    for step, row in enumerate(_unit_rows(n, d, seed=2), start=1):
        sketch.update(row)
        oracle.update(row)
        assert len(sketch.main_queue) <= queue_cap
        assert len(sketch.aux_queue) <= queue_cap
        assert sketch.memory_rows <= memory_cap

        if step % 25 == 0:
            exact = oracle.gram()
            rows_error = spectral_norm_sym(exact - gram(sketch.query_rows()))
            compressed_error = spectral_norm_sym(exact - gram(sketch.query()))
            assert rows_error <= 4 * epsilon * window_n
            assert compressed_error <= 8 * epsilon * window_n


def test_fast_update_is_quicker_than_eager() -> None:
    d, ell, window_n = 256, 16, 2000
    rows = _unit_rows(4000, d, seed=3)
    config = DsFdConfig(d=d, ell=ell, window_n=window_n, theta=window_n / ell)

    durations = []
    for sketch in [DsFd(config), FastDsFd(config)]:
        start = time.perf_counter()
        for row in rows:
            sketch.update(row)
        durations.append(time.perf_counter() - start)

    eager, fast = durations
    assert fast < eager


# --------------------------------------------------------------------------------------
# Fast processes and deflation
# --------------------------------------------------------------------------------------
class TestFastProcess:
    def test_no_decomposition_below_triggers(self) -> None:
        process = _FastProcess(ell=2, d=3, theta=10.0)

        for row in np.eye(3):
            assert process.ingest(row) == []

        assert process.decompositions == 0
        assert process.memory_rows == 3
        assert np.allclose(process.gram, np.eye(3))

    def test_eigen_dump(self) -> None:
        process = _FastProcess(ell=2, d=2, theta=4.0)

        assert process.ingest(np.array([0.0, 1.0])) == []
        (dumped,) = process.ingest(np.array([2.0, 0.0]))

        assert np.allclose(np.abs(dumped), [2.0, 0.0])
        assert np.allclose(process.buffer, [[0.0, 1.0], [0.0, 0.0]])
        assert np.allclose(process.gram, np.diag([1.0, 0.0]))
        assert process.sigma1_hat == pytest.approx(1.0)
        assert process.decompositions == 1

    def test_sigma1_hat_bounds_top_eigenvalue(self) -> None:
        process = _FastProcess(ell=4, d=6, theta=3.0)

        for row in _unit_rows(100, 6, seed=4):
            process.ingest(row)
            top = np.linalg.eigvalsh(process.gram).max() if process.gram.size else 0.0
            assert process.sigma1_hat**2 >= top - 1e-6 * (1 + top)
            rebuilt = process.buffer @ process.buffer.T
            assert np.allclose(process.gram, rebuilt, atol=1e-8)


class TestDeflate:
    def test_orthogonal_direction_changes_nothing(self) -> None:
        d_matrix = np.array([[1.0, 0.0, 0.0], [2.0, 0.0, 0.0]])
        k_matrix = d_matrix @ d_matrix.T

        deflated, k_deflated = deflate(d_matrix, k_matrix, np.array([0.0, 1.0, 0.0]))

        assert np.array_equal(deflated, d_matrix)
        assert np.array_equal(k_deflated, k_matrix)

    def test_identity(self) -> None:
        deflated, k_deflated = deflate(np.eye(2), np.eye(2), np.array([1.0, 0.0]))

        assert np.allclose(deflated, np.diag([0.0, 1.0]))
        assert np.allclose(k_deflated, np.diag([0.0, 1.0]))

    def test_rejects_non_unit_direction(self) -> None:
        with pytest.raises(InputError):
            deflate(np.eye(2), np.eye(2), np.array([1.0, 1.0]))

    def test_removes_one_singular_direction(self) -> None:
        rng = np.random.default_rng(5)
        for _ in range(200):
            rows = int(rng.integers(1, 21))
            cols = int(rng.integers(1, 13))
            d_matrix = rng.standard_normal((rows, cols))
            _, singular_values, vt = np.linalg.svd(d_matrix, full_matrices=False)
            j = int(rng.integers(0, singular_values.size))

            deflated, k_deflated = deflate(d_matrix, d_matrix @ d_matrix.T, vt[j])

            kept = np.delete(singular_values[:, None] * vt, j, axis=0)
            assert np.linalg.norm(gram(deflated) - gram(kept)) <= 1e-8 * max(
                1.0, np.linalg.norm(gram(d_matrix))
            )
            assert np.allclose(k_deflated, deflated @ deflated.T, atol=1e-8)
