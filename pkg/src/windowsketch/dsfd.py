"""Dual-sketch FrequentDirections over a sequence-based sliding window.

Two FD processes run side by side. The main one answers queries; the auxiliary
one was started later and replaces the main one every ``window_n`` steps. Any
direction whose squared norm reaches ``theta`` is dumped from the sketch into a
snapshot queue, and snapshots leave the queue once they fall out of the window.
"""

import math
from collections import deque
from dataclasses import dataclass
from typing import Deque, Iterator, List, NamedTuple, Tuple, Union

import numpy as np
import numpy.typing as npt

from windowsketch.errors import ConfigurationError, InputError
from windowsketch.fd import FdSketch, as_row, fd_merge, reduce_rows
from windowsketch.linalg import Matrix, sym_eig

# Normalized rows must have a squared norm within this distance of 1.
NORMALIZATION_TOLERANCE = 1e-9


def sketch_size(epsilon: float, d: int) -> int:
    """ell = min(ceil(1/epsilon), d)."""
    if not 0.0 < epsilon <= 1.0:
        raise ConfigurationError(f"epsilon must lie in (0, 1], got {epsilon}")
    return min(math.ceil(1.0 / epsilon - 1e-9), d)


class Snapshot(NamedTuple):
    # Dumped direction, scaled by its singular value
    v: Matrix
    # First timestamp from which the queue holding this snapshot is complete
    s: int
    # Timestamp of the dump
    t: int


class SnapshotQueue:
    def __init__(self, prev_t: int = 0) -> None:
        self.items: Deque[Snapshot] = deque()
        self.prev_t = prev_t

    def __len__(self) -> int:
        return len(self.items)

    def __iter__(self) -> Iterator[Snapshot]:
        return iter(self.items)

    def append(self, v: Matrix, t: int) -> None:
        self.items.append(Snapshot(v, self.prev_t + 1, t))
        self.prev_t = t

    def expire(self, now: int, window_n: int) -> None:
        while self.items and self.items[0].t + window_n <= now:
            self.items.popleft()

    def trim(self, cap: int) -> None:
        while len(self.items) > cap:
            self.items.popleft()

    @property
    def coverage_start(self) -> int:
        if self.items:
            return self.items[0].s
        return self.prev_t + 1

    def vectors(self, d: int) -> Matrix:
        if not self.items:
            return np.zeros((0, d))
        return np.vstack([snapshot.v for snapshot in self.items])


@dataclass(frozen=True)
class DsFdConfig:
    # Row dimension
    d: int
    # Rows per FD sketch
    ell: int
    # Window length N
    window_n: int
    # Squared norm at which a direction is dumped into the snapshot queue
    theta: float

    def __post_init__(self) -> None:
        if self.d < 1:
            raise ConfigurationError(f"dimension must be positive, got {self.d}")
        if self.ell < 1:
            raise ConfigurationError(f"ell must be positive, got {self.ell}")
        if self.window_n < 1:
            raise ConfigurationError(f"window must be positive, got {self.window_n}")
        if not self.theta > 0:
            raise ConfigurationError(f"theta must be positive, got {self.theta}")

    @classmethod
    def for_epsilon(cls, d: int, epsilon: float, window_n: int) -> "DsFdConfig":
        return cls(
            d=d,
            ell=sketch_size(epsilon, d),
            window_n=window_n,
            theta=epsilon * window_n,
        )


def deflate(d_matrix: Matrix, k_matrix: Matrix, v: Matrix) -> Tuple[Matrix, Matrix]:
    """Removes direction ``v`` from the rows of D and from its Gram matrix K."""
    norm = float(np.linalg.norm(v))
    if abs(norm - 1.0) > NORMALIZATION_TOLERANCE:
        raise InputError(f"deflation direction must be a unit vector, norm={norm}")
    w = d_matrix @ v
    return d_matrix - np.outer(w, v), k_matrix - np.outer(w, w)


class _EagerProcess:
    """One FD process with a full SVD per update."""

    def __init__(self, ell: int, d: int, theta: float) -> None:
        self.theta = theta
        self.sketch = FdSketch(ell, d)

    @property
    def rows(self) -> Matrix:
        return self.sketch.rows

    @property
    def memory_rows(self) -> int:
        return self.sketch.memory_rows

    def ingest(self, row: Matrix) -> List[Matrix]:
        self.sketch.update(row)
        dumped = []
        while self.sketch.top_mass() >= self.theta:
            dumped.append(self.sketch.pop_top())
        return dumped


class _FastProcess:
    """One FD process that postpones decompositions.

    Rows pile up in D next to their Gram matrix K = D D^T. An upper bound on
    the top singular value decides whether an eigendecomposition of K is
    needed before anything could cross the dump threshold.
    """

    def __init__(self, ell: int, d: int, theta: float) -> None:
        self.ell = ell
        self.d = d
        self.theta = theta
        self.buffer: Matrix = np.zeros((0, d))
        self.gram: Matrix = np.zeros((0, 0))
        self.sigma1_hat = 0.0
        self.decompositions = 0

    @property
    def rows(self) -> Matrix:
        return self.buffer

    @property
    def memory_rows(self) -> int:
        return int(self.buffer.shape[0])

    def ingest(self, row: Matrix) -> List[Matrix]:
        mass = float(row @ row)
        self.sigma1_hat = math.sqrt(self.sigma1_hat**2 + mass)
        if self.buffer.shape[0] + 1 >= 2 * self.ell:
            return self._merge(row)

        cross = self.buffer @ row
        self.gram = np.block(
            [[self.gram, cross[:, None]], [cross[None, :], np.array([[mass]])]]
        )
        self.buffer = np.vstack([self.buffer, row])
        if self.sigma1_hat**2 >= self.theta:
            return self._dump_eigen()
        return []

    def _merge(self, row: Matrix) -> List[Matrix]:
        self.decompositions += 1
        self.buffer = reduce_rows(np.vstack([self.buffer, row]), self.ell)
        dumped = []
        while float(self.buffer[0] @ self.buffer[0]) >= self.theta:
            dumped.append(self.buffer[0].copy())
            self.buffer = np.vstack([self.buffer[1:], np.zeros((1, self.d))])
        self.gram = self.buffer @ self.buffer.T
        self.sigma1_hat = float(np.linalg.norm(self.buffer[0]))
        return dumped

    def _dump_eigen(self) -> List[Matrix]:
        self.decompositions += 1
        eigenvalues, eigenvectors = sym_eig(self.gram)
        dumped = []
        remaining = 0.0
        for j, eigenvalue in enumerate(eigenvalues):
            if eigenvalue < self.theta:
                remaining = max(float(eigenvalue), 0.0)
                break
            scaled = eigenvectors[:, j] @ self.buffer
            norm = float(np.linalg.norm(scaled))
            if norm == 0.0:
                continue
            dumped.append(scaled)
            self.buffer, self.gram = deflate(self.buffer, self.gram, scaled / norm)
        self.sigma1_hat = math.sqrt(remaining)
        return dumped


_Process = Union[_EagerProcess, _FastProcess]


class DsFd:
    """DS-FD for normalized rows over the last ``window_n`` steps."""

    fast = False

    def __init__(self, config: DsFdConfig, *, origin: int = 0) -> None:
        self.config = config
        self.main = self._new_process()
        self.aux = self._new_process()
        self.main_queue = SnapshotQueue(origin)
        self.aux_queue = SnapshotQueue(origin)
        self.step = 0
        # Restarts performed so far; the layered sketches drive this by mass.
        self.epoch = 0
        self.epoch_mass = 0.0

    def _new_process(self) -> _Process:
        cls = _FastProcess if self.fast else _EagerProcess
        return cls(self.config.ell, self.config.d, self.config.theta)

    # ----------------------------------------------------------------------------------
    # Building blocks, shared with the layered sketches
    # ----------------------------------------------------------------------------------
    def restart(self, start: int) -> None:
        """The auxiliary process takes over and a fresh one starts at ``start``."""
        self.main, self.main_queue = self.aux, self.aux_queue
        self.aux = self._new_process()
        self.aux_queue = SnapshotQueue(start - 1)
        self.epoch += 1
        self.epoch_mass = 0.0

    def expire(self, now: int) -> None:
        self.main_queue.expire(now, self.config.window_n)

    def ingest(self, row: Matrix, now: int) -> None:
        for vector in self.main.ingest(row):
            self.main_queue.append(vector, now)
        for vector in self.aux.ingest(row):
            self.aux_queue.append(vector, now)
        self.epoch_mass += float(row @ row)

    def record(self, row: Matrix, now: int) -> None:
        """Stores ``row`` verbatim as a snapshot in both queues."""
        self.main_queue.append(row.copy(), now)
        self.aux_queue.append(row.copy(), now)
        self.epoch_mass += float(row @ row)

    def trim(self, cap: int) -> None:
        self.main_queue.trim(cap)
        self.aux_queue.trim(cap)

    # ----------------------------------------------------------------------------------
    # Public operations
    # ----------------------------------------------------------------------------------
    def update(self, a: npt.ArrayLike) -> None:
        row = as_row(a, self.config.d)
        mass = float(row @ row)
        if abs(mass - 1.0) > NORMALIZATION_TOLERANCE:
            raise InputError(f"expected a unit-norm row, got squared norm {mass}")

        self.step += 1
        if (self.step - 1) % self.config.window_n == 0:
            self.restart(self.step)
        self.expire(self.step)
        self.ingest(row, self.step)

    def query_rows(self) -> Matrix:
        """Snapshots still in the window stacked on the main sketch's rows."""
        return np.vstack([self.main_queue.vectors(self.config.d), self.main.rows])

    def query(self) -> Matrix:
        return fd_merge(
            self.config.ell,
            [self.main_queue.vectors(self.config.d), self.main.rows],
            d=self.config.d,
        )

    @property
    def coverage_start(self) -> int:
        return self.main_queue.coverage_start

    @property
    def memory_rows(self) -> int:
        return (
            self.main.memory_rows
            + self.aux.memory_rows
            + len(self.main_queue)
            + len(self.aux_queue)
        )


class FastDsFd(DsFd):
    """DS-FD that skips decompositions while nothing can reach the threshold."""

    fast = True
