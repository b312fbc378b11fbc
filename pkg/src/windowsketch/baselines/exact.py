"""Exact sliding-window state, used as the measurement oracle.
"""

from collections import deque
from typing import Deque, Optional, Tuple

import numpy as np
import numpy.typing as npt

from windowsketch.errors import InputError
from windowsketch.fd import as_row
from windowsketch.linalg import Matrix


class _Window:
    """Sequence windows keep ``window_n`` rows, time windows ``window_n`` time units."""

    def __init__(self, window_n: int, *, time_based: bool = False) -> None:
        self.window_n = window_n
        self.time_based = time_based
        self.now = 0
        self.step = 0

    def _advance(self, ts: Optional[int]) -> int:
        self.step += 1
        if not self.time_based:
            self.now = self.step
        else:
            if ts is None:
                raise InputError("time windows need a timestamp for every row")
            if ts < self.now:
                raise InputError(f"timestamp {ts} arrived after {self.now}")
            self.now = ts
        return self.now

    def expired(self, ts: int) -> bool:
        return ts + self.window_n <= self.now


class WindowMass(_Window):
    """Running squared Frobenius norm of the window, without the rows."""

    def __init__(self, window_n: int, *, time_based: bool = False) -> None:
        super().__init__(window_n, time_based=time_based)
        self._masses: Deque[Tuple[int, float]] = deque()
        self.total = 0.0

    def update(self, mass: float, ts: Optional[int] = None) -> None:
        now = self._advance(ts)
        if mass > 0.0:
            self._masses.append((now, mass))
            self.total += mass
        while self._masses and self.expired(self._masses[0][0]):
            self.total -= self._masses.popleft()[1]
        if not self._masses:
            self.total = 0.0


class ExactWindow(_Window):
    def __init__(self, d: int, window_n: int, *, time_based: bool = False) -> None:
        super().__init__(window_n, time_based=time_based)
        self.d = d
        self._rows: Deque[Tuple[int, Matrix]] = deque()
        self.frobenius_sq = 0.0

    def __len__(self) -> int:
        return len(self._rows)

    @property
    def memory_rows(self) -> int:
        return len(self._rows)

    def update(self, a: npt.ArrayLike, ts: Optional[int] = None) -> None:
        row = as_row(a, self.d)
        now = self._advance(ts)
        mass = float(row @ row)
        if mass > 0.0:
            self._rows.append((now, row))
            self.frobenius_sq += mass
        while self._rows and self.expired(self._rows[0][0]):
            _, old = self._rows.popleft()
            self.frobenius_sq -= float(old @ old)
        if not self._rows:
            self.frobenius_sq = 0.0

    def rows(self) -> Matrix:
        if not self._rows:
            return np.zeros((0, self.d))
        return np.vstack([row for _, row in self._rows])

    def gram(self) -> Matrix:
        rows = self.rows()
        return rows.T @ rows
