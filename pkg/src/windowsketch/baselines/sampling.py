"""Norm-weighted row sampling over a sliding window.

Row ``i`` gets the key ``log(u_i) / w_i`` with ``w_i`` its squared norm and
``u_i`` uniform on (0, 1). This orders rows exactly like the priority
``u_i ** (1 / w_i)`` while staying clear of underflow for small norms. The row
with the largest key among a set is drawn with probability proportional to its
squared norm.
"""

import math
from collections import deque
from typing import Deque, List, Tuple

import numpy as np
import numpy.typing as npt

from windowsketch.baselines.exact import _Window
from windowsketch.fd import as_row
from windowsketch.linalg import Matrix

# (timestamp, row)
_Entry = Tuple[int, Matrix]


def _rescale(rows: List[Matrix], frob: float, ell: int, d: int) -> Matrix:
    out = np.zeros((ell, d))
    for k, row in enumerate(rows):
        mass = float(row @ row)
        if mass > 0.0:
            out[k] = row * math.sqrt(frob / (ell * mass))
    return out


class SwrSampler(_Window):
    """``ell`` independent samplers, each drawing one row of the window."""

    def __init__(
        self,
        ell: int,
        d: int,
        window_n: int,
        *,
        time_based: bool = False,
        seed: int = 0,
    ) -> None:
        super().__init__(window_n, time_based=time_based)
        self.ell = ell
        self.d = d
        self._rng = np.random.default_rng(seed)
        # Per sampler: the rows whose key beats every later arrival, oldest first.
        self.skylines: List[Deque[Tuple[float, _Entry]]] = [
            deque() for _ in range(ell)
        ]

    @property
    def memory_rows(self) -> int:
        return sum(len(skyline) for skyline in self.skylines)

    def update(self, a: npt.ArrayLike, ts: int = 0) -> None:
        row = as_row(a, self.d)
        now = self._advance(ts)
        limit = now - self.window_n
        mass = float(row @ row)

        if mass == 0.0:
            for skyline in self.skylines:
                while skyline and skyline[0][1][0] <= limit:
                    skyline.popleft()
            return

        entry = (now, row)
        keys = (np.log(1.0 - self._rng.random(self.ell)) / mass).tolist()
        for skyline, key in zip(self.skylines, keys):
            while skyline and skyline[-1][0] <= key:
                skyline.pop()
            skyline.append((key, entry))
            while skyline[0][1][0] <= limit:
                skyline.popleft()

    def estimate(self, frob: float) -> Matrix:
        samples = [skyline[0][1][1] for skyline in self.skylines if skyline]
        return _rescale(samples, frob, self.ell, self.d)


class SworSampler(_Window):
    """The ``ell`` rows with the largest keys in the window, drawn jointly."""

    def __init__(
        self,
        ell: int,
        d: int,
        window_n: int,
        *,
        time_based: bool = False,
        seed: int = 0,
    ) -> None:
        super().__init__(window_n, time_based=time_based)
        self.ell = ell
        self.d = d
        self._rng = np.random.default_rng(seed)
        # Every in-window row with its key, oldest first. O(window) memory.
        self._rows: Deque[Tuple[float, _Entry]] = deque()

    @property
    def memory_rows(self) -> int:
        return len(self._rows)

    def update(self, a: npt.ArrayLike, ts: int = 0) -> None:
        row = as_row(a, self.d)
        now = self._advance(ts)
        mass = float(row @ row)
        if mass > 0.0:
            key = math.log(1.0 - self._rng.random()) / mass
            self._rows.append((key, (now, row)))
        while self._rows and self.expired(self._rows[0][1][0]):
            self._rows.popleft()

    def selected(self) -> List[Matrix]:
        if len(self._rows) <= self.ell:
            return [row for _, (_, row) in self._rows]
        keys = np.array([key for key, _ in self._rows])
        # lexsort sorts by the last key first; position breaks ties toward recency
        order = np.lexsort((np.arange(keys.size), keys))
        return [self._rows[i][1][1] for i in order[-self.ell :]]

    def estimate(self, frob: float) -> Matrix:
        # Every row is in the sample, so the unscaled rows give the exact Gram.
        if len(self._rows) <= self.ell:
            out = np.zeros((self.ell, self.d))
            for k, row in enumerate(self.selected()):
                out[k] = row
            return out
        return _rescale(self.selected(), frob, self.ell, self.d)
