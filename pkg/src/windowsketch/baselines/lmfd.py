"""An exponential histogram of FD blocks over a sliding window.
"""

import math
from collections import deque
from dataclasses import dataclass
from typing import Deque, List, Optional

import numpy.typing as npt

from windowsketch.baselines.exact import _Window
from windowsketch.dsfd import sketch_size
from windowsketch.fd import FdSketch, as_row, fd_merge
from windowsketch.linalg import Matrix


@dataclass
class Block:
    rows: Matrix
    mass: float
    # Arrival time of the oldest and newest row summarized by the block
    oldest: int
    newest: int


@dataclass
class _OpenBlock:
    sketch: FdSketch
    mass: float = 0.0
    oldest: Optional[int] = None
    newest: int = 0


class LmFd(_Window):
    """Blocks on level ``k`` summarize about ``ell * 2**k`` of mass.

    A level holds at most ``blocks_per_level`` blocks; when one more arrives
    the two oldest are merged into a single block on the next level.
    """

    def __init__(
        self,
        d: int,
        epsilon: float,
        window_n: int,
        *,
        time_based: bool = False,
    ) -> None:
        super().__init__(window_n, time_based=time_based)
        self.d = d
        self.ell = sketch_size(epsilon, d)
        self.blocks_per_level = math.ceil(1.0 / epsilon - 1e-9)
        # Level 0 first; each level lists its blocks oldest first.
        self.levels: List[Deque[Block]] = []
        self._open = self._new_open_block()

    def _new_open_block(self) -> _OpenBlock:
        return _OpenBlock(sketch=FdSketch(self.ell, self.d, fast=True))

    @property
    def memory_rows(self) -> int:
        held = sum(block.rows.shape[0] for level in self.levels for block in level)
        return held + self._open.sketch.memory_rows

    @property
    def block_count(self) -> int:
        return sum(len(level) for level in self.levels)

    def level_sizes(self) -> List[int]:
        return [len(level) for level in self.levels]

    def update(self, a: npt.ArrayLike, ts: int = 0) -> None:
        row = as_row(a, self.d)
        now = self._advance(ts)
        mass = float(row @ row)
        if mass > 0.0:
            block = self._open
            block.sketch.update(row)
            block.mass += mass
            if block.oldest is None:
                block.oldest = now
            block.newest = now
            if block.mass >= self.ell:
                self._close_open_block()
        self._expire()

    def _close_open_block(self) -> None:
        block = self._open
        assert block.oldest is not None
        self._push(
            0,
            Block(block.sketch.sketch(), block.mass, block.oldest, block.newest),
        )
        self._open = self._new_open_block()

    def _push(self, level: int, block: Block) -> None:
        while len(self.levels) <= level:
            self.levels.append(deque())
        self.levels[level].append(block)
        if len(self.levels[level]) > self.blocks_per_level:
            first = self.levels[level].popleft()
            second = self.levels[level].popleft()
            merged = Block(
                fd_merge(self.ell, [first.rows, second.rows], d=self.d),
                first.mass + second.mass,
                first.oldest,
                second.newest,
            )
            self._push(level + 1, merged)

    def _expire(self) -> None:
        # A block whose newest row left the window is dropped; a block that
        # straddles the window start stays.
        for level in reversed(self.levels):
            while level and self.expired(level[0].newest):
                level.popleft()
        if self._open.oldest is not None and self.expired(self._open.newest):
            self._open = self._new_open_block()
        while self.levels and not self.levels[-1]:
            self.levels.pop()

    def query(self) -> Matrix:
        groups = [block.rows for level in self.levels for block in level]
        groups.append(self._open.sketch.rows)
        return fd_merge(self.ell, groups, d=self.d)

    def block_masses(self) -> List[List[float]]:
        return [[block.mass for block in level] for level in self.levels]

