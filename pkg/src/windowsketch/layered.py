"""Layered DS-FD for unnormalized rows, over sequence or time windows.

Each layer is a DS-FD instance with its own dump threshold; thresholds double
from one layer to the next. A query is answered by the finest layer whose
snapshot queue still covers the whole window.
"""

import enum
import math
from dataclasses import dataclass
from typing import List, Optional

import numpy.typing as npt

from windowsketch.dsfd import DsFd, DsFdConfig, FastDsFd, sketch_size
from windowsketch.errors import ConfigurationError, InputError
from windowsketch.fd import as_row
from windowsketch.linalg import Matrix

# Relative slack when checking squared norms against [1, R].
NORM_TOLERANCE = 1e-9


class WindowModel(str, enum.Enum):
    SEQUENCE = "sequence"
    TIME = "time"


def _ceil_log2(x: float) -> int:
    if x <= 1.0:
        return 0
    return max(0, math.ceil(math.log2(x) - 1e-12))


@dataclass(frozen=True)
class LayeredConfig:
    # Sequence windows count rows, time windows count time units
    model: WindowModel
    # Row dimension
    d: int
    # Relative error parameter
    epsilon: float
    # Window length N
    window_n: int
    # Upper bound on squared row norms; the lower bound is 1
    big_r: float
    # Error coefficient used to size the snapshot caps
    beta: float = 1.0
    # Use the decomposition-postponing DS-FD in every layer
    fast: bool = True

    def __post_init__(self) -> None:
        if self.big_r < 1:
            raise ConfigurationError(f"R must be at least 1, got {self.big_r}")
        if not self.beta > 0:
            raise ConfigurationError(f"beta must be positive, got {self.beta}")
        if self.window_n < 1:
            raise ConfigurationError(f"window must be positive, got {self.window_n}")
        if self.d < 1:
            raise ConfigurationError(f"dimension must be positive, got {self.d}")
        # Validates epsilon as a side effect.
        sketch_size(self.epsilon, self.d)

    @property
    def ell(self) -> int:
        return sketch_size(self.epsilon, self.d)

    @property
    def levels(self) -> int:
        """The index L of the top layer."""
        if self.model is WindowModel.SEQUENCE:
            return _ceil_log2(self.big_r)
        return _ceil_log2(self.epsilon * self.window_n * self.big_r)

    @property
    def base_threshold(self) -> float:
        if self.model is WindowModel.SEQUENCE:
            return self.epsilon * self.window_n
        return 1.0

    @property
    def thresholds(self) -> List[float]:
        return [self.base_threshold * 2**j for j in range(self.levels + 1)]

    @property
    def base_restart_mass(self) -> float:
        """Mass between two restarts of layer 0; doubles with every layer."""
        if self.model is WindowModel.SEQUENCE:
            return float(self.window_n)
        return 1.0 / self.epsilon

    @property
    def snapshot_cap(self) -> int:
        return math.floor(2 * (1 + 4 / self.beta) / self.epsilon + 1e-9)


class LayeredDsFd:
    def __init__(self, config: LayeredConfig) -> None:
        self.config = config
        self.now = 0
        self.step = 0
        # Stream mass since the origin or the last idle reset
        self.total_mass = 0.0
        self.last_arrival: Optional[int] = None
        self.coverage_incomplete = False
        self.layers = self._fresh_layers(origin=0)

    def _fresh_layers(self, origin: int) -> List[DsFd]:
        cls = FastDsFd if self.config.fast else DsFd
        return [
            cls(
                DsFdConfig(
                    d=self.config.d,
                    ell=self.config.ell,
                    window_n=self.config.window_n,
                    theta=theta,
                ),
                origin=origin,
            )
            for theta in self.config.thresholds
        ]

    @property
    def memory_rows(self) -> int:
        return sum(layer.memory_rows for layer in self.layers)

    def _check(self, row: Matrix, ts: Optional[int]) -> float:
        mass = float(row @ row)
        upper = self.config.big_r * (1 + NORM_TOLERANCE)
        in_range = 1 - NORM_TOLERANCE <= mass <= upper
        if self.config.model is WindowModel.SEQUENCE:
            if not in_range:
                raise InputError(
                    f"squared norm {mass} outside [1, {self.config.big_r}]"
                )
            return mass

        if ts is None:
            raise InputError("time windows need a timestamp for every row")
        if ts < 1:
            raise InputError(f"timestamps must be at least 1, got {ts}")
        if ts < self.now:
            raise InputError(f"timestamp {ts} arrived after {self.now}")
        if mass != 0.0 and not in_range:
            raise InputError(
                f"squared norm {mass} is neither 0 nor in [1, {self.config.big_r}]"
            )
        return mass

    def update(self, a: npt.ArrayLike, ts: Optional[int] = None) -> None:
        row = as_row(a, self.config.d)
        mass = self._check(row, ts)

        self.step += 1
        if self.config.model is WindowModel.SEQUENCE:
            self.now = self.step
        else:
            assert ts is not None
            self.now = ts

        window_n = self.config.window_n
        if self.last_arrival is not None and self.last_arrival + window_n <= self.now:
            # Nothing left in the window, so every layer starts over.
            self.layers = self._fresh_layers(origin=self.last_arrival)
            self.total_mass = 0.0
            self.last_arrival = None

        if mass == 0.0:
            for layer in self.layers:
                layer.expire(self.now)
            return

        new_tick = self.last_arrival is None or self.now > self.last_arrival
        cap = self.config.snapshot_cap
        restart_mass = self.config.base_restart_mass
        for j, layer in enumerate(self.layers):
            if new_tick:
                self._restart_if_due(layer, restart_mass * 2**j)
            layer.expire(self.now)
            if mass >= layer.config.theta:
                layer.record(row, self.now)
            else:
                layer.ingest(row, self.now)
            layer.trim(cap)

        self.total_mass += mass
        self.last_arrival = self.now

    def _restart_if_due(self, layer: DsFd, restart_mass: float) -> None:
        epoch = math.floor(self.total_mass / restart_mass)
        # Two restarts already leave both processes fresh.
        for _ in range(min(epoch - layer.epoch, 2)):
            layer.restart(self.now)
        layer.epoch = max(layer.epoch, epoch)

    def eligible(self, j: int) -> bool:
        window_start = max(1, self.now - self.config.window_n + 1)
        return self.layers[j].coverage_start <= window_start

    def select_layer(self, *, binary: bool = False) -> int:
        top = len(self.layers) - 1
        if not self.eligible(top):
            self.coverage_incomplete = True
            return top

        if not binary:
            return next(j for j in range(top + 1) if self.eligible(j))

        low, high = 0, top
        while low < high:
            middle = (low + high) // 2
            if self.eligible(middle):
                high = middle
            else:
                low = middle + 1
        return low

    def query(self, *, binary: bool = False) -> Matrix:
        return self.layers[self.select_layer(binary=binary)].query()
