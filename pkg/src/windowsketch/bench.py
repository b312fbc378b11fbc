"""Replays a stream through one sketch and measures it against the exact window.
"""

import time
from functools import partial
from itertools import chain
from typing import Callable, List, Optional, Protocol, TypeVar, Union

import numpy as np

from windowsketch.baselines.exact import ExactWindow, WindowMass
from windowsketch.baselines.lmfd import LmFd
from windowsketch.baselines.sampling import SworSampler, SwrSampler
from windowsketch.configuration import RunConfig
from windowsketch.dsfd import DsFd, DsFdConfig, FastDsFd, sketch_size
from windowsketch.errors import InputError, ShapeError
from windowsketch.layered import LayeredConfig, LayeredDsFd, WindowModel
from windowsketch.linalg import Matrix, spectral_norm_sym
from windowsketch.report import Aggregates, QueryRecord, Report, StreamStats
from windowsketch.streamgen import open_stream
from windowsketch.ui import UI

T = TypeVar("T")


class WindowSketch(Protocol):
    """What the harness needs from a sketch under test."""

    def update(self, row: Matrix, ts: int) -> None:
        ...

    def estimate(self) -> Matrix:
        ...

    @property
    def memory_rows(self) -> int:
        ...

    @property
    def coverage_incomplete(self) -> bool:
        ...


class _DsFdRunner:
    def __init__(self, sketch: DsFd, *, compressed: bool) -> None:
        self.sketch = sketch
        self.compressed = compressed
        self.coverage_incomplete = False

    def update(self, row: Matrix, ts: int) -> None:
        self.sketch.update(row)

    def estimate(self) -> Matrix:
        if self.compressed:
            return self.sketch.query()
        return self.sketch.query_rows()

    @property
    def memory_rows(self) -> int:
        return self.sketch.memory_rows


class _LayeredRunner:
    def __init__(self, sketch: LayeredDsFd) -> None:
        self.sketch = sketch

    def update(self, row: Matrix, ts: int) -> None:
        if self.sketch.config.model is WindowModel.TIME:
            self.sketch.update(row, ts)
        else:
            self.sketch.update(row)

    def estimate(self) -> Matrix:
        return self.sketch.query()

    @property
    def memory_rows(self) -> int:
        return self.sketch.memory_rows

    @property
    def coverage_incomplete(self) -> bool:
        return self.sketch.coverage_incomplete


class _LmFdRunner:
    def __init__(self, sketch: LmFd) -> None:
        self.sketch = sketch
        self.coverage_incomplete = False

    def update(self, row: Matrix, ts: int) -> None:
        self.sketch.update(row, ts)

    def estimate(self) -> Matrix:
        return self.sketch.query()

    @property
    def memory_rows(self) -> int:
        return self.sketch.memory_rows


class _SamplerRunner:
    """A sampler paired with its own running window mass."""

    def __init__(
        self, sampler: Union[SwrSampler, SworSampler], mass: WindowMass
    ) -> None:
        self.sampler = sampler
        self.mass = mass
        self.coverage_incomplete = False

    def update(self, row: Matrix, ts: int) -> None:
        self.sampler.update(row, ts)
        self.mass.update(float(row @ row), ts)

    def estimate(self) -> Matrix:
        return self.sampler.estimate(self.mass.total)

    @property
    def memory_rows(self) -> int:
        return self.sampler.memory_rows


class _ExactRunner:
    def __init__(self, window: ExactWindow) -> None:
        self.window = window
        self.coverage_incomplete = False

    def update(self, row: Matrix, ts: int) -> None:
        self.window.update(row, ts)

    def estimate(self) -> Matrix:
        return self.window.rows()

    @property
    def memory_rows(self) -> int:
        return self.window.memory_rows


def build_sketch(config: RunConfig, d: int) -> WindowSketch:
    """The sketch named by ``config.algo`` for rows of dimension ``d``."""
    time_based = config.time_based
    window_n = config.window_n
    ell = sketch_size(config.epsilon, d)

    if config.algo in ("dsfd", "fast-dsfd"):
        cls = FastDsFd if config.algo == "fast-dsfd" else DsFd
        dsfd = cls(DsFdConfig.for_epsilon(d, config.epsilon, window_n))
        return _DsFdRunner(dsfd, compressed=config.compressed)

    if config.algo in ("seq-dsfd", "time-dsfd"):
        model = WindowModel.SEQUENCE
        if config.algo == "time-dsfd":
            model = WindowModel.TIME
        layered = LayeredDsFd(
            LayeredConfig(
                model=model,
                d=d,
                epsilon=config.epsilon,
                window_n=window_n,
                big_r=config.big_r,
                beta=config.beta,
                fast=not config.eager_layers,
            )
        )
        return _LayeredRunner(layered)

    if config.algo == "lmfd":
        return _LmFdRunner(
            LmFd(d, config.epsilon, window_n, time_based=time_based)
        )

    if config.algo in ("swr", "swor"):
        sampler_cls = SwrSampler if config.algo == "swr" else SworSampler
        sampler = sampler_cls(
            ell, d, window_n, time_based=time_based, seed=config.seed
        )
        return _SamplerRunner(sampler, WindowMass(window_n, time_based=time_based))

    assert config.algo == "exact", config.algo
    return _ExactRunner(ExactWindow(d, window_n, time_based=time_based))


def relative_error(oracle: ExactWindow, estimate: Matrix) -> float:
    """``||A_W^T A_W - B^T B||_2 / ||A_W||_F^2``; 0 for an empty window."""
    frob = oracle.frobenius_sq
    if frob <= 0.0:
        return 0.0
    return spectral_norm_sym(oracle.gram() - estimate.T @ estimate) / frob


def _timed(enabled: bool, samples: List[float], call: Callable[[], T]) -> T:
    if not enabled:
        return call()
    start = time.perf_counter()
    result = call()
    samples.append(time.perf_counter() - start)
    return result


def _mean(samples: List[float]) -> Optional[float]:
    if not samples:
        return None
    return sum(samples) / len(samples)


def run_stream(config: RunConfig) -> Report:
    """Updates the sketch and the oracle in lockstep and queries both periodically."""
    rows = open_stream(config.stream)
    first = next(rows, None)
    if first is None:
        UI.warn("The stream is empty.")
        return Report(config=config.echo())

    d = int(first.vector.shape[0])
    UI.log(f"Rows have dimension {d}, sketch size {sketch_size(config.epsilon, d)}.")
    sketch = build_sketch(config, d)
    oracle = ExactWindow(d, config.window_n, time_based=config.time_based)

    records: List[QueryRecord] = []
    stats = StreamStats()
    update_times: List[float] = []
    query_times: List[float] = []
    max_rows = 0
    smallest, largest = np.inf, 0.0

    for step, stream_row in enumerate(chain([first], rows), start=1):
        row, ts = stream_row.vector, stream_row.ts
        try:
            _timed(config.timing, update_times, partial(sketch.update, row, ts))
            oracle.update(row, ts)
        except (InputError, ShapeError) as e:
            raise type(e)(f"step {step}: {e}") from e

        stats.rows = step
        mass = float(row @ row)
        if mass > 0.0:
            smallest, largest = min(smallest, mass), max(largest, mass)
        max_rows = max(max_rows, sketch.memory_rows)

        if step % config.query_every != 0:
            continue
        if config.time_based:
            window_full = ts - first.ts + 1 >= config.window_n
        else:
            window_full = step >= config.window_n
        if not window_full or oracle.frobenius_sq <= 0.0:
            continue

        estimate = _timed(config.timing, query_times, sketch.estimate)
        error = relative_error(oracle, estimate)
        records.append(QueryRecord(step, ts, error, sketch.memory_rows))
        UI.log(f"step {step}: relative error {error:.6g}")

    if largest > 0.0:
        stats.norm_ratio = float(largest / smallest)
    if sketch.coverage_incomplete:
        UI.warn("No layer covered the whole window at some query.")
    return Report(
        config=config.echo(),
        records=records,
        aggregates=Aggregates.from_records(
            records,
            max_sketch_rows=max_rows,
            mean_update_time=_mean(update_times),
            mean_query_time=_mean(query_times),
        ),
        coverage_incomplete=sketch.coverage_incomplete,
        stream=stats,
    )
