"""Stream sources: synthetic rows, CSV files, Poisson timestamps and a hard instance.
"""

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import BinaryIO, Iterator, List, NamedTuple, Optional, Union

import numpy as np

from windowsketch.errors import ConfigurationError, FormatError
from windowsketch.linalg import Matrix

# Rows are generated this many at a time; fixed so that replays are identical.
_CHUNK = 4096


class StreamRow(NamedTuple):
    vector: Matrix
    ts: int


@dataclass(frozen=True)
class SyntheticSource:
    n: int
    d: int
    zeta: float


@dataclass(frozen=True)
class CsvSource:
    path: Path
    # Index of an integer timestamp column, if the file carries one
    timestamp_column: Optional[int] = None


@dataclass(frozen=True)
class AdversarialSource:
    d: int
    ell: int
    window_n: int
    big_r: float


Source = Union[SyntheticSource, CsvSource, AdversarialSource]


@dataclass(frozen=True)
class StreamSpec:
    source: Source
    # Arrival rate of synthesized timestamps; None keeps sequence numbering
    poisson_lambda: Optional[float] = None
    # Rescale every non-zero row to unit norm
    normalize: bool = False
    # Divide every row by the smallest non-zero row norm, so squared norms
    # start at 1 and keep their ratios
    rescale: bool = False
    seed: int = 0

    @property
    def timestamped(self) -> bool:
        if self.poisson_lambda is not None:
            return True
        return (
            isinstance(self.source, CsvSource)
            and self.source.timestamp_column is not None
        )


def gen_synthetic(n: int, d: int, zeta: float, seed: int) -> Iterator[Matrix]:
    """Rows of ``S @ D @ U + noise / zeta``.

    S and the noise are standard normal, ``D[i, i] = 1 - i / d`` for zero-based
    ``i`` and U is orthonormal.
    """
    if n < 0 or d < 1:
        raise ConfigurationError(f"invalid synthetic shape n={n}, d={d}")
    if not zeta > 0:
        raise ConfigurationError(f"zeta must be positive, got {zeta}")

    rng = np.random.default_rng(seed)
    u, _ = np.linalg.qr(rng.standard_normal((d, d)))
    scales = 1.0 - np.arange(d) / d
    basis = scales[:, None] * u

    emitted = 0
    while emitted < n:
        count = min(_CHUNK, n - emitted)
        signal = rng.standard_normal((count, d)) @ basis
        noise = rng.standard_normal((count, d))
        chunk = signal + noise / zeta
        yield from chunk
        emitted += count


def _parse_cells(cells: List[str], line: int) -> List[float]:
    values = []
    for cell in cells:
        try:
            value = float(cell)
        except ValueError:
            raise FormatError(f"line {line}: {cell!r} is not a number") from None
        if not math.isfinite(value):
            raise FormatError(f"line {line}: {cell!r} is not finite")
        values.append(value)
    return values


def _decode_lines(handle: BinaryIO) -> Iterator[str]:
    for line, raw in enumerate(handle, start=1):
        try:
            yield raw.decode("utf-8")
        except UnicodeDecodeError:
            raise FormatError(f"line {line}: not valid UTF-8") from None


def load_csv(
    path: Path, timestamp_column: Optional[int] = None
) -> Iterator[StreamRow]:
    """Rows of a UTF-8 CSV file; timestamps, when present, are integers >= 1."""
    try:
        handle = path.open("rb")
    except OSError as e:
        raise FormatError(f"could not open {path}: {e}") from e

    with handle:
        width: Optional[int] = None
        previous_ts = 0
        for line, cells in enumerate(csv.reader(_decode_lines(handle)), start=1):
            if not cells or all(not cell.strip() for cell in cells):
                continue
            if width is None:
                width = len(cells)
            elif len(cells) != width:
                raise FormatError(
                    f"line {line}: expected {width} columns, found {len(cells)}"
                )

            if timestamp_column is None:
                ts = previous_ts + 1
            else:
                if not 0 <= timestamp_column < len(cells):
                    raise FormatError(
                        f"line {line}: no timestamp column {timestamp_column}"
                    )
                raw = cells.pop(timestamp_column)
                try:
                    ts = int(raw)
                except ValueError:
                    raise FormatError(
                        f"line {line}: timestamp {raw!r} is not an integer"
                    ) from None
                if ts < 1:
                    raise FormatError(f"line {line}: timestamp {ts} is not positive")
                if ts < previous_ts:
                    raise FormatError(
                        f"line {line}: timestamp {ts} is smaller than {previous_ts}"
                    )
            previous_ts = ts
            yield StreamRow(np.array(_parse_cells(cells, line)), ts)


def gen_poisson_ts(
    n: Optional[int], lam: float, seed: int
) -> Iterator[int]:
    """Ceiled arrival times of a Poisson process with rate ``lam``.

    With ``n=None`` the iterator never ends.
    """
    if not lam > 0:
        raise ConfigurationError(f"lambda must be positive, got {lam}")
    rng = np.random.default_rng(seed)
    clock = 0.0
    emitted = 0
    while n is None or emitted < n:
        count = _CHUNK if n is None else min(_CHUNK, n - emitted)
        arrivals = clock + np.cumsum(rng.exponential(1.0 / lam, size=count))
        clock = float(arrivals[-1])
        for value in np.ceil(arrivals):
            yield max(1, int(value))
        emitted += count


def adversarial_blocks(
    d: int, ell: int, window_n: int, big_r: float, seed: int
) -> List[Matrix]:
    """Blocks of equal-norm orthonormal rows; block ``i`` carries ``2**i * N / 4``."""
    if big_r < 1:
        raise ConfigurationError(f"R must be at least 1, got {big_r}")
    if ell < 4:
        raise ConfigurationError(f"the hard instance needs ell >= 4, got {ell}")
    width = ell // 4
    if width > d:
        raise ConfigurationError(f"ell/4 = {width} rows do not fit in dimension {d}")
    if window_n < (ell / 2) * math.log2(ell * big_r):
        raise ConfigurationError(
            f"window {window_n} is shorter than (ell/2) log2(ell R)"
            f" = {(ell / 2) * math.log2(ell * big_r):.1f}"
        )

    levels = math.ceil(math.log2(big_r) - 1e-12) if big_r > 1 else 0
    rng = np.random.default_rng(seed)
    blocks = []
    for i in range(levels + 1):
        basis, _ = np.linalg.qr(rng.standard_normal((d, width)))
        row_mass = 2**i * window_n / (4 * width)
        # Split rows into copies so every squared norm lands in [1, R], or in
        # [1, R + 1] when R < 2 leaves no room for an even split.
        copies = math.ceil(row_mass / big_r)
        if row_mass / copies < 1:
            copies = math.ceil(row_mass / (big_r + 1))
        rows = basis.T * math.sqrt(row_mass / copies)
        blocks.append(np.repeat(rows, copies, axis=0))
    return blocks


def gen_adversarial(
    d: int, ell: int, window_n: int, big_r: float, seed: int
) -> Iterator[Matrix]:
    """Blocks from the largest down, then ``window_n`` one-hot rows."""
    for block in reversed(adversarial_blocks(d, ell, window_n, big_r, seed)):
        yield from block
    for k in range(window_n):
        tail = np.zeros(d)
        tail[k % d] = 1.0
        yield tail


def _source_rows(spec: StreamSpec) -> Iterator[StreamRow]:
    source = spec.source
    if isinstance(source, CsvSource):
        return load_csv(source.path, source.timestamp_column)
    if isinstance(source, SyntheticSource):
        vectors = gen_synthetic(source.n, source.d, source.zeta, spec.seed)
    else:
        vectors = gen_adversarial(
            source.d, source.ell, source.window_n, source.big_r, spec.seed
        )
    return (StreamRow(v, k) for k, v in enumerate(vectors, start=1))


def smallest_row_mass(spec: StreamSpec) -> Optional[float]:
    """Smallest non-zero squared row norm of the source, or None if every row is zero.

    Reads the whole source once; every source is finite and replays identically.
    """
    smallest: Optional[float] = None
    for row in _source_rows(spec):
        mass = float(row.vector @ row.vector)
        if mass > 0.0 and (smallest is None or mass < smallest):
            smallest = mass
    return smallest


def open_stream(spec: StreamSpec) -> Iterator[StreamRow]:
    if spec.normalize and spec.rescale:
        raise ConfigurationError("normalize and rescale are mutually exclusive")

    factor = 1.0
    if spec.rescale:
        smallest = smallest_row_mass(spec)
        if smallest is not None:
            factor = 1.0 / math.sqrt(smallest)

    rows = _source_rows(spec)
    if spec.poisson_lambda is not None:
        stamps = gen_poisson_ts(None, spec.poisson_lambda, spec.seed + 1)
        rows = (StreamRow(row.vector, ts) for row, ts in zip(rows, stamps))

    for row in rows:
        if spec.normalize:
            norm = float(np.linalg.norm(row.vector))
            if norm > 0.0:
                row = StreamRow(row.vector / norm, row.ts)
        elif spec.rescale:
            row = StreamRow(row.vector * factor, row.ts)
        yield row
