"""
Deterministic random streams and block-parallel evaluation.

One root seed per run. Stream ``b`` is a Philox counter-based generator keyed by
``SeedSequence([seed, b])``, so any block can be regenerated independently of the
others. Work is cut into fixed-size blocks that do not depend on the thread
count; results are gathered in block order, which makes parallel and serial runs
agree bit-for-bit.
"""

from concurrent.futures import ThreadPoolExecutor
from typing import Callable, List, Sequence, TypeVar

import numpy as np

T = TypeVar("T")

# Upper bound used to fold arbitrary Python ints into the uint64 seed domain.
_SEED_MASK = (1 << 64) - 1


def make_stream(seed: int, stream_id: int = 0) -> np.random.Generator:
    """
    Create the generator for one stream.

    Args:
        seed: Root seed of the run (any int, folded into 64 bits)
        stream_id: Counter identifying the stream (block index, trial group, ...)

    Returns:
        Independent numpy Generator backed by Philox
    """
    root = np.random.SeedSequence([int(seed) & _SEED_MASK, int(stream_id)])
    return np.random.Generator(np.random.Philox(root))


def block_bounds(total: int, block_size: int) -> List[range]:
    """Split ``range(total)`` into consecutive blocks of ``block_size`` (last one shorter)."""
    if total <= 0:
        return []
    return [range(start, min(start + block_size, total)) for start in range(0, total, block_size)]


def map_blocks(
    fn: Callable[[range, np.random.Generator], T],
    total: int,
    seed: int,
    block_size: int,
    threads: int = 1,
    stream_offset: int = 0,
) -> List[T]:
    """
    Evaluate ``fn(block, rng)`` for every block of ``range(total)``.

    Each block receives the stream ``stream_offset + block_index``. The returned
    list is in block order regardless of ``threads``.
    """
    blocks = block_bounds(total, block_size)

    def run(index: int) -> T:
        return fn(blocks[index], make_stream(seed, stream_offset + index))

    if threads <= 1 or len(blocks) <= 1:
        return [run(i) for i in range(len(blocks))]

    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(run, range(len(blocks))))


def ordered_concat(parts: Sequence[np.ndarray]) -> np.ndarray:
    """Concatenate block results in order (empty input gives an empty float array)."""
    if not parts:
        return np.zeros(0)
    return np.concatenate(parts, axis=0)
