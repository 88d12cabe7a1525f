"""Counter-based uniform streams for reproducible Monte Carlo.

Every trial owns a fixed budget of ``k`` uniforms carved out of a single
Philox stream keyed by the seed.  Trial ``i`` occupies the counter blocks
``[i*ceil(k/4), (i+1)*ceil(k/4))`` (Philox emits 4 uint64 per counter
step), so the numbers a trial sees depend only on ``(seed, i, k)`` --
never on chunk sizes, thread counts, or scheduling.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from typing import Callable, TypeVar

import numpy as np

_OUTPUTS_PER_BLOCK = 4

T = TypeVar("T")


def trial_uniforms(seed: int, start: int, n: int, k: int) -> np.ndarray:
    """Uniforms for trials ``start .. start+n-1``, ``k`` doubles each.

    Returns an ``(n, k)`` array; row ``i`` is identical for every way of
    chunking the trial range.
    """
    if n < 0 or k <= 0:
        raise ValueError("need n >= 0 and k > 0")
    blocks_per_trial = -(-k // _OUTPUTS_PER_BLOCK)
    bg = np.random.Philox(key=np.uint64(seed))
    bg.advance(start * blocks_per_trial)
    width = blocks_per_trial * _OUTPUTS_PER_BLOCK
    u = np.random.Generator(bg).random(n * width)
    return u.reshape(n, width)[:, :k]


def sample_categorical(cdf: np.ndarray, u: np.ndarray) -> np.ndarray:
    """Map uniforms to symbol indices through a cumulative mass vector.

    ``cdf`` may be broadcast against ``u``: its last axis is the alphabet,
    the leading axes must match ``u``'s shape.
    """
    if cdf.ndim == 1:
        idx = np.searchsorted(cdf, u, side="right")
    else:
        idx = (u[..., None] >= cdf).sum(axis=-1)
    return np.minimum(idx, cdf.shape[-1] - 1)


def run_trials(
    trials: int,
    worker: Callable[[int, int], T],
    *,
    chunk: int = 8192,
    threads: int = 1,
) -> list[T]:
    """Split ``trials`` into fixed chunks and run ``worker(start, n)`` on each.

    Chunk boundaries depend only on ``(trials, chunk)``, and results are
    returned in chunk order, so any aggregation over them is independent
    of the thread count.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    starts = list(range(0, trials, chunk))
    spans = [(s, min(chunk, trials - s)) for s in starts]
    if threads <= 1 or len(spans) == 1:
        return [worker(s, n) for s, n in spans]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(lambda sn: worker(*sn), spans))


def chunk_size_for(base: int, multiple_of: int) -> int:
    """Largest chunk <= base that is a positive multiple of ``multiple_of``."""
    if multiple_of >= base:
        return multiple_of
    return (base // multiple_of) * multiple_of


def bernoulli_stderr(mean: float, trials: int) -> float:
    """Worst-case binomial standard error for a [0, 1]-valued estimate."""
    p = min(max(mean, 0.0), 1.0)
    return float(np.sqrt(p * (1.0 - p) / trials))
