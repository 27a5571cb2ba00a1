"""Seeding and worker-pool helpers shared by the experiment drivers."""

from concurrent.futures import ThreadPoolExecutor

import numpy as np


def rng_for(seed, *key):
    """Independent generator keyed by (seed, *key).

    Every sample gets its own generator derived from the pair, so results
    are byte-identical no matter how samples are split across workers.
    """
    entropy = (int(seed),) + tuple(int(k) for k in key)
    return np.random.default_rng(np.random.SeedSequence(entropy))


def parallel_map(func, count: int, workers: int = 1) -> list:
    """[func(0), ..., func(count-1)], optionally on a thread pool.

    The result order is fixed by the index, never by completion time;
    with per-index seeding the output is independent of ``workers``.
    The kernels drop the interpreter lock, so threads help on the
    compiled path.
    """
    if workers is None or workers <= 1:
        return [func(i) for i in range(count)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(func, range(count)))
