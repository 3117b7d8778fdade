"""Thread-count resolution and an order-preserving parallel map."""

import os
from concurrent.futures import ThreadPoolExecutor

ENV_THREADS = "QSPEC_THREADS"


def resolve_threads(threads=None):
    """Explicit argument, then ``QSPEC_THREADS``, then the CPU count."""
    if threads is None:
        env = os.environ.get(ENV_THREADS)
        if env:
            threads = int(env)
        else:
            threads = os.cpu_count() or 1
    threads = int(threads)
    if threads < 1:
        raise ValueError(f"thread count must be positive, got {threads}")
    return threads


def pmap(func, items, threads=None):
    """``[func(x) for x in items]``, run on a thread pool when useful.

    Only worthwhile when ``func`` spends its time in code that releases the
    GIL (the numba kernels here are compiled with ``nogil``).
    """
    items = list(items)
    threads = min(resolve_threads(threads), len(items))
    if threads <= 1:
        return [func(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(func, items))


def chunks(seq, parts):
    """Split ``seq`` into ``parts`` contiguous, nearly equal pieces."""
    seq = list(seq)
    parts = max(1, min(parts, len(seq)))
    size, extra = divmod(len(seq), parts)
    out, start = [], 0
    for i in range(parts):
        stop = start + size + (1 if i < extra else 0)
        out.append(seq[start:stop])
        start = stop
    return out
