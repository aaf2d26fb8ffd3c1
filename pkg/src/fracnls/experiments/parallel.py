"""Ensemble execution with a deterministic fold over sample index order."""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor


def run_indexed(func, ctx, indices, jobs: int = 1) -> list:
    """``[func(ctx, i) for i in indices]``, optionally in a process pool.

    ``func`` must be a module-level function of ``(ctx, index)`` only, so the
    result list is identical for every ``jobs`` value.
    """
    indices = list(indices)
    if jobs <= 1 or len(indices) <= 1:
        return [func(ctx, i) for i in indices]
    chunk = max(1, len(indices) // (4 * jobs))
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(_call, [(func, ctx, i) for i in indices], chunksize=chunk))


def _call(args):
    func, ctx, i = args
    return func(ctx, i)
