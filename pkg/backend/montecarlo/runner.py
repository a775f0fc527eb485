"""Fan-out of independent replica tasks and ordered fan-in of their results.

A task is a picklable callable ``task(stream: RngStream) -> float | tuple``.
Replica ``i`` always receives ``RngStream(seed, i, branch)`` and results are
reduced in replica-id order, so the outcome does not depend on parallelism.
"""
from __future__ import annotations

import logging
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from gwlab.exceptions import ReplicaFailed
from .accumulators import MomentAccumulator, reduce_ordered
from .rng import RngStream

logger = logging.getLogger(__name__)


class _Failure:
    def __init__(self, replica_id, error):
        self.replica_id = replica_id
        self.error = error


def _run_one(task, seed, branch, replica_id):
    try:
        return task(RngStream(seed, replica_id, branch))
    except Exception as exc:  # surfaced with the replica id after fan-in
        return _Failure(replica_id, exc)


def collect_replicated(task, replicas: int, parallelism: int = 1, seed: int = 0,
                       branch: tuple = ()) -> np.ndarray:
    """Per-replica outputs in replica-id order; tuples become array rows."""
    if replicas < 1:
        raise ValueError('replicas must be >= 1')
    ids = range(replicas)
    if parallelism <= 1 or replicas == 1:
        results = [_run_one(task, seed, branch, i) for i in ids]
    else:
        chunksize = max(1, replicas // (parallelism * 8))
        with ProcessPoolExecutor(max_workers=parallelism) as pool:
            results = list(pool.map(
                _run_one, [task] * replicas, [seed] * replicas, [branch] * replicas, ids,
                chunksize=chunksize,
            ))
    failures = [(r.replica_id, r.error) for r in results if isinstance(r, _Failure)]
    if failures:
        logger.error('%d of %d replicas failed', len(failures), replicas)
        raise ReplicaFailed(failures)
    logger.debug('collected %d replicas (parallelism=%d, seed=%d)', replicas, parallelism, seed)
    return np.asarray(results, dtype=float)


def run_replicated(task, replicas: int, parallelism: int = 1, seed: int = 0,
                   branch: tuple = ()) -> MomentAccumulator:
    """Ordered reduction of a scalar-valued task; tuple-valued tasks use collect_replicated."""
    values = collect_replicated(task, replicas, parallelism, seed, branch)
    if values.ndim != 1:
        raise ValueError(f'run_replicated needs one value per replica, got rows of shape {values.shape[1:]}.')
    return reduce_ordered([MomentAccumulator.of([v]) for v in values])
