"""
Process-pool helper for embarrassingly parallel numerical work.
"""
import multiprocessing
from typing import Callable, List, Optional, Sequence, TypeVar

from loguru import logger

from ..models.config import WorkerConfig

T = TypeVar('T')
R = TypeVar('R')


def parallel_map(func: Callable[[T], R], tasks: Sequence[T],
                 workers: Optional[WorkerConfig] = None) -> List[R]:
    """
    Apply func to every task and return the results in task order.

    ``func`` must be a module-level function so it can be pickled. With a
    single worker, or a single task, everything runs in the calling process.
    """
    workers = workers or WorkerConfig.from_env()
    processes = min(workers.threads, len(tasks))
    if processes <= 1:
        return [func(task) for task in tasks]

    logger.debug(f"Dispatching {len(tasks)} tasks to {processes} worker processes")
    with multiprocessing.Pool(processes=processes) as pool:
        results = pool.map(func, tasks, chunksize=max(1, len(tasks) // (4 * processes)))
    return results
