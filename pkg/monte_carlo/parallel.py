from concurrent.futures import ProcessPoolExecutor
from typing import Callable, List, Optional, Sequence, Tuple, TypeVar

import config
from utilities.logger import Logger

logger = Logger.get_logger()

T = TypeVar("T")
R = TypeVar("R")


def block_sizes(n_paths: int, block_size: Optional[int] = None) -> List[int]:
    """Split n_paths into fixed-size work blocks; the last one takes the rest."""
    size = block_size or config.MC_BLOCK_SIZE
    full, rest = divmod(n_paths, size)
    return [size] * full + ([rest] if rest else [])


def path_blocks(n_paths: int, block_size: Optional[int] = None) -> List[Tuple[int, int]]:
    """(first path index, size) per block, so path i keeps stream base + i in any partition."""
    blocks, start = [], 0
    for size in block_sizes(n_paths, block_size):
        blocks.append((start, size))
        start += size
    return blocks


def run_blocks(worker: Callable[[T], R], tasks: Sequence[T], threads: Optional[int] = None) -> List[R]:
    """
    Map worker over tasks, in a process pool when threads > 1.

    Results come back in task order whatever the scheduling, so totals are
    identical for every thread count.
    """
    threads = threads or config.MC_THREADS
    if threads <= 1 or len(tasks) <= 1:
        return [worker(task) for task in tasks]
    workers = min(threads, len(tasks))
    logger.debug(f"Dispatching {len(tasks)} blocks to {workers} workers")
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(worker, tasks))
