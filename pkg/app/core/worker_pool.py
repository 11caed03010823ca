import threading
import time
from collections.abc import Callable, Iterable
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from enum import Enum
from typing import Any, TypeVar

from config.logging_config import get_logger
from config.settings import settings

logger = get_logger(__name__)

T = TypeVar("T")
R = TypeVar("R")


class TaskStatus(Enum):
    """Task statuses"""

    PENDING = "pending"
    RUNNING = "running"
    COMPLETED = "completed"
    FAILED = "failed"


@dataclass
class PoolTask:
    """Bookkeeping record of one submitted work item"""

    id: str
    status: TaskStatus
    created_at: float
    started_at: float | None = None
    completed_at: float | None = None
    error: str | None = None


class WorkerPool:
    """Thread pool for independent numerical work items.

    numpy and scipy release the GIL inside their kernels, so threads give real
    overlap for tracing and quadrature. Results always come back in submission
    order so that merges are deterministic whatever the worker count.
    """

    def __init__(self, max_workers: int | None = None, name: str = "pool"):
        self.max_workers = max_workers or settings.MAX_WORKERS
        self.name = name
        self.logger = get_logger(__name__)
        self.tasks: dict[str, PoolTask] = {}
        self._lock = threading.Lock()
        self._batches = 0

        # Statistics
        self.stats = {
            "total_tasks": 0,
            "completed_tasks": 0,
            "failed_tasks": 0,
            "avg_processing_time": 0.0,
        }

    def _run(self, task: PoolTask, func: Callable[[T], R], item: T) -> R:
        task.status = TaskStatus.RUNNING
        task.started_at = time.time()
        try:
            result = func(item)
        except Exception as e:
            task.status = TaskStatus.FAILED
            task.error = str(e)
            task.completed_at = time.time()
            with self._lock:
                self.stats["failed_tasks"] += 1
            raise
        task.status = TaskStatus.COMPLETED
        task.completed_at = time.time()
        self._update_avg(task.completed_at - task.started_at)
        return result

    def _update_avg(self, processing_time: float):
        with self._lock:
            done = self.stats["completed_tasks"]
            self.stats["avg_processing_time"] = (
                self.stats["avg_processing_time"] * done + processing_time
            ) / (done + 1)
            self.stats["completed_tasks"] = done + 1

    def map_ordered(self, func: Callable[[T], R], items: Iterable[T]) -> list[R]:
        """Apply func to every item; results in submission order.

        The first failing item re-raises its exception after the remaining
        futures have finished.
        """
        items = list(items)
        with self._lock:
            batch = self._batches
            self._batches += 1
            tasks = [
                PoolTask(id=f"{self.name}_{batch}_{i}", status=TaskStatus.PENDING, created_at=time.time())
                for i in range(len(items))
            ]
            self.tasks.update((t.id, t) for t in tasks)
            self.stats["total_tasks"] += len(items)

        if self.max_workers == 1 or len(items) <= 1:
            return [self._run(t, func, x) for t, x in zip(tasks, items, strict=True)]

        with ThreadPoolExecutor(
            max_workers=self.max_workers, thread_name_prefix=self.name
        ) as executor:
            futures = [
                executor.submit(self._run, t, func, x)
                for t, x in zip(tasks, items, strict=True)
            ]
            results = []
            first_error: BaseException | None = None
            for future in futures:
                error = future.exception()
                if error is not None:
                    first_error = first_error or error
                    results.append(None)
                else:
                    results.append(future.result())

        if first_error is not None:
            self.logger.error(f"{self.name}: {self.stats['failed_tasks']} task(s) failed")
            raise first_error
        return results

    def get_stats(self) -> dict[str, Any]:
        """Get pool statistics"""
        with self._lock:
            return {
                **self.stats,
                "max_workers": self.max_workers,
                "pending": sum(t.status is TaskStatus.PENDING for t in self.tasks.values()),
            }
