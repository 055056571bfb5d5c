# engine/task_pool.py - Cluster-level worker pool with task bookkeeping
import logging
import multiprocessing
import threading
import time
import traceback
from collections import deque
from concurrent.futures import FIRST_COMPLETED, Future, ProcessPoolExecutor, wait
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Callable, Deque, Dict, List, Optional, Tuple

import numpy as np

from engine.errors import TaskFailure

logger = logging.getLogger(__name__)


class TaskStatus(Enum):
    QUEUED = "queued"
    PROCESSING = "processing"
    COMPLETED = "completed"
    FAILED = "failed"


@dataclass
class WorkUnit:
    origin: int  # input cluster ID the vertices descend from
    vertex_ids: np.ndarray
    depth: int = 0
    needs_ccr: bool = True


@dataclass
class TaskOutcome:
    accepted: List[Tuple[int, Tuple[int, ...]]] = field(default_factory=list)
    spawned: List[WorkUnit] = field(default_factory=list)
    ccr_components: int = 0
    mincut_calls: int = 0
    cda_calls: int = 0
    max_depth: int = 0

    def absorb(self, other: "TaskOutcome") -> None:
        self.accepted.extend(other.accepted)
        self.ccr_components += other.ccr_components
        self.mincut_calls += other.mincut_calls
        self.cda_calls += other.cda_calls
        self.max_depth = max(self.max_depth, other.max_depth)


@dataclass
class ClusterTask:
    task_id: int
    units: List[WorkUnit]
    status: TaskStatus
    created_at: float
    outcome: Optional[TaskOutcome] = None
    error: Optional[str] = None
    completion_time: Optional[float] = None


Handler = Callable[[Any, List[WorkUnit]], TaskOutcome]

# Installed once per worker process by the executor initializer.
_worker_state: Optional[Tuple[Handler, Any]] = None


def _init_worker(handler: Handler, context: Any) -> None:
    global _worker_state
    _worker_state = (handler, context)


def _run_in_worker(units: List[WorkUnit]) -> TaskOutcome:
    handler, context = _worker_state
    return handler(context, units)


def _process_context():
    if "fork" in multiprocessing.get_all_start_methods():
        return multiprocessing.get_context("fork")
    return multiprocessing.get_context()


class ClusterTaskPool:
    """
    Runs work units through a handler, inline or across worker processes.

    Units are grouped into batches so that small clusters do not each pay the
    submission overhead. A handler may hand back large recursive children as
    spawned units; those are resubmitted as new tasks until nothing is left.
    Processes rather than threads, since min-cut and CDA work is pure Python.
    """

    def __init__(self, handler: Handler, context: Any, max_workers: int = 1, batches_per_worker: int = 16):
        self.handler = handler
        self.context = context
        self.max_workers = max(1, int(max_workers))
        self.batches_per_worker = batches_per_worker
        self.tasks: Dict[int, ClusterTask] = {}
        self.lock = threading.Lock()
        self._next_task_id = 0

        logger.debug(f"🚀 Cluster task pool with max_workers={self.max_workers}")

    def run(self, units: List[WorkUnit]) -> TaskOutcome:
        total = TaskOutcome()
        if not units:
            return total
        if self.max_workers == 1:
            self._run_inline(units, total)
        else:
            self._run_parallel(units, total)
        logger.debug(f"✅ Pool finished {len(self.tasks)} tasks")
        return total

    def _batches(self, units: List[WorkUnit]) -> List[List[WorkUnit]]:
        total_vertices = sum(len(unit.vertex_ids) for unit in units)
        target = max(1, total_vertices // (self.max_workers * self.batches_per_worker))
        batches: List[List[WorkUnit]] = []
        current: List[WorkUnit] = []
        size = 0
        for unit in units:
            current.append(unit)
            size += len(unit.vertex_ids)
            if size >= target:
                batches.append(current)
                current, size = [], 0
        if current:
            batches.append(current)
        return batches

    def _new_task(self, units: List[WorkUnit]) -> ClusterTask:
        with self.lock:
            task = ClusterTask(
                task_id=self._next_task_id,
                units=units,
                status=TaskStatus.QUEUED,
                created_at=time.time(),
            )
            self.tasks[task.task_id] = task
            self._next_task_id += 1
        return task

    def _finish(self, task: ClusterTask, outcome: TaskOutcome, total: TaskOutcome) -> List[WorkUnit]:
        with self.lock:
            task.status = TaskStatus.COMPLETED
            task.outcome = outcome
            task.completion_time = time.time()
        total.absorb(outcome)
        logger.debug(f"🎯 Task {task.task_id}: {len(outcome.accepted)} accepted, {len(outcome.spawned)} spawned")
        return outcome.spawned

    def _fail(self, task: ClusterTask, error: BaseException) -> TaskFailure:
        with self.lock:
            task.status = TaskStatus.FAILED
            task.error = str(error)
            task.completion_time = time.time()
        origins = sorted({unit.origin for unit in task.units})
        logger.error(f"❌ Task {task.task_id} failed (input clusters {origins[:5]}): {error}")
        logger.debug("".join(traceback.format_exception(type(error), error, error.__traceback__)))
        failure = TaskFailure(f"refinement task for input clusters {origins[:5]} failed: {error}")
        failure.__cause__ = error
        return failure

    def _run_inline(self, units: List[WorkUnit], total: TaskOutcome) -> None:
        pending: Deque[List[WorkUnit]] = deque([units])
        while pending:
            task = self._new_task(pending.popleft())
            task.status = TaskStatus.PROCESSING
            try:
                outcome = self.handler(self.context, task.units)
            except Exception as e:
                raise self._fail(task, e)
            for spawned in self._finish(task, outcome, total):
                pending.append([spawned])

    def _run_parallel(self, units: List[WorkUnit], total: TaskOutcome) -> None:
        executor = ProcessPoolExecutor(
            max_workers=self.max_workers,
            mp_context=_process_context(),
            initializer=_init_worker,
            initargs=(self.handler, self.context),
        )
        running: Dict[Future, ClusterTask] = {}

        def submit(batch: List[WorkUnit]) -> None:
            task = self._new_task(batch)
            task.status = TaskStatus.PROCESSING
            running[executor.submit(_run_in_worker, batch)] = task

        try:
            for batch in self._batches(units):
                submit(batch)
            logger.info(f"🚀 Submitted {len(running)} tasks to {self.max_workers} worker processes")
            while running:
                done, _ = wait(running, return_when=FIRST_COMPLETED)
                for future in done:
                    task = running.pop(future)
                    error = future.exception()
                    if error is not None:
                        raise self._fail(task, error)
                    for spawned in self._finish(task, future.result(), total):
                        submit([spawned])
        finally:
            executor.shutdown(wait=True, cancel_futures=True)

    def get_pool_stats(self) -> Dict:
        with self.lock:
            stats = {
                "max_workers": self.max_workers,
                "total_tasks": len(self.tasks),
                "tasks_by_status": {},
            }
            for task in self.tasks.values():
                status = task.status.value
                stats["tasks_by_status"][status] = stats["tasks_by_status"].get(status, 0) + 1
        return stats
