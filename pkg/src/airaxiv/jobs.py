"""Background job execution for understanding and review runs.

Jobs are persisted records moving queued → running → completed | failed.
Handlers are registered per job kind at wiring time; the runner only owns
scheduling, state transitions, and failure capture. ``inline=True`` executes
synchronously, which makes single-threaded tests deterministic.
"""

from __future__ import annotations

import threading
from concurrent.futures import Future, ThreadPoolExecutor, wait as wait_futures
from typing import Callable, Optional

from .clock import Clock, utc_now
from .domain import Job, StructuredReview
from .errors import ValidationFailed
from .ids import IdFactory
from .store import Store

JobHandler = Callable[[Job], Optional[StructuredReview]]

MAX_ERROR_CHARS = 500


class JobRunner:
    def __init__(
        self,
        store: Store,
        ids: IdFactory,
        clock: Clock = utc_now,
        workers: int = 4,
        inline: bool = False,
    ):
        self._store = store
        self._ids = ids
        self._clock = clock
        self._inline = inline
        self._handlers: dict[str, JobHandler] = {}
        self._pending: set[Future] = set()
        self._pending_lock = threading.Lock()
        self._executor: Optional[ThreadPoolExecutor] = None
        if not inline:
            self._executor = ThreadPoolExecutor(
                max_workers=workers, thread_name_prefix="airaxiv-job")

    def register(self, kind: str, handler: JobHandler) -> None:
        self._handlers[kind] = handler

    def enqueue(self, kind: str, paper_id: str, version: int,
                reviewer_name: Optional[str] = None) -> Job:
        if kind not in self._handlers:
            raise ValidationFailed(f"no handler registered for job kind {kind!r}")
        job = Job(
            job_id=self._ids.new_token("job"),
            kind=kind,
            paper_id=paper_id,
            version=version,
            reviewer_name=reviewer_name or "",
            state="queued",
            enqueued_at=self._clock(),
        )
        self._store.put(job)
        if self._inline:
            self._execute(job.job_id)
            return self._store.require(Job, job.job_id)
        assert self._executor is not None
        future = self._executor.submit(self._execute_tracked, job.job_id)
        with self._pending_lock:
            self._pending.add(future)
        future.add_done_callback(self._discard_future)
        return job

    def _discard_future(self, future: Future) -> None:
        with self._pending_lock:
            self._pending.discard(future)

    def _execute_tracked(self, job_id: str) -> None:
        try:
            self._execute(job_id)
        except Exception:  # pragma: no cover - _execute records its own failures
            pass

    def _execute(self, job_id: str) -> None:
        started = self._clock()

        def start(job: Job) -> Job:
            if job.state != "queued":
                return job
            return job.model_copy(update={"state": "running", "started_at": started})

        job = self._store.mutate(Job, job_id, start)
        if job.state != "running" or job.started_at != started:
            return  # someone else picked it up

        handler = self._handlers[job.kind]
        try:
            result = handler(job)
        except Exception as exc:
            stage = getattr(exc, "stage", None) or ""
            message = str(exc)[:MAX_ERROR_CHARS] or exc.__class__.__name__
            self._store.mutate(Job, job_id, lambda j: j.model_copy(update={
                "state": "failed", "stage": stage, "error": message,
                "finished_at": self._clock()}))
            return
        self._store.mutate(Job, job_id, lambda j: j.model_copy(update={
            "state": "completed", "result": result,
            "finished_at": self._clock()}))

    # ------------------------------------------------------------------

    def list_jobs(self, paper_id: Optional[str] = None,
                  kind: Optional[str] = None) -> list[Job]:
        def match(job: Job) -> bool:
            return ((paper_id is None or job.paper_id == paper_id)
                    and (kind is None or job.kind == kind))

        jobs = self._store.list_all(Job, match)
        jobs.sort(key=lambda j: (j.enqueued_at, j.job_id))
        return jobs

    def wait_idle(self, timeout: Optional[float] = None) -> bool:
        """Block until every scheduled job finished; False on timeout."""
        if self._inline:
            return True
        import time

        deadline = None if timeout is None else time.monotonic() + timeout
        while True:
            with self._pending_lock:
                pending = set(self._pending)
            if not pending:
                return True
            remaining = None
            if deadline is not None:
                remaining = deadline - time.monotonic()
                if remaining <= 0:
                    return False
            wait_futures(pending, timeout=remaining)

    def shutdown(self) -> None:
        if self._executor is not None:
            self._executor.shutdown(wait=True)
