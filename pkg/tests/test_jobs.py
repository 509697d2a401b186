"""Job runner: state transitions, failure capture, threading."""

from __future__ import annotations

import random
import threading

import pytest

from airaxiv.domain import Job, StructuredReview
from airaxiv.errors import ValidationFailed
from airaxiv.ids import IdFactory
from airaxiv.jobs import MAX_ERROR_CHARS, JobRunner
from airaxiv.store import MemoryStore

from conftest import ManualClock


class Boom(Exception):
    def __init__(self, message, stage=None):
        super().__init__(message)
        self.stage = stage


def make_runner(clock=None, inline=True, workers=4):
    store = MemoryStore()
    clock = clock or ManualClock()
    runner = JobRunner(store, IdFactory(clock, rng=random.Random(7)),
                       clock, workers=workers, inline=inline)
    return store, clock, runner


def make_review(**overrides):
    from airaxiv.domain import REVIEW_DIMENSIONS

    fields = dict(
        review_id="rev_1", paper_id="paper_1", version=1,
        reviewer_name="reference",
        dimension_scores={name: 3.0 for name in REVIEW_DIMENSIONS},
        aggregate=3.0, strengths=["clear"], weaknesses=["short"],
        revision_suggestions=["expand evaluation"],
        related_work_used=[], completed_at=ManualClock()())
    fields.update(overrides)
    return StructuredReview(**fields)


def test_completed_job_records_timestamps_and_result():
    store, clock, runner = make_runner()
    review = make_review()

    def handler(job):
        clock.advance(90)
        return review

    runner.register("review", handler)
    job = runner.enqueue("review", "paper_1", 1, reviewer_name="reference")
    assert job.state == "completed"
    assert job.result == review
    assert job.reviewer_name == "reference"
    assert (job.finished_at - job.enqueued_at).total_seconds() == 90
    assert job.started_at is not None and job.error is None


def test_understanding_job_has_empty_reviewer_name():
    store, clock, runner = make_runner()
    runner.register("understanding", lambda job: None)
    job = runner.enqueue("understanding", "paper_1", 1)
    assert job.reviewer_name == ""
    assert job.state == "completed" and job.result is None


def test_failure_captures_stage_and_truncated_message():
    store, clock, runner = make_runner()
    runner.register("understanding",
                    lambda job: (_ for _ in ()).throw(
                        Boom("x" * 2000, stage="keywords")))
    job = runner.enqueue("understanding", "paper_1", 1)
    assert job.state == "failed"
    assert job.stage == "keywords"
    assert len(job.error) == MAX_ERROR_CHARS
    assert job.finished_at is not None


def test_failure_without_stage_attribute():
    store, clock, runner = make_runner()
    runner.register("understanding",
                    lambda job: (_ for _ in ()).throw(ValueError("bad input")))
    job = runner.enqueue("understanding", "paper_1", 1)
    assert job.state == "failed"
    assert job.stage == ""
    assert job.error == "bad input"


def test_empty_exception_message_falls_back_to_class_name():
    store, clock, runner = make_runner()
    runner.register("understanding",
                    lambda job: (_ for _ in ()).throw(ValueError()))
    job = runner.enqueue("understanding", "paper_1", 1)
    assert job.error == "ValueError"


def test_unregistered_kind_rejected():
    store, clock, runner = make_runner()
    with pytest.raises(ValidationFailed):
        runner.enqueue("review", "paper_1", 1)


def test_list_jobs_filters_and_orders():
    store, clock, runner = make_runner()
    runner.register("understanding", lambda job: None)
    runner.register("review", lambda job: make_review())
    runner.enqueue("understanding", "paper_a", 1)
    clock.advance(10)
    runner.enqueue("review", "paper_a", 1, reviewer_name="reference")
    clock.advance(10)
    runner.enqueue("understanding", "paper_b", 1)

    all_a = runner.list_jobs(paper_id="paper_a")
    assert [j.kind for j in all_a] == ["understanding", "review"]
    reviews = runner.list_jobs(kind="review")
    assert len(reviews) == 1 and reviews[0].paper_id == "paper_a"
    assert len(runner.list_jobs()) == 3


def test_threaded_execution_and_wait_idle():
    store, clock, runner = make_runner(inline=False, workers=4)
    release = threading.Event()

    def handler(job):
        release.wait(timeout=5)
        return None

    runner.register("understanding", handler)
    jobs = [runner.enqueue("understanding", f"paper_{i}", 1) for i in range(8)]
    assert all(job.state == "queued" for job in jobs)
    assert runner.wait_idle(timeout=0.05) is False  # handlers still blocked
    release.set()
    assert runner.wait_idle(timeout=5) is True
    states = {store.require(Job, job.job_id).state for job in jobs}
    assert states == {"completed"}
    runner.shutdown()


def test_threaded_failures_do_not_kill_runner():
    store, clock, runner = make_runner(inline=False, workers=2)
    runner.register("understanding",
                    lambda job: (_ for _ in ()).throw(Boom("nope", stage="parse")))
    jobs = [runner.enqueue("understanding", f"paper_{i}", 1) for i in range(5)]
    assert runner.wait_idle(timeout=5)
    for job in jobs:
        stored = store.require(Job, job.job_id)
        assert stored.state == "failed" and stored.stage == "parse"
    runner.shutdown()
