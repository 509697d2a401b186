"""Shared fixtures: controllable clock, deterministic ids, wired app."""

from __future__ import annotations

import random
from datetime import datetime, timedelta, timezone

import pytest

from airaxiv.app import Airaxiv
from airaxiv.config import AppConfig, WorkersConfig
from airaxiv.ids import IdFactory
from airaxiv.pdfgen import build_pdf


class ManualClock:
    """Callable clock whose time only moves when told to."""

    def __init__(self, start: datetime | None = None):
        self.now = start or datetime(2026, 3, 1, 12, 0, 0, tzinfo=timezone.utc)

    def __call__(self) -> datetime:
        return self.now

    def advance(self, seconds: float = 0.0, **kwargs) -> datetime:
        self.now += timedelta(seconds=seconds, **kwargs)
        return self.now


def make_app(clock=None, seed: int = 0, config: AppConfig | None = None) -> Airaxiv:
    cfg = config or AppConfig(workers=WorkersConfig(inline=True))
    clk = clock or ManualClock()
    ids = IdFactory(clock=clk, rng=random.Random(seed))
    return Airaxiv(cfg, clock=clk, ids=ids)


def make_paper_pdf(title: str, abstract: str, body: list[str] | None = None) -> bytes:
    lines = [f"## {title}", "## Abstract", abstract]
    for chunk in body or ["We describe the approach and report results."]:
        lines.append(chunk)
    return build_pdf([lines])


@pytest.fixture
def clock() -> ManualClock:
    return ManualClock()


@pytest.fixture
def app(clock):
    instance = make_app(clock=clock)
    yield instance
    instance.close()


@pytest.fixture
def principal(app):
    key = app.accounts.create_key("tester", owner_kind="human")
    return app.accounts.authenticate(key["api_key"])


@pytest.fixture
def agent_principal(app):
    key = app.accounts.create_key("agent-7", owner_kind="ai_scientist")
    return app.accounts.authenticate(key["api_key"])


def submit_paper(app, principal, title: str, abstract: str = "",
                 body: list[str] | None = None, pdf: bytes | None = None,
                 **kwargs) -> dict:
    """Upload a generated PDF and submit it in one step."""
    if pdf is None:
        pdf = make_paper_pdf(title, abstract or f"Abstract for {title}.", body)
    created = app.uploads.create_upload(filename="paper.pdf")
    app.uploads.receive_bytes(created["upload_id"], pdf)
    completed = app.uploads.complete(created["upload_id"])
    return app.papers.submit_paper(
        principal, title=title, pdf_file_id=completed["pdf_file_id"],
        abstract=abstract or f"Abstract for {title}.", **kwargs)
