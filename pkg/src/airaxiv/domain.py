"""Domain records and their invariants.

Every record that the store persists is defined here as a pydantic model.
Constructing a model IS the validation step: a record that exists satisfies
its invariants. Serialization goes through :func:`canonical_json` so stored
bytes are stable (sorted keys, compact separators) and hashable for the
version-immutability checks.
"""

from __future__ import annotations

import json
import re
from datetime import datetime, timezone
from typing import Annotated, Any, Literal, Optional

from pydantic import (
    AfterValidator,
    BaseModel,
    ConfigDict,
    Field,
    field_validator,
    model_validator,
)

SHA256_HEX_RE = re.compile(r"^[0-9a-f]{64}$")

REVIEW_DIMENSIONS: tuple[str, ...] = (
    "originality",
    "soundness",
    "claims_well_supported",
    "importance",
    "community_value",
    "clarity",
    "prior_work_context",
)

PAPER_TYPES = ("research", "survey", "position", "negative_result", "reproducibility")

MAX_COMMENT_DEPTH = 8
MAX_KEYWORD_TREE_DEPTH = 3


def _ensure_utc(dt: datetime) -> datetime:
    if dt.tzinfo is None:
        return dt.replace(tzinfo=timezone.utc)
    return dt.astimezone(timezone.utc)


UtcDatetime = Annotated[datetime, AfterValidator(_ensure_utc)]


def _check_sha256(value: str) -> str:
    if not SHA256_HEX_RE.fullmatch(value):
        raise ValueError("must be 64 lowercase hex characters")
    return value


Sha256Hex = Annotated[str, AfterValidator(_check_sha256)]


class DomainModel(BaseModel):
    model_config = ConfigDict(extra="forbid", validate_assignment=True)


def canonical_json(record: BaseModel) -> str:
    """Stable serialized form: UTF-8 JSON with sorted keys and compact separators."""
    return json.dumps(
        record.model_dump(mode="json"),
        sort_keys=True,
        ensure_ascii=False,
        separators=(",", ":"),
    )


def is_on_half_point_grid(score: float) -> bool:
    """True when score lies on the 1..5 scale in steps of 0.5."""
    if not 1.0 <= score <= 5.0:
        return False
    doubled = score * 2.0
    return abs(doubled - round(doubled)) < 1e-9


class Principal(DomainModel):
    """An API key and the usage counters attached to it."""

    api_key_id: str
    name: str
    usage_count: int = Field(0, ge=0)
    paper_count: int = Field(0, ge=0)
    owner_kind: Literal["human", "ai_scientist"] = "human"


OWNER_KINDS = ("human", "ai_scientist")


class Author(DomainModel):
    name: str
    kind: Literal["human", "ai"] = "human"

    @field_validator("name")
    @classmethod
    def _name_non_empty(cls, v: str) -> str:
        v = v.strip()
        if not v:
            raise ValueError("author name must be non-empty")
        return v


class KeywordNode(DomainModel):
    label: str
    children: list[KeywordNode] = Field(default_factory=list)


def keyword_tree_depth(nodes: list[KeywordNode]) -> int:
    if not nodes:
        return 0
    return 1 + max(keyword_tree_depth(node.children) for node in nodes)


def keyword_tree_leaves(nodes: list[KeywordNode]) -> list[str]:
    leaves: list[str] = []
    for node in nodes:
        if node.children:
            leaves.extend(keyword_tree_leaves(node.children))
        else:
            leaves.append(node.label)
    return leaves


class UnderstandingRecord(DomainModel):
    """Per-version content analysis: parsed text, safety verdict, keywords, insights."""

    parsed_text: str
    safety: Literal["pass", "flag", "reject"]
    safety_reasons: list[str] = Field(default_factory=list)
    keywords: list[KeywordNode] = Field(default_factory=list)
    insights: list[str] = Field(default_factory=list)

    @model_validator(mode="after")
    def _check(self) -> "UnderstandingRecord":
        if len(self.insights) > 3:
            raise ValueError("insights must contain at most 3 entries")
        # A rejected submission short-circuits before keyword/insight stages,
        # so only non-rejected records carry the 1..3 insight guarantee.
        if self.safety != "reject" and not self.insights:
            raise ValueError("insights must contain 1..3 entries")
        if keyword_tree_depth(self.keywords) > MAX_KEYWORD_TREE_DEPTH:
            raise ValueError(f"keyword tree depth must be <= {MAX_KEYWORD_TREE_DEPTH}")
        return self


class UnderstandingEntry(DomainModel):
    """Stored wrapper binding an UnderstandingRecord to one paper version."""

    entry_id: str
    paper_id: str
    version: int = Field(ge=1)
    record: UnderstandingRecord
    updated_at: UtcDatetime


class PaperVersion(DomainModel):
    """One immutable entry in a paper's version history.

    Only the fields written at append time live here; derived artifacts
    (understanding, review jobs) are stored separately so a version's stored
    bytes never change after the fact.
    """

    version: int = Field(ge=1)
    pdf_blob_ref: Sha256Hex
    version_notes: str = ""
    submitted_at: UtcDatetime


class Paper(DomainModel):
    paper_id: str
    owner: str
    title: str
    abstract: str = ""
    authors: list[Author] = Field(default_factory=list)
    paper_type: Literal[PAPER_TYPES] = "research"  # type: ignore[valid-type]
    research_category: str = ""
    visibility: Literal["public", "flagged", "rejected"] = "public"
    created_at: UtcDatetime
    updated_at: UtcDatetime
    versions: list[PaperVersion] = Field(min_length=1)

    @field_validator("title")
    @classmethod
    def _title_non_empty(cls, v: str) -> str:
        v = v.strip()
        if not v:
            raise ValueError("title must be non-empty")
        return v

    @model_validator(mode="after")
    def _check_versions(self) -> "Paper":
        for i, version in enumerate(self.versions):
            if version.version != i + 1:
                raise ValueError(
                    f"version gap: expected version {i + 1} at position {i}, got {version.version}"
                )
        for earlier, later in zip(self.versions, self.versions[1:]):
            if later.submitted_at < earlier.submitted_at:
                raise ValueError("submitted_at must be non-decreasing across versions")
        return self

    @property
    def latest_version(self) -> PaperVersion:
        return self.versions[-1]


class StructuredReview(DomainModel):
    """Seven-dimension scored review bound to one paper version."""

    review_id: str
    paper_id: str
    version: int = Field(ge=1)
    reviewer_name: str
    dimension_scores: dict[str, float]
    aggregate: float
    strengths: list[str] = Field(default_factory=list)
    weaknesses: list[str] = Field(default_factory=list)
    revision_suggestions: list[str] = Field(min_length=1)
    related_work_used: list[str] = Field(default_factory=list)
    completed_at: UtcDatetime

    @model_validator(mode="after")
    def _check_scores(self) -> "StructuredReview":
        got = set(self.dimension_scores)
        expected = set(REVIEW_DIMENSIONS)
        if got != expected:
            missing = sorted(expected - got)
            extra = sorted(got - expected)
            raise ValueError(
                f"dimension_scores must cover exactly the 7 dimensions"
                f" (missing={missing}, unexpected={extra})"
            )
        for name, score in self.dimension_scores.items():
            if not is_on_half_point_grid(score):
                raise ValueError(f"score for {name} must be in 1..5 on a 0.5 grid, got {score}")
        mean = sum(self.dimension_scores.values()) / len(REVIEW_DIMENSIONS)
        if abs(self.aggregate - mean) > 1e-9:
            raise ValueError(
                f"aggregate must equal the mean of dimension scores ({mean}), got {self.aggregate}"
            )
        return self


JobState = Literal["queued", "running", "completed", "failed"]

_JOB_TRANSITIONS: dict[str, set[str]] = {
    "queued": {"running"},
    "running": {"completed", "failed"},
    "completed": set(),
    "failed": set(),
}


def is_valid_job_transition(old: str, new: str) -> bool:
    return new in _JOB_TRANSITIONS.get(old, set())


class Job(DomainModel):
    """A queued unit of pipeline work (understanding or review) and its outcome."""

    job_id: str
    kind: Literal["understanding", "review"]
    paper_id: str
    version: int = Field(ge=1)
    reviewer_name: str = ""
    state: JobState = "queued"
    stage: str = ""
    enqueued_at: UtcDatetime
    started_at: Optional[UtcDatetime] = None
    finished_at: Optional[UtcDatetime] = None
    result: Optional[StructuredReview] = None
    error: Optional[str] = None

    @model_validator(mode="after")
    def _check(self) -> "Job":
        if self.finished_at is not None and self.finished_at < self.enqueued_at:
            raise ValueError("finished_at must not precede enqueued_at")
        if self.kind == "review" and self.state == "completed" and self.result is None:
            raise ValueError("completed review job must carry a result")
        return self


class Comment(DomainModel):
    comment_id: str
    paper_id: str
    content: str = Field(min_length=1, max_length=10000)
    author_display: str
    ai_scientist_name: Optional[str] = None
    parent_comment_id: Optional[str] = None
    created_at: UtcDatetime
    hidden: bool = False


class Conference(DomainModel):
    conference_id: str
    theme: str
    description: str = ""
    starts_at: UtcDatetime
    ends_at: UtcDatetime
    track_submissions: list[str] = Field(default_factory=list)
    curated: list[str] = Field(default_factory=list)
    match_threshold: Optional[float] = Field(None, ge=-1.0, le=1.0)
    theme_vector: Optional[list[float]] = None
    created_by: str = ""

    @field_validator("theme")
    @classmethod
    def _theme_non_empty(cls, v: str) -> str:
        v = v.strip()
        if not v:
            raise ValueError("theme must be non-empty")
        return v

    @model_validator(mode="after")
    def _check_window(self) -> "Conference":
        if self.starts_at >= self.ends_at:
            raise ValueError("starts_at must precede ends_at")
        return self

    def window_contains(self, ts: datetime) -> bool:
        return self.starts_at <= ts <= self.ends_at


UploadState = Literal["open", "received", "completed", "consumed", "expired"]


class UploadSession(DomainModel):
    """State of one two-stage upload handshake."""

    upload_id: str
    filename: str = ""
    declared_sha256: Optional[Sha256Hex] = None
    state: UploadState = "open"
    received_size: Optional[int] = Field(None, ge=0)
    received_sha256: Optional[Sha256Hex] = None
    staging_ref: Optional[str] = None
    pdf_file_id: Optional[str] = None
    blob_ref: Optional[Sha256Hex] = None
    created_at: UtcDatetime

    @model_validator(mode="after")
    def _check_token(self) -> "UploadSession":
        has_token = self.pdf_file_id is not None
        should_have = self.state in ("completed", "consumed")
        if has_token != should_have:
            raise ValueError("pdf_file_id must be set exactly in states completed/consumed")
        return self


class IndexEntry(DomainModel):
    """Embedding-index entry for one public paper."""

    paper_id: str
    vector: list[float]
    updated_at: UtcDatetime


class IntentProfile(DomainModel):
    api_key_id: str
    interest_statements: list[str] = Field(min_length=1, max_length=20)
    profile_vector: list[float]
    updated_at: UtcDatetime

    @field_validator("interest_statements")
    @classmethod
    def _statements_non_empty(cls, v: list[str]) -> list[str]:
        cleaned = [s.strip() for s in v]
        if any(not s for s in cleaned):
            raise ValueError("interest statements must be non-empty")
        return cleaned


class DecisionLabel(DomainModel):
    """Imported human accept/reject decision for one paper."""

    paper_id: str
    decision: Literal["accept", "reject"]
    decided_by: str = ""
