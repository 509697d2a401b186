"""Pluggable AI reviewers and the reference retrieval-augmented pipeline.

The reference reviewer runs five stages per version: extract a review
context, generate search queries, retrieve and relevance-score candidate
papers, summarize the most relevant ones, and generate a structured review
on the seven-dimension half-point grid. Every plugin's output must pass the
same published schema, whether it is agent-based or a single model call.
"""

from __future__ import annotations

import re
from abc import ABC, abstractmethod
from typing import Optional, Sequence

import jsonschema
import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from .clock import Clock, utc_now
from .domain import (
    REVIEW_DIMENSIONS,
    Paper,
    StructuredReview,
    is_on_half_point_grid,
    keyword_tree_leaves,
)
from .errors import NotFound, ProviderFailure, ValidationFailed
from .ids import IdFactory
from .prompting import PromptLibrary
from .providers import (
    EmbeddingProvider,
    TextGenerationProvider,
    parse_float_output,
    parse_json_output,
)
from .store import Store
from .understanding import StageFailure, UnderstandingPipeline


class ReviewerConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    num_queries: int = Field(5, ge=1)
    max_candidates: int = Field(20, ge=1)
    min_relevance: float = Field(0.5, ge=0.0, le=1.0)
    max_related: int = Field(10, ge=1)
    num_detailed_summaries: int = Field(5, ge=0)
    temperature_eval: float = Field(0.1, ge=0.0, le=1.0)
    temperature_creative: float = Field(0.3, ge=0.0, le=1.0)

    @model_validator(mode="after")
    def _check_ordering(self) -> "ReviewerConfig":
        if not self.num_detailed_summaries <= self.max_related <= self.max_candidates:
            raise ValueError(
                "expected num_detailed_summaries <= max_related <= max_candidates")
        return self


class RetrievalCandidate(BaseModel):
    model_config = ConfigDict(extra="forbid")

    title: str
    abstract: str = ""
    source: str = "internal_corpus"  # internal_corpus | external_stub
    paper_id: Optional[str] = None
    relevance: float = Field(0.0, ge=0.0, le=1.0)


def normalized_title(title: str) -> str:
    return re.sub(r"\s+", " ", title.strip().lower())


def filter_and_rank(candidates: Sequence[RetrievalCandidate],
                    min_relevance: float,
                    max_related: int) -> list[RetrievalCandidate]:
    """Threshold, sort by relevance (ties by normalized title), truncate."""
    kept = [c for c in candidates if c.relevance >= min_relevance]
    kept.sort(key=lambda c: (-c.relevance, normalized_title(c.title)))
    return kept[:max_related]


# ----------------------------------------------------------------------
# literature search backends


class LiteratureSearch(ABC):
    source = "internal_corpus"

    @abstractmethod
    def search(self, query: str, limit: int,
               exclude_paper_id: Optional[str] = None) -> list[RetrievalCandidate]: ...


class InternalCorpusSearch(LiteratureSearch):
    """Searches this instance's own index by embedding similarity."""

    source = "internal_corpus"

    def __init__(self, store: Store, embedder: EmbeddingProvider):
        self._store = store
        self._embedder = embedder

    def search(self, query: str, limit: int,
               exclude_paper_id: Optional[str] = None) -> list[RetrievalCandidate]:
        from .domain import IndexEntry

        query_vector = self._embedder.embed(query)
        scored: list[tuple[float, str]] = []
        for entry in self._store.list_all(IndexEntry):
            if entry.paper_id == exclude_paper_id:
                continue
            score = float(np.dot(query_vector, np.asarray(entry.vector)))
            scored.append((score, entry.paper_id))
        scored.sort(key=lambda item: (-item[0], item[1]))
        results = []
        for _, paper_id in scored[:limit]:
            paper = self._store.get(Paper, paper_id)
            if paper is None:
                continue
            results.append(RetrievalCandidate(
                title=paper.title, abstract=paper.abstract,
                source=self.source, paper_id=paper_id))
        return results


class StaticExternalSearch(LiteratureSearch):
    """Stand-in for an external search API: a fixed list matched by overlap."""

    source = "external_stub"

    def __init__(self, entries: Sequence[dict]):
        self._entries = [dict(e) for e in entries]

    def search(self, query: str, limit: int,
               exclude_paper_id: Optional[str] = None) -> list[RetrievalCandidate]:
        from .providers.mock import token_overlap

        scored = []
        for entry in self._entries:
            text = f"{entry.get('title', '')} {entry.get('abstract', '')}"
            scored.append((token_overlap(query, text), entry))
        scored.sort(key=lambda item: (-item[0], normalized_title(item[1].get("title", ""))))
        return [RetrievalCandidate(title=e.get("title", ""),
                                   abstract=e.get("abstract", ""),
                                   source=self.source)
                for score, e in scored[:limit] if score > 0]


# ----------------------------------------------------------------------
# review output validation

REVIEW_PAYLOAD_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "StructuredReview",
    "type": "object",
    "required": ["dimension_scores", "strengths", "weaknesses",
                 "revision_suggestions"],
    "properties": {
        "dimension_scores": {
            "type": "object",
            "required": list(REVIEW_DIMENSIONS),
            "additionalProperties": False,
            "properties": {
                dim: {"type": "number", "minimum": 1, "maximum": 5,
                      "multipleOf": 0.5}
                for dim in REVIEW_DIMENSIONS
            },
        },
        "strengths": {"type": "array", "items": {"type": "string"}},
        "weaknesses": {"type": "array", "items": {"type": "string"}},
        "revision_suggestions": {"type": "array", "minItems": 1,
                                 "items": {"type": "string"}},
        "aggregate": {"type": "number", "minimum": 1, "maximum": 5},
        "related_work_used": {"type": "array", "items": {"type": "string"}},
    },
}


def validate_review_payload(data: object) -> dict:
    """Check a provider's review JSON against the published schema."""
    try:
        jsonschema.validate(data, REVIEW_PAYLOAD_SCHEMA)
    except jsonschema.ValidationError as exc:
        raise ProviderFailure(f"review payload rejected: {exc.message}") from exc
    assert isinstance(data, dict)
    scores = data["dimension_scores"]
    for dim, value in scores.items():
        if not is_on_half_point_grid(float(value)):
            raise ProviderFailure(
                f"score for {dim} is {value}, not on the 1-5 half-point grid")
    return data


def build_review(ids: IdFactory, clock: Clock, paper_id: str, version: int,
                 reviewer_name: str, payload: dict,
                 related_titles: Sequence[str]) -> StructuredReview:
    scores = {dim: float(payload["dimension_scores"][dim])
              for dim in REVIEW_DIMENSIONS}
    aggregate = sum(scores.values()) / len(scores)
    return StructuredReview(
        review_id=ids.new_token("rev"),
        paper_id=paper_id,
        version=version,
        reviewer_name=reviewer_name,
        dimension_scores=scores,
        aggregate=aggregate,
        strengths=[str(s) for s in payload.get("strengths", [])],
        weaknesses=[str(w) for w in payload.get("weaknesses", [])],
        revision_suggestions=[str(r) for r in payload["revision_suggestions"]],
        related_work_used=list(related_titles),
        completed_at=clock(),
    )


# ----------------------------------------------------------------------
# plugins


class ReviewerPlugin(ABC):
    name: str = "reviewer"
    kind: str = "agent_based"  # agent_based | model_based

    @abstractmethod
    def review(self, paper_id: str, version: int) -> StructuredReview: ...


class ReferenceReviewer(ReviewerPlugin):
    """The retrieval-augmented five-stage reference pipeline."""

    kind = "agent_based"

    def __init__(
        self,
        store: Store,
        understanding: UnderstandingPipeline,
        text_provider: TextGenerationProvider,
        prompts: PromptLibrary,
        searches: Sequence[LiteratureSearch],
        ids: IdFactory,
        clock: Clock = utc_now,
        config: Optional[ReviewerConfig] = None,
        name: str = "reference",
    ):
        self._store = store
        self._understanding = understanding
        self._text = text_provider
        self._prompts = prompts
        self._searches = list(searches)
        self._ids = ids
        self._clock = clock
        self.config = config or ReviewerConfig()
        self.name = name

    # ---- stage 1 ------------------------------------------------------

    def extract_review_context(self, title: str, abstract: str,
                               parsed_text: str) -> dict:
        if not parsed_text.strip():
            raise ValidationFailed("review context requires non-empty parsed text")
        prompt = self._prompts.render("review_context", {
            "title": title, "abstract": abstract,
            "text": parsed_text[:20000]})
        reply = parse_json_output(self._text.complete(prompt, self.config.temperature_eval))
        if not isinstance(reply, dict):
            raise ProviderFailure("review context reply is not an object")
        context = {}
        for field in ("problem", "method", "claims", "contributions"):
            value = str(reply.get(field, "")).strip()
            if not value:
                raise ProviderFailure(f"review context field {field!r} is empty")
            context[field] = value
        return context

    # ---- stage 2 ------------------------------------------------------

    def generate_search_queries(self, title: str, context: dict, n: int,
                                keyword_leaves: Sequence[str]) -> list[str]:
        if n < 1:
            raise ValidationFailed("query count must be >= 1")
        prompt = self._prompts.render("search_queries", {
            "title": title, "n": n, **context,
            "keywords": list(keyword_leaves)[:10]})
        queries: list[str] = []
        seen: set[str] = set()

        def add(candidate: str) -> None:
            cleaned = candidate.strip()
            if cleaned and cleaned.lower() not in seen and len(queries) < n:
                seen.add(cleaned.lower())
                queries.append(cleaned)

        try:
            reply = parse_json_output(self._text.complete(prompt, self.config.temperature_eval))
            for raw in (reply.get("queries") if isinstance(reply, dict) else None) or []:
                add(str(raw))
        except ProviderFailure:
            pass
        for leaf in keyword_leaves:  # pad when the provider under-delivers
            add(f"{leaf} {title}".strip())
        counter = 1
        while len(queries) < n:
            add(f"{title or 'related work'} topic {counter}")
            counter += 1
        return queries

    # ---- stage 3 ------------------------------------------------------

    def retrieve_candidates(self, queries: Sequence[str], context: dict,
                            exclude_paper_id: Optional[str] = None) -> list[RetrievalCandidate]:
        if not queries:
            raise ValidationFailed("candidate retrieval requires at least one query")
        cap = self.config.max_candidates
        chosen: list[RetrievalCandidate] = []
        seen_titles: set[str] = set()
        for query in queries:
            for backend in self._searches:
                for candidate in backend.search(query, cap, exclude_paper_id):
                    key = normalized_title(candidate.title)
                    if not key or key in seen_titles:
                        continue
                    seen_titles.add(key)
                    chosen.append(candidate)
                    if len(chosen) >= cap:
                        break
                if len(chosen) >= cap:
                    break
            if len(chosen) >= cap:
                break
        return [c.model_copy(update={"relevance": self._score_relevance(context, c)})
                for c in chosen]

    def _score_relevance(self, context: dict, candidate: RetrievalCandidate) -> float:
        prompt = self._prompts.render("relevance", {
            "context": context,
            "candidate": {"title": candidate.title, "abstract": candidate.abstract},
        })
        try:
            score = parse_float_output(
                self._text.complete(prompt, self.config.temperature_eval))
        except ProviderFailure:
            return 0.0
        return min(max(score, 0.0), 1.0)

    # ---- stage 4 ------------------------------------------------------

    def summarize_related(self, related: Sequence[RetrievalCandidate],
                          context: dict) -> list[dict]:
        pack = []
        detailed_cutoff = min(self.config.num_detailed_summaries, len(related))
        for position, candidate in enumerate(related):
            detailed = position < detailed_cutoff
            summary = candidate.abstract
            if detailed:
                prompt = self._prompts.render("summarize_related", {
                    "context_title": context.get("contributions", ""),
                    "title": candidate.title,
                    "abstract": candidate.abstract,
                })
                try:
                    summary = self._text.complete(
                        prompt, self.config.temperature_creative).strip()
                except Exception:
                    summary = candidate.abstract  # abstract fallback, this entry only
                    detailed = False
            pack.append({
                "title": candidate.title,
                "relevance": candidate.relevance,
                "source": candidate.source,
                "summary": summary,
                "detailed": detailed,
            })
        return pack

    # ---- stage 5 ------------------------------------------------------

    def generate_review(self, paper_id: str, version: int, title: str,
                        context: dict, pack: Sequence[dict]) -> StructuredReview:
        payload = {
            "title": title,
            **context,
            "related": [entry["title"] for entry in pack],
            "summaries": [entry["summary"] for entry in pack],
        }
        prompt = self._prompts.render("generate_review", payload)
        last_error: Optional[Exception] = None
        for attempt in range(2):
            attempt_prompt = prompt
            if attempt == 1:
                attempt_prompt = self._prompts.render("generate_review", dict(
                    payload, note="Score exactly the seven listed dimensions."))
            try:
                reply = parse_json_output(self._text.complete(
                    attempt_prompt, self.config.temperature_eval))
                validated = validate_review_payload(reply)
                return build_review(
                    self._ids, self._clock, paper_id, version, self.name,
                    validated, [entry["title"] for entry in pack])
            except ProviderFailure as exc:
                last_error = exc
        raise ProviderFailure(f"review generation failed twice: {last_error}")

    # ---- orchestration ------------------------------------------------

    def review(self, paper_id: str, version: int) -> StructuredReview:
        paper = self._store.get(Paper, paper_id)
        if paper is None:
            raise NotFound(f"unknown paper {paper_id}")
        record = self._understanding.ensure(paper_id, version)

        def stage(tag, fn, *args, **kwargs):
            try:
                return fn(*args, **kwargs)
            except StageFailure:
                raise
            except Exception as exc:
                raise StageFailure(tag, exc) from exc

        context = stage("context", self.extract_review_context,
                        paper.title, paper.abstract, record.parsed_text)
        queries = stage("queries", self.generate_search_queries,
                        paper.title, context, self.config.num_queries,
                        keyword_tree_leaves(record.keywords))
        candidates = stage("retrieval", self.retrieve_candidates,
                           queries, context, paper_id)
        related = filter_and_rank(candidates, self.config.min_relevance,
                                  self.config.max_related)
        pack = stage("summarize", self.summarize_related, related, context)
        review = stage("generate", self.generate_review,
                       paper_id, version, paper.title, context, pack)
        validate_review_payload(review.model_dump(mode="json"))
        return review


class SingleCallReviewer(ReviewerPlugin):
    """Model-based plugin: one completion, no retrieval stage."""

    kind = "model_based"

    def __init__(
        self,
        store: Store,
        understanding: UnderstandingPipeline,
        text_provider: TextGenerationProvider,
        prompts: PromptLibrary,
        ids: IdFactory,
        clock: Clock = utc_now,
        config: Optional[ReviewerConfig] = None,
        name: str = "single-call",
    ):
        self._store = store
        self._understanding = understanding
        self._text = text_provider
        self._prompts = prompts
        self._ids = ids
        self._clock = clock
        self.config = config or ReviewerConfig()
        self.name = name

    def review(self, paper_id: str, version: int) -> StructuredReview:
        paper = self._store.get(Paper, paper_id)
        if paper is None:
            raise NotFound(f"unknown paper {paper_id}")
        record = self._understanding.ensure(paper_id, version)
        payload = {
            "title": paper.title,
            "abstract": paper.abstract,
            "text": record.parsed_text[:20000],
            "related": [],
            "summaries": [],
        }
        prompt = self._prompts.render("generate_review", payload)
        try:
            reply = parse_json_output(self._text.complete(
                prompt, self.config.temperature_eval))
            validated = validate_review_payload(reply)
        except ProviderFailure as exc:
            raise StageFailure("generate", exc) from exc
        review = build_review(self._ids, self._clock, paper_id, version,
                              self.name, validated, [])
        validate_review_payload(review.model_dump(mode="json"))
        return review
