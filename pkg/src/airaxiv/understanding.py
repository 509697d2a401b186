"""Centralized content-understanding orchestrator.

For each paper version it parses the PDF, screens safety, extracts a keyword
tree, and distills one to three insights, persisting the result as one
atomic record. A reject verdict short-circuits the pipeline and hides the
paper; visibility is always a pure function of the latest safety verdict.
"""

from __future__ import annotations

import threading
from typing import Callable, Optional

from .blobs import BlobStore
from .clock import Clock, utc_now
from .domain import (
    KeywordNode,
    Paper,
    UnderstandingEntry,
    UnderstandingRecord,
    keyword_tree_leaves,
)
from .errors import (
    EmptyDocument,
    KeywordExtractionFailed,
    NotFound,
    ParseFailure,
    ProviderFailure,
    ValidationFailed,
)
from .prompting import PromptLibrary
from .providers import DocumentParserProvider, ParsedDocument, TextGenerationProvider, parse_json_output
from .store import Store

# Prompt payloads carry at most this much parsed text; records keep it all.
PROMPT_TEXT_LIMIT = 20000

SAFETY_ATTEMPTS = 3
SCREENING_UNAVAILABLE_REASON = "screening unavailable"

MAX_INSIGHT_CHARS = 400
MIN_LEAVES, MAX_LEAVES = 3, 15

VISIBILITY_BY_VERDICT = {"pass": "public", "flag": "flagged", "reject": "rejected"}

# Fired after a record is persisted: (paper_id, version, record).
RecordHook = Callable[[str, int, UnderstandingRecord], None]


class StageFailure(Exception):
    """Wraps a stage's error so job status can report where the run stopped."""

    def __init__(self, stage: str, cause: Exception):
        super().__init__(f"{stage}: {cause}")
        self.stage = stage
        self.cause = cause


def entry_id_for(paper_id: str, version: int) -> str:
    return f"{paper_id}:{version}"


def first_sentence(text: str) -> str:
    stripped = text.strip()
    for end in (".", "!", "?"):
        index = stripped.find(end)
        if 0 <= index < len(stripped):
            candidate = stripped[: index + 1].strip()
            if candidate:
                return candidate
    return stripped.split("\n", 1)[0].strip()


class UnderstandingPipeline:
    def __init__(
        self,
        store: Store,
        blobs: BlobStore,
        text_provider: TextGenerationProvider,
        parser: DocumentParserProvider,
        prompts: PromptLibrary,
        clock: Clock = utc_now,
        temperature_eval: float = 0.1,
        temperature_creative: float = 0.3,
        record_hook: Optional[RecordHook] = None,
    ):
        self._store = store
        self._blobs = blobs
        self._text = text_provider
        self._parser = parser
        self._prompts = prompts
        self._clock = clock
        self._t_eval = temperature_eval
        self._t_creative = temperature_creative
        self._record_hook = record_hook
        self._locks: dict[str, threading.Lock] = {}
        self._locks_guard = threading.Lock()

    def _lock_for(self, paper_id: str, version: int) -> threading.Lock:
        key = entry_id_for(paper_id, version)
        with self._locks_guard:
            if key not in self._locks:
                self._locks[key] = threading.Lock()
            return self._locks[key]

    # ------------------------------------------------------------------
    # individual stages

    def parse_document(self, pdf_blob_ref: str) -> ParsedDocument:
        try:
            pdf_bytes = self._blobs.get(pdf_blob_ref)
        except KeyError:
            raise NotFound(f"no stored PDF at {pdf_blob_ref[:12]}…") from None
        try:
            document = self._parser.parse(pdf_bytes)
        except ParseFailure:
            raise
        except ProviderFailure as exc:
            raise ParseFailure(f"document parser failed: {exc}") from exc
        if not document.text.strip():
            raise EmptyDocument("no text could be extracted from the PDF")
        return document

    def screen_safety(self, text: str, title: str = "",
                      abstract: str = "") -> tuple[str, list[str]]:
        payload = {"title": title, "abstract": abstract,
                   "text": text[:PROMPT_TEXT_LIMIT]}
        prompt = self._prompts.render("safety_screen", payload)
        for _ in range(SAFETY_ATTEMPTS):
            try:
                reply = parse_json_output(self._text.complete(prompt, self._t_eval))
                verdict = reply.get("verdict") if isinstance(reply, dict) else None
                if verdict not in VISIBILITY_BY_VERDICT:
                    raise ProviderFailure(f"unrecognized safety verdict {verdict!r}")
                raw_reasons = reply.get("reasons") or []
                reasons = [str(r) for r in raw_reasons if str(r).strip()]
                if verdict == "pass":
                    return "pass", []
                if not reasons:
                    reasons = [f"screener returned {verdict} without reasons"]
                return verdict, reasons
            except ProviderFailure:
                continue
        return "flag", [SCREENING_UNAVAILABLE_REASON]

    def extract_keywords(self, text: str, title: str = "") -> list[KeywordNode]:
        if not text.strip():
            raise ValidationFailed("keyword extraction requires non-empty text")
        payload = {"title": title, "text": text[:PROMPT_TEXT_LIMIT]}
        prompt = self._prompts.render("extract_keywords", payload)
        last_error: Optional[Exception] = None
        for _ in range(2):
            try:
                reply = parse_json_output(self._text.complete(prompt, self._t_eval))
                nodes = _parse_keyword_nodes(reply.get("keywords") if isinstance(reply, dict) else None)
                nodes = _dedup_labels(nodes, seen=set())
                nodes = _trim_leaves(nodes, MAX_LEAVES)
                if len(keyword_tree_leaves(nodes)) < MIN_LEAVES:
                    raise ProviderFailure(
                        f"keyword tree has fewer than {MIN_LEAVES} leaves")
                return nodes
            except ProviderFailure as exc:
                last_error = exc
        raise KeywordExtractionFailed(f"keyword extraction failed twice: {last_error}")

    def distill_insights(self, text: str, abstract: str = "") -> list[str]:
        payload = {"abstract": abstract, "text": text[:PROMPT_TEXT_LIMIT]}
        insights: list[str] = []
        for attempt in range(2):
            if attempt == 1:
                payload = dict(payload, note="Return between 1 and 3 insights.")
            prompt = self._prompts.render("distill_insights", payload)
            try:
                reply = parse_json_output(self._text.complete(prompt, self._t_creative))
                raw = reply.get("insights") if isinstance(reply, dict) else None
                if not isinstance(raw, list):
                    raise ProviderFailure("insights reply is not a list")
                insights = [str(i).strip() for i in raw if str(i).strip()]
            except ProviderFailure:
                insights = []
            if 1 <= len(insights) <= 3:
                break
        if len(insights) > 3:
            insights = insights[:3]
        if not insights:
            fallback = first_sentence(abstract) or first_sentence(text)
            insights = [fallback or "No summary available."]
        return [i[:MAX_INSIGHT_CHARS] for i in insights]

    # ------------------------------------------------------------------
    # orchestration

    def run(self, paper_id: str, version: int) -> UnderstandingRecord:
        """Execute parse → safety → keywords → insights and persist the record."""
        with self._lock_for(paper_id, version):
            return self._run_locked(paper_id, version)

    def ensure(self, paper_id: str, version: int) -> UnderstandingRecord:
        """Return the stored record, computing it first if absent."""
        with self._lock_for(paper_id, version):
            entry = self._store.get(UnderstandingEntry, entry_id_for(paper_id, version))
            if entry is not None:
                return entry.record
            return self._run_locked(paper_id, version)

    def get_record(self, paper_id: str, version: int) -> Optional[UnderstandingRecord]:
        entry = self._store.get(UnderstandingEntry, entry_id_for(paper_id, version))
        return entry.record if entry else None

    def _run_locked(self, paper_id: str, version: int) -> UnderstandingRecord:
        paper = self._store.require(Paper, paper_id)
        matching = [v for v in paper.versions if v.version == version]
        if not matching:
            raise NotFound(f"paper {paper_id} has no version {version}")
        blob_ref = matching[0].pdf_blob_ref

        try:
            document = self.parse_document(blob_ref)
        except Exception as exc:
            raise StageFailure("parse", exc) from exc

        try:
            verdict, reasons = self.screen_safety(
                document.text, title=paper.title, abstract=paper.abstract)
        except Exception as exc:  # pragma: no cover - screen_safety absorbs failures
            raise StageFailure("safety", exc) from exc
        self._apply_visibility(paper_id, VISIBILITY_BY_VERDICT[verdict])

        if verdict == "reject":
            record = UnderstandingRecord(
                parsed_text=document.text, safety="reject",
                safety_reasons=reasons, keywords=[], insights=[])
            self._persist(paper_id, version, record)
            self._fire_record_hook(paper_id, version, record)
            return record

        try:
            keywords = self.extract_keywords(document.text, title=paper.title)
        except Exception as exc:
            raise StageFailure("keywords", exc) from exc
        try:
            insights = self.distill_insights(document.text, abstract=paper.abstract)
        except Exception as exc:
            raise StageFailure("insights", exc) from exc

        record = UnderstandingRecord(
            parsed_text=document.text, safety=verdict, safety_reasons=reasons,
            keywords=keywords, insights=insights)
        self._persist(paper_id, version, record)
        self._fire_record_hook(paper_id, version, record)
        return record

    def _fire_record_hook(self, paper_id: str, version: int,
                          record: UnderstandingRecord) -> None:
        if self._record_hook is None:
            return
        try:
            self._record_hook(paper_id, version, record)
        except Exception as exc:
            raise StageFailure("index", exc) from exc

    def _persist(self, paper_id: str, version: int, record: UnderstandingRecord) -> None:
        entry = UnderstandingEntry(
            entry_id=entry_id_for(paper_id, version),
            paper_id=paper_id, version=version,
            record=record, updated_at=self._clock())
        self._store.replace(entry)

    def _apply_visibility(self, paper_id: str, visibility: str) -> None:
        def update(paper: Paper) -> Paper:
            if paper.visibility == visibility:
                return paper
            return paper.model_copy(update={
                "visibility": visibility, "updated_at": self._clock()})

        self._store.mutate(Paper, paper_id, update)


# ----------------------------------------------------------------------
# keyword tree shaping


def _parse_keyword_nodes(raw, depth: int = 1) -> list[KeywordNode]:
    if raw is None:
        raise ProviderFailure("keyword reply lacks a 'keywords' list")
    if not isinstance(raw, list):
        raise ProviderFailure("'keywords' must be a list")
    nodes: list[KeywordNode] = []
    for item in raw:
        if isinstance(item, str):
            label, children = item, []
        elif isinstance(item, dict) and isinstance(item.get("label"), str):
            label = item["label"]
            children = item.get("children") or []
            if not isinstance(children, list):
                raise ProviderFailure("keyword 'children' must be a list")
        else:
            raise ProviderFailure(f"unrecognized keyword node {item!r}")
        label = label.strip()
        if not label:
            continue
        # Anything below the depth cap is flattened away, not an error.
        parsed_children = (_parse_keyword_nodes(children, depth + 1)
                           if children and depth < 3 else [])
        nodes.append(KeywordNode(label=label, children=parsed_children))
    return nodes


def _dedup_labels(nodes: list[KeywordNode], seen: set[str]) -> list[KeywordNode]:
    kept: list[KeywordNode] = []
    for node in nodes:
        key = node.label.lower()
        if key in seen:
            continue
        seen.add(key)
        kept.append(KeywordNode(label=node.label,
                                children=_dedup_labels(node.children, seen)))
    return kept


def _trim_leaves(nodes: list[KeywordNode], limit: int) -> list[KeywordNode]:
    """Drop trailing leaves until at most ``limit`` remain."""
    while len(keyword_tree_leaves(nodes)) > limit:
        nodes = _drop_last_leaf(nodes)
    return nodes


def _drop_last_leaf(nodes: list[KeywordNode]) -> list[KeywordNode]:
    for index in range(len(nodes) - 1, -1, -1):
        node = nodes[index]
        if node.children:
            trimmed = _drop_last_leaf(node.children)
            if not trimmed:
                # A parent left childless would become a brand-new leaf;
                # drop it with its last child so the count keeps shrinking.
                return nodes[:index] + nodes[index + 1:]
            replacement = KeywordNode(label=node.label, children=trimmed)
            return nodes[:index] + [replacement] + nodes[index + 1:]
        return nodes[:index] + nodes[index + 1:]
    return nodes
