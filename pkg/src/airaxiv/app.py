"""Application container: builds every service from one config and wires
the cross-module hooks (indexing, conference curation, job handlers)."""

from __future__ import annotations

from pathlib import Path
from typing import Optional

from .accounts import AccountService
from .analytics import AnalyticsService
from .blobs import BlobStore, FileBlobStore, MemoryBlobStore
from .clock import Clock, utc_now
from .comments import CommentService
from .conferences import ConferenceService
from .config import AppConfig
from .domain import Job, Paper, StructuredReview, UnderstandingRecord
from .errors import ConfigError, ValidationFailed
from .ids import IdFactory
from .jobs import JobRunner
from .mcp import McpDispatcher
from .papers import PaperService
from .pdfurls import PdfUrlSigner
from .prompting import PromptLibrary
from .providers import (DocumentParserProvider, EmbeddingProvider,
                        TextGenerationProvider)
from .providers.external import (ExternalEmbeddingProvider,
                                 ExternalParserProvider, ExternalTextProvider)
from .providers.mock import (MockEmbeddingProvider, MockTextProvider,
                             PlainTextPdfParser)
from .recommend import Recommender
from .review import InternalCorpusSearch, ReferenceReviewer, SingleCallReviewer
from .store import MemoryStore, SqliteStore, Store
from .understanding import UnderstandingPipeline
from .uploads import UploadGateway


def _build_storage(config: AppConfig) -> tuple[Store, BlobStore]:
    data_dir = config.storage.data_dir
    if not data_dir:
        return MemoryStore(), MemoryBlobStore()
    root = Path(data_dir)
    root.mkdir(parents=True, exist_ok=True)
    return SqliteStore(root / "airaxiv.db"), FileBlobStore(root / "blobs")


def _build_providers(config: AppConfig) -> tuple[
        TextGenerationProvider, DocumentParserProvider, EmbeddingProvider]:
    p = config.providers
    if p.mode == "mock":
        return (MockTextProvider(seed=p.seed), PlainTextPdfParser(),
                MockEmbeddingProvider())
    for key, url in (("text_base_url", p.text_base_url),
                     ("parser_base_url", p.parser_base_url),
                     ("embedding_base_url", p.embedding_base_url)):
        if not url:
            raise ConfigError("required when providers.mode is external",
                              key_path=f"providers.{key}")
    return (
        ExternalTextProvider(p.text_base_url, api_key=p.api_key,
                             timeout=p.timeout_seconds),
        ExternalParserProvider(p.parser_base_url, api_key=p.api_key,
                               timeout=p.timeout_seconds),
        ExternalEmbeddingProvider(p.embedding_base_url, api_key=p.api_key,
                                  timeout=p.timeout_seconds),
    )


class Airaxiv:
    """One fully wired instance; the REST gateway and CLI both sit on top."""

    def __init__(self, config: Optional[AppConfig] = None,
                 clock: Clock = utc_now, ids: Optional[IdFactory] = None):
        self.config = config or AppConfig()
        cfg = self.config
        self.clock = clock
        self.ids = ids or IdFactory(clock=clock)
        self.store, self.blobs = _build_storage(cfg)
        text, parser, embedder = _build_providers(cfg)
        self.text_provider = text
        self.parser = parser
        self.embedder = embedder
        base_url = cfg.server.base_url()

        self.prompts = PromptLibrary(
            overrides=cfg.prompts.overrides or None,
            search_dir=cfg.prompts.search_dir or None)
        self.accounts = AccountService(
            self.store, self.ids, clock,
            mode=cfg.auth.mode,
            default_owner_kind=cfg.auth.default_owner_kind,
            static_keys=[k.model_dump() for k in cfg.auth.static_keys],
            rate_limit_enabled=cfg.auth.rate_limit_enabled,
            rate_per_sec=cfg.auth.rate_per_sec,
            burst=cfg.auth.burst)
        self.recommender = Recommender(
            self.store, embedder, text, self.prompts, clock,
            rerank_temperature=cfg.reviewer.temperature_eval)
        self.conferences = ConferenceService(
            self.store, self.recommender, self.ids, clock,
            default_threshold=cfg.conference.match_threshold)
        self.understanding = UnderstandingPipeline(
            self.store, self.blobs, text, parser, self.prompts, clock,
            temperature_eval=cfg.reviewer.temperature_eval,
            temperature_creative=cfg.reviewer.temperature_creative,
            record_hook=self._on_record_ready)
        self.uploads = UploadGateway(
            self.store, self.blobs, self.ids, clock,
            ttl_seconds=cfg.uploads.ttl_seconds,
            max_bytes=cfg.uploads.max_bytes,
            public_base_url=base_url)
        self.signer = PdfUrlSigner(
            cfg.pdf_urls.secret, clock,
            ttl_seconds=cfg.pdf_urls.ttl_seconds,
            public_base_url=base_url)

        reviewer_config = cfg.reviewer.to_reviewer_config()
        searches = [InternalCorpusSearch(self.store, embedder)]
        self.reviewers = {
            "reference": ReferenceReviewer(
                self.store, self.understanding, text, self.prompts, searches,
                self.ids, clock, config=reviewer_config),
            "single-call": SingleCallReviewer(
                self.store, self.understanding, text, self.prompts,
                self.ids, clock, config=reviewer_config),
        }
        if cfg.reviewer.default_plugin not in self.reviewers:
            raise ConfigError(
                f"unknown reviewer plugin {cfg.reviewer.default_plugin!r}; "
                f"available: {sorted(self.reviewers)}",
                key_path="reviewer.default_plugin")

        self.jobs = JobRunner(self.store, self.ids, clock,
                              workers=cfg.workers.count,
                              inline=cfg.workers.inline)
        self.jobs.register("understanding", self._run_understanding_job)
        self.jobs.register("review", self._run_review_job)

        self.papers = PaperService(
            self.store, self.blobs, self.uploads, self.understanding,
            self.recommender, self.conferences, self.accounts, self.jobs,
            self.signer, self.ids, clock,
            default_reviewer=cfg.reviewer.default_plugin,
            record_ready_hook=self._on_version_carried)
        self.comments = CommentService(self.store, self.ids, clock)
        self.analytics = AnalyticsService(self.store)
        self.mcp = McpDispatcher(self)

    # ------------------------------------------------------------------
    # cross-module hooks

    def _on_record_ready(self, paper_id: str, version: int,
                         record: UnderstandingRecord) -> None:
        self._sync_discovery(paper_id, version)

    def _on_version_carried(self, paper_id: str, version: int) -> None:
        self._sync_discovery(paper_id, version)

    def _sync_discovery(self, paper_id: str, version: int) -> None:
        """Keep the search index and conference listings in step with a paper."""
        paper = self.store.get(Paper, paper_id)
        if paper is None:
            return
        if paper.visibility != "public":
            self.recommender.remove(paper_id)
            self.conferences.on_paper_hidden(paper_id)
            return
        if version != paper.latest_version.version:
            return  # a newer version's pipeline will reindex
        self.recommender.index_paper(paper_id, version)
        self.conferences.on_paper_public(paper_id)

    # ------------------------------------------------------------------
    # job handlers

    def _run_understanding_job(self, job: Job) -> None:
        self.understanding.run(job.paper_id, job.version)
        return None

    def _run_review_job(self, job: Job) -> StructuredReview:
        name = job.reviewer_name or self.config.reviewer.default_plugin
        plugin = self.reviewers.get(name)
        if plugin is None:
            raise ValidationFailed(f"unknown reviewer plugin {name!r}")
        return plugin.review(job.paper_id, job.version)

    # ------------------------------------------------------------------
    # lifecycle

    def wait_idle(self, timeout: Optional[float] = None) -> bool:
        return self.jobs.wait_idle(timeout)

    def sweep_uploads(self) -> int:
        return self.uploads.sweep_expired()

    def close(self) -> None:
        self.jobs.shutdown()
        close = getattr(self.store, "close", None)
        if close is not None:
            close()
