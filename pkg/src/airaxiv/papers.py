"""Paper lifecycle: submission, revision, listing, retrieval.

Every new PDF version triggers one understanding job and one review job.
Metadata-only updates still append a version (full audit trail) but carry
the prior blob and trigger nothing. Visibility rules are enforced here for
every read path.
"""

from __future__ import annotations

from typing import Callable, Optional, Sequence
from urllib.parse import urlparse

import httpx

from .access import can_view, owns_paper, require_visible
from .accounts import AccountService
from .blobs import BlobStore
from .clock import Clock, utc_now
from .conferences import ConferenceService
from .domain import (
    PAPER_TYPES,
    Author,
    Job,
    Paper,
    PaperVersion,
    Principal,
    keyword_tree_leaves,
)
from .errors import (
    Conflict,
    Forbidden,
    NotFound,
    PayloadTooLarge,
    ValidationFailed,
)
from .ids import IdFactory
from .jobs import JobRunner
from .pdfurls import PdfUrlSigner
from .recommend import Recommender
from .store import Store
from .understanding import UnderstandingPipeline, entry_id_for
from .uploads import UploadGateway

TRUNCATION_MARKER = "\n[truncated]"
DEFAULT_MAX_CHARS = 50000
FETCH_TIMEOUT_SECONDS = 30.0
FETCH_MAX_BYTES = 50 * 1024 * 1024

PdfFetcher = Callable[[str], bytes]


def http_pdf_fetcher(url: str) -> bytes:
    """Default pdf_url fetcher: http/https only, bounded size and time."""
    scheme = urlparse(url).scheme.lower()
    if scheme not in ("http", "https"):
        raise ValidationFailed(
            f"pdf_url scheme must be http or https, got {scheme!r}",
            field_path="pdf_url")
    try:
        with httpx.Client(timeout=FETCH_TIMEOUT_SECONDS,
                          follow_redirects=True) as client:
            with client.stream("GET", url) as response:
                if response.status_code != 200:
                    raise ValidationFailed(
                        f"pdf_url returned HTTP {response.status_code}",
                        field_path="pdf_url")
                chunks = []
                total = 0
                for chunk in response.iter_bytes():
                    total += len(chunk)
                    if total > FETCH_MAX_BYTES:
                        raise PayloadTooLarge(
                            f"pdf_url content exceeds {FETCH_MAX_BYTES} bytes")
                    chunks.append(chunk)
                return b"".join(chunks)
    except httpx.HTTPError as exc:
        raise ValidationFailed(f"pdf_url fetch failed: {exc}",
                               field_path="pdf_url") from exc


def parse_author_list(raw: Optional[Sequence]) -> list[Author]:
    authors: list[Author] = []
    for item in raw or []:
        if isinstance(item, str):
            try:
                authors.append(Author(name=item))
            except Exception as exc:
                raise ValidationFailed(f"bad author entry {item!r}: {exc}",
                                       field_path="author_list") from exc
        elif isinstance(item, dict):
            try:
                authors.append(Author(**item))
            except Exception as exc:
                raise ValidationFailed(f"bad author entry {item!r}: {exc}",
                                       field_path="author_list") from exc
        elif isinstance(item, Author):
            authors.append(item)
        else:
            raise ValidationFailed(f"bad author entry {item!r}",
                                   field_path="author_list")
    return authors


class PaperService:
    def __init__(
        self,
        store: Store,
        blobs: BlobStore,
        uploads: UploadGateway,
        understanding: UnderstandingPipeline,
        recommender: Recommender,
        conferences: ConferenceService,
        accounts: AccountService,
        jobs: JobRunner,
        signer: PdfUrlSigner,
        ids: IdFactory,
        clock: Clock = utc_now,
        pdf_fetcher: PdfFetcher = http_pdf_fetcher,
        default_reviewer: str = "reference",
        record_ready_hook: Optional[Callable[[str, int], None]] = None,
    ):
        self._store = store
        self._blobs = blobs
        self._uploads = uploads
        self._understanding = understanding
        self._recommender = recommender
        self._conferences = conferences
        self._accounts = accounts
        self._jobs = jobs
        self._signer = signer
        self._ids = ids
        self._clock = clock
        self._fetch = pdf_fetcher
        self._default_reviewer = default_reviewer
        self._record_ready_hook = record_ready_hook

    # ------------------------------------------------------------------
    # PDF source resolution

    def _resolve_source(self, pdf_url: Optional[str],
                        pdf_file_id: Optional[str]) -> str:
        """Returns the blob content-address for exactly one PDF source."""
        if (pdf_url is None) == (pdf_file_id is None):
            raise ValidationFailed(
                "provide exactly one of pdf_url or pdf_file_id")
        if pdf_file_id is not None:
            return self._uploads.consume(pdf_file_id)
        data = self._fetch(pdf_url)
        return self._blobs.put(data)

    # ------------------------------------------------------------------
    # submission and revision

    def submit_paper(
        self,
        principal: Principal,
        title: str,
        pdf_url: Optional[str] = None,
        pdf_file_id: Optional[str] = None,
        abstract: str = "",
        author_list: Optional[Sequence] = None,
        paper_type: str = "research",
        research_category: str = "",
        conference_id: Optional[str] = None,
    ) -> dict:
        if not (title or "").strip():
            raise ValidationFailed("title must be non-empty", field_path="title")
        if paper_type not in PAPER_TYPES:
            raise ValidationFailed(
                f"paper_type must be one of {', '.join(PAPER_TYPES)}",
                field_path="paper_type")
        authors = parse_author_list(author_list)
        if conference_id is not None:
            self._conferences.require(conference_id)  # fail before side effects

        blob_ref = self._resolve_source(pdf_url, pdf_file_id)
        now = self._clock()
        paper = Paper(
            paper_id=self._ids.new_token("paper"),
            owner=principal.api_key_id,
            title=title.strip(),
            abstract=abstract or "",
            authors=authors,
            paper_type=paper_type,
            research_category=research_category or "",
            visibility="public",
            created_at=now,
            updated_at=now,
            versions=[PaperVersion(version=1, pdf_blob_ref=blob_ref,
                                   version_notes="", submitted_at=now)],
        )
        self._store.put(paper)
        self._accounts.bump_paper_count(principal.api_key_id)
        self._jobs.enqueue("understanding", paper.paper_id, 1)
        self._jobs.enqueue("review", paper.paper_id, 1,
                           reviewer_name=self._default_reviewer)

        result = {"paper_id": paper.paper_id, "version": 1,
                  "title": paper.title, "visibility": paper.visibility}
        if conference_id is not None:
            try:
                self._conferences.submit_to_track(
                    principal, conference_id, paper.paper_id)
                result["conference_id"] = conference_id
            except Conflict as exc:
                result["conference_warning"] = str(exc)
        return result

    def update_paper(
        self,
        principal: Principal,
        paper_id: str,
        pdf_url: Optional[str] = None,
        pdf_file_id: Optional[str] = None,
        title: Optional[str] = None,
        abstract: Optional[str] = None,
        author_list: Optional[Sequence] = None,
        version_notes: Optional[str] = None,
    ) -> dict:
        paper = self._store.get(Paper, paper_id)
        if paper is None:
            raise NotFound(f"unknown paper {paper_id}", field_path="paper_id")
        if not owns_paper(self._store, paper, principal):
            raise Forbidden("only the paper's owner may update it")
        if pdf_url is not None and pdf_file_id is not None:
            raise ValidationFailed(
                "provide at most one of pdf_url or pdf_file_id")

        prior = paper.latest_version
        if pdf_url is not None or pdf_file_id is not None:
            new_blob = self._resolve_source(pdf_url, pdf_file_id)
        else:
            new_blob = prior.pdf_blob_ref
        pdf_changed = new_blob != prior.pdf_blob_ref
        now = self._clock()

        def make(version_number: int) -> PaperVersion:
            return PaperVersion(
                version=version_number,
                pdf_blob_ref=new_blob,
                version_notes=(version_notes or "").strip(),
                submitted_at=now,
            )

        new_version = self._store.append_next_version(paper_id, make)

        metadata_update: dict = {"updated_at": now}
        if title is not None and title.strip():
            metadata_update["title"] = title.strip()
        if abstract is not None:
            metadata_update["abstract"] = abstract
        if author_list is not None:
            metadata_update["authors"] = parse_author_list(author_list)
        self._store.mutate(Paper, paper_id,
                           lambda p: p.model_copy(update=metadata_update))

        if pdf_changed:
            self._jobs.enqueue("understanding", paper_id, new_version)
            self._jobs.enqueue("review", paper_id, new_version,
                               reviewer_name=self._default_reviewer)
        else:
            self._carry_understanding(paper_id, prior.version, new_version)
        return {"paper_id": paper_id, "version": new_version,
                "pdf_changed": pdf_changed}

    def _carry_understanding(self, paper_id: str, from_version: int,
                             to_version: int) -> None:
        """Metadata-only revision: reuse the prior version's analysis."""
        from .domain import UnderstandingEntry

        entry = self._store.get(UnderstandingEntry,
                                entry_id_for(paper_id, from_version))
        if entry is None:
            return  # original pipeline still pending; nothing to carry
        self._store.replace(UnderstandingEntry(
            entry_id=entry_id_for(paper_id, to_version),
            paper_id=paper_id,
            version=to_version,
            record=entry.record,
            updated_at=self._clock(),
        ))
        if self._record_ready_hook is not None:
            self._record_ready_hook(paper_id, to_version)

    # ------------------------------------------------------------------
    # listing and views

    def list_papers(self, principal: Principal, scope: str = "user",
                    limit: int = 20, offset: int = 0) -> dict:
        if scope not in ("user", "api_key", "public"):
            raise ValidationFailed(
                f"scope must be user, api_key, or public, got {scope!r}",
                field_path="scope")
        if not 1 <= limit <= 100:
            raise ValidationFailed("limit must be between 1 and 100",
                                   field_path="limit")
        if offset < 0:
            raise ValidationFailed("offset must be >= 0", field_path="offset")

        if scope == "api_key":
            papers = self._store.list_all(
                Paper, lambda p: p.owner == principal.api_key_id)
        elif scope == "user":
            own_keys = {p.api_key_id for p in self._store.list_all(
                Principal, lambda p: p.name == principal.name)}
            own_keys.add(principal.api_key_id)
            papers = self._store.list_all(Paper, lambda p: p.owner in own_keys)
        else:
            papers = self._store.list_all(
                Paper, lambda p: p.visibility == "public")

        papers.sort(key=lambda p: (p.created_at, p.paper_id), reverse=True)
        total = len(papers)
        page = papers[offset:offset + limit]
        return {
            "items": [self._summary_view(p, principal) for p in page],
            "total": total,
            "limit": limit,
            "offset": offset,
        }

    def _latest_record(self, paper: Paper):
        from .domain import UnderstandingEntry

        for version in reversed(paper.versions):
            entry = self._store.get(
                UnderstandingEntry,
                entry_id_for(paper.paper_id, version.version))
            if entry is not None:
                return version.version, entry.record
        return None, None

    def _score_view(self, paper: Paper) -> dict:
        """Mean aggregate over completed reviews of the latest reviewed version."""
        reviews = [job.result for job in self._store.list_all(
            Job, lambda j: (j.kind == "review" and j.paper_id == paper.paper_id
                            and j.state == "completed" and j.result is not None))]
        if not reviews:
            return {"score": None, "score_version": None, "reviews_count": 0}
        latest = max(review.version for review in reviews)
        at_latest = [r for r in reviews if r.version == latest]
        mean = sum(r.aggregate for r in at_latest) / len(at_latest)
        return {"score": round(mean, 4), "score_version": latest,
                "reviews_count": len(reviews)}

    def _summary_view(self, paper: Paper, principal: Optional[Principal]) -> dict:
        _, record = self._latest_record(paper)
        view = {
            "paper_id": paper.paper_id,
            "title": paper.title,
            "authors": [a.model_dump() for a in paper.authors],
            "paper_type": paper.paper_type,
            "research_category": paper.research_category,
            "created_at": paper.created_at.isoformat(),
            "updated_at": paper.updated_at.isoformat(),
            "latest_version": paper.latest_version.version,
            "insights": list(record.insights) if record else [],
        }
        view.update(self._score_view(paper))
        if principal is not None and owns_paper(self._store, paper, principal):
            view["visibility"] = paper.visibility
        return view

    def get_paper_info(self, principal: Optional[Principal], paper_id: str,
                       include_versions: bool = False) -> dict:
        paper = require_visible(self._store, paper_id, principal)
        record_version, record = self._latest_record(paper)
        view = {
            "paper_id": paper.paper_id,
            "title": paper.title,
            "abstract": paper.abstract,
            "authors": [a.model_dump() for a in paper.authors],
            "paper_type": paper.paper_type,
            "research_category": paper.research_category,
            "created_at": paper.created_at.isoformat(),
            "updated_at": paper.updated_at.isoformat(),
            "latest_version": paper.latest_version.version,
            "keywords": [k.model_dump() for k in record.keywords] if record else [],
            "keyword_leaves": keyword_tree_leaves(record.keywords) if record else [],
            "insights": list(record.insights) if record else [],
        }
        view.update(self._score_view(paper))
        is_owner = (principal is not None
                    and owns_paper(self._store, paper, principal))
        if is_owner:
            view["visibility"] = paper.visibility
            if record is not None and record.safety != "pass":
                view["safety"] = {"verdict": record.safety,
                                  "reasons": list(record.safety_reasons)}
        if include_versions:
            view["versions"] = [
                {"version": v.version,
                 "version_notes": v.version_notes,
                 "submitted_at": v.submitted_at.isoformat(),
                 "pdf_sha256": v.pdf_blob_ref}
                for v in paper.versions
            ]
        return view

    def get_paper_content(self, principal: Optional[Principal], paper_id: str,
                          max_chars: int = DEFAULT_MAX_CHARS) -> dict:
        if max_chars < 1:
            raise ValidationFailed("max_chars must be >= 1",
                                   field_path="max_chars")
        paper = require_visible(self._store, paper_id, principal)
        latest = paper.latest_version
        record = self._understanding.get_record(paper_id, latest.version)
        if record is not None:
            text = record.parsed_text
        else:
            # No analysis yet: parse synchronously, without persisting.
            text = self._understanding.parse_document(latest.pdf_blob_ref).text
        truncated = len(text) > max_chars
        body = text[:max_chars] + TRUNCATION_MARKER if truncated else text
        return {
            "paper_id": paper_id,
            "version": latest.version,
            "text": body,
            "truncated": truncated,
            "total_chars": len(text),
        }

    def get_paper_pdf_url(self, principal: Optional[Principal],
                          paper_id: str) -> dict:
        paper = require_visible(self._store, paper_id, principal)
        latest = paper.latest_version
        signed = self._signer.sign(
            latest.pdf_blob_ref,
            filename=f"{paper_id}-v{latest.version}.pdf")
        return {"paper_id": paper_id, "version": latest.version,
                "url": signed["url"], "expires_at": signed["expires_at"]}

    def resolve_pdf_token(self, token: str) -> tuple[bytes, str]:
        blob_ref, filename = self._signer.verify(token)
        try:
            return self._blobs.get(blob_ref), filename
        except KeyError:
            raise NotFound("the referenced PDF is no longer stored") from None

    # ------------------------------------------------------------------
    # reviews and related

    def get_paper_reviews(self, principal: Optional[Principal],
                          paper_id: str) -> dict:
        require_visible(self._store, paper_id, principal)
        jobs = self._jobs.list_jobs(paper_id=paper_id, kind="review")
        reviews = [job.result for job in jobs
                   if job.state == "completed" and job.result is not None]
        reviews.sort(key=lambda r: (r.completed_at, r.review_id), reverse=True)
        return {
            "paper_id": paper_id,
            "reviews": [r.model_dump(mode="json") for r in reviews],
            "jobs": [self._job_summary(j) for j in jobs],
        }

    @staticmethod
    def _job_summary(job: Job) -> dict:
        summary = {
            "job_id": job.job_id,
            "kind": job.kind,
            "version": job.version,
            "reviewer_name": job.reviewer_name,
            "state": job.state,
            "enqueued_at": job.enqueued_at.isoformat(),
        }
        if job.started_at is not None:
            summary["started_at"] = job.started_at.isoformat()
        if job.finished_at is not None:
            summary["finished_at"] = job.finished_at.isoformat()
        if job.stage:
            summary["stage"] = job.stage
        if job.error is not None:
            summary["error"] = job.error
        return summary

    def search_related(self, principal: Principal,
                       paper_id: Optional[str] = None,
                       query: Optional[str] = None,
                       top_k: int = 10) -> dict:
        if paper_id is not None:
            require_visible(self._store, paper_id, principal)
        results = self._recommender.search_related(
            api_key_id=principal.api_key_id,
            paper_id=paper_id, query=query, top_k=top_k)
        return {"results": results}
