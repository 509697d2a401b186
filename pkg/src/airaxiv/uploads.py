"""Two-stage, hash-verified PDF upload handshake.

Lifecycle: ``create`` opens a session, a single raw-byte PUT stages the file
and records its digest, ``complete`` verifies every digest on offer against
the staged bytes and promotes them to content-addressed storage behind a
one-time ``pdf_file_id`` token, and ``consume`` redeems that token exactly
once. Sessions expire after a TTL; expiry is checked lazily on access and by
a periodic sweep, and a failed or expired session never leaves a blob behind.
"""

from __future__ import annotations

import re
from datetime import datetime, timedelta
from typing import Optional

from .blobs import BlobStore
from .clock import Clock, utc_now
from .domain import Paper, UploadSession
from .errors import (
    Conflict,
    GoneError,
    IntegrityMismatch,
    NotFound,
    PayloadTooLarge,
    TokenAlreadyConsumed,
    ValidationFailed,
)
from .ids import IdFactory
from .store import Store

DEFAULT_TTL_SECONDS = 24 * 3600
DEFAULT_MAX_BYTES = 50 * 1024 * 1024

_HEX64_RE = re.compile(r"^[0-9a-f]{64}$")


def normalize_digest(value: str, field_path: str = "sha256") -> str:
    digest = value.strip().lower()
    if not _HEX64_RE.match(digest):
        raise ValidationFailed(
            f"expected a 64-character hex SHA-256 digest, got {value!r}",
            field_path=field_path,
        )
    return digest


class UploadGateway:
    def __init__(
        self,
        store: Store,
        blobs: BlobStore,
        ids: IdFactory,
        clock: Clock = utc_now,
        ttl_seconds: int = DEFAULT_TTL_SECONDS,
        max_bytes: int = DEFAULT_MAX_BYTES,
        public_base_url: str = "",
    ):
        self._store = store
        self._blobs = blobs
        self._ids = ids
        self._clock = clock
        self.ttl = timedelta(seconds=ttl_seconds)
        self.max_bytes = max_bytes
        # Set once the HTTP server knows its own address; upload_url values
        # stay relative until then.
        self.public_base_url = public_base_url

    # ------------------------------------------------------------------
    # helpers

    def upload_url(self, upload_id: str) -> str:
        return f"{self.public_base_url.rstrip('/')}/v1/uploads/{upload_id}"

    def expires_at(self, session: UploadSession) -> datetime:
        return session.created_at + self.ttl

    def _is_expired(self, session: UploadSession, now: datetime) -> bool:
        return session.state in ("open", "received", "completed") and now > self.expires_at(session)

    def _expire(self, session: UploadSession) -> UploadSession:
        """Transition a session to expired, releasing any bytes it holds."""
        update: dict = {"state": "expired", "pdf_file_id": None}
        if session.staging_ref is not None:
            self._blobs.discard_staged(session.staging_ref)
            update["staging_ref"] = None
        if session.state == "completed" and session.blob_ref is not None:
            if not self._blob_referenced(session.blob_ref, exclude_upload=session.upload_id):
                self._blobs.delete(session.blob_ref)
        return session.model_copy(update=update)

    def _blob_referenced(self, blob_ref: str, exclude_upload: str) -> bool:
        for paper in self._store.list_all(Paper):
            if any(v.pdf_blob_ref == blob_ref for v in paper.versions):
                return True
        for other in self._store.list_all(UploadSession):
            if other.upload_id == exclude_upload:
                continue
            if other.blob_ref == blob_ref and other.state in ("completed", "consumed"):
                return True
        return False

    def _view(self, session: UploadSession) -> dict:
        view = {
            "upload_id": session.upload_id,
            "upload_url": self.upload_url(session.upload_id),
            "state": session.state,
            "filename": session.filename,
            "expires_at": self.expires_at(session).isoformat(),
        }
        if session.received_size is not None:
            view["size"] = session.received_size
        if session.received_sha256 is not None:
            view["sha256"] = session.received_sha256
        if session.pdf_file_id is not None:
            view["pdf_file_id"] = session.pdf_file_id
        return view

    # ------------------------------------------------------------------
    # operations

    def create_upload(self, filename: Optional[str] = None,
                      sha256: Optional[str] = None) -> dict:
        name = (filename or "").strip()
        if name and not name.lower().endswith(".pdf"):
            raise ValidationFailed(
                f"filename must end in .pdf, got {name!r}", field_path="filename")
        declared = normalize_digest(sha256) if sha256 is not None else None
        session = UploadSession(
            upload_id=self._ids.new_token("up"),
            filename=name,
            declared_sha256=declared,
            state="open",
            created_at=self._clock(),
        )
        self._store.put(session)
        return self._view(session)

    def receive_bytes(self, upload_id: str, data: bytes) -> dict:
        session = self._store.get(UploadSession, upload_id)
        if session is None:
            raise NotFound(f"unknown upload session {upload_id!r}")
        if len(data) > self.max_bytes:
            raise PayloadTooLarge(
                f"upload is {len(data)} bytes; the limit is {self.max_bytes}")

        # Stage under a per-attempt key so concurrent PUTs cannot clobber
        # each other's bytes; only the transition winner keeps its copy.
        attempt_ref = f"{upload_id}.{self._ids.new_id().lower()}"
        self._blobs.stage(attempt_ref, data)
        digest = self._blobs.staged_digest(attempt_ref)
        now = self._clock()

        def transition(current: UploadSession) -> UploadSession:
            if self._is_expired(current, now):
                raise GoneError(f"upload session {upload_id!r} has expired")
            if current.state != "open":
                raise Conflict(
                    f"upload session {upload_id!r} already holds bytes; "
                    "a session accepts exactly one PUT")
            return current.model_copy(update={
                "state": "received",
                "received_size": len(data),
                "received_sha256": digest,
                "staging_ref": attempt_ref,
            })

        try:
            updated = self._store.mutate(UploadSession, upload_id, transition)
        except GoneError:
            self._blobs.discard_staged(attempt_ref)
            self._store.mutate(UploadSession, upload_id, self._lazy_expire)
            raise GoneError(f"upload session {upload_id!r} has expired") from None
        except Exception:
            self._blobs.discard_staged(attempt_ref)
            raise
        return {"upload_id": upload_id, "size": updated.received_size,
                "sha256": updated.received_sha256, "state": updated.state}

    def _lazy_expire(self, current: UploadSession) -> UploadSession:
        if self._is_expired(current, self._clock()):
            return self._expire(current)
        return current

    def complete(self, upload_id: str, sha256: Optional[str] = None) -> dict:
        session = self._store.get(UploadSession, upload_id)
        if session is None:
            raise NotFound(f"unknown upload session {upload_id!r}")
        provided = normalize_digest(sha256) if sha256 is not None else None
        now = self._clock()
        token = self._ids.new_token("pdf")

        def transition(current: UploadSession) -> UploadSession:
            if self._is_expired(current, now) or current.state == "expired":
                raise GoneError(f"upload session {upload_id!r} has expired")
            if current.state == "open":
                raise Conflict(
                    f"upload session {upload_id!r} has received no bytes yet")
            if current.state in ("completed", "consumed"):
                raise Conflict(
                    f"upload session {upload_id!r} was already completed")
            computed = current.received_sha256
            for expected, origin in ((provided, "complete_upload"),
                                     (current.declared_sha256, "create_upload")):
                if expected is not None and expected != computed:
                    # Verification failed: drop the staged bytes for good.
                    if current.staging_ref is not None:
                        self._blobs.discard_staged(current.staging_ref)
                    raise _MismatchSignal(current.model_copy(update={
                        "state": "expired", "staging_ref": None,
                    }), expected, computed, origin)
            blob_ref = self._blobs.promote_staged(current.staging_ref)
            return current.model_copy(update={
                "state": "completed",
                "staging_ref": None,
                "blob_ref": blob_ref,
                "pdf_file_id": token,
            })

        try:
            updated = self._store.mutate(UploadSession, upload_id, transition)
        except _MismatchSignal as signal:
            self._store.replace(signal.session)
            raise IntegrityMismatch(
                f"digest mismatch: {signal.origin} declared {signal.expected} "
                f"but the received bytes hash to {signal.computed}",
                field_path="sha256",
            ) from None
        return self._view(updated)

    def consume(self, pdf_file_id: str) -> str:
        """Redeem a one-time token, returning the blob content-address."""
        match: Optional[UploadSession] = None
        for session in self._store.list_all(UploadSession):
            if session.pdf_file_id == pdf_file_id:
                match = session
                break
        if match is None:
            raise NotFound("unknown pdf_file_id", field_path="pdf_file_id")
        now = self._clock()

        def transition(current: UploadSession) -> UploadSession:
            if current.pdf_file_id != pdf_file_id:
                # Token was cleared (expiry) or never belonged here.
                raise NotFound("unknown pdf_file_id", field_path="pdf_file_id")
            if current.state == "consumed":
                raise TokenAlreadyConsumed(
                    "this pdf_file_id was already redeemed; tokens are single-use",
                    field_path="pdf_file_id")
            if self._is_expired(current, now):
                raise _ExpiredSignal(self._expire(current))
            return current.model_copy(update={"state": "consumed"})

        try:
            updated = self._store.mutate(UploadSession, match.upload_id, transition)
        except _ExpiredSignal as signal:
            self._store.replace(signal.session)
            raise NotFound("unknown pdf_file_id", field_path="pdf_file_id") from None
        assert updated.blob_ref is not None
        return updated.blob_ref

    def get_session(self, upload_id: str) -> UploadSession:
        session = self._store.get(UploadSession, upload_id)
        if session is None:
            raise NotFound(f"unknown upload session {upload_id!r}")
        return session

    def describe(self, upload_id: str) -> dict:
        """Client view of a session; stale sessions expire on read."""
        session = self.get_session(upload_id)
        if self._is_expired(session, self._clock()):
            session = self._expire(session)
            self._store.replace(session)
        return self._view(session)

    def sweep_expired(self) -> int:
        """Expire every overdue session; returns how many were swept."""
        now = self._clock()
        swept = 0
        for session in self._store.list_all(UploadSession):
            if not self._is_expired(session, now):
                continue
            try:
                self._store.mutate(UploadSession, session.upload_id, self._lazy_expire)
                swept += 1
            except NotFound:  # pragma: no cover - deleted concurrently
                continue
        return swept


class _MismatchSignal(Exception):
    """Internal: carries the expired-session record out of a mutate callback."""

    def __init__(self, session: UploadSession, expected: str, computed: Optional[str],
                 origin: str):
        self.session = session
        self.expected = expected
        self.computed = computed
        self.origin = origin


class _ExpiredSignal(Exception):
    def __init__(self, session: UploadSession):
        self.session = session
