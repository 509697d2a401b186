"""Transactional record store with in-memory and single-file SQLite backends.

Records are persisted as canonical JSON strings keyed by (kind, id). All
writes to one record are serialized through a per-record mutex, so
read-modify-write sequences (``mutate``) never lose updates. Reads return
freshly parsed models, never shared mutable state.

``export_dir``/``import_dir`` round-trip the whole store as a directory of
canonical JSON files (UTF-8, sorted keys), one subdirectory per record kind.
"""

from __future__ import annotations

import json
import sqlite3
import threading
from abc import ABC, abstractmethod
from pathlib import Path
from typing import Callable, Iterable, Optional, TypeVar

from pydantic import BaseModel, ValidationError

from .domain import (
    Comment,
    Conference,
    DecisionLabel,
    IndexEntry,
    IntentProfile,
    Job,
    Paper,
    Principal,
    UnderstandingEntry,
    UploadSession,
    canonical_json,
)
from .errors import Conflict, NotFound, validation_error_from_pydantic

M = TypeVar("M", bound=BaseModel)

# Model class -> (kind name, id attribute)
MODEL_KINDS: dict[type[BaseModel], tuple[str, str]] = {
    Principal: ("principal", "api_key_id"),
    Paper: ("paper", "paper_id"),
    Job: ("job", "job_id"),
    Comment: ("comment", "comment_id"),
    Conference: ("conference", "conference_id"),
    UploadSession: ("upload_session", "upload_id"),
    UnderstandingEntry: ("understanding", "entry_id"),
    IndexEntry: ("index_entry", "paper_id"),
    IntentProfile: ("intent_profile", "api_key_id"),
    DecisionLabel: ("decision_label", "paper_id"),
}

_KIND_TO_MODEL = {kind: model for model, (kind, _) in MODEL_KINDS.items()}


def identity_of(record: BaseModel) -> tuple[str, str]:
    try:
        kind, id_attr = MODEL_KINDS[type(record)]
    except KeyError:
        raise TypeError(f"{type(record).__name__} is not a registered record type") from None
    return kind, getattr(record, id_attr)


class Store(ABC):
    """Shared typed API over a raw (kind, id) -> payload backend."""

    def __init__(self) -> None:
        self._locks: dict[tuple[str, str], threading.Lock] = {}
        self._locks_guard = threading.Lock()

    def _lock_for(self, kind: str, record_id: str) -> threading.Lock:
        key = (kind, record_id)
        with self._locks_guard:
            lock = self._locks.get(key)
            if lock is None:
                lock = threading.Lock()
                self._locks[key] = lock
            return lock

    # -- raw backend ----------------------------------------------------
    @abstractmethod
    def _get_raw(self, kind: str, record_id: str) -> Optional[str]: ...

    @abstractmethod
    def _put_raw(self, kind: str, record_id: str, payload: str) -> None: ...

    @abstractmethod
    def _exists_raw(self, kind: str, record_id: str) -> bool: ...

    @abstractmethod
    def _delete_raw(self, kind: str, record_id: str) -> None: ...

    @abstractmethod
    def _list_raw(self, kind: str) -> list[tuple[str, str]]: ...

    def close(self) -> None:  # pragma: no cover - backends override as needed
        pass

    # -- typed API ------------------------------------------------------
    def put(self, record: BaseModel) -> str:
        """Persist a new record; duplicate ids are a conflict."""
        kind, record_id = identity_of(record)
        with self._lock_for(kind, record_id):
            if self._exists_raw(kind, record_id):
                raise Conflict(f"{kind} {record_id} already exists")
            self._put_raw(kind, record_id, canonical_json(record))
        return record_id

    def replace(self, record: BaseModel) -> str:
        """Overwrite an existing record (or create it); used by idempotent writers."""
        kind, record_id = identity_of(record)
        with self._lock_for(kind, record_id):
            self._put_raw(kind, record_id, canonical_json(record))
        return record_id

    def get(self, model_cls: type[M], record_id: str) -> Optional[M]:
        kind, _ = MODEL_KINDS[model_cls]
        payload = self._get_raw(kind, record_id)
        if payload is None:
            return None
        return model_cls.model_validate_json(payload)

    def require(self, model_cls: type[M], record_id: str) -> M:
        record = self.get(model_cls, record_id)
        if record is None:
            kind, _ = MODEL_KINDS[model_cls]
            raise NotFound(f"{kind} {record_id} not found")
        return record

    def mutate(self, model_cls: type[M], record_id: str, fn: Callable[[M], M]) -> M:
        """Serialized read-modify-write; ``fn`` returns the replacement record."""
        kind, id_attr = MODEL_KINDS[model_cls]
        with self._lock_for(kind, record_id):
            payload = self._get_raw(kind, record_id)
            if payload is None:
                raise NotFound(f"{kind} {record_id} not found")
            current = model_cls.model_validate_json(payload)
            try:
                updated = fn(current)
            except ValidationError as exc:
                raise validation_error_from_pydantic(exc) from exc
            if getattr(updated, id_attr) != record_id:
                raise Conflict(f"mutate must not change the {kind} id")
            self._put_raw(kind, record_id, canonical_json(updated))
            return updated

    def delete(self, model_cls: type[BaseModel], record_id: str) -> None:
        kind, _ = MODEL_KINDS[model_cls]
        with self._lock_for(kind, record_id):
            self._delete_raw(kind, record_id)

    def list_all(
        self,
        model_cls: type[M],
        predicate: Optional[Callable[[M], bool]] = None,
    ) -> list[M]:
        kind, _ = MODEL_KINDS[model_cls]
        records = [model_cls.model_validate_json(payload) for _, payload in self._list_raw(kind)]
        if predicate is not None:
            records = [r for r in records if predicate(r)]
        return records

    def count(self, model_cls: type[BaseModel]) -> int:
        kind, _ = MODEL_KINDS[model_cls]
        return len(self._list_raw(kind))

    # -- paper version helpers -----------------------------------------
    def append_version(self, paper_id: str, new_version) -> int:
        """Append a pre-numbered version; wrong numbering is a conflict."""

        def apply(paper: Paper) -> Paper:
            expected = len(paper.versions) + 1
            if new_version.version != expected:
                raise Conflict(
                    f"expected version {expected}, got {new_version.version}"
                )
            return paper.model_copy(update={"versions": [*paper.versions, new_version]})

        return self.mutate(Paper, paper_id, apply).versions[-1].version

    def append_next_version(self, paper_id: str, make: Callable[[int], "object"]) -> int:
        """Append a version numbered under the paper's lock; safe for concurrent callers."""

        def apply(paper: Paper) -> Paper:
            version = make(len(paper.versions) + 1)
            return paper.model_copy(update={"versions": [*paper.versions, version]})

        return self.mutate(Paper, paper_id, apply).versions[-1].version

    # -- export / import ------------------------------------------------
    def export_dir(self, path: str | Path) -> int:
        """Write every record as <kind>/<id>.json; returns the record count."""
        root = Path(path)
        total = 0
        for model_cls, (kind, _) in MODEL_KINDS.items():
            rows = self._list_raw(kind)
            if not rows:
                continue
            kind_dir = root / kind
            kind_dir.mkdir(parents=True, exist_ok=True)
            for record_id, payload in rows:
                # Payloads are canonical already; re-dump for sorted, stable bytes.
                data = json.dumps(
                    json.loads(payload), sort_keys=True, ensure_ascii=False, separators=(",", ":")
                )
                (kind_dir / f"{record_id}.json").write_text(data, encoding="utf-8")
                total += 1
        return total

    def import_dir(self, path: str | Path) -> int:
        root = Path(path)
        total = 0
        for kind_dir in sorted(p for p in root.iterdir() if p.is_dir()):
            model_cls = _KIND_TO_MODEL.get(kind_dir.name)
            if model_cls is None:
                continue
            for file in sorted(kind_dir.glob("*.json")):
                record = model_cls.model_validate_json(file.read_text(encoding="utf-8"))
                self.replace(record)
                total += 1
        return total


class MemoryStore(Store):
    def __init__(self) -> None:
        super().__init__()
        self._data: dict[str, dict[str, str]] = {}
        self._data_guard = threading.Lock()

    def _table(self, kind: str) -> dict[str, str]:
        with self._data_guard:
            return self._data.setdefault(kind, {})

    def _get_raw(self, kind: str, record_id: str) -> Optional[str]:
        return self._table(kind).get(record_id)

    def _put_raw(self, kind: str, record_id: str, payload: str) -> None:
        self._table(kind)[record_id] = payload

    def _exists_raw(self, kind: str, record_id: str) -> bool:
        return record_id in self._table(kind)

    def _delete_raw(self, kind: str, record_id: str) -> None:
        self._table(kind).pop(record_id, None)

    def _list_raw(self, kind: str) -> list[tuple[str, str]]:
        return sorted(self._table(kind).items())


class SqliteStore(Store):
    """Single-file embedded database backend (stdlib sqlite3, WAL mode)."""

    def __init__(self, path: str | Path) -> None:
        super().__init__()
        self._path = Path(path)
        self._path.parent.mkdir(parents=True, exist_ok=True)
        self._conn = sqlite3.connect(self._path, check_same_thread=False)
        self._conn_lock = threading.RLock()
        with self._conn_lock:
            self._conn.execute("PRAGMA journal_mode=WAL")
            self._conn.execute(
                "CREATE TABLE IF NOT EXISTS records ("
                " kind TEXT NOT NULL, id TEXT NOT NULL, payload TEXT NOT NULL,"
                " PRIMARY KEY (kind, id))"
            )
            self._conn.commit()

    def close(self) -> None:
        with self._conn_lock:
            self._conn.close()

    def _get_raw(self, kind: str, record_id: str) -> Optional[str]:
        with self._conn_lock:
            row = self._conn.execute(
                "SELECT payload FROM records WHERE kind = ? AND id = ?", (kind, record_id)
            ).fetchone()
        return None if row is None else row[0]

    def _put_raw(self, kind: str, record_id: str, payload: str) -> None:
        with self._conn_lock:
            self._conn.execute(
                "INSERT INTO records (kind, id, payload) VALUES (?, ?, ?)"
                " ON CONFLICT (kind, id) DO UPDATE SET payload = excluded.payload",
                (kind, record_id, payload),
            )
            self._conn.commit()

    def _exists_raw(self, kind: str, record_id: str) -> bool:
        with self._conn_lock:
            row = self._conn.execute(
                "SELECT 1 FROM records WHERE kind = ? AND id = ?", (kind, record_id)
            ).fetchone()
        return row is not None

    def _delete_raw(self, kind: str, record_id: str) -> None:
        with self._conn_lock:
            self._conn.execute(
                "DELETE FROM records WHERE kind = ? AND id = ?", (kind, record_id)
            )
            self._conn.commit()

    def _list_raw(self, kind: str) -> list[tuple[str, str]]:
        with self._conn_lock:
            rows = self._conn.execute(
                "SELECT id, payload FROM records WHERE kind = ? ORDER BY id", (kind,)
            ).fetchall()
        return [(row[0], row[1]) for row in rows]


def put_validated(store: Store, record: BaseModel) -> str:
    """put() with pydantic errors translated to API validation errors."""
    try:
        return store.put(record)
    except ValidationError as exc:  # pragma: no cover - models validate at construction
        raise validation_error_from_pydantic(exc) from exc


def iter_kinds() -> Iterable[str]:
    return (kind for kind, _ in MODEL_KINDS.values())
