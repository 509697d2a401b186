"""Content-addressed PDF blob storage with a staging area for pending uploads.

Promoted blobs live under ``blobs/<first2-hex>/<sha256>.pdf``; bytes received
mid-handshake sit in a staging area keyed by upload id and only move into
content-addressed storage once the digest check passes. Duplicate content
deduplicates to a single stored blob.
"""

from __future__ import annotations

import hashlib
import os
import threading
from abc import ABC, abstractmethod
from pathlib import Path
from typing import Optional

from .errors import NotFound


def sha256_hex(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


class BlobStore(ABC):
    @abstractmethod
    def put(self, data: bytes) -> str:
        """Store bytes under their own SHA-256 and return the address."""

    @abstractmethod
    def get(self, sha: str) -> bytes: ...

    @abstractmethod
    def exists(self, sha: str) -> bool: ...

    @abstractmethod
    def delete(self, sha: str) -> None: ...

    @abstractmethod
    def list_addresses(self) -> list[str]: ...

    @abstractmethod
    def stage(self, key: str, data: bytes) -> str:
        """Hold pending bytes outside content-addressed storage; returns their digest."""

    @abstractmethod
    def staged_digest(self, key: str) -> Optional[str]: ...

    @abstractmethod
    def discard_staged(self, key: str) -> None: ...

    @abstractmethod
    def promote_staged(self, key: str) -> str:
        """Move staged bytes into content-addressed storage and return the address."""


class MemoryBlobStore(BlobStore):
    def __init__(self) -> None:
        self._blobs: dict[str, bytes] = {}
        self._staging: dict[str, bytes] = {}
        self._lock = threading.Lock()

    def put(self, data: bytes) -> str:
        sha = sha256_hex(data)
        with self._lock:
            self._blobs[sha] = data
        return sha

    def get(self, sha: str) -> bytes:
        with self._lock:
            if sha not in self._blobs:
                raise NotFound(f"blob {sha} not found")
            return self._blobs[sha]

    def exists(self, sha: str) -> bool:
        with self._lock:
            return sha in self._blobs

    def delete(self, sha: str) -> None:
        with self._lock:
            self._blobs.pop(sha, None)

    def list_addresses(self) -> list[str]:
        with self._lock:
            return sorted(self._blobs)

    def stage(self, key: str, data: bytes) -> str:
        with self._lock:
            self._staging[key] = data
        return sha256_hex(data)

    def staged_digest(self, key: str) -> Optional[str]:
        with self._lock:
            data = self._staging.get(key)
        return None if data is None else sha256_hex(data)

    def discard_staged(self, key: str) -> None:
        with self._lock:
            self._staging.pop(key, None)

    def promote_staged(self, key: str) -> str:
        with self._lock:
            if key not in self._staging:
                raise NotFound(f"no staged bytes for {key}")
            data = self._staging.pop(key)
            sha = sha256_hex(data)
            self._blobs[sha] = data
        return sha


class FileBlobStore(BlobStore):
    """Filesystem-backed blob store rooted at a data directory."""

    def __init__(self, root: str | os.PathLike[str]) -> None:
        self.root = Path(root)
        self.blob_dir = self.root / "blobs"
        self.staging_dir = self.root / "staging"
        self.blob_dir.mkdir(parents=True, exist_ok=True)
        self.staging_dir.mkdir(parents=True, exist_ok=True)
        self._lock = threading.Lock()

    def _blob_path(self, sha: str) -> Path:
        return self.blob_dir / sha[:2] / f"{sha}.pdf"

    def _staged_path(self, key: str) -> Path:
        # Upload ids are [A-Z0-9]{26}; guard against path tricks anyway.
        safe = "".join(c for c in key if c.isalnum() or c in "-_")
        return self.staging_dir / safe

    @staticmethod
    def _write_atomic(path: Path, data: bytes) -> None:
        path.parent.mkdir(parents=True, exist_ok=True)
        tmp = path.with_suffix(path.suffix + ".tmp")
        tmp.write_bytes(data)
        os.replace(tmp, path)

    def put(self, data: bytes) -> str:
        sha = sha256_hex(data)
        path = self._blob_path(sha)
        with self._lock:
            if not path.exists():
                self._write_atomic(path, data)
        return sha

    def get(self, sha: str) -> bytes:
        path = self._blob_path(sha)
        if not path.exists():
            raise NotFound(f"blob {sha} not found")
        return path.read_bytes()

    def exists(self, sha: str) -> bool:
        return self._blob_path(sha).exists()

    def delete(self, sha: str) -> None:
        path = self._blob_path(sha)
        with self._lock:
            if path.exists():
                path.unlink()

    def list_addresses(self) -> list[str]:
        return sorted(p.stem for p in self.blob_dir.glob("*/*.pdf"))

    def stage(self, key: str, data: bytes) -> str:
        with self._lock:
            self._write_atomic(self._staged_path(key), data)
        return sha256_hex(data)

    def staged_digest(self, key: str) -> Optional[str]:
        path = self._staged_path(key)
        if not path.exists():
            return None
        return sha256_hex(path.read_bytes())

    def discard_staged(self, key: str) -> None:
        path = self._staged_path(key)
        with self._lock:
            if path.exists():
                path.unlink()

    def promote_staged(self, key: str) -> str:
        path = self._staged_path(key)
        with self._lock:
            if not path.exists():
                raise NotFound(f"no staged bytes for {key}")
            data = path.read_bytes()
            sha = sha256_hex(data)
            blob_path = self._blob_path(sha)
            if not blob_path.exists():
                self._write_atomic(blob_path, data)
            path.unlink()
        return sha
