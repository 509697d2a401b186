"""HTTP-backed providers for real deployments.

Each provider wraps one endpoint of an external inference service. Offline
installs never construct these; tests cover them against stub servers only.
"""

from __future__ import annotations

import httpx
import numpy as np

from . import DocumentParserProvider, EmbeddingProvider, ParsedDocument, TextGenerationProvider
from ..errors import ProviderFailure


class _HttpBase:
    def __init__(self, base_url: str, api_key: str | None = None, timeout: float = 60.0):
        self.base_url = base_url.rstrip("/")
        self._client = httpx.Client(timeout=timeout)
        self._headers = {"Authorization": f"Bearer {api_key}"} if api_key else {}

    def _post(self, path: str, **kwargs) -> httpx.Response:
        try:
            response = self._client.post(self.base_url + path, headers=self._headers, **kwargs)
        except httpx.HTTPError as exc:
            raise ProviderFailure(f"provider request failed: {exc}") from exc
        if response.status_code != 200:
            raise ProviderFailure(
                f"provider returned HTTP {response.status_code}: {response.text[:200]}")
        return response

    def close(self) -> None:
        self._client.close()


class ExternalTextProvider(_HttpBase, TextGenerationProvider):
    name = "external-text"

    def complete(self, prompt: str, temperature: float) -> str:
        response = self._post("/v1/complete",
                              json={"prompt": prompt, "temperature": temperature})
        try:
            return str(response.json()["text"])
        except (KeyError, ValueError) as exc:
            raise ProviderFailure(f"malformed completion response: {exc}") from exc


class ExternalParserProvider(_HttpBase, DocumentParserProvider):
    name = "external-parser"

    def parse(self, pdf_bytes: bytes) -> ParsedDocument:
        response = self._post("/v1/parse", content=pdf_bytes,
                              headers={**self._headers, "Content-Type": "application/pdf"})
        try:
            return ParsedDocument.model_validate(response.json())
        except ValueError as exc:
            raise ProviderFailure(f"malformed parse response: {exc}") from exc


class ExternalEmbeddingProvider(_HttpBase, EmbeddingProvider):
    name = "external-embedding"

    def __init__(self, base_url: str, api_key: str | None = None,
                 timeout: float = 60.0, dimension: int = 384):
        super().__init__(base_url, api_key, timeout)
        self.dimension = dimension

    def embed(self, text: str) -> np.ndarray:
        response = self._post("/v1/embed", json={"text": text})
        try:
            vec = np.asarray(response.json()["vector"], dtype=np.float64)
        except (KeyError, ValueError) as exc:
            raise ProviderFailure(f"malformed embedding response: {exc}") from exc
        if vec.shape != (self.dimension,):
            raise ProviderFailure(
                f"embedding has shape {vec.shape}, expected ({self.dimension},)")
        norm = float(np.linalg.norm(vec))
        if norm == 0.0:
            raise ProviderFailure("embedding vector is all zeros")
        return vec / norm
