"""Pluggable provider interfaces: text generation, document parsing, embeddings.

The platform never talks to a model or parser directly; it goes through these
interfaces. The bundled mock/plaintext implementations are deterministic, so
a whole instance can run offline and every pipeline test is reproducible.
"""

from __future__ import annotations

import json
import re
from abc import ABC, abstractmethod

import numpy as np
from pydantic import BaseModel

from ..errors import ProviderFailure


class Section(BaseModel):
    heading: str
    text: str


class ParsedDocument(BaseModel):
    text: str
    sections: list[Section] = []


class TextGenerationProvider(ABC):
    name: str = "text"

    @abstractmethod
    def complete(self, prompt: str, temperature: float) -> str: ...


class DocumentParserProvider(ABC):
    name: str = "parser"

    @abstractmethod
    def parse(self, pdf_bytes: bytes) -> ParsedDocument: ...


class EmbeddingProvider(ABC):
    name: str = "embedding"
    dimension: int = 384

    @abstractmethod
    def embed(self, text: str) -> np.ndarray:
        """L2-normalized vector of length ``dimension``."""


_FENCE_RE = re.compile(r"^```[a-zA-Z]*\n(.*)\n```$", re.DOTALL)


def parse_json_output(text: str):
    """Parse a provider's JSON reply, tolerating markdown code fences."""
    candidate = text.strip()
    fenced = _FENCE_RE.match(candidate)
    if fenced:
        candidate = fenced.group(1).strip()
    try:
        return json.loads(candidate)
    except json.JSONDecodeError as exc:
        raise ProviderFailure(f"provider returned malformed JSON: {exc}") from exc


def parse_float_output(text: str) -> float:
    """Parse a bare-number provider reply (used for relevance/rerank scores)."""
    candidate = text.strip()
    try:
        return float(candidate)
    except ValueError:
        pass
    data = parse_json_output(candidate)
    if isinstance(data, (int, float)):
        return float(data)
    if isinstance(data, dict):
        for key in ("relevance", "score", "value"):
            if key in data and isinstance(data[key], (int, float)):
                return float(data[key])
    raise ProviderFailure(f"provider returned a non-numeric score: {text[:80]!r}")
