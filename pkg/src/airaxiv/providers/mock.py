"""Deterministic offline providers.

``MockTextProvider`` dispatches on the ``TASK:`` tag of the rendered prompt
and derives every answer from a seeded hash of (seed, prompt, temperature),
so identical calls always yield identical output and no network is needed.
``PlainTextPdfParser`` reads the minimal PDFs produced by :mod:`..pdfgen`.
``MockEmbeddingProvider`` hashes tokens into a fixed-dimension unit vector.
"""

from __future__ import annotations

import hashlib
import re

import numpy as np

from . import DocumentParserProvider, EmbeddingProvider, ParsedDocument, Section, TextGenerationProvider
from .. import pdfgen
from ..errors import ParseFailure
from ..prompting import extract_input_payload, extract_task_tag

REJECT_TRIGGER = "UNSAFE-CONTENT-REJECT"
FLAG_TRIGGER = "UNSAFE-CONTENT-FLAG"

_WORD_RE = re.compile(r"[a-z0-9][a-z0-9-]*")

_STOPWORDS = frozenset("""
a an and are as at be but by for from has have in is it its of on or that the
this to was we were which with our their they you your not can will than then
these those over under between both each such only also more most via using
used use based new paper papers study results method methods approach section
""".split())


def tokenize(text: str) -> list[str]:
    return _WORD_RE.findall(text.lower())


def token_overlap(a: str, b: str) -> float:
    """Jaccard overlap of the two texts' token sets, in [0, 1]."""
    sa, sb = set(tokenize(a)), set(tokenize(b))
    if not sa or not sb:
        return 0.0
    return len(sa & sb) / len(sa | sb)


def _strings_of(value) -> list[str]:
    if isinstance(value, str):
        return [value]
    if isinstance(value, dict):
        out = []
        for key in sorted(value):
            out.extend(_strings_of(value[key]))
        return out
    if isinstance(value, list):
        out = []
        for item in value:
            out.extend(_strings_of(item))
        return out
    return []


def _flat_text(value) -> str:
    return " ".join(_strings_of(value))


_SENTENCE_RE = re.compile(r"[^.!?\n]+[.!?]?")


def _sentences(text: str) -> list[str]:
    out = []
    for match in _SENTENCE_RE.finditer(text):
        sentence = match.group(0).strip()
        if len(sentence) >= 3:
            out.append(sentence)
    return out


class MockTextProvider(TextGenerationProvider):
    name = "mock"

    def __init__(self, seed: int = 0):
        self.seed = seed

    def _digest(self, *parts: object) -> bytes:
        h = hashlib.sha256(str(self.seed).encode())
        for part in parts:
            h.update(b"\x1f")
            h.update(str(part).encode("utf-8", "replace"))
        return h.digest()

    def complete(self, prompt: str, temperature: float) -> str:
        import json

        task = extract_task_tag(prompt)
        payload = extract_input_payload(prompt)
        digest = self._digest(prompt, f"{temperature:.4f}")
        handler = getattr(self, f"_task_{task}", None)
        if handler is None:
            return f"MOCK:{digest.hex()[:16]}"
        result = handler(payload, digest)
        if isinstance(result, str):
            return result
        return json.dumps(result, ensure_ascii=False)

    # ------------------------------------------------------------------
    # Task handlers. Each returns a dict (serialized to JSON) or a string.

    def _task_safety_screen(self, payload: dict, digest: bytes):
        text = _flat_text(payload)
        if REJECT_TRIGGER in text:
            return {"verdict": "reject",
                    "reasons": [f"matched trigger phrase {REJECT_TRIGGER!r}"]}
        if FLAG_TRIGGER in text:
            return {"verdict": "flag",
                    "reasons": [f"matched trigger phrase {FLAG_TRIGGER!r}"]}
        return {"verdict": "pass", "reasons": []}

    def _topic_words(self, payload: dict, limit: int) -> list[str]:
        counts: dict[str, int] = {}
        order: dict[str, int] = {}
        for token in tokenize(_flat_text(payload)):
            if len(token) < 3 or token in _STOPWORDS or token.isdigit():
                continue
            counts[token] = counts.get(token, 0) + 1
            order.setdefault(token, len(order))
        ranked = sorted(counts, key=lambda w: (-counts[w], order[w]))
        return ranked[:limit]

    def _task_extract_keywords(self, payload: dict, digest: bytes):
        words = self._topic_words(payload, limit=9)
        while len(words) < 3:
            words.append(f"topic-{len(words) + 1}")
        roots = [{"label": w, "children": []} for w in words[:3]]
        for i, word in enumerate(words[3:9]):
            roots[i % 3]["children"].append({"label": word, "children": []})
        return {"keywords": roots}

    def _task_distill_insights(self, payload: dict, digest: bytes):
        text = payload.get("text") or ""
        abstract = payload.get("abstract") or ""
        sentences = _sentences(text) or _sentences(abstract)
        insights = [s[:400] for s in sentences[:3]]
        return {"insights": insights}

    def _task_review_context(self, payload: dict, digest: bytes):
        title = payload.get("title") or "the submission"
        body = " ".join(filter(None, [payload.get("abstract"), payload.get("text")]))
        sentences = _sentences(body)

        def pick(markers: tuple[str, ...], fallback_index: int, default: str) -> str:
            for sentence in sentences:
                low = sentence.lower()
                if any(m in low for m in markers):
                    return sentence[:400]
            if len(sentences) > fallback_index:
                return sentences[fallback_index][:400]
            return default

        return {
            "problem": sentences[0][:400] if sentences else f"The problem studied in {title}.",
            "method": pick(("method", "approach", "propose", "introduce", "algorithm"),
                           1, f"The approach taken in {title}."),
            "claims": pick(("show", "demonstrat", "achiev", "result", "improve", "outperform"),
                           2, f"The claims made in {title}."),
            "contributions": (f"{title}: " + sentences[0])[:400] if sentences
                             else f"The contribution of {title}.",
        }

    def _task_search_queries(self, payload: dict, digest: bytes):
        n = int(payload.get("n") or 5)
        title = (payload.get("title") or "").strip()
        seeds: list[str] = []
        if title:
            seeds.append(title)
        for value in payload.get("keywords") or []:
            if isinstance(value, str) and value.strip():
                seeds.append(f"{value.strip()} {title}".strip())
        for key in ("problem", "method", "claims"):
            value = payload.get(key)
            if isinstance(value, str) and value.strip():
                words = " ".join(tokenize(value)[:6])
                if words:
                    seeds.append(words)
        queries: list[str] = []
        seen: set[str] = set()
        for candidate in seeds:
            norm = candidate.lower()
            if norm not in seen:
                seen.add(norm)
                queries.append(candidate)
            if len(queries) == n:
                break
        i = 1
        while len(queries) < n:
            filler = f"{title or 'open research'} variant {i}"
            if filler.lower() not in seen:
                seen.add(filler.lower())
                queries.append(filler)
            i += 1
        return {"queries": queries[:n]}

    def _task_relevance(self, payload: dict, digest: bytes):
        score = token_overlap(_flat_text(payload.get("context") or {}),
                              _flat_text(payload.get("candidate") or {}))
        return f"{score:.4f}"

    def _task_rerank(self, payload: dict, digest: bytes):
        score = token_overlap(_flat_text(payload.get("statements") or []),
                              _flat_text(payload.get("candidate") or {}))
        return f"{score:.4f}"

    def _task_summarize_related(self, payload: dict, digest: bytes):
        title = payload.get("title") or "the candidate paper"
        abstract = (payload.get("abstract") or "").strip()
        base = f"Related work summary of '{title}'"
        if abstract:
            return f"{base}: {abstract[:240]}"
        return f"{base}: no abstract available."

    def _task_generate_review(self, payload: dict, digest: bytes):
        from ..domain import REVIEW_DIMENSIONS

        title = payload.get("title") or "the submission"
        related = payload.get("related") or []
        scores = {}
        for i, dim in enumerate(REVIEW_DIMENSIONS):
            # 2.0 .. 4.5 on the half-point grid, one digest byte per dimension
            scores[dim] = (4 + digest[i] % 6) * 0.5
        n_related = len(related) if isinstance(related, list) else 0
        return {
            "dimension_scores": scores,
            "strengths": [
                f"Clear articulation of the problem in '{title}'.",
                "The method is described in enough detail to follow.",
            ],
            "weaknesses": [
                f"Positioning against the {n_related} related works found could be sharper.",
                "Evidence for the strongest claim is thin.",
            ],
            "revision_suggestions": [
                "Add a direct comparison against the closest related work.",
                "Report variance across repeated runs for the main result.",
                f"Tighten the abstract so the contribution of '{title}' is stated first.",
            ],
        }


class PlainTextPdfParser(DocumentParserProvider):
    """Parses the uncompressed single-font PDFs this project generates.

    Lines beginning with ``## `` are treated as section headings.
    """

    name = "plaintext-pdf"

    def parse(self, pdf_bytes: bytes) -> ParsedDocument:
        try:
            lines = pdfgen.extract_text_lines(pdf_bytes)
        except ValueError as exc:
            raise ParseFailure(str(exc)) from exc
        cleaned: list[str] = []
        sections: list[Section] = []
        current_heading: str | None = None
        current_lines: list[str] = []

        def flush():
            nonlocal current_heading, current_lines
            body = "\n".join(current_lines).strip()
            if current_heading is not None or body:
                sections.append(Section(heading=current_heading or "", text=body))
            current_heading, current_lines = None, []

        for line in lines:
            if line.startswith("## "):
                flush()
                current_heading = line[3:].strip()
                cleaned.append(current_heading)
            else:
                current_lines.append(line)
                cleaned.append(line)
        flush()
        return ParsedDocument(text="\n".join(cleaned).strip(), sections=sections)


class MockEmbeddingProvider(EmbeddingProvider):
    """Hashed bag-of-words embedding: stable, offline, overlap-sensitive."""

    name = "mock-embedding"

    def __init__(self, dimension: int = 384):
        self.dimension = dimension

    def embed(self, text: str) -> np.ndarray:
        vec = np.zeros(self.dimension, dtype=np.float64)
        for token in tokenize(text):
            d = hashlib.sha256(token.encode()).digest()
            index = int.from_bytes(d[:4], "big") % self.dimension
            sign = 1.0 if d[4] & 1 else -1.0
            vec[index] += sign
        norm = float(np.linalg.norm(vec))
        if norm == 0.0:
            vec[0] = 1.0
            return vec
        return vec / norm
