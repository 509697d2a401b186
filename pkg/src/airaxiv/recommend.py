"""Embedding-based related-paper retrieval with optional provider reranking.

Public papers are indexed as the embedding of title + abstract + insights.
Search runs an exact cosine scan (the corpus is instance-scale), over-fetches
by a factor of five, then lets the text provider rerank against the caller's
interest profile when one exists; without a profile, pure cosine order wins.
"""

from __future__ import annotations

from typing import Optional, Sequence

import numpy as np

from .clock import Clock, utc_now
from .domain import IndexEntry, IntentProfile, Paper, UnderstandingEntry
from .errors import NotFound, ValidationFailed
from .prompting import PromptLibrary
from .providers import EmbeddingProvider, TextGenerationProvider, parse_float_output
from .store import Store
from .understanding import entry_id_for

OVERFETCH_FACTOR = 5
DEFAULT_TOP_K = 10


def cosine_similarity(u: np.ndarray, v: np.ndarray) -> float:
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if u.shape != v.shape:
        raise ValidationFailed(
            f"vector dimensions differ: {u.shape} vs {v.shape}")
    return float(np.dot(u, v))


class Recommender:
    def __init__(
        self,
        store: Store,
        embedder: EmbeddingProvider,
        text_provider: TextGenerationProvider,
        prompts: PromptLibrary,
        clock: Clock = utc_now,
        rerank_temperature: float = 0.1,
    ):
        self._store = store
        self.embedder = embedder
        self._text = text_provider
        self._prompts = prompts
        self._clock = clock
        self._rerank_temperature = rerank_temperature

    # ------------------------------------------------------------------
    # indexing

    def index_text(self, paper: Paper, insights: Sequence[str]) -> str:
        return "\n".join([paper.title, paper.abstract, *insights]).strip()

    def index_paper(self, paper_id: str, version: int) -> IndexEntry:
        paper = self._store.require(Paper, paper_id)
        if paper.visibility != "public":
            raise ValidationFailed(
                f"paper {paper_id} is {paper.visibility}; only public papers are indexed")
        entry = self._store.get(UnderstandingEntry, entry_id_for(paper_id, version))
        if entry is None:
            raise ValidationFailed(
                f"paper {paper_id} v{version} has no understanding record to index")
        vector = self.embedder.embed(self.index_text(paper, entry.record.insights))
        index_entry = IndexEntry(paper_id=paper_id, vector=vector.tolist(),
                                 updated_at=self._clock())
        self._store.replace(index_entry)
        return index_entry

    def remove(self, paper_id: str) -> None:
        self._store.delete(IndexEntry, paper_id)

    def vector_for(self, paper_id: str) -> Optional[np.ndarray]:
        """Indexed vector if present, else a freshly computed one."""
        entry = self._store.get(IndexEntry, paper_id)
        if entry is not None:
            return np.asarray(entry.vector, dtype=np.float64)
        paper = self._store.get(Paper, paper_id)
        if paper is None:
            return None
        return self.embedder.embed(
            self.index_text(paper, self._insights_of(paper_id)))

    def indexed_ids(self) -> set[str]:
        return {entry.paper_id for entry in self._store.list_all(IndexEntry)}

    # ------------------------------------------------------------------
    # search

    def search_related(
        self,
        api_key_id: Optional[str] = None,
        paper_id: Optional[str] = None,
        query: Optional[str] = None,
        top_k: int = DEFAULT_TOP_K,
    ) -> list[dict]:
        if (paper_id is None) == (query is None):
            raise ValidationFailed(
                "provide exactly one of paper_id or query")
        if not 1 <= top_k <= 100:
            raise ValidationFailed("top_k must be between 1 and 100",
                                   field_path="top_k")
        if paper_id is not None:
            source = self._store.get(IndexEntry, paper_id)
            if source is not None:
                query_vector = np.asarray(source.vector, dtype=np.float64)
            else:
                # Known but not-yet-indexed papers still deserve results.
                paper = self._store.get(Paper, paper_id)
                if paper is None:
                    raise NotFound(f"unknown paper {paper_id}", field_path="paper_id")
                query_vector = self.embedder.embed(
                    self.index_text(paper, self._insights_of(paper_id)))
        else:
            if not query.strip():
                raise ValidationFailed("query must be non-empty", field_path="query")
            query_vector = self.embedder.embed(query)

        scored: list[tuple[float, str]] = []
        for entry in self._store.list_all(IndexEntry):
            if entry.paper_id == paper_id:
                continue  # a paper never recommends itself
            score = cosine_similarity(query_vector,
                                      np.asarray(entry.vector, dtype=np.float64))
            scored.append((score, entry.paper_id))
        scored.sort(key=lambda item: (-item[0], item[1]))
        candidates = scored[: OVERFETCH_FACTOR * top_k]

        profile = (self._store.get(IntentProfile, api_key_id)
                   if api_key_id is not None else None)
        if profile is not None and candidates:
            candidates = self._rerank(profile, candidates)
        results = []
        for score, candidate_id in candidates[:top_k]:
            row = {"paper_id": candidate_id, "score": round(score, 6)}
            paper = self._store.get(Paper, candidate_id)
            if paper is not None:
                row["title"] = paper.title
            results.append(row)
        return results

    def _insights_of(self, paper_id: str) -> list[str]:
        paper = self._store.require(Paper, paper_id)
        entry = self._store.get(
            UnderstandingEntry, entry_id_for(paper_id, paper.latest_version.version))
        return list(entry.record.insights) if entry else []

    def _rerank(self, profile: IntentProfile,
                candidates: list[tuple[float, str]]) -> list[tuple[float, str]]:
        reranked = []
        for _, candidate_id in candidates:
            paper = self._store.get(Paper, candidate_id)
            payload = {
                "statements": list(profile.interest_statements),
                "candidate": {
                    "title": paper.title if paper else candidate_id,
                    "abstract": paper.abstract if paper else "",
                },
            }
            prompt = self._prompts.render("rerank", payload)
            score = parse_float_output(
                self._text.complete(prompt, self._rerank_temperature))
            reranked.append((min(max(score, 0.0), 1.0), candidate_id))
        reranked.sort(key=lambda item: (-item[0], item[1]))
        return reranked

    # ------------------------------------------------------------------
    # intent profiles

    def update_profile(self, api_key_id: str,
                       interest_statements: Sequence[str]) -> IntentProfile:
        statements = [s.strip() for s in interest_statements]
        if not statements or any(not s for s in statements):
            raise ValidationFailed(
                "interest_statements must be 1..20 non-empty strings",
                field_path="interest_statements")
        if len(statements) > 20:
            raise ValidationFailed(
                "at most 20 interest statements are kept",
                field_path="interest_statements")
        vectors = np.stack([self.embedder.embed(s) for s in statements])
        mean = vectors.mean(axis=0)
        norm = float(np.linalg.norm(mean))
        if norm == 0.0:
            mean = vectors[0]
        else:
            mean = mean / norm
        profile = IntentProfile(
            api_key_id=api_key_id,
            interest_statements=statements,
            profile_vector=mean.tolist(),
            updated_at=self._clock(),
        )
        self._store.replace(profile)
        return profile

    def get_profile(self, api_key_id: str) -> Optional[IntentProfile]:
        return self._store.get(IntentProfile, api_key_id)

    def delete_profile(self, api_key_id: str) -> None:
        self._store.delete(IntentProfile, api_key_id)
