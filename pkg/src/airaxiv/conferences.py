"""Lightweight user-organized conferences.

A conference is a time window plus a theme. Curation selects public papers
that fall inside the window and whose vectors match the theme above a
threshold; authors can also submit their own papers to the track directly
while the window is open. Curation reruns on demand and whenever a paper
inside some window becomes public.
"""

from __future__ import annotations

from datetime import datetime, timedelta
from typing import Optional

import numpy as np

from .access import owns_paper
from .clock import Clock, utc_now
from .domain import Conference, Paper, Principal
from .errors import Conflict, Forbidden, NotFound, ValidationFailed
from .ids import IdFactory
from .recommend import Recommender, cosine_similarity
from .store import Store

DEFAULT_MATCH_THRESHOLD = 0.35


class ConferenceService:
    def __init__(
        self,
        store: Store,
        recommender: Recommender,
        ids: IdFactory,
        clock: Clock = utc_now,
        default_threshold: float = DEFAULT_MATCH_THRESHOLD,
    ):
        self._store = store
        self._recommender = recommender
        self._ids = ids
        self._clock = clock
        self._default_threshold = default_threshold

    # ------------------------------------------------------------------

    def create(
        self,
        principal: Principal,
        theme: str,
        description: str = "",
        starts_at: Optional[datetime] = None,
        ends_at: Optional[datetime] = None,
        match_threshold: Optional[float] = None,
    ) -> dict:
        now = self._clock()
        if starts_at is None:
            starts_at = now
        if ends_at is None:
            ends_at = starts_at + timedelta(days=30)
        if ends_at <= starts_at:
            raise ValidationFailed(
                f"ends_at must be after starts_at "
                f"({ends_at.isoformat()} <= {starts_at.isoformat()})",
                field_path="ends_at")
        theme_vector = self._recommender.embedder.embed(
            f"{theme}\n{description}".strip())
        conference = Conference(
            conference_id=self._ids.new_token("conf"),
            theme=theme,
            description=description,
            starts_at=starts_at,
            ends_at=ends_at,
            match_threshold=match_threshold,
            theme_vector=theme_vector.tolist(),
            created_by=principal.api_key_id,
        )
        self._store.put(conference)
        return self.view(conference)

    def require(self, conference_id: str) -> Conference:
        conference = self._store.get(Conference, conference_id)
        if conference is None:
            raise NotFound(f"unknown conference {conference_id}",
                           field_path="conference_id")
        return conference

    def view(self, conference: Conference) -> dict:
        return {
            "conference_id": conference.conference_id,
            "theme": conference.theme,
            "description": conference.description,
            "starts_at": conference.starts_at.isoformat(),
            "ends_at": conference.ends_at.isoformat(),
            "match_threshold": (conference.match_threshold
                                if conference.match_threshold is not None
                                else self._default_threshold),
            "track_submissions": list(conference.track_submissions),
            "curated": list(conference.curated),
            "created_by": conference.created_by,
        }

    def list_all(self) -> list[dict]:
        conferences = self._store.list_all(Conference)
        conferences.sort(key=lambda c: (c.starts_at, c.conference_id))
        return [self.view(c) for c in conferences]

    # ------------------------------------------------------------------

    def curate(self, conference_id: str) -> list[str]:
        """Recompute the curated set; replaces any previous one."""
        conference = self.require(conference_id)
        threshold = (conference.match_threshold
                     if conference.match_threshold is not None
                     else self._default_threshold)
        theme_vector = np.asarray(conference.theme_vector, dtype=np.float64)
        matches: list[tuple[float, str]] = []
        for paper in self._store.list_all(Paper):
            if paper.visibility != "public":
                continue
            if not any(conference.window_contains(v.submitted_at)
                       for v in paper.versions):
                continue
            vector = self._recommender.vector_for(paper.paper_id)
            if vector is None:
                continue
            similarity = cosine_similarity(theme_vector, vector)
            if similarity >= threshold:
                matches.append((similarity, paper.paper_id))
        matches.sort(key=lambda item: (-item[0], item[1]))
        curated = [paper_id for _, paper_id in matches]
        self._store.mutate(Conference, conference_id,
                           lambda c: c.model_copy(update={"curated": curated}))
        return curated

    def submit_to_track(self, principal: Principal, conference_id: str,
                        paper_id: str) -> dict:
        conference = self.require(conference_id)
        paper = self._store.get(Paper, paper_id)
        if paper is None:
            raise NotFound(f"unknown paper {paper_id}", field_path="paper_id")
        if not owns_paper(self._store, paper, principal):
            raise Forbidden("only the paper's owner may submit it to a track")
        now = self._clock()
        if not conference.window_contains(now):
            raise Conflict(
                f"conference window is closed "
                f"({conference.starts_at.isoformat()} to {conference.ends_at.isoformat()})")

        def add(current: Conference) -> Conference:
            if paper_id in current.track_submissions:
                return current
            return current.model_copy(update={
                "track_submissions": [*current.track_submissions, paper_id]})

        updated = self._store.mutate(Conference, conference_id, add)
        return self.view(updated)

    def on_paper_public(self, paper_id: str) -> None:
        """Re-curate every conference whose window covers this paper."""
        paper = self._store.get(Paper, paper_id)
        if paper is None:
            return
        for conference in self._store.list_all(Conference):
            if any(conference.window_contains(v.submitted_at)
                   for v in paper.versions):
                self.curate(conference.conference_id)

    def on_paper_hidden(self, paper_id: str) -> None:
        """Drop a no-longer-public paper from every curated set."""
        for conference in self._store.list_all(Conference):
            if paper_id not in conference.curated:
                continue
            self._store.mutate(Conference, conference.conference_id,
                               lambda c: c.model_copy(update={
                                   "curated": [p for p in c.curated if p != paper_id]}))
