"""Threaded comments on papers, for humans and AI scientists alike.

Comments are immutable once posted; moderation is a per-comment hidden flag.
Threads nest to a bounded depth and are returned as a forest with siblings
in creation order.
"""

from __future__ import annotations

from typing import Optional

from .access import require_visible
from .clock import Clock, utc_now
from .domain import MAX_COMMENT_DEPTH, Comment, Paper, Principal
from .errors import NotFound, ValidationFailed
from .ids import IdFactory
from .store import Store


class CommentService:
    def __init__(self, store: Store, ids: IdFactory, clock: Clock = utc_now):
        self._store = store
        self._ids = ids
        self._clock = clock

    def _depth_of(self, comment: Comment, by_id: dict[str, Comment]) -> int:
        depth = 0
        current = comment
        while current.parent_comment_id is not None:
            current = by_id[current.parent_comment_id]
            depth += 1
        return depth

    def submit(
        self,
        principal: Principal,
        paper_id: str,
        content: str,
        ai_scientist_name: Optional[str] = None,
        parent_comment_id: Optional[str] = None,
    ) -> dict:
        paper = self._store.get(Paper, paper_id)
        if paper is None:
            raise NotFound(f"unknown paper {paper_id}", field_path="paper_id")
        if paper.visibility != "public":
            # Mirror the read-side rule for strangers; owners get the reason.
            require_visible(self._store, paper_id, principal)
            raise ValidationFailed(
                "comments are only accepted on public papers")
        if not 1 <= len(content) <= 10000:
            raise ValidationFailed(
                f"content must be 1..10000 characters, got {len(content)}",
                field_path="content")

        if parent_comment_id is not None:
            parent = self._store.get(Comment, parent_comment_id)
            if parent is None:
                raise ValidationFailed(
                    f"unknown parent comment {parent_comment_id}",
                    field_path="parent_comment_id")
            if parent.paper_id != paper_id:
                raise ValidationFailed(
                    "parent comment belongs to a different paper",
                    field_path="parent_comment_id")
            comments = {c.comment_id: c for c in self._store.list_all(
                Comment, lambda c: c.paper_id == paper_id)}
            if self._depth_of(parent, comments) >= MAX_COMMENT_DEPTH:
                raise ValidationFailed(
                    f"reply depth limit of {MAX_COMMENT_DEPTH} reached",
                    field_path="parent_comment_id")

        display = (ai_scientist_name or "").strip() or principal.name
        comment = Comment(
            comment_id=self._ids.new_token("cmt"),
            paper_id=paper_id,
            content=content,
            author_display=display,
            ai_scientist_name=(ai_scientist_name or "").strip() or None,
            parent_comment_id=parent_comment_id,
            created_at=self._clock(),
        )
        self._store.put(comment)
        return self._view(comment)

    def _view(self, comment: Comment) -> dict:
        view = {
            "comment_id": comment.comment_id,
            "paper_id": comment.paper_id,
            "content": comment.content,
            "author_display": comment.author_display,
            "created_at": comment.created_at.isoformat(),
        }
        if comment.ai_scientist_name:
            view["ai_scientist_name"] = comment.ai_scientist_name
        if comment.parent_comment_id:
            view["parent_comment_id"] = comment.parent_comment_id
        return view

    def list_flat(self, paper_id: str) -> list[Comment]:
        comments = self._store.list_all(
            Comment, lambda c: c.paper_id == paper_id and not c.hidden)
        comments.sort(key=lambda c: (c.created_at, c.comment_id))
        return comments

    def forest(self, paper_id: str,
               principal: Optional[Principal] = None) -> list[dict]:
        """Nested thread view; siblings ordered by created_at, id tiebreak."""
        require_visible(self._store, paper_id, principal)
        comments = self.list_flat(paper_id)
        nodes = {c.comment_id: dict(self._view(c), replies=[]) for c in comments}
        roots: list[dict] = []
        for comment in comments:
            node = nodes[comment.comment_id]
            parent_id = comment.parent_comment_id
            if parent_id is not None and parent_id in nodes:
                nodes[parent_id]["replies"].append(node)
            else:
                roots.append(node)
        return roots

    def count(self, paper_id: str) -> int:
        return len(self.list_flat(paper_id))
