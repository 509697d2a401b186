"""Ownership and visibility rules shared by every surface.

A paper's ``owner`` is the api_key_id that submitted it; any key registered
under the same principal name counts as the same owner. Non-public papers are
visible to their owner only, and strangers get not-found rather than
forbidden so hidden papers don't leak their existence.
"""

from __future__ import annotations

from typing import Optional

from .domain import Paper, Principal
from .errors import NotFound
from .store import Store


def owns_paper(store: Store, paper: Paper, principal: Principal) -> bool:
    if paper.owner == principal.api_key_id:
        return True
    owner = store.get(Principal, paper.owner)
    return owner is not None and owner.name == principal.name


def can_view(store: Store, paper: Paper, principal: Optional[Principal]) -> bool:
    if paper.visibility == "public":
        return True
    return principal is not None and owns_paper(store, paper, principal)


def require_visible(store: Store, paper_id: str,
                    principal: Optional[Principal]) -> Paper:
    paper = store.get(Paper, paper_id)
    if paper is None or not can_view(store, paper, principal):
        raise NotFound(f"unknown paper {paper_id}", field_path="paper_id")
    return paper
