"""API-key principals, usage accounting, and a per-key token bucket.

A principal *is* an API key. In ``open`` mode any presented key is
auto-registered on first use, which keeps local and CI instances friction
free; ``static`` mode accepts only configured keys. Authentication never
bumps the usage counter; ``touch`` does, once per authenticated call, and
applies the rate limit.
"""

from __future__ import annotations

import threading
from typing import Optional, Sequence

from .clock import Clock, utc_now
from .domain import OWNER_KINDS, Principal
from .errors import AuthFailed, RateLimited, ValidationFailed
from .ids import IdFactory
from .store import Store

DEFAULT_RATE_PER_SEC = 200.0
DEFAULT_BURST = 1000.0


class AccountService:
    def __init__(
        self,
        store: Store,
        ids: IdFactory,
        clock: Clock = utc_now,
        mode: str = "open",
        default_owner_kind: str = "human",
        static_keys: Optional[Sequence[dict]] = None,
        rate_limit_enabled: bool = True,
        rate_per_sec: float = DEFAULT_RATE_PER_SEC,
        burst: float = DEFAULT_BURST,
    ):
        if mode not in ("open", "static"):
            raise ValidationFailed(f"auth mode must be open or static, got {mode!r}")
        self._store = store
        self._ids = ids
        self._clock = clock
        self._mode = mode
        self._default_owner_kind = default_owner_kind
        self._rate_limit_enabled = rate_limit_enabled
        self._rate = rate_per_sec
        self._burst = burst
        self._buckets: dict[str, tuple[float, float]] = {}
        self._bucket_lock = threading.Lock()
        for entry in static_keys or []:
            key = entry["key"]
            if self._store.get(Principal, key) is None:
                self._store.put(Principal(
                    api_key_id=key,
                    name=entry.get("name", key),
                    owner_kind=entry.get("owner_kind", default_owner_kind),
                ))

    # ------------------------------------------------------------------

    def authenticate(self, api_key: Optional[str]) -> Principal:
        """Resolve a presented key to its principal; no usage bump."""
        if not api_key or not api_key.strip():
            raise AuthFailed("an API key is required")
        api_key = api_key.strip()
        principal = self._store.get(Principal, api_key)
        if principal is not None:
            return principal
        if self._mode != "open":
            raise AuthFailed("unknown API key")
        principal = Principal(
            api_key_id=api_key,
            name=api_key,
            owner_kind=self._default_owner_kind,
        )
        try:
            self._store.put(principal)
        except Exception:
            principal = self._store.require(Principal, api_key)
        return principal

    def touch(self, api_key_id: str) -> Principal:
        """Count one authenticated call and enforce the rate limit."""
        self._check_rate(api_key_id)
        return self._store.mutate(
            Principal, api_key_id,
            lambda p: p.model_copy(update={"usage_count": p.usage_count + 1}))

    def _check_rate(self, api_key_id: str) -> None:
        if not self._rate_limit_enabled:
            return
        now = self._clock().timestamp()
        with self._bucket_lock:
            tokens, last = self._buckets.get(api_key_id, (self._burst, now))
            tokens = min(self._burst, tokens + max(0.0, now - last) * self._rate)
            if tokens < 1.0:
                self._buckets[api_key_id] = (tokens, now)
                raise RateLimited(
                    "rate limit exceeded for this API key; retry shortly")
            self._buckets[api_key_id] = (tokens - 1.0, now)

    # ------------------------------------------------------------------

    def create_key(self, name: str, owner_kind: Optional[str] = None) -> dict:
        cleaned = name.strip()
        if not cleaned:
            raise ValidationFailed("name must be non-empty", field_path="name")
        if owner_kind is not None and owner_kind not in OWNER_KINDS:
            raise ValidationFailed(
                f"owner_kind must be one of {', '.join(OWNER_KINDS)}, "
                f"got {owner_kind!r}", field_path="owner_kind")
        principal = Principal(
            api_key_id=self._ids.new_token("key"),
            name=cleaned,
            owner_kind=owner_kind or self._default_owner_kind,
        )
        self._store.put(principal)
        return {"api_key": principal.api_key_id, "name": principal.name,
                "owner": principal.owner_kind}

    def bump_paper_count(self, api_key_id: str) -> None:
        self._store.mutate(
            Principal, api_key_id,
            lambda p: p.model_copy(update={"paper_count": p.paper_count + 1}))

    def info(self, principal: Principal) -> dict:
        current = self._store.require(Principal, principal.api_key_id)
        return {
            "name": current.name,
            "usage_count": current.usage_count,
            "paper_count": current.paper_count,
            "owner": current.owner_kind,
        }
