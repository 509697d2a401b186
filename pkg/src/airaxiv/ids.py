"""Sortable 26-character record ids and opaque tokens.

Ids are ULID-shaped: a 48-bit millisecond timestamp followed by 80 bits of
randomness, encoded as 26 Crockford base32 characters. Lexicographic order
therefore recovers creation order. The factory is monotonic within a process:
ids minted in the same millisecond still sort in creation order.
"""

from __future__ import annotations

import secrets
import threading
from random import Random
from typing import Optional

from .clock import Clock, utc_now

ALPHABET = "0123456789ABCDEFGHJKMNPQRSTVWXYZ"
ID_LENGTH = 26
_DECODE = {ch: i for i, ch in enumerate(ALPHABET)}
_RANDOM_BITS = 80
_MAX_RANDOM = (1 << _RANDOM_BITS) - 1


def _encode(value: int) -> str:
    chars = ["0"] * ID_LENGTH
    for i in range(ID_LENGTH - 1, -1, -1):
        chars[i] = ALPHABET[value & 0b11111]
        value >>= 5
    return "".join(chars)


def is_valid_id(s: str) -> bool:
    return isinstance(s, str) and len(s) == ID_LENGTH and all(c in _DECODE for c in s)


def id_timestamp_ms(s: str) -> int:
    """Millisecond timestamp embedded in an id; raises ValueError on malformed input."""
    if not is_valid_id(s):
        raise ValueError(f"malformed id: {s!r}")
    value = 0
    for c in s:
        value = (value << 5) | _DECODE[c]
    return value >> _RANDOM_BITS


class IdFactory:
    """Thread-safe monotonic id generator with injectable clock and RNG."""

    def __init__(self, clock: Optional[Clock] = None, rng: Optional[Random] = None):
        self._clock = clock or utc_now
        self._rng = rng
        self._lock = threading.Lock()
        self._last_ms = -1
        self._last_rand = 0

    def _random80(self) -> int:
        if self._rng is not None:
            return self._rng.getrandbits(_RANDOM_BITS)
        return int.from_bytes(secrets.token_bytes(10), "big")

    def new_id(self) -> str:
        with self._lock:
            now_ms = int(self._clock().timestamp() * 1000)
            if now_ms <= self._last_ms:
                ms = self._last_ms
                rand = self._last_rand + 1
                if rand > _MAX_RANDOM:
                    ms += 1
                    rand = self._random80()
            else:
                ms = now_ms
                rand = self._random80()
            self._last_ms = ms
            self._last_rand = rand
        return _encode((ms << _RANDOM_BITS) | rand)

    def new_token(self, prefix: str) -> str:
        """Opaque prefixed token (for one-time pdf_file_id values and API keys)."""
        return f"{prefix}_{self.new_id().lower()}"
