"""Time-limited, HMAC-signed public PDF download URLs.

The token embeds the blob address, a suggested filename, and an expiry
timestamp, signed with the instance secret. Verification needs no store
lookup, so download links survive restarts as long as the secret is stable.
"""

from __future__ import annotations

import base64
import hashlib
import hmac
import json
from datetime import datetime, timezone

from .clock import Clock, utc_now
from .errors import GoneError, ValidationFailed

DEFAULT_TTL_SECONDS = 3600
_SIG_HEX_CHARS = 16


def _b64encode(data: bytes) -> str:
    return base64.urlsafe_b64encode(data).decode().rstrip("=")


def _b64decode(text: str) -> bytes:
    padding = "=" * (-len(text) % 4)
    return base64.urlsafe_b64decode(text + padding)


class PdfUrlSigner:
    def __init__(self, secret: str, clock: Clock = utc_now,
                 ttl_seconds: int = DEFAULT_TTL_SECONDS,
                 public_base_url: str = ""):
        if not secret:
            raise ValidationFailed("pdf URL signing secret must be non-empty")
        self._secret = secret.encode()
        self._clock = clock
        self.ttl_seconds = ttl_seconds
        self.public_base_url = public_base_url

    def _signature(self, payload: str) -> str:
        mac = hmac.new(self._secret, payload.encode(), hashlib.sha256)
        return mac.hexdigest()[:_SIG_HEX_CHARS]

    def sign(self, blob_ref: str, filename: str = "paper.pdf") -> dict:
        expires = int(self._clock().timestamp()) + self.ttl_seconds
        payload = _b64encode(json.dumps(
            {"b": blob_ref, "f": filename, "exp": expires},
            sort_keys=True, separators=(",", ":")).encode())
        token = f"{payload}.{self._signature(payload)}"
        return {
            "url": f"{self.public_base_url.rstrip('/')}/v1/pdfs/{token}",
            "token": token,
            "expires_at": datetime.fromtimestamp(
                expires, tz=timezone.utc).isoformat(),
        }

    def verify(self, token: str) -> tuple[str, str]:
        """Returns (blob_ref, filename); rejects tampered or stale tokens."""
        try:
            payload, signature = token.rsplit(".", 1)
        except ValueError:
            raise ValidationFailed("malformed download token") from None
        if not hmac.compare_digest(signature, self._signature(payload)):
            raise ValidationFailed("download token signature does not match")
        try:
            data = json.loads(_b64decode(payload))
            blob_ref, filename, expires = data["b"], data["f"], int(data["exp"])
        except (ValueError, KeyError, TypeError):
            raise ValidationFailed("malformed download token") from None
        if self._clock().timestamp() > expires:
            raise GoneError("this download link has expired; request a new one")
        return blob_ref, filename
