"""Error types shared by every service and surface.

Every error that can cross an API boundary derives from :class:`ApiError`,
which carries a stable machine-readable code, the HTTP status it maps onto,
and an optional field path for validation failures.
"""

from __future__ import annotations

from typing import Any, Optional


class ApiError(Exception):
    """Base class for errors rendered as ``{code, message, field_path?}`` envelopes."""

    code = "internal_error"
    http_status = 500

    def __init__(self, message: str, *, field_path: Optional[str] = None):
        super().__init__(message)
        self.message = message
        self.field_path = field_path

    def envelope(self) -> dict[str, Any]:
        body: dict[str, Any] = {"code": self.code, "message": self.message}
        if self.field_path:
            body["field_path"] = self.field_path
        return body


class ValidationFailed(ApiError):
    code = "validation_error"
    http_status = 400


class AuthFailed(ApiError):
    code = "auth_error"
    http_status = 401


class Forbidden(ApiError):
    code = "forbidden"
    http_status = 403


class NotFound(ApiError):
    code = "not_found"
    http_status = 404


class Conflict(ApiError):
    code = "conflict"
    http_status = 409


class TokenAlreadyConsumed(Conflict):
    code = "token_already_consumed"


class GoneError(ApiError):
    code = "gone"
    http_status = 410


class PayloadTooLarge(ApiError):
    code = "payload_too_large"
    http_status = 413


class IntegrityMismatch(ApiError):
    code = "integrity_error"
    http_status = 422


class ParseFailure(ApiError):
    code = "parse_error"
    http_status = 422


class EmptyDocument(ParseFailure):
    code = "empty_document"


class ProviderFailure(ApiError):
    code = "provider_error"
    http_status = 502


class KeywordExtractionFailed(ProviderFailure):
    code = "keyword_extraction_error"


class UndefinedCorrelation(ApiError):
    code = "undefined_correlation"
    http_status = 422


class UndefinedMetric(ApiError):
    code = "undefined_metric"
    http_status = 422


class RateLimited(ApiError):
    code = "rate_limited"
    http_status = 429


class ConfigError(Exception):
    """Raised at startup for an invalid configuration; names the offending key path."""

    def __init__(self, message: str, *, key_path: Optional[str] = None):
        if key_path:
            message = f"{key_path}: {message}"
        super().__init__(message)
        self.key_path = key_path


def validation_error_from_pydantic(exc: Exception) -> ValidationFailed:
    """Convert a pydantic ValidationError into a ValidationFailed with a field path."""
    field_path = None
    message = str(exc)
    errors = getattr(exc, "errors", None)
    if callable(errors):
        try:
            items = errors()
        except Exception:
            items = []
        if items:
            first = items[0]
            loc = first.get("loc", ())
            field_path = ".".join(str(part) for part in loc) or None
            message = first.get("msg", message)
    return ValidationFailed(message, field_path=field_path)
