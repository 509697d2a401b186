"""Typed configuration: defaults, TOML file, env vars, CLI overrides.

Precedence, lowest to highest: built-in defaults, config file, environment
variables prefixed ``AIRAXIV_``, explicit overrides (CLI flags). Defaults give
a fully offline instance: in-memory storage and deterministic mock providers.
"""

from __future__ import annotations

import json
import os
from typing import Literal, Mapping, Optional

from pydantic import BaseModel, ConfigDict, Field, ValidationError

try:
    import tomllib
except ModuleNotFoundError:  # 3.10
    import tomli as tomllib

from .errors import ConfigError
from .review import ReviewerConfig

ENV_PREFIX = "AIRAXIV_"


class _Section(BaseModel):
    model_config = ConfigDict(extra="forbid", validate_assignment=True)


class ServerConfig(_Section):
    host: str = "127.0.0.1"
    port: int = Field(default=8571, ge=1, le=65535)
    public_base_url: str = ""
    cors_origins: list[str] = Field(default_factory=lambda: ["*"])
    ui_dir: str = ""  # empty means auto-detect frontend/dist, if present

    def base_url(self) -> str:
        if self.public_base_url:
            return self.public_base_url.rstrip("/")
        return f"http://{self.host}:{self.port}"


class StorageConfig(_Section):
    data_dir: str = ""  # empty keeps everything in memory


class ProvidersConfig(_Section):
    mode: Literal["mock", "external"] = "mock"
    seed: int = 0
    text_base_url: str = ""
    embedding_base_url: str = ""
    parser_base_url: str = ""
    api_key: str = ""
    timeout_seconds: float = 60.0


class UploadsConfig(_Section):
    ttl_seconds: int = Field(default=86400, ge=1)
    max_bytes: int = Field(default=50 * 1024 * 1024, ge=1)


class PdfUrlsConfig(_Section):
    secret: str = "local-dev-secret"
    ttl_seconds: int = Field(default=3600, ge=1)


class WorkersConfig(_Section):
    count: int = Field(default=4, ge=1)
    inline: bool = False


class ReviewerSection(_Section):
    default_plugin: str = "reference"
    num_queries: int = 5
    max_candidates: int = 20
    min_relevance: float = 0.5
    max_related: int = 10
    num_detailed_summaries: int = 5
    temperature_eval: float = 0.1
    temperature_creative: float = 0.3

    def to_reviewer_config(self) -> ReviewerConfig:
        return ReviewerConfig(
            num_queries=self.num_queries,
            max_candidates=self.max_candidates,
            min_relevance=self.min_relevance,
            max_related=self.max_related,
            num_detailed_summaries=self.num_detailed_summaries,
            temperature_eval=self.temperature_eval,
            temperature_creative=self.temperature_creative,
        )


class StaticKey(_Section):
    key: str
    name: str
    owner_kind: str = "human"


class AuthConfig(_Section):
    mode: Literal["open", "static"] = "open"
    default_owner_kind: str = "human"
    static_keys: list[StaticKey] = Field(default_factory=list)
    rate_limit_enabled: bool = True
    rate_per_sec: float = Field(default=200.0, gt=0)
    burst: float = Field(default=1000.0, gt=0)


class ConferenceSection(_Section):
    match_threshold: float = Field(default=0.35, ge=-1.0, le=1.0)


class PromptsConfig(_Section):
    search_dir: str = ""
    overrides: dict[str, str] = Field(default_factory=dict)


class LimitsConfig(_Section):
    content_max_chars: int = Field(default=50000, ge=1)


class AppConfig(_Section):
    server: ServerConfig = Field(default_factory=ServerConfig)
    storage: StorageConfig = Field(default_factory=StorageConfig)
    providers: ProvidersConfig = Field(default_factory=ProvidersConfig)
    uploads: UploadsConfig = Field(default_factory=UploadsConfig)
    pdf_urls: PdfUrlsConfig = Field(default_factory=PdfUrlsConfig)
    workers: WorkersConfig = Field(default_factory=WorkersConfig)
    reviewer: ReviewerSection = Field(default_factory=ReviewerSection)
    auth: AuthConfig = Field(default_factory=AuthConfig)
    conference: ConferenceSection = Field(default_factory=ConferenceSection)
    prompts: PromptsConfig = Field(default_factory=PromptsConfig)
    limits: LimitsConfig = Field(default_factory=LimitsConfig)


_SECTIONS = sorted(AppConfig.model_fields, key=len, reverse=True)


def _deep_merge(base: dict, extra: Mapping) -> dict:
    for key, value in extra.items():
        if (isinstance(value, Mapping) and isinstance(base.get(key), dict)):
            base[key] = _deep_merge(base[key], value)
        else:
            base[key] = value
    return base


def _coerce(raw: str):
    """Env values arrive as strings; JSON syntax opts into richer types."""
    text = raw.strip()
    if text and text[0] in "[{":
        try:
            return json.loads(text)
        except json.JSONDecodeError:
            return raw
    return raw


def _env_overrides(env: Mapping[str, str]) -> dict:
    out: dict = {}
    for name, value in env.items():
        if not name.startswith(ENV_PREFIX):
            continue
        rest = name[len(ENV_PREFIX):].lower()
        if rest in ("api_key", "config"):
            continue  # runtime knobs, not config keys
        for section in _SECTIONS:
            if rest.startswith(section + "_"):
                key = rest[len(section) + 1:]
                out.setdefault(section, {})[key] = _coerce(value)
                break
        else:
            raise ConfigError(
                f"environment variable {name} does not match any config "
                f"section", key_path=rest)
    return out


def _set_path(target: dict, dotted: str, value) -> None:
    parts = dotted.split(".")
    node = target
    for part in parts[:-1]:
        node = node.setdefault(part, {})
        if not isinstance(node, dict):
            raise ConfigError(f"cannot override {dotted}: {part} is a value",
                              key_path=dotted)
    node[parts[-1]] = value


def load_config(
    path: Optional[str] = None,
    env: Optional[Mapping[str, str]] = None,
    overrides: Optional[Mapping[str, object]] = None,
) -> AppConfig:
    """Build an AppConfig; raises ConfigError naming the offending key."""
    data: dict = {}
    if path:
        try:
            with open(path, "rb") as handle:
                data = tomllib.load(handle)
        except FileNotFoundError:
            raise ConfigError(f"config file not found: {path}")
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"config file {path} is not valid TOML: {exc}")
    data = _deep_merge(data, _env_overrides(env if env is not None else os.environ))
    for dotted, value in (overrides or {}).items():
        _set_path(data, dotted, value)
    try:
        return AppConfig.model_validate(data)
    except ValidationError as exc:
        first = exc.errors()[0]
        key_path = ".".join(str(p) for p in first["loc"])
        raise ConfigError(f"invalid config value at {key_path}: {first['msg']}",
                          key_path=key_path) from exc
