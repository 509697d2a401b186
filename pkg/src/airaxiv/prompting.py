"""Versioned prompt templates for every text-generation task.

Templates live as plain files under ``airaxiv/prompts/`` so a deployment can
pin, diff, and swap them without touching code. Each template carries a
``TASK:`` tag line and an ``INPUT: {input_json}`` placeholder; the payload is
serialized as a single JSON line so providers (and the offline mock) can
recover it unambiguously.
"""

from __future__ import annotations

import json
from importlib import resources
from pathlib import Path

from .errors import ConfigError

TASKS = (
    "safety_screen",
    "extract_keywords",
    "distill_insights",
    "review_context",
    "search_queries",
    "relevance",
    "summarize_related",
    "generate_review",
    "rerank",
)

DEFAULT_TEMPLATES = {task: f"{task}.v1.txt" for task in TASKS}

INPUT_PLACEHOLDER = "{input_json}"


def _builtin_dir():
    return resources.files("airaxiv").joinpath("prompts")


class PromptLibrary:
    """Resolves task names to template text and renders prompts.

    ``overrides`` maps a task name to an alternate template file name;
    ``search_dir`` lets deployments supply templates outside the package.
    """

    def __init__(self, overrides: dict[str, str] | None = None,
                 search_dir: str | Path | None = None):
        self._names = dict(DEFAULT_TEMPLATES)
        for task, filename in (overrides or {}).items():
            if task not in TASKS:
                raise ConfigError(f"unknown prompt task {task!r}", key_path=f"prompts.{task}")
            self._names[task] = filename
        self._search_dir = Path(search_dir) if search_dir else None
        self._cache: dict[str, str] = {}

    def template_name(self, task: str) -> str:
        if task not in self._names:
            raise ConfigError(f"unknown prompt task {task!r}",
                              key_path=f"prompts.{task}")
        return self._names[task]

    def template_text(self, task: str) -> str:
        name = self.template_name(task)
        if name not in self._cache:
            self._cache[name] = self._load(task, name)
        return self._cache[name]

    def _load(self, task: str, name: str) -> str:
        if self._search_dir is not None:
            candidate = self._search_dir / name
            if candidate.is_file():
                return candidate.read_text(encoding="utf-8")
        builtin = _builtin_dir().joinpath(name)
        if builtin.is_file():
            return builtin.read_text(encoding="utf-8")
        raise ConfigError(f"prompt template {name!r} not found", key_path=f"prompts.{task}")

    def render(self, task: str, payload: dict) -> str:
        text = self.template_text(task)
        if INPUT_PLACEHOLDER not in text:
            raise ConfigError(
                f"template for {task!r} lacks the {INPUT_PLACEHOLDER} placeholder",
                key_path=f"prompts.{task}",
            )
        encoded = json.dumps(payload, sort_keys=True, ensure_ascii=False)
        return text.replace(INPUT_PLACEHOLDER, encoded)


def extract_task_tag(prompt: str) -> str | None:
    """Read the ``TASK:`` tag from a rendered prompt (used by the mock)."""
    for line in prompt.splitlines():
        line = line.strip()
        if line.startswith("TASK:"):
            return line[len("TASK:"):].strip()
    return None


def extract_input_payload(prompt: str) -> dict:
    """Recover the JSON payload from a rendered prompt's ``INPUT:`` line."""
    for line in prompt.splitlines():
        if line.startswith("INPUT:"):
            raw = line[len("INPUT:"):].strip()
            try:
                data = json.loads(raw)
            except json.JSONDecodeError:
                return {}
            return data if isinstance(data, dict) else {}
    return {}
