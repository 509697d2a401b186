"""Reference closed-loop client: upload, submit, poll reviews, revise, resubmit.

Drives a running instance purely through the JSON-RPC tool surface plus the
raw PDF PUT, logging every step as a JSON line. The revision step is a
pluggable strategy; the default appends a deterministic revision-notes page so
CI runs need no model. Exit codes: 0 success, 2 tool or transport failure,
3 review polling timed out.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import time
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional, TextIO

import httpx

from .pdfgen import append_page

POLL_INITIAL_SECONDS = 0.25
POLL_CAP_SECONDS = 10.0


class ToolError(Exception):
    def __init__(self, message: str, code: int = 0, data: Optional[dict] = None):
        super().__init__(message)
        self.code = code
        self.data = data or {}


class TransportError(Exception):
    pass


class McpClient:
    """Minimal JSON-RPC-over-HTTP client plus the raw upload PUT."""

    def __init__(self, base_url: str, api_key: str, timeout: float = 30.0,
                 transport: Optional[httpx.BaseTransport] = None):
        self._client = httpx.Client(
            base_url=base_url.rstrip("/"),
            headers={"x-api-key": api_key},
            timeout=httpx.Timeout(timeout, connect=5.0),
            transport=transport)
        self._next_id = 0

    def close(self) -> None:
        self._client.close()

    def call_tool(self, name: str, arguments: dict) -> dict:
        self._next_id += 1
        message = {"jsonrpc": "2.0", "id": self._next_id,
                   "method": "tools/call",
                   "params": {"name": name, "arguments": arguments}}
        try:
            response = self._client.post("/mcp", json=message)
        except httpx.HTTPError as exc:
            raise TransportError(f"cannot reach server: {exc}") from exc
        try:
            body = response.json()
        except ValueError as exc:
            raise TransportError(
                f"server returned non-JSON ({response.status_code})") from exc
        if "error" in body:
            err = body["error"]
            raise ToolError(err.get("message", "tool call failed"),
                            code=err.get("code", 0), data=err.get("data"))
        if response.status_code >= 400:
            # Auth and rate-limit failures arrive as plain error envelopes.
            raise ToolError(body.get("message", f"HTTP {response.status_code}"),
                            data=body)
        result = body.get("result", {})
        if "structuredContent" in result:
            return result["structuredContent"]
        content = result.get("content", [])
        if content and content[0].get("type") == "text":
            return json.loads(content[0]["text"])
        raise TransportError("tool result carried no payload")

    def put_pdf(self, upload_url: str, data: bytes) -> dict:
        try:
            response = self._client.put(upload_url, content=data,
                                        headers={"content-type": "application/pdf"})
        except httpx.HTTPError as exc:
            raise TransportError(f"PDF upload failed: {exc}") from exc
        body = response.json()
        if response.status_code != 200:
            raise ToolError(body.get("message", "upload rejected"),
                            data=body)
        return body


class RevisionStrategy(ABC):
    """Turns review feedback into new PDF bytes."""

    @abstractmethod
    def revise(self, pdf_bytes: bytes, round_number: int, reviews: list[dict],
               comments: list[dict], related: list[dict]) -> bytes: ...


class AppendNotesRevision(RevisionStrategy):
    """Deterministic default: append one page of revision notes."""

    def revise(self, pdf_bytes: bytes, round_number: int, reviews: list[dict],
               comments: list[dict], related: list[dict]) -> bytes:
        lines = [f"## Revision Notes (round {round_number})"]
        suggestions: list[str] = []
        if reviews:
            suggestions = list(reviews[0].get("revision_suggestions", []))
        for i, suggestion in enumerate(suggestions[:5], start=1):
            lines.append(f"{i}. Addressed: {suggestion}")
        if not suggestions:
            lines.append("1. General clarity pass.")
        lines.append(f"Considered {len(comments)} community comments and "
                     f"{len(related)} related papers.")
        return append_page(pdf_bytes, lines)


@dataclass
class LoopResult:
    exit_code: int
    paper_id: Optional[str] = None
    version: int = 0
    transcript: list[dict] = field(default_factory=list)
    message: str = ""


class _Transcript:
    def __init__(self, path: Optional[str]):
        self.entries: list[dict] = []
        self._handle: Optional[TextIO] = None
        if path:
            self._handle = open(path, "w", encoding="utf-8")

    def log(self, op: str, request: dict, response) -> None:
        entry = {"step": len(self.entries) + 1, "op": op,
                 "request": request, "response": response}
        self.entries.append(entry)
        if self._handle is not None:
            self._handle.write(json.dumps(entry, ensure_ascii=False) + "\n")
            self._handle.flush()

    def close(self) -> None:
        if self._handle is not None:
            self._handle.close()


class _PollTimeout(Exception):
    pass


def _upload_round(client: McpClient, transcript: _Transcript,
                  data: bytes, filename: str) -> str:
    """create_upload → PUT → complete_upload; returns the one-time token."""
    digest = hashlib.sha256(data).hexdigest()
    request = {"filename": filename, "sha256": digest}
    created = client.call_tool("create_upload", request)
    transcript.log("create_upload", request, created)

    put_response = client.put_pdf(created["upload_url"], data)
    transcript.log("put_pdf", {"upload_url": created["upload_url"],
                               "bytes": len(data)}, put_response)

    complete_request = {"upload_id": created["upload_id"], "sha256": digest}
    completed = client.call_tool("complete_upload", complete_request)
    transcript.log("complete_upload", complete_request, completed)
    return completed["pdf_file_id"]


def _poll_reviews(client: McpClient, transcript: _Transcript, paper_id: str,
                  version: int, max_wait_secs: float,
                  sleep: Callable[[float], None]) -> dict:
    """Exponential backoff until the current version has a completed review."""
    deadline = time.monotonic() + max_wait_secs
    delay = POLL_INITIAL_SECONDS
    while True:
        request = {"paper_id": paper_id}
        response = client.call_tool("get_paper_reviews", request)
        transcript.log("get_paper_reviews", request, response)
        current = [r for r in response.get("reviews", [])
                   if r.get("version") == version]
        if current:
            return response
        jobs = [j for j in response.get("jobs", [])
                if j.get("version") == version]
        if jobs and all(j.get("state") == "failed" for j in jobs):
            stages = sorted({j.get("stage", "") for j in jobs})
            raise ToolError(
                f"review for version {version} failed at stage "
                f"{', '.join(s for s in stages if s) or 'unknown'}")
        if time.monotonic() >= deadline:
            raise _PollTimeout(
                f"no completed review for version {version} within "
                f"{max_wait_secs:g}s")
        sleep(delay)
        delay = min(delay * 2, POLL_CAP_SECONDS)


def run_loop(
    server: str,
    api_key: str,
    pdf_path: Optional[str] = None,
    pdf_bytes: Optional[bytes] = None,
    title: Optional[str] = None,
    abstract: str = "",
    iterations: int = 2,
    max_wait_secs: float = 120.0,
    transcript_out: Optional[str] = None,
    strategy: Optional[RevisionStrategy] = None,
    sleep: Callable[[float], None] = time.sleep,
    transport: Optional[httpx.BaseTransport] = None,
) -> LoopResult:
    if pdf_bytes is None:
        if pdf_path is None:
            raise ValueError("either pdf_path or pdf_bytes is required")
        pdf_bytes = Path(pdf_path).read_bytes()
    filename = Path(pdf_path).name if pdf_path else "paper.pdf"
    if title is None:
        title = Path(filename).stem.replace("_", " ").replace("-", " ").strip() \
                or "Untitled"
    if iterations < 0:
        raise ValueError("iterations must be >= 0")
    strategy = strategy or AppendNotesRevision()

    transcript = _Transcript(transcript_out)
    client = McpClient(server, api_key, transport=transport)
    result = LoopResult(exit_code=0)
    try:
        token = _upload_round(client, transcript, pdf_bytes, filename)
        submit_request = {"title": title, "pdf_file_id": token}
        if abstract:
            submit_request["abstract"] = abstract
        submitted = client.call_tool("submit_paper", submit_request)
        transcript.log("submit_paper", submit_request, submitted)
        paper_id = submitted["paper_id"]
        version = submitted["version"]
        result.paper_id = paper_id
        result.version = version

        for round_number in range(1, iterations + 1):
            reviews_response = _poll_reviews(
                client, transcript, paper_id, version, max_wait_secs, sleep)

            comments_request = {"paper_id": paper_id}
            comments_response = client.call_tool("get_paper_comments",
                                                 comments_request)
            transcript.log("get_paper_comments", comments_request,
                           comments_response)

            related_request = {"paper_id": paper_id}
            related_response = client.call_tool("search_related_papers",
                                                related_request)
            transcript.log("search_related_papers", related_request,
                           related_response)

            pdf_bytes = strategy.revise(
                pdf_bytes, round_number,
                reviews_response.get("reviews", []),
                comments_response.get("comments", []),
                related_response.get("results", []))
            transcript.log("revise", {"round": round_number},
                           {"bytes": len(pdf_bytes)})

            token = _upload_round(client, transcript, pdf_bytes, filename)
            update_request = {"paper_id": paper_id, "pdf_file_id": token,
                              "version_notes": f"revision round {round_number}"}
            updated = client.call_tool("update_paper", update_request)
            transcript.log("update_paper", update_request, updated)
            version = updated["version"]
            result.version = version
    except _PollTimeout as exc:
        result.exit_code = 3
        result.message = str(exc)
    except (ToolError, TransportError) as exc:
        result.exit_code = 2
        result.message = str(exc)
    finally:
        client.close()
        transcript.close()
    result.transcript = transcript.entries
    return result


def run_from_args(args: argparse.Namespace) -> int:
    result = run_loop(
        server=args.server,
        api_key=args.api_key,
        pdf_path=args.pdf,
        title=args.title,
        abstract=args.abstract,
        iterations=args.iterations,
        max_wait_secs=args.max_wait_secs,
        transcript_out=args.transcript_out)
    if result.message:
        print(result.message)
    if result.paper_id:
        print(f"paper {result.paper_id} at version {result.version} "
              f"({len(result.transcript)} steps logged)")
    return result.exit_code
