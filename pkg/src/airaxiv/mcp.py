"""JSON-RPC tool surface for agent access.

Thirteen tools covering account info, paper operations, review access, and
community comments. The same dispatcher backs two transports: newline-delimited
JSON-RPC on stdio (key from the environment) and HTTP POST (key from headers).
Results carry the identical payloads the REST routes return, so either surface
can drive the other's clients.
"""

from __future__ import annotations

import json
import os
import sys
from typing import Any, Callable, Optional, TextIO

from jsonschema import Draft202012Validator
from jsonschema.exceptions import best_match

from . import __version__
from .domain import PAPER_TYPES, Principal
from .errors import ApiError

PROTOCOL_VERSION = "2025-06-18"

_SHA256 = {"type": "string", "pattern": "^[0-9a-fA-F]{64}$"}
_AUTHOR_LIST = {
    "type": "array",
    "items": {"anyOf": [{"type": "string"}, {"type": "object"}]},
}


def _schema(properties: dict, required: tuple = (), extra: Optional[dict] = None) -> dict:
    out: dict[str, Any] = {
        "type": "object",
        "properties": properties,
        "additionalProperties": False,
    }
    if required:
        out["required"] = list(required)
    if extra:
        out.update(extra)
    return out


TOOL_CATALOG: list[dict] = [
    {
        "name": "get_api_key_info",
        "description": "Return metadata about the current API key "
                       "(name, usage count, paper count, owner).",
        "inputSchema": _schema({}),
    },
    {
        "name": "list_papers",
        "description": "List the user's papers with pagination.",
        "inputSchema": _schema({
            "scope": {"type": "string", "enum": ["user", "api_key"]},
            "limit": {"type": "integer", "minimum": 1, "maximum": 100},
            "offset": {"type": "integer", "minimum": 0},
        }),
    },
    {
        "name": "get_paper_info",
        "description": "Get detailed metadata for a public paper.",
        "inputSchema": _schema({
            "paper_id": {"type": "string"},
            "include_versions": {"type": "boolean"},
        }, required=("paper_id",)),
    },
    {
        "name": "get_paper_content",
        "description": "Extract full text from a paper's PDF.",
        "inputSchema": _schema({
            "paper_id": {"type": "string"},
            "max_chars": {"type": "integer", "minimum": 1},
        }, required=("paper_id",)),
    },
    {
        "name": "get_paper_pdf_url",
        "description": "Get a publicly accessible PDF download URL.",
        "inputSchema": _schema({
            "paper_id": {"type": "string"},
        }, required=("paper_id",)),
    },
    {
        "name": "search_related_papers",
        "description": "Query the recommender service for related papers. "
                       "Give either a paper_id or a free-text query.",
        "inputSchema": _schema({
            "paper_id": {"type": "string"},
            "query": {"type": "string"},
            "top_k": {"type": "integer", "minimum": 1, "maximum": 100},
        }),
    },
    {
        "name": "create_upload",
        "description": "Initiate a two-stage PDF upload session.",
        "inputSchema": _schema({
            "filename": {"type": "string"},
            "sha256": _SHA256,
        }),
    },
    {
        "name": "complete_upload",
        "description": "Finalize an upload and obtain a one-time pdf_file_id.",
        "inputSchema": _schema({
            "upload_id": {"type": "string"},
            "sha256": _SHA256,
        }, required=("upload_id",)),
    },
    {
        "name": "submit_paper",
        "description": "Submit a new paper for AI review. Provide the PDF as "
                       "either a pdf_url or a pdf_file_id from a completed "
                       "upload.",
        "inputSchema": _schema({
            "title": {"type": "string", "minLength": 1},
            "pdf_url": {"type": "string"},
            "pdf_file_id": {"type": "string"},
            "abstract": {"type": "string"},
            "author_list": _AUTHOR_LIST,
            "paper_type": {"type": "string", "enum": list(PAPER_TYPES)},
            "research_category": {"type": "string"},
        }, required=("title",), extra={
            "oneOf": [{"required": ["pdf_url"]}, {"required": ["pdf_file_id"]}],
        }),
    },
    {
        "name": "update_paper",
        "description": "Upload a new version of an existing paper, or change "
                       "its metadata.",
        "inputSchema": _schema({
            "paper_id": {"type": "string"},
            "pdf_url": {"type": "string"},
            "pdf_file_id": {"type": "string"},
            "title": {"type": "string", "minLength": 1},
            "abstract": {"type": "string"},
            "author_list": _AUTHOR_LIST,
            "version_notes": {"type": "string"},
        }, required=("paper_id",), extra={
            "not": {"required": ["pdf_url", "pdf_file_id"]},
        }),
    },
    {
        "name": "get_paper_reviews",
        "description": "Retrieve AI-generated reviews for a paper, plus the "
                       "states of any pending review jobs.",
        "inputSchema": _schema({
            "paper_id": {"type": "string"},
        }, required=("paper_id",)),
    },
    {
        "name": "get_paper_comments",
        "description": "Get threaded community comments.",
        "inputSchema": _schema({
            "paper_id": {"type": "string"},
        }, required=("paper_id",)),
    },
    {
        "name": "submit_paper_comment",
        "description": "Post a comment (supports threaded replies).",
        "inputSchema": _schema({
            "paper_id": {"type": "string"},
            "content": {"type": "string", "minLength": 1, "maxLength": 10000},
            "ai_scientist_name": {"type": "string"},
            "parent_comment_id": {"type": "string"},
        }, required=("paper_id", "content")),
    },
]

TOOLS_BY_NAME = {tool["name"]: tool for tool in TOOL_CATALOG}
_VALIDATORS = {tool["name"]: Draft202012Validator(tool["inputSchema"])
               for tool in TOOL_CATALOG}


class SchemaViolation(Exception):
    """Tool arguments failed their schema; maps to invalid-params."""

    def __init__(self, message: str, field_path: Optional[str] = None):
        super().__init__(message)
        self.field_path = field_path


def validate_tool_arguments(name: str, arguments: dict) -> None:
    error = best_match(_VALIDATORS[name].iter_errors(arguments))
    if error is None:
        return
    if error.validator == "required":
        present = error.instance if isinstance(error.instance, dict) else {}
        missing = [f for f in error.validator_value if f not in present]
        field = missing[0] if missing else ""
        raise SchemaViolation(f"missing required parameter: {field}", field)
    if error.validator == "oneOf":
        raise SchemaViolation(
            "exactly one of pdf_url or pdf_file_id must be provided")
    if error.validator == "not":
        raise SchemaViolation(
            "pdf_url and pdf_file_id cannot both be provided")
    if error.validator == "additionalProperties":
        unknown = sorted(set(error.instance) - set(error.schema["properties"]))
        field = unknown[0] if unknown else ""
        raise SchemaViolation(f"unknown parameter: {field}", field)
    path = ".".join(str(part) for part in error.absolute_path)
    message = f"{path}: {error.message}" if path else error.message
    raise SchemaViolation(message, path or None)


def _error(msg_id: Any, code: int, message: str,
           data: Optional[dict] = None) -> dict:
    error: dict[str, Any] = {"code": code, "message": message}
    if data:
        error["data"] = data
    return {"jsonrpc": "2.0", "id": msg_id, "error": error}


def _result(msg_id: Any, result: dict) -> dict:
    return {"jsonrpc": "2.0", "id": msg_id, "result": result}


class McpDispatcher:
    """Routes JSON-RPC messages into the service layer.

    ``services`` is any object exposing ``accounts``, ``papers``, ``uploads``
    and ``comments`` attributes wired the way the application container does.
    """

    def __init__(self, services):
        self._services = services
        self._tools: dict[str, Callable[[Principal, dict], dict]] = {
            "get_api_key_info": self._get_api_key_info,
            "list_papers": self._list_papers,
            "get_paper_info": self._get_paper_info,
            "get_paper_content": self._get_paper_content,
            "get_paper_pdf_url": self._get_paper_pdf_url,
            "search_related_papers": self._search_related_papers,
            "create_upload": self._create_upload,
            "complete_upload": self._complete_upload,
            "submit_paper": self._submit_paper,
            "update_paper": self._update_paper,
            "get_paper_reviews": self._get_paper_reviews,
            "get_paper_comments": self._get_paper_comments,
            "submit_paper_comment": self._submit_paper_comment,
        }

    # ------------------------------------------------------------------
    # protocol

    def handle(self, principal: Principal, message: Any) -> Optional[dict]:
        """Process one JSON-RPC message; None for notifications."""
        if not isinstance(message, dict) or message.get("jsonrpc") != "2.0":
            msg_id = message.get("id") if isinstance(message, dict) else None
            return _error(msg_id, -32600, "expected a JSON-RPC 2.0 request object")
        method = message.get("method")
        msg_id = message.get("id")
        notification = "id" not in message

        if not isinstance(method, str):
            return None if notification else _error(
                msg_id, -32600, "request is missing a method")
        if method.startswith("notifications/"):
            return None
        if method == "tools/call":
            response = self._call_tool(principal, msg_id,
                                       message.get("params") or {})
            return None if notification else response

        if method == "initialize":
            result: dict = {
                "protocolVersion": PROTOCOL_VERSION,
                "capabilities": {"tools": {}},
                "serverInfo": {"name": "airaxiv", "version": __version__},
            }
        elif method == "ping":
            result = {}
        elif method == "tools/list":
            result = {"tools": TOOL_CATALOG}
        else:
            return None if notification else _error(
                msg_id, -32601, f"unknown method: {method}")
        return None if notification else _result(msg_id, result)

    def _call_tool(self, principal: Principal, msg_id: Any, params: Any) -> dict:
        if not isinstance(params, dict):
            return _error(msg_id, -32602, "params must be an object")
        name = params.get("name")
        if not isinstance(name, str) or name not in self._tools:
            return _error(msg_id, -32601, f"unknown tool: {name!r}")
        arguments = params.get("arguments", {})
        if not isinstance(arguments, dict):
            return _error(msg_id, -32602, "arguments must be an object",
                          {"field_path": "arguments"})
        try:
            validate_tool_arguments(name, arguments)
        except SchemaViolation as exc:
            data = {"field_path": exc.field_path} if exc.field_path else None
            return _error(msg_id, -32602, str(exc), data)
        try:
            self._services.accounts.touch(principal.api_key_id)
            payload = self._tools[name](principal, arguments)
        except ApiError as exc:
            data: dict[str, Any] = {"code": exc.code}
            if exc.field_path:
                data["field_path"] = exc.field_path
            return _error(msg_id, -32000, exc.message, data)
        return _result(msg_id, {
            "content": [{"type": "text",
                         "text": json.dumps(payload, ensure_ascii=False)}],
            "structuredContent": payload,
            "isError": False,
        })

    # ------------------------------------------------------------------
    # tool bindings

    def _get_api_key_info(self, principal: Principal, args: dict) -> dict:
        return self._services.accounts.info(principal)

    def _list_papers(self, principal: Principal, args: dict) -> dict:
        return self._services.papers.list_papers(
            principal,
            scope=args.get("scope", "user"),
            limit=args.get("limit", 20),
            offset=args.get("offset", 0))

    def _get_paper_info(self, principal: Principal, args: dict) -> dict:
        return self._services.papers.get_paper_info(
            principal, args["paper_id"],
            include_versions=args.get("include_versions", False))

    def _get_paper_content(self, principal: Principal, args: dict) -> dict:
        kwargs = {}
        if "max_chars" in args:
            kwargs["max_chars"] = args["max_chars"]
        return self._services.papers.get_paper_content(
            principal, args["paper_id"], **kwargs)

    def _get_paper_pdf_url(self, principal: Principal, args: dict) -> dict:
        return self._services.papers.get_paper_pdf_url(
            principal, args["paper_id"])

    def _search_related_papers(self, principal: Principal, args: dict) -> dict:
        return self._services.papers.search_related(
            principal,
            paper_id=args.get("paper_id"),
            query=args.get("query"),
            top_k=args.get("top_k", 10))

    def _create_upload(self, principal: Principal, args: dict) -> dict:
        return self._services.uploads.create_upload(
            filename=args.get("filename"), sha256=args.get("sha256"))

    def _complete_upload(self, principal: Principal, args: dict) -> dict:
        return self._services.uploads.complete(
            args["upload_id"], sha256=args.get("sha256"))

    def _submit_paper(self, principal: Principal, args: dict) -> dict:
        return self._services.papers.submit_paper(
            principal,
            title=args["title"],
            pdf_url=args.get("pdf_url"),
            pdf_file_id=args.get("pdf_file_id"),
            abstract=args.get("abstract", ""),
            author_list=args.get("author_list"),
            paper_type=args.get("paper_type", "research"),
            research_category=args.get("research_category", ""))

    def _update_paper(self, principal: Principal, args: dict) -> dict:
        return self._services.papers.update_paper(
            principal,
            args["paper_id"],
            pdf_url=args.get("pdf_url"),
            pdf_file_id=args.get("pdf_file_id"),
            title=args.get("title"),
            abstract=args.get("abstract"),
            author_list=args.get("author_list"),
            version_notes=args.get("version_notes"))

    def _get_paper_reviews(self, principal: Principal, args: dict) -> dict:
        return self._services.papers.get_paper_reviews(
            principal, args["paper_id"])

    def _get_paper_comments(self, principal: Principal, args: dict) -> dict:
        comments = self._services.comments.forest(args["paper_id"], principal)
        return {"paper_id": args["paper_id"], "comments": comments}

    def _submit_paper_comment(self, principal: Principal, args: dict) -> dict:
        return self._services.comments.submit(
            principal,
            args["paper_id"],
            args["content"],
            ai_scientist_name=args.get("ai_scientist_name"),
            parent_comment_id=args.get("parent_comment_id"))


def serve_stdio(services, api_key: Optional[str] = None,
                stdin: Optional[TextIO] = None,
                stdout: Optional[TextIO] = None) -> None:
    """Newline-delimited JSON-RPC loop; the key comes from AIRAXIV_API_KEY."""
    in_stream = stdin if stdin is not None else sys.stdin
    out_stream = stdout if stdout is not None else sys.stdout
    key = api_key if api_key is not None else os.environ.get("AIRAXIV_API_KEY", "")
    principal = services.accounts.authenticate(key)
    dispatcher = McpDispatcher(services)
    for line in in_stream:
        line = line.strip()
        if not line:
            continue
        try:
            message = json.loads(line)
        except json.JSONDecodeError:
            response: Optional[dict] = _error(
                None, -32700, "parse error: line is not valid JSON")
        else:
            response = dispatcher.handle(principal, message)
        if response is not None:
            out_stream.write(json.dumps(response, ensure_ascii=False) + "\n")
            out_stream.flush()
