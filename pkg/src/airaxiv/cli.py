"""Command-line entry points: serve the API, speak JSON-RPC on stdio,
run the closed-loop submission agent, move data in and out, build test PDFs."""

from __future__ import annotations

import argparse
import sys
from typing import Optional

from .config import AppConfig, load_config
from .errors import ConfigError


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", default=None,
                        help="path to a TOML config file")
    parser.add_argument("--port", type=int, default=None,
                        help="listen port (overrides config)")
    parser.add_argument("--data-dir", default=None,
                        help="persist state under this directory "
                             "(default: in-memory)")
    parser.add_argument("--mock-providers", action="store_true",
                        help="force deterministic offline providers")


def _build_config(args: argparse.Namespace) -> AppConfig:
    overrides: dict = {}
    if getattr(args, "port", None) is not None:
        overrides["server.port"] = args.port
    if getattr(args, "data_dir", None):
        overrides["storage.data_dir"] = args.data_dir
    if getattr(args, "mock_providers", False):
        overrides["providers.mode"] = "mock"
    return load_config(args.config, overrides=overrides)


def _cmd_serve(args: argparse.Namespace) -> int:
    from .app import Airaxiv
    from .gateway import run

    services = Airaxiv(_build_config(args))
    print(f"airaxiv listening on http://{services.config.server.host}:"
          f"{services.config.server.port}", file=sys.stderr)
    run(services)
    return 0


def _cmd_mcp_stdio(args: argparse.Namespace) -> int:
    from .app import Airaxiv
    from .mcp import serve_stdio

    services = Airaxiv(_build_config(args))
    try:
        serve_stdio(services)
    finally:
        services.close()
    return 0


def _cmd_export(args: argparse.Namespace) -> int:
    from .app import Airaxiv

    services = Airaxiv(_build_config(args))
    count = services.store.export_dir(args.out)
    services.close()
    print(f"exported {count} records to {args.out}")
    return 0


def _cmd_import(args: argparse.Namespace) -> int:
    from .app import Airaxiv

    services = Airaxiv(_build_config(args))
    count = services.store.import_dir(args.src)
    services.close()
    print(f"imported {count} records from {args.src}")
    return 0


def _cmd_make_pdf(args: argparse.Namespace) -> int:
    from .pdfgen import build_pdf

    lines: list[str] = []
    if args.title:
        lines.append(f"## {args.title}")
    if args.text_file:
        with open(args.text_file, "r", encoding="utf-8") as handle:
            lines.extend(handle.read().splitlines())
    for chunk in args.line or []:
        lines.append(chunk)
    if not lines:
        lines = ["## Untitled", "Empty test document."]
    with open(args.out, "wb") as handle:
        handle.write(build_pdf([lines]))
    print(f"wrote {args.out}")
    return 0


def _cmd_agent_loop(args: argparse.Namespace) -> int:
    from .agent_loop import run_from_args

    return run_from_args(args)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="airaxiv",
        description="self-hosted preprint service with AI review")
    sub = parser.add_subparsers(dest="command", required=True)

    serve = sub.add_parser("serve", help="run the HTTP API server")
    _add_common(serve)
    serve.set_defaults(func=_cmd_serve)

    stdio = sub.add_parser("mcp-stdio",
                           help="serve JSON-RPC tools on stdin/stdout "
                                "(key from AIRAXIV_API_KEY)")
    _add_common(stdio)
    stdio.set_defaults(func=_cmd_mcp_stdio)

    export = sub.add_parser("export", help="dump all records as JSON files")
    _add_common(export)
    export.add_argument("--out", required=True)
    export.set_defaults(func=_cmd_export)

    imp = sub.add_parser("import", help="load records from an export directory")
    _add_common(imp)
    imp.add_argument("--src", required=True)
    imp.set_defaults(func=_cmd_import)

    make_pdf = sub.add_parser("make-pdf", help="build a small text-based PDF")
    make_pdf.add_argument("--out", required=True)
    make_pdf.add_argument("--title", default="")
    make_pdf.add_argument("--text-file", default=None)
    make_pdf.add_argument("--line", action="append",
                          help="add a body line (repeatable)")
    make_pdf.set_defaults(func=_cmd_make_pdf)

    loop = sub.add_parser("agent-loop",
                          help="submit a PDF and iterate on review feedback")
    loop.add_argument("--server", required=True,
                      help="base URL of a running instance")
    loop.add_argument("--api-key", required=True)
    loop.add_argument("--pdf", required=True, help="path to the initial PDF")
    loop.add_argument("--title", default=None,
                      help="paper title (default: derived from the PDF)")
    loop.add_argument("--abstract", default="")
    loop.add_argument("--iterations", type=int, default=2,
                      help="revision rounds after the first submission "
                           "(0 submits only)")
    loop.add_argument("--max-wait-secs", type=float, default=120.0,
                      help="longest wait for a review before giving up")
    loop.add_argument("--transcript-out", default=None,
                      help="write one JSON line per tool call here")
    loop.set_defaults(func=_cmd_agent_loop)

    return parser


def main(argv: Optional[list[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except KeyboardInterrupt:
        return 130


if __name__ == "__main__":
    sys.exit(main())
