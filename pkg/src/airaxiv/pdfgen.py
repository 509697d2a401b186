"""Minimal PDF writer and text extractor.

Builds small single-font PDFs with uncompressed content streams, one text
line per ``Tj`` operator, and reads that text back out. This is the basis of
the offline document pipeline: fixtures, the plaintext parser provider, and
the deterministic revision strategy all speak this format. Lines starting
with ``## `` are treated as section headings by the parser.

Extraction only understands uncompressed literal-string content streams; any
other PDF raises ValueError so callers can fall back or report a parse error.
"""

from __future__ import annotations

import re

_STREAM_RE = re.compile(rb"stream\r?\n(.*?)endstream", re.DOTALL)
# Literal string immediately followed by a Tj show-text operator.
_TJ_RE = re.compile(rb"\(((?:\\.|[^\\()])*)\)\s*Tj")

_ESCAPES = {ord("n"): "\n", ord("r"): "\r", ord("t"): "\t", ord("("): "(", ord(")"): ")", ord("\\"): "\\"}


def _escape_text(line: str) -> str:
    return line.replace("\\", r"\\").replace("(", r"\(").replace(")", r"\)")


def _unescape_bytes(raw: bytes) -> str:
    out: list[str] = []
    i = 0
    while i < len(raw):
        b = raw[i]
        if b == 0x5C and i + 1 < len(raw):  # backslash
            nxt = raw[i + 1]
            out.append(_ESCAPES.get(nxt, chr(nxt)))
            i += 2
        else:
            out.append(chr(b))
            i += 1
    return "".join(out)


def _page_stream(lines: list[str]) -> bytes:
    ops = ["BT", "/F1 11 Tf", "72 720 Td", "14 TL"]
    for i, line in enumerate(lines):
        if i:
            ops.append("T*")
        ops.append(f"({_escape_text(line)}) Tj")
    ops.append("ET")
    return "\n".join(ops).encode("latin-1", errors="replace")


def build_pdf(pages: list[list[str]]) -> bytes:
    """Assemble a PDF whose pages each render the given text lines."""
    if not pages:
        pages = [[""]]
    objects: list[bytes] = []
    page_count = len(pages)
    font_obj = 3 + 2 * page_count

    kids = " ".join(f"{3 + 2 * i} 0 R" for i in range(page_count))
    objects.append(b"<< /Type /Catalog /Pages 2 0 R >>")
    objects.append(f"<< /Type /Pages /Kids [{kids}] /Count {page_count} >>".encode())
    for i, lines in enumerate(pages):
        stream = _page_stream(lines)
        objects.append(
            (
                f"<< /Type /Page /Parent 2 0 R /MediaBox [0 0 612 792] "
                f"/Contents {4 + 2 * i} 0 R /Resources << /Font << /F1 {font_obj} 0 R >> >> >>"
            ).encode()
        )
        objects.append(
            b"<< /Length %d >>\nstream\n%s\nendstream" % (len(stream), stream)
        )
    objects.append(b"<< /Type /Font /Subtype /Type1 /BaseFont /Helvetica >>")

    out = bytearray(b"%PDF-1.4\n")
    offsets = [0]
    for i, body in enumerate(objects, start=1):
        offsets.append(len(out))
        out += b"%d 0 obj\n%s\nendobj\n" % (i, body)
    xref_pos = len(out)
    out += b"xref\n0 %d\n" % (len(objects) + 1)
    out += b"0000000000 65535 f \n"
    for off in offsets[1:]:
        out += b"%010d 00000 n \n" % off
    out += b"trailer\n<< /Size %d /Root 1 0 R >>\nstartxref\n%d\n%%%%EOF\n" % (
        len(objects) + 1,
        xref_pos,
    )
    return bytes(out)


def build_simple_pdf(lines: list[str]) -> bytes:
    return build_pdf([lines])


def extract_pages(pdf_bytes: bytes) -> list[list[str]]:
    """Recover per-page text lines from a PDF produced by :func:`build_pdf`."""
    if not pdf_bytes.startswith(b"%PDF-"):
        raise ValueError("not a PDF: missing %PDF- header")
    pages: list[list[str]] = []
    for stream in _STREAM_RE.findall(pdf_bytes):
        lines = [_unescape_bytes(m) for m in _TJ_RE.findall(stream)]
        if lines:
            pages.append(lines)
    if not pages and _STREAM_RE.search(pdf_bytes) is None:
        # Has a header but no readable content stream at all.
        raise ValueError("no uncompressed content streams found")
    return pages


def extract_text_lines(pdf_bytes: bytes) -> list[str]:
    lines: list[str] = []
    for page in extract_pages(pdf_bytes):
        lines.extend(page)
    return lines


def append_page(pdf_bytes: bytes, lines: list[str]) -> bytes:
    """Return a PDF with one extra page of text.

    Works losslessly for PDFs in this module's own format; for anything else
    the original bytes are kept and the note lines are appended as trailing
    comments (readers ignore them, the digest still changes).
    """
    try:
        pages = extract_pages(pdf_bytes)
    except ValueError:
        pages = None
    if pages is not None:
        return build_pdf(pages + [lines])
    suffix = "".join(f"% {line}\n" for line in lines)
    return pdf_bytes + b"\n" + suffix.encode("utf-8", errors="replace")
