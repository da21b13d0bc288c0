"""Streaming page readers for XML dumps and JSONL page records."""

from __future__ import annotations

import json
import re
import xml.etree.ElementTree as ET
from dataclasses import dataclass
from typing import BinaryIO, Iterator

from nlifoundry.errors import ParseError, TruncationError
from nlifoundry.textnorm import normalize_text

_CHUNK = 64 * 1024


@dataclass(frozen=True)
class RawPage:
    """One page of a dump before any filtering."""

    page_id: int
    title: str
    namespace: int
    wikitext: str


def parse_dump(source: BinaryIO) -> Iterator[RawPage]:
    """Yield pages from an XML page stream or a JSONL record stream.

    The format is auto-detected from the first non-whitespace byte (``<``
    means XML). Pages are yielded in document order with memory bounded by
    the largest single page; the whole dump is never materialized.
    """
    head = b""
    while True:
        chunk = source.read(_CHUNK)
        if not chunk:
            break
        head += chunk
        if head.lstrip(b"\xef\xbb\xbf \t\r\n"):
            break
    stripped = head.lstrip(b"\xef\xbb\xbf \t\r\n")
    if not stripped:
        return
    if stripped[:1] == b"<":
        yield from _parse_xml(head, source)
    else:
        yield from _parse_jsonl(head, source)


def _localname(tag: str) -> str:
    return tag.rsplit("}", 1)[-1]


def _child_text(elem, name: str) -> str | None:
    for child in elem:
        if _localname(child.tag) == name:
            return child.text or ""
    return None


def _page_from_element(elem, offset: int) -> RawPage:
    title = _child_text(elem, "title")
    ns = _child_text(elem, "ns")
    page_id = _child_text(elem, "id")
    text = None
    for child in elem:
        if _localname(child.tag) == "revision":
            text = _child_text(child, "text")
    if title is None or page_id is None:
        raise ParseError("page element missing title or id", offset)
    return RawPage(
        page_id=int(page_id),
        title=title,
        namespace=int(ns) if ns is not None else 0,
        wikitext=text or "",
    )


def _parse_xml(head: bytes, source: BinaryIO) -> Iterator[RawPage]:
    parser = ET.XMLPullParser(events=("start", "end"))
    offset = 0
    root = None

    def feed(data: bytes):
        nonlocal offset
        try:
            parser.feed(data)
        except ET.ParseError as exc:
            raise ParseError(f"malformed XML: {exc}", offset) from exc
        offset += len(data)

    def drain():
        nonlocal root
        events = parser.read_events()
        while True:
            try:
                event, elem = next(events)
            except StopIteration:
                return
            except ET.ParseError as exc:
                # the pull parser defers feed errors to read_events
                raise ParseError(f"malformed XML: {exc}", offset) from exc
            if event == "start" and root is None:
                root = elem
            elif event == "end" and _localname(elem.tag) == "page":
                yield _page_from_element(elem, offset)
                elem.clear()
                if root is not None:
                    # drop completed children so memory stays bounded
                    for done in list(root):
                        root.remove(done)

    feed(head)
    yield from drain()
    while True:
        chunk = source.read(_CHUNK)
        if not chunk:
            break
        feed(chunk)
        yield from drain()
    try:
        parser.close()
    except ET.ParseError as exc:
        raise TruncationError(f"XML stream truncated: {exc}", offset) from exc


def _parse_jsonl(head: bytes, source: BinaryIO) -> Iterator[RawPage]:
    offset = 0
    buffer = head
    while True:
        chunk = source.read(_CHUNK)
        at_eof = not chunk
        buffer += chunk
        while True:
            newline = buffer.find(b"\n")
            if newline < 0:
                break
            line, buffer = buffer[:newline], buffer[newline + 1 :]
            page = _page_from_line(line, offset, truncated=False)
            offset += newline + 1
            if page is not None:
                yield page
        if at_eof:
            if buffer.strip():
                # final line without newline: if it parses it is a record,
                # otherwise the stream was cut mid-record
                page = _page_from_line(buffer, offset, truncated=True)
                if page is not None:
                    yield page
            return


def _page_from_line(line: bytes, offset: int, truncated: bool) -> RawPage | None:
    text = line.decode("utf-8", errors="replace").strip()
    if not text:
        return None
    try:
        record = json.loads(text)
    except json.JSONDecodeError as exc:
        if truncated:
            raise TruncationError("JSONL stream truncated mid-record", offset) from exc
        raise ParseError(f"malformed JSONL: {exc.msg}", offset + exc.pos) from exc
    try:
        return RawPage(
            page_id=int(record["id"]),
            title=str(record["title"]),
            namespace=int(record.get("namespace", 0)),
            wikitext=str(record.get("text", "")),
        )
    except (TypeError, KeyError, ValueError) as exc:
        raise ParseError(f"bad page record: {exc}", offset) from exc


# Disambiguation pages are flagged by a title suffix or one of these
# template markers; the namespace alone cannot identify them.
DISAMBIG_SUFFIX = "(dezambiguizare)"
_DISAMBIG_TEMPLATE = re.compile(
    r"\{\{\s*(dezambiguizare|dezambig|disambiguation|disambig|dez)\s*[|}]",
    re.IGNORECASE,
)
_REDIRECT = re.compile(
    r"^\s*#\s*(redirect|redirecteaza|redirecționare)\b", re.IGNORECASE
)


def filter_pages(
    page: RawPage,
    counters: dict | None = None,
    disambig_suffix: str = DISAMBIG_SUFFIX,
) -> RawPage | None:
    """Keep main-namespace content pages; drop the rest with a reason.

    Returns the page unchanged when kept. A dropped page increments exactly
    one reason in ``counters``: ``namespace``, ``disambiguation`` or
    ``redirect``.
    """

    def drop(reason: str) -> None:
        if counters is not None:
            counters[reason] = counters.get(reason, 0) + 1

    if page.namespace != 0:
        drop("namespace")
        return None
    title = normalize_text(page.title).lower()
    head = normalize_text(page.wikitext[:2048]).lower()
    if title.endswith(disambig_suffix.lower()) or _DISAMBIG_TEMPLATE.search(head):
        drop("disambiguation")
        return None
    if _REDIRECT.match(normalize_text(page.wikitext[:128])):
        drop("redirect")
        return None
    return page
