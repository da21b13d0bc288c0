"""Best-effort wikitext stripping into per-section plain text.

Full MediaWiki semantics (parser functions, nested tables inside templates,
template expansion) is out of scope; unbalanced constructs are recovered
from by dropping the smallest offending region and counting the event.
"""

from __future__ import annotations

import html
import re
from dataclasses import dataclass

from nlifoundry.ingest.dump import RawPage

# Section titles whose whole subtree is dropped (reference lists, link
# farms); compared after lowercasing and diacritic normalization.
DEFAULT_DROP_SECTIONS = frozenset(
    {"note", "referințe", "bibliografie", "legături externe", "vezi și"}
)

_COMMENT = re.compile(r"<!--.*?-->", re.DOTALL)
_REF_PAIR = re.compile(r"<ref\b[^>/]*>.*?</ref\s*>", re.DOTALL | re.IGNORECASE)
_REF_SELF = re.compile(r"<ref\b[^>]*/\s*>", re.IGNORECASE)
_REF_OPEN = re.compile(r"<ref\b[^>]*>[^\n]*", re.IGNORECASE)  # unclosed: cut to EOL
_CONTAINERS = re.compile(
    r"<(gallery|timeline|math|code|source|syntaxhighlight|score|references|nowiki|pre)\b"
    r"[^>]*>.*?</\1\s*>",
    re.DOTALL | re.IGNORECASE,
)
_SELF_CLOSING = re.compile(r"<(references|nowiki|br|hr)\b[^>]*/?\s*>", re.IGNORECASE)
_HTML_TAG = re.compile(r"</?[a-zA-Z][^>\n]*>")
_TEMPLATE_INNER = re.compile(r"\{\{[^{}]*\}\}", re.DOTALL)
_INTERNAL_LINK = re.compile(r"\[\[([^\[\]|]*)(?:\|([^\[\]]*))?\]\]")
_EXTERNAL_LINK = re.compile(r"\[(?:https?|ftp)://[^\s\]]*([^\]]*)\]", re.IGNORECASE)
_MAGIC_WORD = re.compile(r"__[A-Z]+__")
_HEADING = re.compile(r"^(={1,6})\s*(.*?)\s*=+\s*$")
_FILE_PREFIXES = ("fișier:", "fisier:", "file:", "image:", "imagine:", "imagini:")
_CATEGORY_PREFIXES = ("categorie:", "category:")


@dataclass(frozen=True)
class Article:
    """A filtered page reduced to ordered (section_path, plain_text) blocks."""

    article_id: int
    title: str
    sections: tuple[tuple[str, str], ...]


def _count(counters: dict | None, key: str) -> None:
    if counters is not None:
        counters[key] = counters.get(key, 0) + 1


def _remove_block(text: str, opener: str, closer: str, key: str,
                  counters: dict | None) -> str:
    """Remove possibly-nested opener...closer blocks by depth scanning."""
    out = []
    i = 0
    n = len(text)
    while i < n:
        start = text.find(opener, i)
        if start < 0:
            out.append(text[i:])
            break
        out.append(text[i:start])
        depth = 1
        j = start + len(opener)
        while j < n and depth:
            if text.startswith(opener, j):
                depth += 1
                j += len(opener)
            elif text.startswith(closer, j):
                depth -= 1
                j += len(closer)
            else:
                j += 1
        if depth:
            _count(counters, f"unbalanced_{key}")
        i = j
    return "".join(out)


def _remove_bracket_links(text: str, prefixes: tuple[str, ...],
                          counters: dict | None, key: str) -> str:
    """Remove [[prefix:...]] links, which may nest further [[...]]."""
    out = []
    i = 0
    n = len(text)
    while i < n:
        start = text.find("[[", i)
        if start < 0:
            out.append(text[i:])
            break
        target_head = text[start + 2 : start + 34].lstrip().lower()
        if not target_head.startswith(prefixes):
            out.append(text[i : start + 2])
            i = start + 2
            continue
        out.append(text[i:start])
        depth = 1
        j = start + 2
        while j < n and depth:
            if text.startswith("[[", j):
                depth += 1
                j += 2
            elif text.startswith("]]", j):
                depth -= 1
                j += 2
            else:
                j += 1
        if depth:
            _count(counters, f"unbalanced_{key}")
        i = j
    return "".join(out)


def _replace_internal_links(text: str) -> str:
    def repl(match: re.Match) -> str:
        target, display = match.group(1), match.group(2)
        if display is not None:
            display = display.split("|")[-1].strip()
            if display:
                return display
        return target.strip()

    prev = None
    while prev != text:
        prev = text
        text = _INTERNAL_LINK.sub(repl, text)
    return text


def _strip_inline(text: str, counters: dict | None) -> str:
    text = _COMMENT.sub(" ", text)
    text = _REF_PAIR.sub(" ", text)
    text = _REF_SELF.sub(" ", text)
    if re.search(r"<ref\b", text, re.IGNORECASE):
        _count(counters, "unclosed_ref")
        text = _REF_OPEN.sub(" ", text)
    text = _CONTAINERS.sub(" ", text)
    text = _SELF_CLOSING.sub(" ", text)
    text = _remove_block(text, "{|", "|}", "table", counters)
    prev = None
    while prev != text:
        prev = text
        text = _TEMPLATE_INNER.sub(" ", text)
    if "{{" in text or "}}" in text:
        _count(counters, "unbalanced_template")
        text = text.replace("{{", " ").replace("}}", " ")
    text = _remove_bracket_links(text, _FILE_PREFIXES, counters, "file_link")
    text = _remove_bracket_links(text, _CATEGORY_PREFIXES, counters, "category_link")
    text = _replace_internal_links(text)
    text = _EXTERNAL_LINK.sub(lambda m: m.group(1).strip(), text)
    text = text.replace("'''", "").replace("''", "")
    text = _HTML_TAG.sub(" ", text)
    text = _MAGIC_WORD.sub(" ", text)
    return html.unescape(text)


def strip_markup(
    wikitext: str,
    counters: dict | None = None,
    drop_sections: frozenset[str] = DEFAULT_DROP_SECTIONS,
) -> list[tuple[str, str]]:
    """Strip markup and split by headings into (section_path, text) blocks.

    Headings become path components ("Istorie/Perioada modernă"); sections
    whose top-level title is in ``drop_sections`` are dropped entirely,
    subsections included. Recovery from unbalanced markup is counted in
    ``counters`` and never raises.
    """
    from nlifoundry.textnorm import normalize_text

    text = _strip_inline(wikitext, counters)
    sections: list[tuple[str, str]] = []
    path: list[str] = []
    lines: list[str] = []

    def flush():
        body = " ".join(part.strip() for part in lines if part.strip())
        if body:
            sections.append(("/".join(path), body))
        lines.clear()

    for raw_line in text.split("\n"):
        match = _HEADING.match(raw_line.strip())
        if match:
            flush()
            level = max(2, len(match.group(1)))
            depth = level - 1  # == X == is depth 1
            title = match.group(2).strip()
            del path[depth - 1 :]
            while len(path) < depth - 1:
                path.append("")
            path.append(title)
            continue
        line = raw_line.strip()
        line = re.sub(r"^[*#:;]+\s*", "", line)
        if line:
            lines.append(line)
    flush()

    kept = []
    for section_path, body in sections:
        top = section_path.split("/", 1)[0]
        if normalize_text(top).lower() in drop_sections:
            continue
        kept.append((section_path, normalize_text(body)))
    return kept


def page_to_article(
    page: RawPage,
    counters: dict | None = None,
    drop_sections: frozenset[str] = DEFAULT_DROP_SECTIONS,
) -> Article:
    return Article(
        article_id=page.page_id,
        title=page.title,
        sections=tuple(strip_markup(page.wikitext, counters, drop_sections)),
    )
