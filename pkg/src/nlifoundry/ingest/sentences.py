"""Rule-based sentence splitting with a shipped Romanian abbreviation list."""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Iterable

from nlifoundry.ingest.wikitext import Article
from nlifoundry.textnorm import normalize_text

# Abbreviations (lowercase, including the final period) that block a
# sentence boundary at the period that ends them.
ROMANIAN_ABBREVIATIONS = frozenset(
    {
        "str.", "bd.", "nr.", "dr.", "prof.", "acad.", "ing.", "arh.", "av.",
        "gen.", "col.", "mr.", "cpt.", "lt.", "slt.", "sg.", "pr.", "sf.",
        "dl.", "dna.", "dlui.", "jr.", "sr.", "cca.", "aprox.", "etc.",
        "ex.", "pct.", "art.", "alin.", "lit.", "cap.", "vol.", "pag.",
        "p.", "pp.", "ed.", "op.", "cit.", "trad.", "sec.", "mil.",
        "min.", "max.", "î.hr.", "d.hr.", "e.n.", "î.e.n.", "a.c.",
        "ș.a.", "ș.a.m.d.", "s.a.", "o.n.u.", "s.u.a.", "r.s.r.",
    }
)

_TERMINAL = {".", "!", "?"}
_CLOSERS = {'"', "'", "»", "”", "’", ")", "]"}


@dataclass(frozen=True)
class Sentence:
    """A normalized sentence with its position inside an article section."""

    text: str
    article_id: int
    section_path: str
    index_in_section: int
    char_len: int

    def to_json(self) -> dict:
        return {
            "text": self.text,
            "article_id": self.article_id,
            "section_path": self.section_path,
            "index_in_section": self.index_in_section,
            "char_len": self.char_len,
        }

    @classmethod
    def from_json(cls, data: dict) -> "Sentence":
        return cls(
            text=data["text"],
            article_id=data["article_id"],
            section_path=data["section_path"],
            index_in_section=data["index_in_section"],
            char_len=data["char_len"],
        )


def _is_abbreviation(text: str, dot_index: int, abbreviations: frozenset[str]) -> bool:
    """Does the period at ``dot_index`` end an abbreviation or an initial?"""
    start = dot_index
    while start > 0 and not text[start - 1].isspace():
        start -= 1
    word = text[start : dot_index + 1].lower()
    if word in abbreviations:
        return True
    # single-letter initials: "I. L. Caragiale"
    core = word[:-1]
    return len(core) == 1 and core.isalpha()


def split_text(text: str, abbreviations: frozenset[str] = ROMANIAN_ABBREVIATIONS) -> list[str]:
    """Split plain text at terminal punctuation, abbreviation-aware."""
    out: list[str] = []
    start = 0
    i = 0
    n = len(text)
    while i < n:
        ch = text[i]
        if ch not in _TERMINAL:
            i += 1
            continue
        run_end = i
        while run_end + 1 < n and text[run_end + 1] in _TERMINAL:
            run_end += 1
        close_end = run_end
        while close_end + 1 < n and text[close_end + 1] in _CLOSERS:
            close_end += 1
        at_break = close_end + 1 >= n or text[close_end + 1].isspace()
        # an abbreviation only blocks a single-period boundary
        if at_break and not (
            ch == "." and run_end == i and _is_abbreviation(text, i, abbreviations)
        ):
            out.append(text[start : close_end + 1].strip())
            start = close_end + 1
        i = close_end + 1
    tail = text[start:].strip()
    if tail:
        out.append(tail)
    return [s for s in out if s]


def split_sentences(
    article: Article,
    min_len: int = 50,
    abbreviations: frozenset[str] = ROMANIAN_ABBREVIATIONS,
) -> list[Sentence]:
    """Split every section into sentences, dropping those under ``min_len``.

    ``index_in_section`` counts all split sentences of the section, so a
    gap in the surviving indices reveals a dropped short sentence.
    """
    if min_len < 0:
        raise ValueError(f"min_len must be >= 0, got {min_len}")
    sentences: list[Sentence] = []
    for section_path, body in article.sections:
        for index, raw in enumerate(split_text(body, abbreviations)):
            text = normalize_text(raw)
            if len(text) < min_len:
                continue
            sentences.append(
                Sentence(
                    text=text,
                    article_id=article.article_id,
                    section_path=section_path,
                    index_in_section=index,
                    char_len=len(text),
                )
            )
    return sentences


def write_sentences(sentences: Iterable[Sentence], path) -> int:
    count = 0
    with open(path, "w", encoding="utf-8", newline="\n") as handle:
        for sentence in sentences:
            handle.write(json.dumps(sentence.to_json(), ensure_ascii=False) + "\n")
            count += 1
    return count


def read_sentences(path) -> list[Sentence]:
    out = []
    with open(path, "r", encoding="utf-8") as handle:
        for line in handle:
            if line.strip():
                out.append(Sentence.from_json(json.loads(line)))
    return out
