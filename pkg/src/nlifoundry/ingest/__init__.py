"""Streaming ingestion: wiki dumps to filtered, length-bounded sentences."""

from nlifoundry.ingest.dump import RawPage, filter_pages, parse_dump
from nlifoundry.ingest.sentences import (
    ROMANIAN_ABBREVIATIONS,
    Sentence,
    split_sentences,
)
from nlifoundry.ingest.wikitext import Article, strip_markup
from nlifoundry.textnorm import normalize_text

__all__ = [
    "RawPage",
    "Article",
    "Sentence",
    "parse_dump",
    "filter_pages",
    "strip_markup",
    "split_sentences",
    "normalize_text",
    "ROMANIAN_ABBREVIATIONS",
]
