"""Canonical text normalization and the shared word tokenizer.

Every matching stage (cue lookup, statistics, featurization) goes through
these two functions so that diacritic variants and whitespace quirks cannot
make the same text compare unequal in different modules.
"""

from __future__ import annotations

import re
import unicodedata

# Cedilla-based Romanian diacritics are a legacy encoding of the comma-below
# letters; both spellings occur in wiki text and must compare equal.
_CEDILLA_TO_COMMA = str.maketrans(
    {
        "ş": "ș",  # ş -> ș
        "Ş": "Ș",  # Ş -> Ș
        "ţ": "ț",  # ţ -> ț
        "Ţ": "Ț",  # Ţ -> Ț
    }
)

_WS_RUN = re.compile(r"\s+")
_PUNCT = re.compile(r"[^\w\s]|_")


def normalize_text(text: str) -> str:
    """Return the canonical form used by all downstream matching.

    NFC-normalizes, maps cedilla diacritics to their comma-below forms and
    collapses whitespace runs to single spaces. Idempotent.
    """
    text = unicodedata.normalize("NFC", text)
    text = text.translate(_CEDILLA_TO_COMMA)
    return _WS_RUN.sub(" ", text).strip()


def tokenize_words(text: str) -> list[str]:
    """Lowercased whitespace tokens with punctuation replaced by spaces.

    This is the word definition behind corpus statistics, overlap ratios,
    length-based difficulty scores and bag-of-words features.
    """
    return _PUNCT.sub(" ", text.lower()).split()
