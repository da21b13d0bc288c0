"""Distant supervision: cue-phrase matching over contiguous sentence pairs.

A sentence that *starts* with a linking phrase ("Prin urmare", "În contrast",
"Cu alte cuvinte", ...) is taken as the hypothesis of a labeled pair whose
premise is the preceding sentence of the same section. The cue is removed
from the hypothesis so that trained models cannot shortcut on it. Adjacent
pairs without any cue are sampled as neutral.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field, replace

from nlifoundry.errors import ConfigError
from nlifoundry.relations import Relation
from nlifoundry.textnorm import normalize_text

# Built-in cue inventory: (surface form, category). 19 contrastive,
# 19 entailment and 24 reasoning phrases. Matching uses the normalized
# lowercase form; surfaces are kept for reporting.
BUILTIN_PHRASES: tuple[tuple[str, Relation], ...] = (
    # contrastive
    ("Pe de altă parte", Relation.CONTRASTIVE),
    ("În contrast", Relation.CONTRASTIVE),
    ("În ciuda acestui fapt", Relation.CONTRASTIVE),
    ("În opoziție", Relation.CONTRASTIVE),
    ("În contradicție", Relation.CONTRASTIVE),
    ("În ciuda acestui lucru", Relation.CONTRASTIVE),
    ("În ciuda acestor fapte", Relation.CONTRASTIVE),
    ("În ciuda acestor lucruri", Relation.CONTRASTIVE),
    ("În mod contrar", Relation.CONTRASTIVE),
    ("Pe de cealaltă parte", Relation.CONTRASTIVE),
    ("Cu toate acestea însă", Relation.CONTRASTIVE),
    ("Contrastând", Relation.CONTRASTIVE),
    ("În dezacord", Relation.CONTRASTIVE),
    ("În sens opus", Relation.CONTRASTIVE),
    ("În antiteza", Relation.CONTRASTIVE),
    ("În contradictoriu", Relation.CONTRASTIVE),
    ("Într-un contrast", Relation.CONTRASTIVE),
    ("Contrar convingerilor", Relation.CONTRASTIVE),
    ("În pofida acestor lucruri", Relation.CONTRASTIVE),
    # entailment
    ("Cu alte cuvinte", Relation.ENTAILMENT),
    ("Adică", Relation.ENTAILMENT),
    ("În esență", Relation.ENTAILMENT),
    ("Altfel spus", Relation.ENTAILMENT),
    ("Asta înseamnă că", Relation.ENTAILMENT),
    ("În fond", Relation.ENTAILMENT),
    ("Sintetizând", Relation.ENTAILMENT),
    ("Rezumând", Relation.ENTAILMENT),
    ("În rezumat", Relation.ENTAILMENT),
    ("În termeni simpli", Relation.ENTAILMENT),
    ("În traducere liberă", Relation.ENTAILMENT),
    ("Mai pe scurt", Relation.ENTAILMENT),
    ("În alți termeni", Relation.ENTAILMENT),
    ("Simplificând", Relation.ENTAILMENT),
    ("Simplu spus", Relation.ENTAILMENT),
    ("Mai concis", Relation.ENTAILMENT),
    ("Pe larg", Relation.ENTAILMENT),
    ("În termeni populari", Relation.ENTAILMENT),
    ("Într-o altă formulare", Relation.ENTAILMENT),
    # reasoning
    ("Astfel", Relation.REASONING),
    ("Prin urmare", Relation.REASONING),
    ("Ca urmare", Relation.REASONING),
    ("În consecință", Relation.REASONING),
    ("Așadar", Relation.REASONING),
    ("Drept urmare", Relation.REASONING),
    ("În acest fel", Relation.REASONING),
    ("Ca rezultat", Relation.REASONING),
    ("Din această cauză", Relation.REASONING),
    ("Astfel că", Relation.REASONING),
    ("În concluzie", Relation.REASONING),
    ("Rezultatul este", Relation.REASONING),
    ("În rezultat", Relation.REASONING),
    ("Din această cauza", Relation.REASONING),
    ("Concluzionând", Relation.REASONING),
    ("Pentru a finaliza", Relation.REASONING),
    ("Ca o consecință a acestui fapt", Relation.REASONING),
    ("Într-o concluzie", Relation.REASONING),
    ("Ceea ce a dus la", Relation.REASONING),
    ("Ducând la", Relation.REASONING),
    ("Conducând la", Relation.REASONING),
    ("Provocând astfel", Relation.REASONING),
    ("Se poate concluziona că", Relation.REASONING),
    ("Ținând cont de acestea", Relation.REASONING),
)

# A cue match must end at a word boundary; these are the characters that
# may follow the matched span (end-of-string also counts).
_BOUNDARY_CHARS = frozenset({" ", ","})


@dataclass(frozen=True)
class LinkingPhrase:
    """A cue phrase with its category and normalized matching key."""

    surface: str
    category: Relation
    normalized: str = ""

    def __post_init__(self):
        if not self.surface:
            raise ConfigError("linking phrase surface must be non-empty")
        if self.category is Relation.NEUTRAL:
            raise ConfigError(
                f"linking phrase {self.surface!r} cannot be neutral: neutral "
                "pairs are defined by the absence of cues"
            )
        if not self.normalized:
            object.__setattr__(
                self, "normalized", normalize_text(self.surface).lower()
            )


class PhraseTable:
    """Cue inventory with a first-token index for sentence-start lookup."""

    def __init__(self, phrases: list[LinkingPhrase]):
        seen: dict[str, LinkingPhrase] = {}
        for phrase in phrases:
            prior = seen.get(phrase.normalized)
            if prior is not None:
                raise ConfigError(
                    f"duplicate normalized phrase {phrase.normalized!r} "
                    f"({prior.category.value} vs {phrase.category.value})"
                )
            seen[phrase.normalized] = phrase
        self.phrases = tuple(phrases)
        self._index: dict[str, list[LinkingPhrase]] = {}
        for phrase in phrases:
            head = phrase.normalized.split(" ", 1)[0]
            self._index.setdefault(head, []).append(phrase)
        # longest normalized form first so the first boundary-valid hit wins
        for bucket in self._index.values():
            bucket.sort(key=lambda p: (-len(p.normalized), p.normalized))

    def __len__(self) -> int:
        return len(self.phrases)

    def candidates(self, first_token: str) -> list[LinkingPhrase]:
        return self._index.get(first_token, [])

    def counts_by_category(self) -> dict[Relation, int]:
        counts: dict[Relation, int] = {}
        for phrase in self.phrases:
            counts[phrase.category] = counts.get(phrase.category, 0) + 1
        return counts


def load_phrase_table(overrides: dict | None = None) -> PhraseTable:
    """Build the phrase table, optionally applying user overrides.

    ``overrides`` may contain ``"add"`` (list of ``{"surface", "category"}``
    records) and ``"remove"`` (list of surfaces or normalized forms).
    Duplicate normalized forms and neutral-category phrases are rejected.
    """
    phrases = [LinkingPhrase(s, c) for s, c in BUILTIN_PHRASES]
    if overrides:
        removals = {
            normalize_text(str(item)).lower()
            for item in overrides.get("remove", [])
        }
        if removals:
            kept = [p for p in phrases if p.normalized not in removals]
            missing = removals - {p.normalized for p in phrases}
            if missing:
                raise ConfigError(f"cannot remove unknown phrases: {sorted(missing)}")
            phrases = kept
        for item in overrides.get("add", []):
            try:
                surface = item["surface"]
                category = item["category"]
            except (TypeError, KeyError):
                raise ConfigError(
                    f"phrase override must have surface and category: {item!r}"
                ) from None
            if isinstance(category, str):
                try:
                    category = Relation(category.strip().lower())
                except ValueError:
                    raise ConfigError(f"unknown phrase category: {category!r}") from None
            phrases.append(LinkingPhrase(surface, category))
    return PhraseTable(phrases)


def match_cue(
    sentence: str, table: PhraseTable
) -> tuple[LinkingPhrase, tuple[int, int]] | None:
    """Find a sentence-initial cue; returns the phrase and its span.

    The sentence is expected in normalized form. Matching is
    case-insensitive and anchored at the start; the match must be followed
    by a space, a comma, or the end of the sentence. Among candidates the
    longest normalized form wins. The span is reported against the sentence
    as given (diacritic folding is length-preserving, so offsets agree).
    """
    lowered = sentence.lower()
    # index lookup key: first whitespace token, trailing punctuation removed
    # ("astfel," must hit the "astfel" bucket)
    first_token = lowered.split(" ", 1)[0].rstrip(",.:;!?")
    for phrase in table.candidates(first_token):
        n = len(phrase.normalized)
        if not lowered.startswith(phrase.normalized):
            continue
        if n == len(sentence) or sentence[n] in _BOUNDARY_CHARS:
            return phrase, (0, n)
    return None


def remove_cue(sentence: str, span: tuple[int, int]) -> str | None:
    """Drop the cue span plus a trailing comma/colon, re-capitalize.

    Returns ``None`` when nothing is left after removal (the pair should
    then be discarded and counted).
    """
    rest = sentence[span[1] :]
    rest = rest.lstrip(" ")
    if rest[:1] in (",", ":"):
        rest = rest[1:]
    rest = rest.lstrip(" ")
    if not rest:
        return None
    return rest[0].upper() + rest[1:]


@dataclass(frozen=True)
class Provenance:
    """Where a pair came from; premise coordinates, plus hypothesis
    coordinates when the two sentences are from different articles."""

    article_id: int
    section_path: str
    premise_index: int
    hypothesis_index: int
    premise_cue: str | None = None
    hypothesis_article_id: int | None = None
    hypothesis_section_path: str | None = None

    def to_json(self) -> dict:
        out = {
            "article_id": self.article_id,
            "section_path": self.section_path,
            "premise_index": self.premise_index,
            "hypothesis_index": self.hypothesis_index,
        }
        if self.premise_cue is not None:
            out["premise_cue"] = self.premise_cue
        if self.hypothesis_article_id is not None:
            out["hypothesis_article_id"] = self.hypothesis_article_id
            out["hypothesis_section_path"] = self.hypothesis_section_path
        return out

    @classmethod
    def from_json(cls, data: dict) -> "Provenance":
        return cls(
            article_id=data["article_id"],
            section_path=data["section_path"],
            premise_index=data["premise_index"],
            hypothesis_index=data["hypothesis_index"],
            premise_cue=data.get("premise_cue"),
            hypothesis_article_id=data.get("hypothesis_article_id"),
            hypothesis_section_path=data.get("hypothesis_section_path"),
        )


@dataclass(frozen=True)
class LabeledPair:
    """A premise/hypothesis pair with its relation label and provenance."""

    pair_id: str
    premise: str
    hypothesis: str
    label: Relation
    cue: LinkingPhrase | None = None
    source: Provenance | None = None

    def __post_init__(self):
        if self.label is Relation.NEUTRAL and self.cue is not None:
            raise ValueError("neutral pairs cannot carry a cue")

    def to_json(self) -> dict:
        out = {
            "pair_id": self.pair_id,
            "premise": self.premise,
            "hypothesis": self.hypothesis,
            "label": self.label.value,
        }
        out["cue"] = (
            {"surface": self.cue.surface, "category": self.cue.category.value}
            if self.cue
            else None
        )
        if self.source is not None:
            out["source"] = self.source.to_json()
        return out

    @classmethod
    def from_json(cls, data: dict) -> "LabeledPair":
        from nlifoundry.relations import parse_relation

        cue = data.get("cue")
        return cls(
            pair_id=data["pair_id"],
            premise=data["premise"],
            hypothesis=data["hypothesis"],
            label=parse_relation(data["label"]),
            cue=LinkingPhrase(cue["surface"], Relation(cue["category"]))
            if cue
            else None,
            source=Provenance.from_json(data["source"]) if "source" in data else None,
        )


def pair_id_for(article_id: int, section_path: str, premise_index: int,
                extra: str = "") -> str:
    """Stable pair identifier derived from the premise coordinates."""
    key = f"{article_id}|{section_path}|{premise_index}|{extra}"
    return hashlib.blake2b(key.encode("utf-8"), digest_size=8).hexdigest()


def _keep_fraction(pair_id: str, seed: int, rate: float) -> bool:
    # Stable per-pair sampling decision: independent of iteration order,
    # reproducible under per-section parallelism.
    digest = hashlib.blake2b(
        f"{pair_id}|{seed}".encode("utf-8"), digest_size=8
    ).digest()
    u = int.from_bytes(digest, "big") / 2**64
    return u < rate


@dataclass
class ExtractionStats:
    """Counters filled in by :func:`extract_pairs`."""

    emitted: dict = field(default_factory=dict)
    neutral_candidates: int = 0
    discarded_empty_hypothesis: int = 0
    skipped_premise_cue_only: int = 0


def _group_key(sentence) -> tuple:
    return (sentence.article_id, sentence.section_path)


def extract_pairs(
    sentences: list,
    table: PhraseTable,
    neutral_rate: float | str = "balance",
    neutral_mode: str = "contiguous",
    keep_cues: bool = False,
    seed: int = 0,
    stats: ExtractionStats | None = None,
) -> list[LabeledPair]:
    """Turn ordered per-section sentences into labeled pairs.

    For each pair of consecutive sentences of the same (article, section):
    a cue at the start of the second sentence yields a labeled pair whose
    hypothesis has the cue removed (kept verbatim with ``keep_cues``); a
    pair with no cue on either side is a neutral candidate, kept with
    probability ``neutral_rate``. A cue on the premise alone yields nothing.

    ``neutral_rate`` may be the string ``"balance"`` (default), which picks
    the rate so that the expected neutral count matches the cue-labeled
    count, approximating an even cued/neutral split. ``neutral_mode``
    ``"cross-article"`` draws the two sides of each neutral pair from
    different articles instead of adjacent text.
    """
    if neutral_mode not in ("contiguous", "cross-article"):
        raise ConfigError(f"unknown neutral mode: {neutral_mode!r}")
    if stats is None:
        stats = ExtractionStats()

    cue_pairs: list[LabeledPair] = []
    neutral_candidates: list[tuple] = []  # (premise, hypothesis) sentences
    cue_cache: dict[int, object] = {}

    def cached_match(idx: int, sentence) -> tuple | None:
        if idx not in cue_cache:
            cue_cache[idx] = match_cue(sentence.text, table)
        return cue_cache[idx]

    for idx in range(len(sentences) - 1):
        first, second = sentences[idx], sentences[idx + 1]
        if _group_key(first) != _group_key(second):
            continue
        hit = cached_match(idx + 1, second)
        premise_hit = cached_match(idx, first)
        if hit is not None:
            phrase, span = hit
            if keep_cues:
                hypothesis = second.text
            else:
                hypothesis = remove_cue(second.text, span)
                if hypothesis is None:
                    stats.discarded_empty_hypothesis += 1
                    continue
            cue_pairs.append(
                LabeledPair(
                    pair_id=pair_id_for(
                        first.article_id, first.section_path, first.index_in_section
                    ),
                    premise=first.text,
                    hypothesis=hypothesis,
                    label=phrase.category,
                    cue=phrase,
                    source=Provenance(
                        article_id=first.article_id,
                        section_path=first.section_path,
                        premise_index=first.index_in_section,
                        hypothesis_index=second.index_in_section,
                        premise_cue=premise_hit[0].surface if premise_hit else None,
                    ),
                )
            )
        elif premise_hit is None:
            neutral_candidates.append((first, second))
        else:
            stats.skipped_premise_cue_only += 1

    stats.neutral_candidates = len(neutral_candidates)
    if neutral_rate == "balance":
        rate = min(1.0, len(cue_pairs) / max(1, len(neutral_candidates)))
    else:
        rate = float(neutral_rate)
        if not 0.0 <= rate <= 1.0:
            raise ConfigError(f"neutral rate must be in [0, 1], got {rate}")

    if neutral_mode == "contiguous":
        neutral_pairs = _contiguous_neutrals(neutral_candidates, rate, seed)
    else:
        neutral_pairs = _cross_article_neutrals(
            sentences, cue_cache, table, len(neutral_candidates), rate, seed
        )

    pairs = cue_pairs + neutral_pairs
    for pair in pairs:
        stats.emitted[pair.label.value] = stats.emitted.get(pair.label.value, 0) + 1
    return pairs


def _contiguous_neutrals(candidates, rate, seed) -> list[LabeledPair]:
    out = []
    for first, second in candidates:
        pid = pair_id_for(first.article_id, first.section_path, first.index_in_section)
        if not _keep_fraction(pid, seed, rate):
            continue
        out.append(
            LabeledPair(
                pair_id=pid,
                premise=first.text,
                hypothesis=second.text,
                label=Relation.NEUTRAL,
                source=Provenance(
                    article_id=first.article_id,
                    section_path=first.section_path,
                    premise_index=first.index_in_section,
                    hypothesis_index=second.index_in_section,
                ),
            )
        )
    return out


def _cross_article_neutrals(
    sentences, cue_cache, table, n_candidates, rate, seed
) -> list[LabeledPair]:
    """Neutral pairs whose sides come from different articles.

    Uses the same budget as the contiguous mode (rate x candidate count) but
    draws both sides from the pool of cue-free sentences, guaranteeing the
    two texts are unrelated.
    """
    import random

    budget = round(rate * n_candidates)

    def is_cue_free(i: int, s) -> bool:
        if i not in cue_cache:
            cue_cache[i] = match_cue(s.text, table)
        return cue_cache[i] is None

    cue_free = [s for i, s in enumerate(sentences) if is_cue_free(i, s)]
    rng = random.Random(seed)
    pool = cue_free[:]
    rng.shuffle(pool)
    out: list[LabeledPair] = []
    i = 0
    while len(out) < budget and i < len(pool) - 1:
        premise = pool[i]
        j = i + 1
        while j < len(pool) and pool[j].article_id == premise.article_id:
            j += 1
        if j >= len(pool):
            break
        hypothesis = pool[j]
        pool[i + 1], pool[j] = pool[j], pool[i + 1]
        pid = pair_id_for(
            premise.article_id,
            premise.section_path,
            premise.index_in_section,
            extra=f"x{hypothesis.article_id}|{hypothesis.section_path}|{hypothesis.index_in_section}",
        )
        out.append(
            LabeledPair(
                pair_id=pid,
                premise=premise.text,
                hypothesis=hypothesis.text,
                label=Relation.NEUTRAL,
                source=Provenance(
                    article_id=premise.article_id,
                    section_path=premise.section_path,
                    premise_index=premise.index_in_section,
                    hypothesis_index=hypothesis.index_in_section,
                    hypothesis_article_id=hypothesis.article_id,
                    hypothesis_section_path=hypothesis.section_path,
                ),
            )
        )
        i += 2
    return out
