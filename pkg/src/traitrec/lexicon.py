"""Tokenization, per-user term statistics, and TF-IDF weighting.

A "document" is one user's concatenated messages: document frequencies and
the shared IDF table are computed over users, not individual messages.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import TYPE_CHECKING, Iterable, Sequence

from .neo import TraitLabel

if TYPE_CHECKING:
    from .ingest import MessageStore
    from .profiles import Profile

ZWNJ = "‌"


class UnknownOwnerError(KeyError):
    """Requested owner has no stored messages."""


@dataclass(frozen=True)
class UserDocument:
    owner_id: str
    tokens: tuple[str, ...]


@dataclass
class TermCounts:
    """Raw term counts for one owner; total is the owner's token count."""

    owner_id: str
    counts: dict[str, int]
    total: int

    def __post_init__(self):
        if self.total != sum(self.counts.values()):
            raise ValueError(f"{self.owner_id}: total does not match counts")
        if any(c <= 0 for c in self.counts.values()):
            raise ValueError(f"{self.owner_id}: zero or negative count stored")


@dataclass
class GlobalLexicon:
    """Corpus-wide document frequencies; idf(t) = ln(n_docs / df(t))."""

    n_docs: int
    df: dict[str, int]
    idf: dict[str, float] = field(init=False)

    def __post_init__(self):
        if self.n_docs < 1:
            raise ValueError("lexicon needs at least one document")
        for term, d in self.df.items():
            if not 1 <= d <= self.n_docs:
                raise ValueError(f"df out of range for {term!r}: {d}")
        self.idf = {t: math.log(self.n_docs / d) for t, d in self.df.items()}


@dataclass
class WeightVector:
    """Sparse TF-IDF weights for one owner; zero-weight terms are absent."""

    owner_id: str
    weights: dict[str, float]


@dataclass
class TraitLexicon:
    """Per-trait aggregated term weights."""

    per_trait: dict[TraitLabel, dict[str, float]]


def load_stopwords(path: str | Path) -> frozenset[str]:
    """One stopword per line; blank lines ignored."""
    with open(path, encoding="utf-8") as fh:
        return frozenset(line.strip() for line in fh if line.strip())


def tokenize(
    text: str,
    stopwords: frozenset[str] = frozenset(),
    split_zwnj: bool = True,
) -> list[str]:
    """Whitespace tokenization of already-cleaned text, minus stopwords."""
    if split_zwnj:
        text = text.replace(ZWNJ, " ")
    return [tok for tok in text.split() if tok not in stopwords]


def build_term_counts(
    store: "MessageStore",
    owner_id: str,
    stopwords: frozenset[str] = frozenset(),
    split_zwnj: bool = True,
) -> TermCounts:
    """Counts over the concatenation of all of the owner's messages."""
    if owner_id not in store.counts:
        raise UnknownOwnerError(owner_id)
    counts: dict[str, int] = {}
    total = 0
    for msg in store.messages_for(owner_id):
        for tok in tokenize(msg.text, stopwords, split_zwnj):
            counts[tok] = counts.get(tok, 0) + 1
            total += 1
    if total == 0:
        raise ValueError(f"{owner_id}: no tokens after tokenization")
    return TermCounts(owner_id, counts, total)


def compute_tf(tc: TermCounts) -> dict[str, float]:
    """Relative term frequencies; values sum to 1 over the owner's vocabulary."""
    if tc.total < 1:
        raise ValueError(f"{tc.owner_id}: empty term counts")
    return {term: count / tc.total for term, count in tc.counts.items()}


def build_global_lexicon(docs: Sequence[TermCounts]) -> GlobalLexicon:
    """Document frequencies over one TermCounts per document."""
    if not docs:
        raise ValueError("cannot build a lexicon from zero documents")
    df: dict[str, int] = {}
    for doc in docs:
        for term in doc.counts:
            df[term] = df.get(term, 0) + 1
    return GlobalLexicon(n_docs=len(docs), df=dict(sorted(df.items())))


def compute_tfidf(tc: TermCounts, lex: GlobalLexicon) -> WeightVector:
    """TF times IDF per term; terms outside the lexicon or with idf 0 are dropped."""
    weights = {}
    for term, count in tc.counts.items():
        idf = lex.idf.get(term)
        if idf:
            weights[term] = (count / tc.total) * idf
    return WeightVector(tc.owner_id, weights)


def top_terms(wv: WeightVector, k: int) -> list[tuple[str, float]]:
    """k highest-weight terms, descending weight, ties by term order."""
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    ranked = sorted(wv.weights.items(), key=lambda item: (-item[1], item[0]))
    return ranked[:k]


def build_trait_lexicon(profiles: Iterable["Profile"]) -> TraitLexicon:
    """Termwise sum of the weight vectors of the users labeled with each trait.

    Sums use math.fsum, so the result is independent of profile order.
    """
    contributions: dict[TraitLabel, dict[str, list[float]]] = {t: {} for t in TraitLabel}
    for profile in profiles:
        if profile.index_trait is None:
            raise ValueError(f"{profile.owner_id}: profile has no index trait")
        bucket = contributions[profile.index_trait]
        for term, weight in profile.tfidf.weights.items():
            bucket.setdefault(term, []).append(weight)
    per_trait = {
        trait: {term: math.fsum(values) for term, values in sorted(bucket.items())}
        for trait, bucket in contributions.items()
    }
    return TraitLexicon(per_trait)


def save_lexicon(path: str | Path, lex: GlobalLexicon) -> None:
    """Persist n_docs and df only; idf is recomputed on load."""
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(
            {"n_docs": lex.n_docs, "df": lex.df},
            fh,
            ensure_ascii=False,
            indent=2,
            sort_keys=True,
        )
        fh.write("\n")


def load_lexicon(path: str | Path) -> GlobalLexicon:
    with open(path, encoding="utf-8") as fh:
        data = json.load(fh)
    return GlobalLexicon(n_docs=data["n_docs"], df=data["df"])
