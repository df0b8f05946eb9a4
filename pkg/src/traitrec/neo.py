"""Big Five questionnaire scoring and index-trait derivation."""

from __future__ import annotations

import csv
import enum
import json
from dataclasses import dataclass
from pathlib import Path

N_ITEMS = 60
ITEMS_PER_TRAIT = 12
MIN_ANSWER = 1
MAX_ANSWER = 5


class TraitLabel(enum.IntEnum):
    """The five traits in canonical vector order."""

    Openness = 0
    Conscientiousness = 1
    Extraversion = 2
    Agreeableness = 3
    Neuroticism = 4


@dataclass(frozen=True)
class NeoResponse:
    """One respondent's 60 answers, each on the 1..5 scale."""

    respondent_id: str
    answers: tuple[int, ...]

    def __post_init__(self):
        if len(self.answers) != N_ITEMS:
            raise ValueError(
                f"{self.respondent_id}: expected {N_ITEMS} answers, got {len(self.answers)}"
            )
        for i, a in enumerate(self.answers):
            if not MIN_ANSWER <= a <= MAX_ANSWER:
                raise ValueError(
                    f"{self.respondent_id}: answer {i + 1} out of range [1,5]: {a}"
                )


@dataclass(frozen=True)
class NeoKey:
    """Item-to-trait assignment plus per-item reversal flags (12 items per trait)."""

    item_trait: tuple[TraitLabel, ...]
    reversed: tuple[bool, ...]

    def __post_init__(self):
        if len(self.item_trait) != N_ITEMS or len(self.reversed) != N_ITEMS:
            raise ValueError("key must assign all 60 items")
        for trait in TraitLabel:
            owned = sum(1 for t in self.item_trait if t == trait)
            if owned != ITEMS_PER_TRAIT:
                raise ValueError(f"{trait.name} owns {owned} items, expected {ITEMS_PER_TRAIT}")


@dataclass(frozen=True)
class TraitVector:
    """Five per-trait scores in canonical order (O, C, E, A, N)."""

    scores: tuple[float, float, float, float, float]

    def __getitem__(self, trait: TraitLabel) -> float:
        return self.scores[int(trait)]


def score_neo(resp: NeoResponse, key: NeoKey) -> TraitVector:
    """Sum each trait's 12 effective item values (reversed items score 6 - answer)."""
    totals = [0.0] * len(TraitLabel)
    for answer, trait, flipped in zip(resp.answers, key.item_trait, key.reversed):
        effective = (MAX_ANSWER + 1 - answer) if flipped else answer
        totals[int(trait)] += effective
    return TraitVector(tuple(totals))


def index_trait(tv: TraitVector) -> TraitLabel:
    """Highest-scoring trait; ties go to the lowest canonical index."""
    best = max(range(len(TraitLabel)), key=lambda i: (tv.scores[i], -i))
    return TraitLabel(best)


def trait_match_count(a: TraitVector, b: TraitVector, tol: float = 6.0) -> int:
    """Number of traits whose scores differ by at most tol."""
    if tol < 0:
        raise ValueError(f"tol must be non-negative, got {tol}")
    return sum(1 for x, y in zip(a.scores, b.scores) if abs(x - y) <= tol)


def load_key(path: str | Path) -> NeoKey:
    with open(path, encoding="utf-8") as fh:
        data = json.load(fh)
    return NeoKey(
        item_trait=tuple(TraitLabel[name] for name in data["item_trait"]),
        reversed=tuple(bool(x) for x in data["reversed"]),
    )


def save_key(path: str | Path, key: NeoKey) -> None:
    data = {
        "item_trait": [t.name for t in key.item_trait],
        "reversed": list(key.reversed),
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(data, fh, ensure_ascii=False, indent=2, sort_keys=True)
        fh.write("\n")


def default_key() -> NeoKey:
    """The keying structure bundled with the package."""
    return load_key(Path(__file__).parent / "data" / "neo_key_default.json")


def load_responses(path: str | Path) -> list[NeoResponse]:
    """Read a responses CSV: respondent_id, a1..a60 (header row optional)."""
    responses = []
    with open(path, encoding="utf-8", newline="") as fh:
        for row in csv.reader(fh):
            if not row:
                continue
            if row[0] == "respondent_id":
                continue
            responses.append(NeoResponse(row[0], tuple(int(a) for a in row[1:])))
    return responses


def save_responses(path: str | Path, responses: list[NeoResponse]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["respondent_id"] + [f"a{i + 1}" for i in range(N_ITEMS)])
        for resp in responses:
            writer.writerow([resp.respondent_id] + list(resp.answers))
