"""The per-person profile record and its JSON persistence."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

from .lexicon import TermCounts, WeightVector
from .neo import TraitLabel, TraitVector


@dataclass
class Profile:
    """Identity plus term statistics, with trait data once scored."""

    owner_id: str
    term_counts: TermCounts
    tfidf: WeightVector
    neo: TraitVector | None = None
    index_trait: TraitLabel | None = None


def profile_to_dict(profile: Profile) -> dict:
    return {
        "owner_id": profile.owner_id,
        "term_counts": profile.term_counts.counts,
        "tfidf": profile.tfidf.weights,
        "neo": list(profile.neo.scores) if profile.neo is not None else None,
        "index_trait": profile.index_trait.name if profile.index_trait is not None else None,
    }


def profile_from_dict(data: dict) -> Profile:
    owner_id = data["owner_id"]
    counts = {t: int(c) for t, c in data["term_counts"].items()}
    neo = data.get("neo")
    trait = data.get("index_trait")
    return Profile(
        owner_id=owner_id,
        term_counts=TermCounts(owner_id, counts, sum(counts.values())),
        tfidf=WeightVector(owner_id, {t: float(w) for t, w in data["tfidf"].items()}),
        neo=TraitVector(tuple(float(s) for s in neo)) if neo is not None else None,
        index_trait=TraitLabel[trait] if trait is not None else None,
    )


def write_profiles(path: str | Path, profiles: list[Profile]) -> None:
    """One JSON array, sorted by owner id for reproducible bytes."""
    records = [profile_to_dict(p) for p in sorted(profiles, key=lambda p: p.owner_id)]
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(records, fh, ensure_ascii=False, indent=2, sort_keys=True)
        fh.write("\n")


def read_profiles(path: str | Path) -> list[Profile]:
    with open(path, encoding="utf-8") as fh:
        return [profile_from_dict(rec) for rec in json.load(fh)]
