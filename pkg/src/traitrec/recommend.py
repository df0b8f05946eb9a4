"""Channel ranking by cosine similarity, optionally gated by trait agreement."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

from .channels import ChannelProfile
from .classify import cosine
from .profiles import Profile


@dataclass
class Recommendation:
    user_id: str
    ranked: list[tuple[str, float]]
    k: int


def _is_silent(user: Profile) -> bool:
    return math.fsum(w * w for w in user.tfidf.weights.values()) == 0.0


def rank_channels(
    user: Profile,
    channels: list[ChannelProfile],
    k: int = 5,
    trait_gate: bool = False,
) -> Recommendation:
    """Top-k channels by cosine score, ties by channel id.

    With trait_gate on and a labeled user, only channels sharing the user's
    index trait compete; if none do, the unrestricted ranking is used.
    """
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    if not channels:
        raise ValueError("no channels to rank")
    seen = set()
    for ch in channels:
        if ch.channel_id in seen:
            raise ValueError(f"duplicate channel id {ch.channel_id}")
        seen.add(ch.channel_id)
    if _is_silent(user):
        raise ValueError(f"{user.owner_id}: zero-norm vector, no similarity can be inferred")
    candidates = channels
    if trait_gate and user.index_trait is not None:
        gated = [ch for ch in channels if ch.trait == user.index_trait]
        if gated:
            candidates = gated
    scored = []
    for ch in candidates:
        if ch.tfidf.weights:
            score = cosine(user.tfidf, ch.tfidf)
        else:
            score = 0.0
        scored.append((ch.channel_id, score))
    scored.sort(key=lambda item: (-item[1], item[0]))
    return Recommendation(user_id=user.owner_id, ranked=scored[:k], k=k)


def batch_recommend(
    users: list[Profile],
    channels: list[ChannelProfile],
    k: int = 5,
    trait_gate: bool = False,
) -> tuple[list[Recommendation], list[str]]:
    """One Recommendation per rankable user, plus the ids of silent users skipped."""
    if not channels:
        raise ValueError("no channels to rank")
    recommendations, skipped = [], []
    for user in sorted(users, key=lambda p: p.owner_id):
        if _is_silent(user):
            skipped.append(user.owner_id)
        else:
            recommendations.append(rank_channels(user, channels, k, trait_gate))
    return recommendations, skipped


def write_recommendations(
    path: str | Path, recommendations: list[Recommendation], skipped: list[str]
) -> None:
    """One JSON object per user: {user_id, recommendations, skipped}."""
    rows = [
        {
            "user_id": rec.user_id,
            "recommendations": [{"channel_id": cid, "score": score} for cid, score in rec.ranked],
            "skipped": False,
        }
        for rec in recommendations
    ]
    rows.extend({"user_id": uid, "recommendations": [], "skipped": True} for uid in skipped)
    rows.sort(key=lambda row: row["user_id"])
    with open(path, "w", encoding="utf-8") as fh:
        for row in rows:
            fh.write(json.dumps(row, ensure_ascii=False, sort_keys=True))
            fh.write("\n")
