"""Channel-page parsing and channel-as-person profiling.

A channel's posts run through the exact same cleaning, tokenization, and
TF-IDF path as a user's messages, against the user corpus lexicon, so
channels and users live in one comparable term space.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from datetime import datetime
from html.parser import HTMLParser
from pathlib import Path
from typing import IO

from .classify import EngineArtifacts, nearest_train_user, predict_mlp, predict_nb, profile_row
from .ingest import ParseError, clean_text, parse_timestamp
from .lexicon import GlobalLexicon, TermCounts, WeightVector, compute_tfidf, tokenize
from .neo import TraitLabel


@dataclass(frozen=True)
class ChannelPost:
    channel_id: str
    text: str
    timestamp: datetime | None = None


@dataclass
class ChannelProfile:
    channel_id: str
    title: str
    term_counts: TermCounts
    tfidf: WeightVector
    trait: TraitLabel | None = None


def _has_class_token(attrs: list[tuple[str, str | None]], token: str) -> bool:
    for name, value in attrs:
        if name == "class" and value and token in value.split():
            return True
    return False


# never receive an end tag, so they must not touch the depth counters
_VOID_ELEMENTS = frozenset(
    {"area", "base", "br", "col", "embed", "hr", "img", "input", "link", "meta",
     "param", "source", "track", "wbr"}
)


class _ExportParser(HTMLParser):
    """Pulls post texts out of a desktop-style channel export page.

    A post is an element carrying class token "message"; its text is the
    character data under the descendant element with class token "text".
    """

    def __init__(self):
        super().__init__(convert_charrefs=True)
        self.posts: list[str] = []
        self._message_depth = 0
        self._text_depth = 0
        self._chunks: list[str] = []
        self._block_chunks: list[str] = []
        self._in_block = False

    def handle_starttag(self, tag, attrs):
        if tag in _VOID_ELEMENTS:
            self.handle_startendtag(tag, attrs)
            return
        if self._text_depth > 0:
            self._text_depth += 1
        elif self._message_depth > 0 and _has_class_token(attrs, "text"):
            self._text_depth = 1
            self._chunks = []
        if self._message_depth > 0:
            self._message_depth += 1
        elif _has_class_token(attrs, "message"):
            self._message_depth = 1
            self._in_block = True
            self._block_chunks = []

    def handle_endtag(self, tag):
        if tag in _VOID_ELEMENTS:
            return
        if self._text_depth > 0:
            self._text_depth -= 1
            if self._text_depth == 0:
                self._block_chunks.append("".join(self._chunks))
        if self._message_depth > 0:
            self._message_depth -= 1
            if self._message_depth == 0 and self._in_block:
                text = " ".join(" ".join(self._block_chunks).split())
                if self._block_chunks and text:
                    self.posts.append(text)
                self._in_block = False

    def handle_startendtag(self, tag, attrs):
        if self._text_depth > 0 and tag == "br":
            self._chunks.append(" ")

    def handle_data(self, data):
        if self._text_depth > 0:
            self._chunks.append(data)


def parse_channel_html_export(
    source: str | Path | IO, channel_id: str = ""
) -> list[ChannelPost]:
    """Posts in document order; blocks without a text element are skipped."""
    if hasattr(source, "read"):
        payload = source.read()
    else:
        with open(source, "rb") as fh:
            payload = fh.read()
    if isinstance(payload, bytes):
        try:
            payload = payload.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise ParseError(f"channel export is not valid UTF-8: {exc}") from exc
    parser = _ExportParser()
    parser.feed(payload)
    parser.close()
    return [ChannelPost(channel_id=channel_id, text=text) for text in parser.posts]


def read_channel_jsonl(path: str | Path) -> tuple[dict[str, str], dict[str, list[ChannelPost]]]:
    """Alternate input path: one post per line, grouped by channel_id.

    Returns (titles, posts-by-channel).
    """
    titles: dict[str, str] = {}
    posts: dict[str, list[ChannelPost]] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(f"line {lineno}: invalid JSON: {exc.msg}") from exc
            cid = rec.get("channel_id")
            if not isinstance(cid, str) or not cid:
                raise ParseError(f"line {lineno}: missing channel_id")
            ts = rec.get("timestamp")
            posts.setdefault(cid, []).append(
                ChannelPost(cid, rec.get("text", ""), parse_timestamp(ts) if ts else None)
            )
            if rec.get("title") and cid not in titles:
                titles[cid] = rec["title"]
    return titles, posts


def build_channel_profile(
    posts: list[ChannelPost],
    lex: GlobalLexicon,
    stopwords: frozenset[str] = frozenset(),
    split_zwnj: bool = True,
    title: str = "",
) -> ChannelProfile:
    """Clean, tokenize, and weight a channel's posts against the user lexicon."""
    if not posts:
        raise ValueError("channel has no posts")
    channel_id = posts[0].channel_id
    if any(p.channel_id != channel_id for p in posts):
        raise ValueError("posts from more than one channel")
    counts: dict[str, int] = {}
    total = 0
    for post in posts:
        for tok in tokenize(clean_text(post.text), stopwords, split_zwnj):
            counts[tok] = counts.get(tok, 0) + 1
            total += 1
    if total == 0:
        raise ValueError(f"{channel_id}: all posts cleaned to empty")
    tc = TermCounts(channel_id, counts, total)
    tfidf = compute_tfidf(tc, lex)
    if not tfidf.weights:
        raise ValueError(f"{channel_id}: no usable vocabulary in the lexicon")
    return ChannelProfile(channel_id, title or channel_id, tc, tfidf)


def classify_channel(
    cp: ChannelProfile, engine: str, artifacts: EngineArtifacts
) -> TraitLabel:
    """Predicted index trait via the same paths used for users."""
    if not cp.tfidf.weights:
        raise ValueError(f"{cp.channel_id}: zero-norm profile")
    if engine == "cosine":
        if not artifacts.train_profiles:
            raise ValueError("cosine engine has no training profiles")
        result = nearest_train_user(cp.tfidf, artifacts.train_profiles)
        best = next(p for p in artifacts.train_profiles if p.owner_id == result.best_train_id)
        if best.index_trait is None:
            raise ValueError(f"{best.owner_id}: training profile has no label")
        return best.index_trait
    row = profile_row(cp.tfidf.weights, artifacts.columns, artifacts.lex, artifacts.mode)
    if engine == "nb":
        if artifacts.nb is None:
            raise ValueError("naive Bayes model not trained")
        return predict_nb(artifacts.nb, row)[0]
    if engine == "mlp":
        if artifacts.mlp is None:
            raise ValueError("MLP model not trained")
        return predict_mlp(artifacts.mlp, row)[0]
    raise ValueError(f"unknown engine {engine!r}")


def channel_profile_to_dict(cp: ChannelProfile) -> dict:
    return {
        "owner_id": cp.channel_id,
        "title": cp.title,
        "term_counts": cp.term_counts.counts,
        "tfidf": cp.tfidf.weights,
        "neo": None,
        "index_trait": cp.trait.name if cp.trait is not None else None,
    }


def channel_profile_from_dict(data: dict) -> ChannelProfile:
    cid = data["owner_id"]
    counts = {t: int(c) for t, c in data["term_counts"].items()}
    trait = data.get("index_trait")
    return ChannelProfile(
        channel_id=cid,
        title=data.get("title") or cid,
        term_counts=TermCounts(cid, counts, sum(counts.values())),
        tfidf=WeightVector(cid, {t: float(w) for t, w in data["tfidf"].items()}),
        trait=TraitLabel[trait] if trait is not None else None,
    )


def write_channel_profiles(path: str | Path, channel_profiles: list[ChannelProfile]) -> None:
    records = [
        channel_profile_to_dict(cp)
        for cp in sorted(channel_profiles, key=lambda cp: cp.channel_id)
    ]
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(records, fh, ensure_ascii=False, indent=2, sort_keys=True)
        fh.write("\n")


def read_channel_profiles(path: str | Path) -> list[ChannelProfile]:
    with open(path, encoding="utf-8") as fh:
        return [channel_profile_from_dict(rec) for rec in json.load(fh)]
