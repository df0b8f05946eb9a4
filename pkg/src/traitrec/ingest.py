"""Chat-export parsing, text cleaning, and the on-disk message store."""

from __future__ import annotations

import json
import unicodedata
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path
from typing import IO, Iterable, Iterator

KNOWN_KINDS = frozenset(
    {"text", "edit", "game", "audio", "phone", "song", "subtitle", "film", "location", "photo"}
)

# Telegram text mixes Arabic and Persian codepoints for the same letters.
_ARABIC_TO_PERSIAN = str.maketrans({"ي": "ی", "ك": "ک"})


class ParseError(ValueError):
    """Malformed export record."""


def _is_banned(ch: str) -> bool:
    # banned classes: punctuation (any Unicode P*), tilde, Latin letters,
    # ASCII digits, Arabic-Indic and Persian digits
    if "a" <= ch <= "z" or "A" <= ch <= "Z" or "0" <= ch <= "9":
        return True
    if "٠" <= ch <= "٩" or "۰" <= ch <= "۹":
        return True
    if ch == "~":
        return True
    return unicodedata.category(ch).startswith("P")


def _clean_pass(text: str) -> str:
    text = unicodedata.normalize("NFC", text).translate(_ARABIC_TO_PERSIAN)
    text = "".join(ch for ch in text if not _is_banned(ch))
    return " ".join(text.split())


def clean_text(raw: str) -> str:
    """Strip banned characters and collapse whitespace.

    Runs the normalize/strip/collapse pass to a fixed point: removing a
    banned character can make two codepoints adjacent that NFC then
    recombines, so a single pass is not idempotent.
    """
    prev, cur = None, raw
    while cur != prev:
        prev, cur = cur, _clean_pass(cur)
    return cur


def parse_timestamp(value: str) -> datetime:
    """ISO 8601 to an aware UTC datetime ('Z' suffix accepted)."""
    if value.endswith("Z"):
        value = value[:-1] + "+00:00"
    ts = datetime.fromisoformat(value)
    if ts.tzinfo is None:
        ts = ts.replace(tzinfo=timezone.utc)
    return ts.astimezone(timezone.utc)


@dataclass(frozen=True)
class RawMessage:
    sender_id: str
    sender_name: str
    timestamp: datetime
    kind: str
    payload: str


@dataclass(frozen=True)
class CleanMessage:
    sender_id: str
    text: str
    timestamp: datetime


def parse_chat_export(source: str | Path | IO) -> list[RawMessage]:
    """Parse a line-delimited export (one JSON record per non-empty line).

    Unknown kind strings map to "other"; structural problems raise
    ParseError naming the offending line.
    """
    if isinstance(source, (str, Path)):
        with open(source, "rb") as fh:
            return _parse_lines(fh)
    return _parse_lines(source)


def _parse_lines(lines: Iterable[str | bytes]) -> list[RawMessage]:
    messages = []
    for lineno, line in enumerate(lines, start=1):
        if isinstance(line, bytes):
            try:
                line = line.decode("utf-8")
            except UnicodeDecodeError as exc:
                raise ParseError(f"line {lineno}: not valid UTF-8") from exc
        if not line.strip():
            continue
        try:
            record = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ParseError(f"line {lineno}: invalid JSON: {exc.msg}") from exc
        if not isinstance(record, dict):
            raise ParseError(f"line {lineno}: record must be a JSON object")
        sender_id = record.get("sender_id")
        if not isinstance(sender_id, str) or not sender_id:
            raise ParseError(f"line {lineno}: missing sender_id")
        raw_ts = record.get("timestamp")
        if not isinstance(raw_ts, str):
            raise ParseError(f"line {lineno}: missing timestamp")
        try:
            timestamp = parse_timestamp(raw_ts)
        except ValueError as exc:
            raise ParseError(f"line {lineno}: invalid timestamp {raw_ts!r}") from exc
        kind = record.get("kind")
        if not isinstance(kind, str):
            raise ParseError(f"line {lineno}: missing kind")
        if kind not in KNOWN_KINDS:
            kind = "other"
        payload = ""
        if kind == "text":
            text = record.get("text")
            if not isinstance(text, str):
                raise ParseError(f"line {lineno}: missing text")
            payload = text
        messages.append(
            RawMessage(
                sender_id=sender_id,
                sender_name=record.get("sender_name") or "",
                timestamp=timestamp,
                kind=kind,
                payload=payload,
            )
        )
    return messages


def filter_textual(msg: RawMessage) -> RawMessage | None:
    """Keep only text messages with a non-blank payload."""
    if msg.kind == "text" and msg.payload.strip():
        return msg
    return None


class MessageStore:
    """Append-only store of cleaned messages with a per-sender count index."""

    def __init__(self):
        self.records: list[CleanMessage] = []
        self.counts: dict[str, int] = {}

    def append(self, msg: CleanMessage) -> None:
        self.records.append(msg)
        self.counts[msg.sender_id] = self.counts.get(msg.sender_id, 0) + 1

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self) -> Iterator[CleanMessage]:
        return iter(self.records)

    def senders(self) -> list[str]:
        return sorted(self.counts)

    def messages_for(self, sender_id: str) -> list[CleanMessage]:
        return [m for m in self.records if m.sender_id == sender_id]

    def save(self, records_path: str | Path, index_path: str | Path) -> None:
        with open(records_path, "w", encoding="utf-8") as fh:
            for msg in self.records:
                fh.write(
                    json.dumps(
                        {
                            "sender_id": msg.sender_id,
                            "text": msg.text,
                            "timestamp": msg.timestamp.isoformat(),
                        },
                        ensure_ascii=False,
                        sort_keys=True,
                    )
                )
                fh.write("\n")
        with open(index_path, "w", encoding="utf-8") as fh:
            json.dump(self.counts, fh, ensure_ascii=False, indent=2, sort_keys=True)
            fh.write("\n")

    @classmethod
    def load(cls, records_path: str | Path, index_path: str | Path | None = None) -> "MessageStore":
        """Rebuild from the records file; a sidecar index, if given, must agree."""
        store = cls()
        with open(records_path, encoding="utf-8") as fh:
            for line in fh:
                if not line.strip():
                    continue
                rec = json.loads(line)
                store.append(
                    CleanMessage(rec["sender_id"], rec["text"], parse_timestamp(rec["timestamp"]))
                )
        if index_path is not None and Path(index_path).exists():
            with open(index_path, encoding="utf-8") as fh:
                sidecar = json.load(fh)
            if sidecar != store.counts:
                raise ValueError(f"index file {index_path} disagrees with records")
        return store


def ingest_corpus(source: str | Path | IO, store: MessageStore) -> int:
    """Parse, filter, clean, and append; returns the number of stored messages.

    Not idempotent: re-ingesting the same source appends duplicates.
    """
    stored = 0
    for msg in parse_chat_export(source):
        kept = filter_textual(msg)
        if kept is None:
            continue
        text = clean_text(kept.payload)
        if not text:
            continue
        store.append(CleanMessage(kept.sender_id, text, kept.timestamp))
        stored += 1
    return stored


def active_users(store: MessageStore, min_messages: int = 100) -> list[str]:
    """Senders with at least min_messages, most talkative first (ties by id)."""
    if min_messages < 1:
        raise ValueError(f"min_messages must be >= 1, got {min_messages}")
    eligible = [(sid, n) for sid, n in store.counts.items() if n >= min_messages]
    eligible.sort(key=lambda item: (-item[1], item[0]))
    return [sid for sid, _ in eligible]
