"""Evaluation arithmetic and seeded synthetic corpora for desk-scale runs."""

from __future__ import annotations

import csv
import json
import math
import random
from dataclasses import dataclass, field
from datetime import datetime, timedelta, timezone
from pathlib import Path

from .channels import ChannelPost, ChannelProfile, build_channel_profile, classify_channel
from .classify import (
    EngineArtifacts,
    MatchResult,
    MLPHyper,
    SplitPlan,
    build_feature_matrix,
    make_targets,
    match_users,
    predict_mlp,
    predict_nb,
    split_train_test,
    train_mlp,
    train_nb,
)
from .ingest import CleanMessage, MessageStore
from .lexicon import GlobalLexicon, build_global_lexicon, build_term_counts, compute_tfidf
from .neo import NeoKey, NeoResponse, TraitLabel, default_key, index_trait, score_neo
from .profiles import Profile


@dataclass
class EvalReport:
    cosine_accuracy_pct: float
    nb_accuracy_pct: float
    mlp_accuracy_pct: float
    satisfaction_pct: float | None
    matched_pairs: int
    per_pair: list[MatchResult] = field(default_factory=list)


@dataclass(frozen=True)
class FeedbackRecord:
    user_id: str
    ratings: tuple[float, ...]

    def __post_init__(self):
        if not self.ratings:
            raise ValueError(f"{self.user_id}: no ratings")
        for r in self.ratings:
            if not 0.0 <= r <= 1.0:
                raise ValueError(f"{self.user_id}: rating out of [0,1]: {r}")


@dataclass(frozen=True)
class SyntheticSpec:
    seed: int
    n_users_per_trait: int = 4
    vocab_per_trait: int = 30
    shared_vocab: int = 10
    msgs_per_user: int = 200
    noise_rate: float = 0.2

    def __post_init__(self):
        if self.n_users_per_trait < 1 or self.vocab_per_trait < 1 or self.msgs_per_user < 1:
            raise ValueError("per-trait counts and message count must be positive")
        if self.shared_vocab < 0:
            raise ValueError("shared_vocab must be non-negative")
        if not 0.0 <= self.noise_rate < 1.0:
            raise ValueError(f"noise_rate must be in [0,1), got {self.noise_rate}")


def message_histogram(store: MessageStore) -> list[tuple[str, int]]:
    """Per-sender message counts, descending, ties by id."""
    return sorted(store.counts.items(), key=lambda item: (-item[1], item[0]))


def pairwise_accuracy(results: list[MatchResult]) -> float:
    """100 * (sum of s-scores) / (5 * pairs); every result must carry an s-score."""
    if not results:
        raise ValueError("no match results")
    for r in results:
        if r.s_score is None:
            raise ValueError(f"{r.test_id}: match has no s-score")
    return 100.0 * sum(r.s_score for r in results) / (5 * len(results))


def classifier_accuracy(predicted: list[TraitLabel], actual: list[TraitLabel]) -> float:
    """Exact-label accuracy as a percentage."""
    if not predicted or len(predicted) != len(actual):
        raise ValueError(f"label lists must be equal-length and non-empty: {len(predicted)} vs {len(actual)}")
    hits = sum(1 for p, a in zip(predicted, actual) if p == a)
    return 100.0 * hits / len(predicted)


def satisfaction_rate(records: list[FeedbackRecord]) -> float:
    """Mean over users of each user's mean rating, as a percentage."""
    if not records:
        raise ValueError("no feedback records")
    per_user = [math.fsum(rec.ratings) / len(rec.ratings) for rec in records]
    return 100.0 * math.fsum(per_user) / len(per_user)


def load_feedback(path: str | Path) -> list[FeedbackRecord]:
    """Feedback CSV rows: user_id, r1;r2;... (semicolon-separated ratings)."""
    records = []
    with open(path, encoding="utf-8", newline="") as fh:
        for row in csv.reader(fh):
            if not row or row[0] == "user_id":
                continue
            ratings = tuple(float(r) for r in row[1].split(";") if r != "")
            records.append(FeedbackRecord(row[0], ratings))
    return records


# --- synthetic corpus -------------------------------------------------------

# Planted vocabularies are built from Persian letters only so they pass the
# cleaning rules untouched; the leading letter marks the vocabulary group.
_SUFFIX_ALPHABET = "ابپتثجچحخدذرزژسشصضطظعغفقکگلمنوهی"
_TRAIT_PREFIXES = {
    TraitLabel.Openness: "گ",
    TraitLabel.Conscientiousness: "چ",
    TraitLabel.Extraversion: "ژ",
    TraitLabel.Agreeableness: "ع",
    TraitLabel.Neuroticism: "خ",
}
_SHARED_PREFIX = "و"

_EPOCH = datetime(2021, 1, 1, tzinfo=timezone.utc)
_CHANNEL_COVERAGE_POST_LEN = 8
_CHANNEL_RANDOM_POSTS = 16


def _synth_token(prefix: str, i: int) -> str:
    base = len(_SUFFIX_ALPHABET)
    digits = []
    n = i
    while True:
        digits.append(_SUFFIX_ALPHABET[n % base])
        n //= base
        if n == 0:
            break
    while len(digits) < 2:
        digits.append(_SUFFIX_ALPHABET[0])
    return prefix + "".join(reversed(digits))


@dataclass
class SyntheticCorpus:
    store: MessageStore
    responses: list[NeoResponse]
    key: NeoKey
    channel_posts: dict[str, list[ChannelPost]]
    channel_titles: dict[str, str]
    user_labels: dict[str, TraitLabel]
    channel_labels: dict[str, TraitLabel]


def gen_synthetic_corpus(spec: SyntheticSpec) -> SyntheticCorpus:
    """Deterministic corpus with one planted vocabulary (and channel) per trait.

    Each user draws message tokens from their trait's vocabulary, except a
    noise_rate fraction drawn from the shared vocabulary; questionnaire
    answers are built so the planted trait scores highest.
    """
    rng = random.Random(spec.seed)
    key = default_key()
    trait_vocab = {
        trait: [_synth_token(prefix, i) for i in range(spec.vocab_per_trait)]
        for trait, prefix in _TRAIT_PREFIXES.items()
    }
    shared = [_synth_token(_SHARED_PREFIX, i) for i in range(spec.shared_vocab)]

    store = MessageStore()
    responses = []
    user_labels: dict[str, TraitLabel] = {}
    tick = 0
    for trait in TraitLabel:
        vocab = trait_vocab[trait]
        for u in range(spec.n_users_per_trait):
            uid = f"user_{trait.name.lower()}_{u:02d}"
            user_labels[uid] = trait
            for _ in range(spec.msgs_per_user):
                n_tokens = rng.randint(4, 9)
                tokens = []
                for _ in range(n_tokens):
                    if shared and rng.random() < spec.noise_rate:
                        tokens.append(rng.choice(shared))
                    else:
                        tokens.append(rng.choice(vocab))
                store.append(
                    CleanMessage(uid, " ".join(tokens), _EPOCH + timedelta(minutes=tick))
                )
                tick += 1
            answers = []
            for item in range(len(key.item_trait)):
                effective = 5 if key.item_trait[item] == trait else rng.choice((2, 3))
                answers.append(effective if not key.reversed[item] else 6 - effective)
            responses.append(NeoResponse(uid, tuple(answers)))

    channel_posts: dict[str, list[ChannelPost]] = {}
    channel_titles: dict[str, str] = {}
    channel_labels: dict[str, TraitLabel] = {}
    for trait in TraitLabel:
        cid = f"channel_{trait.name.lower()}"
        vocab = trait_vocab[trait]
        posts = []
        for start in range(0, len(vocab), _CHANNEL_COVERAGE_POST_LEN):
            posts.append(" ".join(vocab[start : start + _CHANNEL_COVERAGE_POST_LEN]))
        for _ in range(_CHANNEL_RANDOM_POSTS):
            posts.append(
                " ".join(rng.choice(vocab) for _ in range(_CHANNEL_COVERAGE_POST_LEN))
            )
        channel_posts[cid] = [ChannelPost(cid, text) for text in posts]
        channel_titles[cid] = f"{trait.name} talk"
        channel_labels[cid] = trait
    return SyntheticCorpus(
        store=store,
        responses=responses,
        key=key,
        channel_posts=channel_posts,
        channel_titles=channel_titles,
        user_labels=user_labels,
        channel_labels=channel_labels,
    )


# --- desk-scale end-to-end run ----------------------------------------------


@dataclass
class SyntheticRun:
    corpus: SyntheticCorpus
    profiles: list[Profile]
    lex: GlobalLexicon
    split: SplitPlan
    train_profiles: list[Profile]
    test_profiles: list[Profile]
    targets: dict[str, TraitLabel]
    artifacts: EngineArtifacts
    matches: list[MatchResult]
    nb_predictions: dict[str, TraitLabel]
    mlp_predictions: dict[str, TraitLabel]
    channel_profiles: list[ChannelProfile]
    report: EvalReport


def run_synthetic_pipeline(
    spec: SyntheticSpec,
    tol: float = 6.0,
    test_fraction: float = 1 / 3,
    alpha: float = 0.01,
    hyper: MLPHyper | None = None,
    mode: str = "tfidf",
    max_features: int = 2000,
    channel_engine: str = "cosine",
) -> SyntheticRun:
    """Generate a corpus and run the whole pipeline in memory."""
    corpus = gen_synthetic_corpus(spec)
    docs = [build_term_counts(corpus.store, uid) for uid in corpus.store.senders()]
    lex = build_global_lexicon(docs)
    by_resp = {r.respondent_id: r for r in corpus.responses}
    profiles = []
    for tc in docs:
        neo = score_neo(by_resp[tc.owner_id], corpus.key)
        profiles.append(
            Profile(
                owner_id=tc.owner_id,
                term_counts=tc,
                tfidf=compute_tfidf(tc, lex),
                neo=neo,
                index_trait=index_trait(neo),
            )
        )

    matrix = build_feature_matrix(profiles, lex, mode=mode, max_features=max_features)
    split = split_train_test(len(profiles), test_fraction=test_fraction, seed=spec.seed)
    train_profiles = [profiles[i] for i in split.train_rows]
    test_profiles = [profiles[i] for i in split.test_rows]
    targets = make_targets(profiles, mode="from_neo")

    train_y = [targets[profiles[i].owner_id] for i in split.train_rows]
    nb = train_nb(matrix.values[split.train_rows], train_y, alpha=alpha)
    hyper = hyper or MLPHyper(seed=spec.seed)
    mlp = train_mlp(matrix.values[split.train_rows], train_y, hyper)
    artifacts = EngineArtifacts(
        train_profiles=train_profiles,
        lex=lex,
        columns=matrix.columns,
        mode=mode,
        nb=nb,
        mlp=mlp,
    )

    matches, _ = match_users(test_profiles, train_profiles, tol=tol)
    nb_predictions, mlp_predictions = {}, {}
    for i in split.test_rows:
        row = matrix.values[i]
        nb_predictions[profiles[i].owner_id] = predict_nb(nb, row)[0]
        mlp_predictions[profiles[i].owner_id] = predict_mlp(mlp, row)[0]

    channel_profiles = []
    for cid in sorted(corpus.channel_posts):
        cp = build_channel_profile(
            corpus.channel_posts[cid], lex, title=corpus.channel_titles[cid]
        )
        cp.trait = classify_channel(cp, channel_engine, artifacts)
        channel_profiles.append(cp)

    test_ids = [profiles[i].owner_id for i in split.test_rows]
    report = EvalReport(
        cosine_accuracy_pct=pairwise_accuracy(matches),
        nb_accuracy_pct=classifier_accuracy(
            [nb_predictions[uid] for uid in test_ids], [targets[uid] for uid in test_ids]
        ),
        mlp_accuracy_pct=classifier_accuracy(
            [mlp_predictions[uid] for uid in test_ids], [targets[uid] for uid in test_ids]
        ),
        satisfaction_pct=None,
        matched_pairs=len(matches),
        per_pair=matches,
    )
    return SyntheticRun(
        corpus=corpus,
        profiles=profiles,
        lex=lex,
        split=split,
        train_profiles=train_profiles,
        test_profiles=test_profiles,
        targets=targets,
        artifacts=artifacts,
        matches=matches,
        nb_predictions=nb_predictions,
        mlp_predictions=mlp_predictions,
        channel_profiles=channel_profiles,
        report=report,
    )


def write_report(json_path: str | Path, text_path: str | Path, report: EvalReport) -> None:
    """Machine-readable report plus the three-line accuracy summary."""
    data = {
        "cosine_accuracy_pct": report.cosine_accuracy_pct,
        "nb_accuracy_pct": report.nb_accuracy_pct,
        "mlp_accuracy_pct": report.mlp_accuracy_pct,
        "satisfaction_pct": report.satisfaction_pct,
        "matched_pairs": report.matched_pairs,
        "per_pair": [
            {
                "test_id": r.test_id,
                "best_train_id": r.best_train_id,
                "similarity": r.similarity,
                "s_score": r.s_score,
            }
            for r in report.per_pair
        ],
    }
    with open(json_path, "w", encoding="utf-8") as fh:
        json.dump(data, fh, ensure_ascii=False, indent=2, sort_keys=True)
        fh.write("\n")
    lines = [
        f"cosine similarity accuracy: {report.cosine_accuracy_pct:.2f}",
        f"naive bayes accuracy: {report.nb_accuracy_pct:.2f}",
        f"mlp accuracy: {report.mlp_accuracy_pct:.2f}",
    ]
    if report.satisfaction_pct is not None:
        lines.append(f"recommendation satisfaction: {report.satisfaction_pct:.2f}")
    with open(text_path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines))
        fh.write("\n")
