"""Command-line pipeline: ingest, profile, train, classify, recommend, evaluate.

Every stage reads its inputs from the paths in the config (falling back to
standard names under the output directory), writes its documented files, and
prints a one-line summary. Stages are re-runnable and deterministic for a
given seed; `ingest` appends, so re-ingesting the same corpus doubles counts.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from dataclasses import dataclass
from pathlib import Path

from . import channels as channels_mod
from . import classify as classify_mod
from .evaluate import (
    EvalReport,
    SyntheticSpec,
    classifier_accuracy,
    gen_synthetic_corpus,
    load_feedback,
    message_histogram,
    pairwise_accuracy,
    satisfaction_rate,
    write_report,
)
from .ingest import MessageStore, active_users, ingest_corpus
from .lexicon import build_global_lexicon, build_term_counts, compute_tfidf, load_lexicon, load_stopwords, save_lexicon
from .neo import TraitLabel, default_key, index_trait, load_key, load_responses, save_key, save_responses
from .profiles import Profile, read_profiles, write_profiles

ENGINES = ("cosine", "nb", "mlp")
TARGET_MODES = ("from_neo", "from_cosine")


class ValidationError(Exception):
    """Bad configuration or missing stage input."""


@dataclass
class Config:
    corpus: str = ""
    neo_responses: str = ""
    neo_key: str = ""
    channels: str = ""
    feedback: str = ""
    output_dir: str = "out"
    min_messages: int = 100
    stopwords: str = ""
    idf_log_base: str = "natural"
    tol: float = 6.0
    test_fraction: float = 1 / 3
    seed: int = 0
    engine: str = "cosine"
    feature_mode: str = "tfidf"
    max_features: int = 2000
    nb_alpha: float = 0.01
    hidden_size: int = 64
    lr: float = 0.5
    epochs: int = 500
    k: int = 5
    trait_gate: bool = False
    targets: str = "from_neo"
    split_zwnj: bool = True

    def validate(self) -> None:
        if self.min_messages < 1:
            raise ValidationError(f"min_messages must be >= 1, got {self.min_messages}")
        if self.idf_log_base != "natural":
            raise ValidationError("idf_log_base is fixed to 'natural'")
        if self.tol < 0:
            raise ValidationError(f"tol must be non-negative, got {self.tol}")
        if not 0.0 < self.test_fraction < 1.0:
            raise ValidationError(f"test_fraction must be in (0,1), got {self.test_fraction}")
        if self.engine not in ENGINES:
            raise ValidationError(f"engine must be one of {ENGINES}, got {self.engine!r}")
        if self.feature_mode not in classify_mod.FEATURE_MODES:
            raise ValidationError(f"feature_mode must be one of {classify_mod.FEATURE_MODES}")
        if self.targets not in TARGET_MODES:
            raise ValidationError(f"targets must be one of {TARGET_MODES}, got {self.targets!r}")
        if self.max_features < 1 or self.hidden_size < 1 or self.k < 1:
            raise ValidationError("max_features, hidden_size, and k must be >= 1")
        if self.epochs < 0:
            raise ValidationError(f"epochs must be >= 0, got {self.epochs}")
        if self.lr <= 0 or self.nb_alpha <= 0:
            raise ValidationError("lr and nb_alpha must be positive")

    # default artifact names under output_dir when a path is not configured
    def out(self, name: str) -> Path:
        return Path(self.output_dir) / name

    def input_path(self, configured: str, default_name: str) -> Path:
        return Path(configured) if configured else self.out(default_name)


def load_config(path: str | Path) -> Config:
    with open(path, encoding="utf-8") as fh:
        data = json.load(fh)
    known = {f.name for f in dataclasses.fields(Config)}
    unknown = sorted(set(data) - known)
    if unknown:
        raise ValidationError(f"unknown config keys: {', '.join(unknown)}")
    return Config(**data)


def _require(path: Path, hint: str) -> Path:
    if not path.exists():
        raise ValidationError(f"missing {hint}: {path}")
    return path


def _json_dump(path: Path, data) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(data, fh, ensure_ascii=False, indent=2, sort_keys=True)
        fh.write("\n")


def _json_load(path: Path):
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


def _stopwords(cfg: Config) -> frozenset[str]:
    if not cfg.stopwords:
        return frozenset()
    return load_stopwords(_require(Path(cfg.stopwords), "stopword list"))


# --- stages -----------------------------------------------------------------


def cmd_ingest(cfg: Config) -> str:
    corpus = _require(cfg.input_path(cfg.corpus, "corpus.jsonl"), "corpus file")
    store_path = cfg.out("store.jsonl")
    store = MessageStore.load(store_path, cfg.out("store_index.json")) if store_path.exists() else MessageStore()
    stored = ingest_corpus(corpus, store)
    store.save(store_path, cfg.out("store_index.json"))
    histogram = message_histogram(store)
    _json_dump(
        cfg.out("histogram.json"),
        {
            "histogram": [[sid, n] for sid, n in histogram],
            "active_users": active_users(store, cfg.min_messages),
            "min_messages": cfg.min_messages,
        },
    )
    return f"ingest: stored {stored} messages ({len(store)} total from {len(store.counts)} senders)"


def cmd_lexicon(cfg: Config) -> str:
    store = MessageStore.load(
        _require(cfg.out("store.jsonl"), "message store (run ingest first)"),
        cfg.out("store_index.json"),
    )
    stopwords = _stopwords(cfg)
    docs, skipped = [], 0
    for sender in store.senders():
        try:
            docs.append(build_term_counts(store, sender, stopwords, cfg.split_zwnj))
        except ValueError:
            skipped += 1
    if not docs:
        raise ValidationError("no users with tokens; nothing to index")
    lex = build_global_lexicon(docs)
    save_lexicon(cfg.out("lexicon.json"), lex)
    profiles = [Profile(tc.owner_id, tc, compute_tfidf(tc, lex)) for tc in docs]
    write_profiles(cfg.out("profiles.json"), profiles)
    return (
        f"lexicon: {lex.n_docs} user documents, {len(lex.df)} terms"
        + (f", {skipped} token-less users skipped" if skipped else "")
    )


def cmd_neo_score(cfg: Config) -> str:
    profiles = read_profiles(_require(cfg.out("profiles.json"), "profiles (run lexicon first)"))
    responses = load_responses(
        _require(cfg.input_path(cfg.neo_responses, "neo_responses.csv"), "responses file")
    )
    if cfg.neo_key:
        key = load_key(_require(Path(cfg.neo_key), "questionnaire key"))
    elif cfg.out("neo_key.json").exists():
        key = load_key(cfg.out("neo_key.json"))
    else:
        key = default_key()
    by_owner = {p.owner_id: p for p in profiles}
    labeled = unmatched = 0
    from .neo import score_neo

    for resp in responses:
        profile = by_owner.get(resp.respondent_id)
        if profile is None:
            unmatched += 1
            continue
        profile.neo = score_neo(resp, key)
        profile.index_trait = index_trait(profile.neo)
        labeled += 1
    write_profiles(cfg.out("profiles.json"), profiles)
    return (
        f"neo-score: labeled {labeled} of {len(profiles)} profiles"
        + (f", {unmatched} responses unmatched" if unmatched else "")
    )


def cmd_train(cfg: Config) -> str:
    profiles = read_profiles(_require(cfg.out("profiles.json"), "profiles (run lexicon first)"))
    lex = load_lexicon(_require(cfg.out("lexicon.json"), "lexicon (run lexicon first)"))
    refs = [p for p in profiles if p.index_trait is not None]
    if not refs:
        raise ValidationError("no labeled profiles; run neo-score first")
    targets = classify_mod.make_targets(
        refs if cfg.targets == "from_neo" else profiles, cfg.targets, train_refs=refs
    )
    pool = [p for p in profiles if p.owner_id in targets]
    if len(pool) < 3:
        raise ValidationError(f"need at least 3 labeled rows to split, got {len(pool)}")
    matrix = classify_mod.build_feature_matrix(pool, lex, cfg.feature_mode, cfg.max_features)
    plan = classify_mod.split_train_test(len(pool), cfg.test_fraction, cfg.seed)
    train_y = [targets[matrix.row_ids[i]] for i in plan.train_rows]
    nb = classify_mod.train_nb(matrix.values[plan.train_rows], train_y, alpha=cfg.nb_alpha)
    hyper = classify_mod.MLPHyper(cfg.hidden_size, cfg.lr, cfg.epochs, cfg.seed)
    mlp = classify_mod.train_mlp(matrix.values[plan.train_rows], train_y, hyper)
    classify_mod.save_split(cfg.out("split.json"), plan)
    classify_mod.save_nb(cfg.out("nb_model.json"), nb)
    classify_mod.save_mlp(cfg.out("mlp_model.json"), mlp)
    _json_dump(
        cfg.out("feature_space.json"),
        {
            "columns": matrix.columns,
            "mode": matrix.mode,
            "row_ids": matrix.row_ids,
            "targets": {uid: t.name for uid, t in targets.items()},
        },
    )
    return (
        f"train: nb and mlp fitted on {len(plan.train_rows)} rows"
        f" ({len(plan.test_rows)} held out, {len(matrix.columns)} features)"
    )


def _load_artifacts(cfg: Config, profiles: list[Profile]):
    lex = load_lexicon(_require(cfg.out("lexicon.json"), "lexicon (run lexicon first)"))
    space = _json_load(_require(cfg.out("feature_space.json"), "feature space (run train first)"))
    plan = classify_mod.load_split(
        _require(cfg.out("split.json"), "split plan (run train first)"), len(space["row_ids"])
    )
    nb = classify_mod.load_nb(_require(cfg.out("nb_model.json"), "nb model (run train first)"))
    mlp = classify_mod.load_mlp(_require(cfg.out("mlp_model.json"), "mlp model (run train first)"))
    targets = {uid: TraitLabel[name] for uid, name in space["targets"].items()}
    by_owner = {p.owner_id: p for p in profiles}
    missing = [uid for uid in space["row_ids"] if uid not in by_owner]
    if missing:
        raise ValidationError(f"profiles out of date, missing: {', '.join(missing[:3])}")
    train_profiles = []
    for i in plan.train_rows:
        uid = space["row_ids"][i]
        train_profiles.append(dataclasses.replace(by_owner[uid], index_trait=targets[uid]))
    artifacts = classify_mod.EngineArtifacts(
        train_profiles=train_profiles,
        lex=lex,
        columns=space["columns"],
        mode=space["mode"],
        nb=nb,
        mlp=mlp,
    )
    return artifacts, space, plan, targets


def cmd_classify(cfg: Config) -> str:
    profiles = read_profiles(_require(cfg.out("profiles.json"), "profiles (run lexicon first)"))
    artifacts, space, plan, targets = _load_artifacts(cfg, profiles)
    by_owner = {p.owner_id: p for p in profiles}
    test_profiles = [by_owner[space["row_ids"][i]] for i in plan.test_rows]
    matches, skipped = classify_mod.match_users(test_profiles, artifacts.train_profiles, cfg.tol)
    nb_pred, mlp_pred = {}, {}
    for profile in test_profiles:
        row = classify_mod.profile_row(
            profile.tfidf.weights, artifacts.columns, artifacts.lex, artifacts.mode
        )
        nb_pred[profile.owner_id] = classify_mod.predict_nb(artifacts.nb, row)[0].name
        mlp_pred[profile.owner_id] = classify_mod.predict_mlp(artifacts.mlp, row)[0].name
    eval_targets = {
        p.owner_id: index_trait(p.neo).name for p in test_profiles if p.neo is not None
    }
    _json_dump(
        cfg.out("predictions.json"),
        {
            "test_ids": sorted(p.owner_id for p in test_profiles),
            "targets": eval_targets,
            "cosine": {
                "matches": [
                    {
                        "test_id": m.test_id,
                        "best_train_id": m.best_train_id,
                        "similarity": m.similarity,
                        "s_score": m.s_score,
                    }
                    for m in matches
                ],
                "skipped": skipped,
            },
            "nb": nb_pred,
            "mlp": mlp_pred,
        },
    )
    return (
        f"classify: {len(test_profiles)} test users"
        f" (cosine matched {len(matches)}, skipped {len(skipped)})"
    )


def cmd_channels(cfg: Config) -> str:
    lex = load_lexicon(_require(cfg.out("lexicon.json"), "lexicon (run lexicon first)"))
    source = _require(cfg.input_path(cfg.channels, "channels.jsonl"), "channel input")
    stopwords = _stopwords(cfg)
    groups: dict[str, list] = {}
    titles: dict[str, str] = {}
    if source.is_dir():
        for page in sorted(source.glob("*.html")):
            posts = channels_mod.parse_channel_html_export(page, channel_id=page.stem)
            groups[page.stem] = posts
            titles[page.stem] = page.stem
    elif source.suffix == ".html":
        groups[source.stem] = channels_mod.parse_channel_html_export(source, channel_id=source.stem)
        titles[source.stem] = source.stem
    else:
        titles, groups = channels_mod.read_channel_jsonl(source)
    classified = 0
    engine_note = "unclassified (run train first to classify)"
    artifacts = None
    if cfg.out("feature_space.json").exists():
        profiles = read_profiles(_require(cfg.out("profiles.json"), "profiles (run lexicon first)"))
        artifacts, _, _, _ = _load_artifacts(cfg, profiles)
        engine_note = f"classified via {cfg.engine}"
    channel_profiles = []
    for cid in sorted(groups):
        cp = channels_mod.build_channel_profile(
            groups[cid], lex, stopwords, cfg.split_zwnj, title=titles.get(cid, cid)
        )
        if artifacts is not None:
            cp.trait = channels_mod.classify_channel(cp, cfg.engine, artifacts)
            classified += 1
        channel_profiles.append(cp)
    channels_mod.write_channel_profiles(cfg.out("channel_profiles.json"), channel_profiles)
    return f"channels: {len(channel_profiles)} profiled, {classified} {engine_note}"


def cmd_recommend(cfg: Config) -> str:
    from .recommend import batch_recommend, write_recommendations

    profiles = read_profiles(_require(cfg.out("profiles.json"), "profiles (run lexicon first)"))
    channel_profiles = channels_mod.read_channel_profiles(
        _require(cfg.out("channel_profiles.json"), "channel profiles (run channels first)")
    )
    recommendations, skipped = batch_recommend(
        profiles, channel_profiles, cfg.k, cfg.trait_gate
    )
    write_recommendations(cfg.out("recommendations.jsonl"), recommendations, skipped)
    return f"recommend: {len(recommendations)} users served, {len(skipped)} silent users skipped"


def cmd_evaluate(cfg: Config) -> str:
    predictions = _json_load(
        _require(cfg.out("predictions.json"), "predictions file (run classify first)")
    )
    matches = [
        classify_mod.MatchResult(m["test_id"], m["best_train_id"], m["similarity"], m["s_score"])
        for m in predictions["cosine"]["matches"]
    ]
    scored = [m for m in matches if m.s_score is not None]
    if not scored:
        raise ValidationError("no trait-scored pairs; cosine accuracy is undefined")
    targets = predictions["targets"]
    eval_ids = [uid for uid in predictions["test_ids"] if uid in targets]
    if not eval_ids:
        raise ValidationError("no test users carry trait labels; nothing to score")
    actual = [TraitLabel[targets[uid]] for uid in eval_ids]
    nb_acc = classifier_accuracy(
        [TraitLabel[predictions["nb"][uid]] for uid in eval_ids], actual
    )
    mlp_acc = classifier_accuracy(
        [TraitLabel[predictions["mlp"][uid]] for uid in eval_ids], actual
    )
    satisfaction = None
    if cfg.feedback:
        satisfaction = satisfaction_rate(
            load_feedback(_require(Path(cfg.feedback), "feedback file"))
        )
    report = EvalReport(
        cosine_accuracy_pct=pairwise_accuracy(scored),
        nb_accuracy_pct=nb_acc,
        mlp_accuracy_pct=mlp_acc,
        satisfaction_pct=satisfaction,
        matched_pairs=len(scored),
        per_pair=scored,
    )
    write_report(cfg.out("report.json"), cfg.out("report.txt"), report)
    return (
        f"evaluate: cosine {report.cosine_accuracy_pct:.2f}"
        f" | nb {report.nb_accuracy_pct:.2f} | mlp {report.mlp_accuracy_pct:.2f}"
        + (f" | satisfaction {satisfaction:.2f}" if satisfaction is not None else "")
    )


def cmd_synth(cfg: Config, spec: SyntheticSpec) -> str:
    corpus = gen_synthetic_corpus(spec)
    out = Path(cfg.output_dir)
    with open(out / "corpus.jsonl", "w", encoding="utf-8") as fh:
        for msg in corpus.store:
            fh.write(
                json.dumps(
                    {
                        "sender_id": msg.sender_id,
                        "timestamp": msg.timestamp.isoformat(),
                        "kind": "text",
                        "text": msg.text,
                    },
                    ensure_ascii=False,
                    sort_keys=True,
                )
            )
            fh.write("\n")
    save_responses(out / "neo_responses.csv", corpus.responses)
    save_key(out / "neo_key.json", corpus.key)
    with open(out / "channels.jsonl", "w", encoding="utf-8") as fh:
        for cid in sorted(corpus.channel_posts):
            for post in corpus.channel_posts[cid]:
                fh.write(
                    json.dumps(
                        {"channel_id": cid, "title": corpus.channel_titles[cid], "text": post.text},
                        ensure_ascii=False,
                        sort_keys=True,
                    )
                )
                fh.write("\n")
    _json_dump(
        out / "truth_labels.json",
        {
            "users": {uid: t.name for uid, t in corpus.user_labels.items()},
            "channels": {cid: t.name for cid, t in corpus.channel_labels.items()},
        },
    )
    return (
        f"synth: {len(corpus.user_labels)} users, {len(corpus.store)} messages,"
        f" {len(corpus.channel_posts)} channels (seed {spec.seed})"
    )


STAGES = ["ingest", "lexicon", "neo-score", "train", "classify", "channels", "recommend", "evaluate"]


def run(command: str, cfg: Config, spec: SyntheticSpec | None = None) -> list[str]:
    """Run one subcommand (or the whole chain for `all`); returns summary lines."""
    cfg.validate()
    Path(cfg.output_dir).mkdir(parents=True, exist_ok=True)
    handlers = {
        "ingest": cmd_ingest,
        "lexicon": cmd_lexicon,
        "neo-score": cmd_neo_score,
        "train": cmd_train,
        "classify": cmd_classify,
        "channels": cmd_channels,
        "recommend": cmd_recommend,
        "evaluate": cmd_evaluate,
    }
    if command == "synth":
        return [cmd_synth(cfg, spec or SyntheticSpec(seed=cfg.seed))]
    if command == "all":
        return [handlers[stage](cfg) for stage in STAGES]
    return [handlers[command](cfg)]


def _build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON config file")
    common.add_argument("--corpus")
    common.add_argument("--neo-responses")
    common.add_argument("--neo-key")
    common.add_argument("--channels")
    common.add_argument("--feedback")
    common.add_argument("--output-dir", "-o")
    common.add_argument("--min-messages", type=int)
    common.add_argument("--stopwords")
    common.add_argument("--tol", type=float)
    common.add_argument("--test-fraction", type=float)
    common.add_argument("--seed", type=int)
    common.add_argument("--engine", choices=ENGINES)
    common.add_argument(
        "--feature-mode", choices=["tfidf", "tfidf-times-idf"], dest="feature_mode"
    )
    common.add_argument("--max-features", type=int)
    common.add_argument("--nb-alpha", type=float)
    common.add_argument("--hidden-size", type=int)
    common.add_argument("--lr", type=float)
    common.add_argument("--epochs", type=int)
    common.add_argument("--k", type=int)
    common.add_argument("--trait-gate", action=argparse.BooleanOptionalAction, default=None)
    common.add_argument("--targets", choices=["from-neo", "from-cosine"])
    common.add_argument("--split-zwnj", action=argparse.BooleanOptionalAction, default=None)

    parser = argparse.ArgumentParser(prog="traitrec", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in STAGES + ["all"]:
        sub.add_parser(name, parents=[common])
    synth = sub.add_parser("synth", parents=[common])
    synth.add_argument("--users-per-trait", type=int, default=4)
    synth.add_argument("--vocab-per-trait", type=int, default=30)
    synth.add_argument("--shared-vocab", type=int, default=10)
    synth.add_argument("--msgs-per-user", type=int, default=200)
    synth.add_argument("--noise-rate", type=float, default=0.2)
    return parser


def _apply_overrides(cfg: Config, args: argparse.Namespace) -> Config:
    for field in dataclasses.fields(Config):
        value = getattr(args, field.name, None)
        if value is not None:
            if field.name in ("feature_mode", "targets"):
                value = value.replace("-", "_")
            setattr(cfg, field.name, value)
    return cfg


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config) if args.config else Config()
        cfg = _apply_overrides(cfg, args)
        if args.command in ("train", "synth", "all") and args.seed is None and not args.config:
            raise ValidationError(f"--seed is required for {args.command}")
        spec = None
        if args.command == "synth":
            spec = SyntheticSpec(
                seed=cfg.seed,
                n_users_per_trait=args.users_per_trait,
                vocab_per_trait=args.vocab_per_trait,
                shared_vocab=args.shared_vocab,
                msgs_per_user=args.msgs_per_user,
                noise_rate=args.noise_rate,
            )
        for line in run(args.command, cfg, spec):
            print(line)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
