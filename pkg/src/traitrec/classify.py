"""Trait classification engines: cosine matching, naive Bayes, and an MLP.

Tie-breaking is fixed everywhere for reproducibility: class ties resolve in
canonical trait order, candidate ties by ascending owner id. Training is
single-threaded and deterministic for a given seed and row order.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .lexicon import GlobalLexicon, WeightVector
from .neo import TraitLabel, trait_match_count
from .profiles import Profile

FEATURE_MODES = ("tfidf", "tfidf_times_idf")
N_CLASSES = len(TraitLabel)


@dataclass
class MatchResult:
    test_id: str
    best_train_id: str
    similarity: float
    s_score: int | None = None


@dataclass
class FeatureMatrix:
    row_ids: list[str]
    columns: list[str]
    values: np.ndarray
    mode: str


@dataclass
class SplitPlan:
    train_rows: list[int]
    test_rows: list[int]
    seed: int
    test_fraction: float


@dataclass
class NBModel:
    classes: list[TraitLabel]
    class_log_prior: np.ndarray
    term_log_likelihood: np.ndarray
    alpha: float


@dataclass
class MLPHyper:
    # full-batch descent on proportion-scale tf-idf features needs a large
    # step; lr around 1e-2 leaves the loss near its initial value
    hidden_size: int = 64
    lr: float = 0.5
    epochs: int = 500
    seed: int = 0


@dataclass
class MLPModel:
    w1: np.ndarray
    b1: np.ndarray
    w2: np.ndarray
    b2: np.ndarray
    hidden_size: int
    seed: int
    loss_history: list[float] = field(default_factory=list, compare=False)


@dataclass
class MLPGradients:
    w1: np.ndarray
    b1: np.ndarray
    w2: np.ndarray
    b2: np.ndarray


@dataclass
class EngineArtifacts:
    """Everything a trained run leaves behind that prediction paths need."""

    train_profiles: list[Profile]
    lex: GlobalLexicon
    columns: list[str]
    mode: str = "tfidf"
    nb: NBModel | None = None
    mlp: MLPModel | None = None


def _norm_sq(weights: dict[str, float]) -> float:
    return math.fsum(w * w for w in weights.values())


def _norm(weights: dict[str, float]) -> float:
    return math.sqrt(_norm_sq(weights))


def cosine(a: WeightVector, b: WeightVector) -> float:
    """Cosine similarity over the union of terms; in [0,1] for non-negative weights."""
    norm_sq_a = _norm_sq(a.weights)
    norm_sq_b = _norm_sq(b.weights)
    if norm_sq_a == 0.0 or norm_sq_b == 0.0:
        raise ValueError("cosine undefined for a zero-norm vector")
    small, large = sorted((a.weights, b.weights), key=len)
    dot = math.fsum(w * large[t] for t, w in small.items() if t in large)
    # sqrt of the product (not product of sqrts) keeps self-similarity at 1.0
    return min(1.0, max(0.0, dot / math.sqrt(norm_sq_a * norm_sq_b)))


def nearest_train_user(test: WeightVector, train: list[Profile]) -> MatchResult:
    """Most cosine-similar training user; ties go to the lowest owner id."""
    if not train:
        raise ValueError("no training users")
    if _norm(test.weights) == 0.0:
        raise ValueError(f"{test.owner_id}: zero-norm vector, no similarity can be inferred")
    best_id, best_sim = None, -1.0
    for candidate in sorted(train, key=lambda p: p.owner_id):
        if _norm(candidate.tfidf.weights) == 0.0:
            sim = 0.0
        else:
            sim = cosine(test, candidate.tfidf)
        if sim > best_sim:
            best_id, best_sim = candidate.owner_id, sim
    return MatchResult(test_id=test.owner_id, best_train_id=best_id, similarity=best_sim)


def match_users(
    test_profiles: list[Profile],
    train_profiles: list[Profile],
    tol: float = 6.0,
) -> tuple[list[MatchResult], list[str]]:
    """Nearest-train-user matches for a batch, with trait agreement counts.

    Returns (matches, skipped_ids); zero-norm test users are skipped, and
    s_score is filled only where both sides carry trait vectors.
    """
    by_id = {p.owner_id: p for p in train_profiles}
    matches, skipped = [], []
    for profile in sorted(test_profiles, key=lambda p: p.owner_id):
        if _norm(profile.tfidf.weights) == 0.0:
            skipped.append(profile.owner_id)
            continue
        result = nearest_train_user(profile.tfidf, train_profiles)
        best = by_id[result.best_train_id]
        if profile.neo is not None and best.neo is not None:
            result.s_score = trait_match_count(profile.neo, best.neo, tol)
        matches.append(result)
    return matches, skipped


def feature_columns(lex: GlobalLexicon, max_features: int = 2000) -> list[str]:
    """Top terms by descending idf, ties by term; the matrix column order."""
    if max_features < 1:
        raise ValueError(f"max_features must be >= 1, got {max_features}")
    ranked = sorted(lex.idf.items(), key=lambda item: (-item[1], item[0]))
    return [term for term, _ in ranked[:max_features]]


def profile_row(
    weights: dict[str, float],
    columns: list[str],
    lex: GlobalLexicon,
    mode: str = "tfidf",
) -> np.ndarray:
    """One feature row for a weight map, in the given column order."""
    if mode not in FEATURE_MODES:
        raise ValueError(f"unknown feature mode {mode!r}")
    row = np.zeros(len(columns))
    for j, term in enumerate(columns):
        w = weights.get(term, 0.0)
        if mode == "tfidf_times_idf":
            w *= lex.idf.get(term, 0.0)
        row[j] = w
    return row


def build_feature_matrix(
    profiles: list[Profile],
    lex: GlobalLexicon,
    mode: str = "tfidf",
    max_features: int = 2000,
) -> FeatureMatrix:
    """Dense matrix of per-user weights over the highest-idf lexicon terms."""
    if not profiles:
        raise ValueError("no profiles to vectorize")
    if not lex.df:
        raise ValueError("lexicon has an empty vocabulary")
    columns = feature_columns(lex, max_features)
    rows = [profile_row(p.tfidf.weights, columns, lex, mode) for p in profiles]
    return FeatureMatrix(
        row_ids=[p.owner_id for p in profiles],
        columns=columns,
        values=np.vstack(rows),
        mode=mode,
    )


def split_train_test(n_rows: int, test_fraction: float = 1 / 3, seed: int = 0) -> SplitPlan:
    """Seeded shuffle split; test size is round-half-up of n*fraction, clamped to [1, n-1]."""
    if n_rows < 3:
        raise ValueError(f"need at least 3 rows to split, got {n_rows}")
    if not 0.0 < test_fraction < 1.0:
        raise ValueError(f"test_fraction must be in (0,1), got {test_fraction}")
    n_test = int(math.floor(n_rows * test_fraction + 0.5))
    n_test = max(1, min(n_rows - 1, n_test))
    order = np.random.default_rng(seed).permutation(n_rows)
    test_rows = sorted(int(i) for i in order[:n_test])
    train_rows = sorted(int(i) for i in order[n_test:])
    return SplitPlan(train_rows, test_rows, seed, test_fraction)


def make_targets(
    profiles: list[Profile],
    mode: str = "from_neo",
    train_refs: list[Profile] | None = None,
) -> dict[str, TraitLabel]:
    """Target labels per owner: the highest NEO trait, or the nearest train user's label."""
    from .neo import index_trait

    targets: dict[str, TraitLabel] = {}
    if mode == "from_neo":
        for profile in profiles:
            if profile.neo is None:
                raise ValueError(f"{profile.owner_id}: no trait vector for from_neo targets")
            targets[profile.owner_id] = index_trait(profile.neo)
        return targets
    if mode == "from_cosine":
        if not train_refs:
            raise ValueError("from_cosine targets need labeled training profiles")
        labels = {}
        for ref in train_refs:
            if ref.index_trait is None:
                raise ValueError(f"{ref.owner_id}: training reference has no label")
            labels[ref.owner_id] = ref.index_trait
        for profile in profiles:
            if _norm(profile.tfidf.weights) == 0.0:
                continue  # unresolvable: no conversation to compare
            result = nearest_train_user(profile.tfidf, train_refs)
            targets[profile.owner_id] = labels[result.best_train_id]
        return targets
    raise ValueError(f"unknown target mode {mode!r}")


def train_nb(X: np.ndarray, y: list[TraitLabel], alpha: float = 1.0) -> NBModel:
    """Multinomial naive Bayes over non-negative real features.

    Per class c and column j:
        likelihood(c, j) = (sum_i X_ij + alpha) / (sum_ij X_ij + alpha * n_cols)
    with sums over the rows of class c; priors are class frequencies.
    """
    X = np.asarray(X, dtype=float)
    if alpha <= 0:
        raise ValueError(f"alpha must be positive, got {alpha}")
    if np.any(X < 0):
        raise ValueError("negative feature value")
    if X.shape[0] != len(y):
        raise ValueError(f"{X.shape[0]} rows but {len(y)} labels")
    classes = sorted(set(y))
    n_cols = X.shape[1]
    log_prior = np.empty(len(classes))
    log_likelihood = np.empty((len(classes), n_cols))
    for ci, cls in enumerate(classes):
        rows = X[[i for i, label in enumerate(y) if label == cls]]
        log_prior[ci] = math.log(rows.shape[0] / X.shape[0])
        mass = rows.sum(axis=0)
        log_likelihood[ci] = np.log((mass + alpha) / (mass.sum() + alpha * n_cols))
    return NBModel(classes, log_prior, log_likelihood, alpha)


def predict_nb(model: NBModel, row: np.ndarray) -> tuple[TraitLabel, np.ndarray]:
    """Argmax class and the posterior over all five traits (zeros for unseen classes)."""
    row = np.asarray(row, dtype=float)
    if row.shape != (model.term_log_likelihood.shape[1],):
        raise ValueError(
            f"row has {row.shape} features, model expects {model.term_log_likelihood.shape[1]}"
        )
    scores = model.class_log_prior + model.term_log_likelihood @ row
    shifted = np.exp(scores - scores.max())
    class_posterior = shifted / shifted.sum()
    posterior = np.zeros(N_CLASSES)
    for ci, cls in enumerate(model.classes):
        posterior[int(cls)] = class_posterior[ci]
    return model.classes[int(np.argmax(scores))], posterior


def _softmax(logits: np.ndarray) -> np.ndarray:
    shifted = np.exp(logits - logits.max(axis=-1, keepdims=True))
    return shifted / shifted.sum(axis=-1, keepdims=True)


def _forward(model: MLPModel, X: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    z1 = X @ model.w1.T + model.b1
    hidden = np.maximum(z1, 0.0)
    probs = _softmax(hidden @ model.w2.T + model.b2)
    return z1, hidden, probs


def mlp_loss(model: MLPModel, X: np.ndarray, y: list[TraitLabel]) -> float:
    """Mean cross-entropy of the batch."""
    _, _, probs = _forward(model, X)
    picked = probs[np.arange(len(y)), [int(label) for label in y]]
    return float(-np.mean(np.log(picked)))


def mlp_gradients(model: MLPModel, X: np.ndarray, y: list[TraitLabel]) -> MLPGradients:
    """Analytic gradients of the mean cross-entropy over the batch."""
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[1] != model.w1.shape[1]:
        raise ValueError(f"input shape {X.shape} does not match model width {model.w1.shape[1]}")
    if X.shape[0] != len(y):
        raise ValueError(f"{X.shape[0]} rows but {len(y)} labels")
    z1, hidden, probs = _forward(model, X)
    onehot = np.zeros((len(y), N_CLASSES))
    onehot[np.arange(len(y)), [int(label) for label in y]] = 1.0
    delta = (probs - onehot) / len(y)
    grad_w2 = delta.T @ hidden
    grad_b2 = delta.sum(axis=0)
    dhidden = (delta @ model.w2) * (z1 > 0)
    grad_w1 = dhidden.T @ X
    grad_b1 = dhidden.sum(axis=0)
    return MLPGradients(grad_w1, grad_b1, grad_w2, grad_b2)


def init_mlp(n_features: int, hyper: MLPHyper) -> MLPModel:
    """Symmetric-uniform weights with bound sqrt(6/(fan_in+fan_out)); zero biases."""
    rng = np.random.default_rng(hyper.seed)
    h = hyper.hidden_size
    bound1 = math.sqrt(6.0 / (n_features + h))
    bound2 = math.sqrt(6.0 / (h + N_CLASSES))
    return MLPModel(
        w1=rng.uniform(-bound1, bound1, size=(h, n_features)),
        b1=np.zeros(h),
        w2=rng.uniform(-bound2, bound2, size=(N_CLASSES, h)),
        b2=np.zeros(N_CLASSES),
        hidden_size=h,
        seed=hyper.seed,
    )


def train_mlp(X: np.ndarray, y: list[TraitLabel], hyper: MLPHyper | None = None) -> MLPModel:
    """Full-batch gradient descent on softmax cross-entropy.

    loss_history holds the loss before each update plus the final loss.
    """
    hyper = hyper or MLPHyper()
    X = np.asarray(X, dtype=float)
    if not np.all(np.isfinite(X)):
        raise ValueError("non-finite feature value")
    if len(set(y)) < 2:
        raise ValueError("need at least 2 classes to train")
    model = init_mlp(X.shape[1], hyper)
    for _ in range(hyper.epochs):
        model.loss_history.append(mlp_loss(model, X, y))
        grads = mlp_gradients(model, X, y)
        model.w1 -= hyper.lr * grads.w1
        model.b1 -= hyper.lr * grads.b1
        model.w2 -= hyper.lr * grads.w2
        model.b2 -= hyper.lr * grads.b2
    model.loss_history.append(mlp_loss(model, X, y))
    return model


def predict_mlp(model: MLPModel, row: np.ndarray) -> tuple[TraitLabel, np.ndarray]:
    """Forward pass on one row; argmax with canonical-order tie-breaking."""
    row = np.asarray(row, dtype=float)
    if row.shape != (model.w1.shape[1],):
        raise ValueError(f"row has {row.shape} features, model expects {model.w1.shape[1]}")
    _, _, probs = _forward(model, row[None, :])
    probs = probs[0]
    return TraitLabel(int(np.argmax(probs))), probs


def save_nb(path: str | Path, model: NBModel) -> None:
    data = {
        "alpha": model.alpha,
        "classes": [cls.name for cls in model.classes],
        "log_prior": model.class_log_prior.tolist(),
        "log_likelihood": model.term_log_likelihood.tolist(),
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(data, fh, ensure_ascii=False, indent=2, sort_keys=True)
        fh.write("\n")


def load_nb(path: str | Path) -> NBModel:
    with open(path, encoding="utf-8") as fh:
        data = json.load(fh)
    return NBModel(
        classes=[TraitLabel[name] for name in data["classes"]],
        class_log_prior=np.array(data["log_prior"]),
        term_log_likelihood=np.array(data["log_likelihood"]),
        alpha=data["alpha"],
    )


def save_mlp(path: str | Path, model: MLPModel) -> None:
    data = {
        "hidden_size": model.hidden_size,
        "seed": model.seed,
        "w1": model.w1.tolist(),
        "b1": model.b1.tolist(),
        "w2": model.w2.tolist(),
        "b2": model.b2.tolist(),
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(data, fh, ensure_ascii=False, indent=2, sort_keys=True)
        fh.write("\n")


def load_mlp(path: str | Path) -> MLPModel:
    with open(path, encoding="utf-8") as fh:
        data = json.load(fh)
    return MLPModel(
        w1=np.array(data["w1"]),
        b1=np.array(data["b1"]),
        w2=np.array(data["w2"]),
        b2=np.array(data["b2"]),
        hidden_size=data["hidden_size"],
        seed=data["seed"],
    )


def save_split(path: str | Path, plan: SplitPlan) -> None:
    data = {"seed": plan.seed, "test_fraction": plan.test_fraction, "test_rows": plan.test_rows}
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(data, fh, ensure_ascii=False, indent=2, sort_keys=True)
        fh.write("\n")


def load_split(path: str | Path, n_rows: int) -> SplitPlan:
    with open(path, encoding="utf-8") as fh:
        data = json.load(fh)
    test_rows = [int(i) for i in data["test_rows"]]
    train_rows = sorted(set(range(n_rows)) - set(test_rows))
    return SplitPlan(train_rows, test_rows, data["seed"], data["test_fraction"])
