import math
import random
from collections import Counter

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from traitrec.ingest import CleanMessage, MessageStore, parse_timestamp
from traitrec.lexicon import (
    GlobalLexicon,
    TermCounts,
    UnknownOwnerError,
    WeightVector,
    build_global_lexicon,
    build_term_counts,
    build_trait_lexicon,
    compute_tf,
    compute_tfidf,
    tokenize,
    top_terms,
)
from traitrec.neo import TraitLabel
from traitrec.profiles import Profile

TS = parse_timestamp("2021-01-01T00:00:00Z")


def _store(messages):
    store = MessageStore()
    for sid, text in messages:
        store.append(CleanMessage(sid, text, TS))
    return store


def _tc(owner, tokens):
    counts = Counter(tokens)
    return TermCounts(owner, dict(counts), sum(counts.values()))


# --- brute-force reimplementation of the tf/idf formulas, used as oracle ----


def oracle_idf(docs: list[list[str]]) -> dict[str, float]:
    terms = sorted({t for doc in docs for t in doc})
    return {t: math.log(len(docs) / sum(1 for doc in docs if t in doc)) for t in terms}


def oracle_weights(doc: list[str], docs: list[list[str]]) -> dict[str, float]:
    idf = oracle_idf(docs)
    out = {}
    for term in set(doc):
        w = (doc.count(term) / len(doc)) * idf[term]
        if w != 0.0:
            out[term] = w
    return out


class TestTokenize:
    def test_whitespace_split(self):
        assert tokenize("سلام دنیا سلام") == ["سلام", "دنیا", "سلام"]

    def test_empty(self):
        assert tokenize("") == []

    def test_stopwords_dropped(self):
        assert tokenize("از سلام", stopwords=frozenset({"از"})) == ["سلام"]

    def test_zwnj_splits_by_default(self):
        assert tokenize("می‌روم") == ["می", "روم"]

    def test_zwnj_kept_when_disabled(self):
        assert tokenize("می‌روم", split_zwnj=False) == ["می‌روم"]


class TestBuildTermCounts:
    def test_direct_count(self):
        store = _store([("u1", "سلام دنیا"), ("u1", "سلام")])
        tc = build_term_counts(store, "u1")
        assert tc.counts == {"سلام": 2, "دنیا": 1}
        assert tc.total == 3

    def test_single_word(self):
        tc = build_term_counts(_store([("u1", "سلام")]), "u1")
        assert tc.counts == {"سلام": 1}
        assert tc.total == 1

    def test_unknown_owner(self):
        with pytest.raises(UnknownOwnerError):
            build_term_counts(_store([("u1", "سلام")]), "ghost")


class TestComputeTf:
    def test_formula_by_hand(self):
        tf = compute_tf(_tc("u", ["a", "a", "b", "c"]))
        assert tf["a"] == 0.5
        assert tf["b"] == 0.25

    def test_single_term(self):
        assert compute_tf(_tc("u", ["a"] * 7)) == {"a": 1.0}

    def test_symmetry(self):
        tf = compute_tf(_tc("u", ["a", "b", "c"]))
        assert all(v == pytest.approx(1 / 3) for v in tf.values())

    @given(
        st.dictionaries(
            st.text(alphabet="کلمهای", min_size=1, max_size=4),
            st.integers(min_value=1, max_value=50),
            min_size=1,
            max_size=20,
        )
    )
    def test_sums_to_one(self, counts):
        tc = TermCounts("u", counts, sum(counts.values()))
        assert math.fsum(compute_tf(tc).values()) == pytest.approx(1.0, abs=1e-12)


class TestGlobalLexicon:
    def test_rare_term(self):
        docs = [_tc("a", ["x", "y"]), _tc("b", ["y"]), _tc("c", ["y"]), _tc("d", ["y"])]
        lex = build_global_lexicon(docs)
        assert lex.idf["x"] == math.log(4)
        assert lex.idf["x"] == pytest.approx(1.38629, abs=1e-5)

    def test_ubiquitous_term_idf_zero(self):
        docs = [_tc(str(i), ["y"]) for i in range(5)]
        assert build_global_lexicon(docs).idf["y"] == 0.0

    def test_two_doc_example(self):
        docs = [_tc("a", ["t", "y"]), _tc("b", ["t"])]
        lex = build_global_lexicon(docs)
        assert lex.idf == {"t": 0.0, "y": math.log(2)}

    def test_empty_corpus_rejected(self):
        with pytest.raises(ValueError):
            build_global_lexicon([])

    def test_idf_bounds(self):
        rng = random.Random(0)
        docs = [
            _tc(f"u{i}", [rng.choice("abcdef") for _ in range(rng.randint(1, 20))])
            for i in range(6)
        ]
        lex = build_global_lexicon(docs)
        for term, idf in lex.idf.items():
            assert 0.0 <= idf <= math.log(lex.n_docs)
            if lex.df[term] == 1:
                assert idf == math.log(lex.n_docs)
            if lex.df[term] == lex.n_docs:
                assert idf == 0.0


class TestComputeTfidf:
    def test_product_of_tf_and_idf(self):
        docs = [_tc("a", ["x", "y"]), _tc("b", ["y"]), _tc("c", ["y"]), _tc("d", ["y"])]
        lex = build_global_lexicon(docs)
        wv = compute_tfidf(docs[0], lex)
        assert wv.weights["x"] == pytest.approx(0.5 * math.log(4))
        assert wv.weights["x"] == pytest.approx(0.69315, abs=1e-5)

    def test_idf_zero_term_omitted(self):
        docs = [_tc("a", ["y", "z"]), _tc("b", ["y"])]
        wv = compute_tfidf(docs[0], build_global_lexicon(docs))
        assert "y" not in wv.weights
        assert "z" in wv.weights

    def test_terms_outside_lexicon_dropped(self):
        lex = build_global_lexicon([_tc("a", ["x", "q"]), _tc("b", ["q"])])
        wv = compute_tfidf(_tc("c", ["نو"]), lex)
        assert wv.weights == {}

    def test_matches_bruteforce_oracle_exactly(self):
        rng = random.Random(42)
        vocab = [f"w{i}" for i in range(12)]
        for _ in range(50):
            docs_tokens = [
                [rng.choice(vocab) for _ in range(rng.randint(1, 30))]
                for _ in range(rng.randint(1, 5))
            ]
            docs = [_tc(f"u{i}", toks) for i, toks in enumerate(docs_tokens)]
            lex = build_global_lexicon(docs)
            assert lex.n_docs == len(docs_tokens)
            for i, toks in enumerate(docs_tokens):
                expected_idf = oracle_idf(docs_tokens)
                assert lex.df == {t: sum(1 for d in docs_tokens if t in d) for t in expected_idf}
                assert lex.idf == expected_idf
                tf = compute_tf(docs[i])
                assert tf == {t: toks.count(t) / len(toks) for t in set(toks)}
                assert compute_tfidf(docs[i], lex).weights == oracle_weights(toks, docs_tokens)


class TestTopTerms:
    def test_sorted_by_weight(self):
        wv = WeightVector("u", {"a": 0.9, "b": 0.5, "c": 0.1})
        assert top_terms(wv, 2) == [("a", 0.9), ("b", 0.5)]

    def test_k_larger_than_vocab(self):
        wv = WeightVector("u", {"a": 0.9})
        assert top_terms(wv, 10) == [("a", 0.9)]

    def test_tie_break_by_term(self):
        wv = WeightVector("u", {"b": 0.5, "a": 0.5})
        assert top_terms(wv, 1) == [("a", 0.5)]


def _profile(owner, weights, trait):
    tc = _tc(owner, [t for t in weights])
    return Profile(owner, tc, WeightVector(owner, weights), index_trait=trait)


class TestBuildTraitLexicon:
    def test_single_contributor(self):
        tl = build_trait_lexicon([_profile("u1", {"خشم": 0.4}, TraitLabel.Neuroticism)])
        assert tl.per_trait[TraitLabel.Neuroticism] == {"خشم": 0.4}
        for trait in TraitLabel:
            if trait != TraitLabel.Neuroticism:
                assert tl.per_trait[trait] == {}

    def test_additivity(self):
        tl = build_trait_lexicon(
            [
                _profile("u1", {"a": 0.2}, TraitLabel.Neuroticism),
                _profile("u2", {"a": 0.3}, TraitLabel.Neuroticism),
            ]
        )
        assert tl.per_trait[TraitLabel.Neuroticism] == {"a": 0.5}

    def test_no_labeled_users(self):
        tl = build_trait_lexicon([])
        assert all(tl.per_trait[t] == {} for t in TraitLabel)

    def test_unlabeled_profile_rejected(self):
        profile = _profile("u1", {"a": 0.2}, None)
        with pytest.raises(ValueError):
            build_trait_lexicon([profile])

    @settings(max_examples=50)
    @given(st.randoms(use_true_random=False))
    def test_order_independent(self, rng):
        profiles = [
            _profile(
                f"u{i}",
                {f"t{j}": rng.random() for j in range(rng.randint(1, 6))},
                rng.choice(list(TraitLabel)),
            )
            for i in range(8)
        ]
        baseline = build_trait_lexicon(profiles)
        shuffled = profiles[:]
        rng.shuffle(shuffled)
        assert build_trait_lexicon(shuffled).per_trait == baseline.per_trait


class TestLexiconPersistence:
    def test_roundtrip_recomputes_idf(self, tmp_path):
        from traitrec.lexicon import load_lexicon, save_lexicon

        docs = [_tc("a", ["x", "y"]), _tc("b", ["y"])]
        lex = build_global_lexicon(docs)
        save_lexicon(tmp_path / "lex.json", lex)
        loaded = load_lexicon(tmp_path / "lex.json")
        assert loaded.n_docs == lex.n_docs
        assert loaded.df == lex.df
        assert loaded.idf == lex.idf

    def test_df_out_of_range_rejected(self):
        with pytest.raises(ValueError):
            GlobalLexicon(n_docs=2, df={"x": 3})
