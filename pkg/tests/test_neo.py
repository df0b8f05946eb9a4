import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from traitrec.neo import (
    N_ITEMS,
    NeoKey,
    NeoResponse,
    TraitLabel,
    TraitVector,
    default_key,
    index_trait,
    load_key,
    load_responses,
    save_key,
    save_responses,
    score_neo,
    trait_match_count,
)

FLAT_KEY = NeoKey(
    item_trait=tuple(TraitLabel(i % 5) for i in range(N_ITEMS)),
    reversed=tuple([False] * N_ITEMS),
)

answers_strategy = st.lists(st.integers(1, 5), min_size=N_ITEMS, max_size=N_ITEMS)


def _random_key(rng: random.Random) -> NeoKey:
    traits = [TraitLabel(i % 5) for i in range(N_ITEMS)]
    rng.shuffle(traits)
    return NeoKey(tuple(traits), tuple(rng.random() < 0.3 for _ in range(N_ITEMS)))


class TestTypes:
    def test_wrong_answer_count(self):
        with pytest.raises(ValueError, match="expected 60"):
            NeoResponse("r", tuple([3] * 59))

    def test_out_of_range_answer(self):
        with pytest.raises(ValueError, match="out of range"):
            NeoResponse("r", tuple([3] * 59 + [6]))

    def test_key_needs_twelve_items_per_trait(self):
        with pytest.raises(ValueError, match="owns"):
            NeoKey(tuple([TraitLabel.Openness] * N_ITEMS), tuple([False] * N_ITEMS))

    def test_canonical_order(self):
        assert [t.name[0] for t in TraitLabel] == ["O", "C", "E", "A", "N"]


class TestScoreNeo:
    def test_all_fives(self):
        tv = score_neo(NeoResponse("r", tuple([5] * N_ITEMS)), FLAT_KEY)
        assert tv.scores == (60, 60, 60, 60, 60)

    def test_all_ones(self):
        tv = score_neo(NeoResponse("r", tuple([1] * N_ITEMS)), FLAT_KEY)
        assert tv.scores == (12, 12, 12, 12, 12)

    def test_reversal_symmetry(self):
        key = NeoKey(FLAT_KEY.item_trait, tuple([True] * N_ITEMS))
        tv = score_neo(NeoResponse("r", tuple([5] * N_ITEMS)), key)
        assert tv.scores == (12, 12, 12, 12, 12)

    @settings(max_examples=200)
    @given(answers_strategy, st.integers(0, 2**32))
    def test_conservation_and_range(self, answers, key_seed):
        key = _random_key(random.Random(key_seed))
        tv = score_neo(NeoResponse("r", tuple(answers)), key)
        effective = [
            (6 - a) if rev else a for a, rev in zip(answers, key.reversed)
        ]
        assert sum(tv.scores) == sum(effective)
        assert all(12 <= s <= 60 for s in tv.scores)

    @settings(max_examples=100)
    @given(answers_strategy, st.integers(0, N_ITEMS - 1))
    def test_monotone_in_nonreversed_answers(self, answers, item):
        before = score_neo(NeoResponse("r", tuple(answers)), FLAT_KEY)
        if answers[item] == 5:
            return
        bumped = list(answers)
        bumped[item] += 1
        after = score_neo(NeoResponse("r", tuple(bumped)), FLAT_KEY)
        assert all(b >= a for a, b in zip(before.scores, after.scores))


class TestIndexTrait:
    def test_observed_vector_is_neuroticism(self):
        assert index_trait(TraitVector((39, 29, 40, 46, 51))) == TraitLabel.Neuroticism

    def test_openness_max(self):
        assert index_trait(TraitVector((60, 12, 12, 12, 12))) == TraitLabel.Openness

    def test_tie_breaks_to_lowest_index(self):
        assert index_trait(TraitVector((50, 50, 12, 12, 12))) == TraitLabel.Openness

    @given(st.lists(st.floats(0, 60), min_size=5, max_size=5), st.floats(-10, 10))
    def test_shift_invariant(self, scores, shift):
        tv = TraitVector(tuple(scores))
        shifted = TraitVector(tuple(s + shift for s in scores))
        assert index_trait(tv) == index_trait(shifted)


class TestTraitMatchCount:
    def test_hand_counted_pair(self):
        behnam = TraitVector((28, 32, 34, 44, 38))
        abbas = TraitVector((36, 35, 40, 52, 44))
        # diffs are (8, 3, 6, 8, 6); two exceed 6
        assert trait_match_count(behnam, abbas, tol=6) == 3

    def test_identical_vectors(self):
        tv = TraitVector((30, 40, 50, 20, 60))
        assert trait_match_count(tv, tv, tol=0) == 5

    def test_extremes(self):
        lo = TraitVector((12,) * 5)
        hi = TraitVector((60,) * 5)
        assert trait_match_count(lo, hi, tol=6) == 0

    def test_negative_tol_rejected(self):
        with pytest.raises(ValueError):
            trait_match_count(TraitVector((1,) * 5), TraitVector((1,) * 5), tol=-1)

    @given(
        st.lists(st.floats(0, 60), min_size=5, max_size=5),
        st.lists(st.floats(0, 60), min_size=5, max_size=5),
        st.floats(0, 50),
    )
    def test_symmetric(self, a, b, tol):
        va, vb = TraitVector(tuple(a)), TraitVector(tuple(b))
        assert trait_match_count(va, vb, tol) == trait_match_count(vb, va, tol)


class TestKeyAndResponseFiles:
    def test_default_key_is_valid(self):
        key = default_key()
        for trait in TraitLabel:
            assert sum(1 for t in key.item_trait if t == trait) == 12
        assert any(key.reversed)

    def test_key_roundtrip(self, tmp_path):
        key = _random_key(random.Random(3))
        save_key(tmp_path / "key.json", key)
        assert load_key(tmp_path / "key.json") == key

    def test_responses_roundtrip(self, tmp_path):
        rng = random.Random(5)
        responses = [
            NeoResponse(f"r{i}", tuple(rng.randint(1, 5) for _ in range(N_ITEMS)))
            for i in range(3)
        ]
        save_responses(tmp_path / "resp.csv", responses)
        assert load_responses(tmp_path / "resp.csv") == responses
