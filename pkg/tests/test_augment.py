import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from autonlu.augment import (
    augment_labeled,
    derive_seed,
    make_gibberish,
    perturb,
)
from autonlu.corpus import ClassificationSample, LabeledCorpus

from oracles import osa_distance, word_osa_distance


class TestDeriveSeed:
    def test_stable_across_calls(self):
        assert derive_seed("a", 1, "b") == derive_seed("a", 1, "b")

    def test_known_value_frozen(self):
        # pins the derivation so saved artifacts stay replayable
        assert derive_seed(0) == int.from_bytes(
            __import__("hashlib").sha256(b"0").digest(), "big"
        )

    def test_order_sensitivity(self):
        assert derive_seed("a", "b") != derive_seed("b", "a")

    def test_distinct_parts_distinct_seeds(self):
        seen = {derive_seed("s", i) for i in range(100)}
        assert len(seen) == 100


class TestPerturb:
    def test_variant_count_and_difference(self):
        variants = perturb("play some jazz music", n_variants=5, seed=3)
        assert len(variants) == 5
        for v in variants:
            assert v != "play some jazz music"

    def test_deterministic(self):
        a = perturb("hello world example", n_variants=4, seed=11)
        b = perturb("hello world example", n_variants=4, seed=11)
        assert a == b

    def test_seed_changes_output(self):
        a = perturb("hello world example", n_variants=4, seed=1)
        b = perturb("hello world example", n_variants=4, seed=2)
        assert a != b

    def test_max_edits_validated(self):
        with pytest.raises(ValueError):
            perturb("text", max_edits=0)

    @given(
        text=st.text(
            alphabet=st.sampled_from("abcdefgh "), min_size=1, max_size=30
        ).filter(lambda s: s.strip()),
        max_edits=st.integers(min_value=1, max_value=3),
        seed=st.integers(min_value=0, max_value=10_000),
    )
    @settings(max_examples=150, deadline=None)
    def test_edit_bound_holds(self, text, max_edits, seed):
        for v in perturb(text, n_variants=2, max_edits=max_edits, seed=seed):
            char_d = osa_distance(text, v)
            word_d = word_osa_distance(text, v)
            # each variant stays within the budget in at least one edit space
            assert min(char_d, word_d) <= max_edits
            assert v != text


class TestGibberish:
    def test_shapes(self):
        out = make_gibberish(10, seed=0)
        assert len(out) == 10
        for t in out:
            words = t.split()
            assert 1 <= len(words) <= 8
            for w in words:
                assert 2 <= len(w) <= 10
                assert w.isalpha() and w.islower()

    def test_prefix_stability(self):
        assert make_gibberish(1000, seed=5)[:300] == make_gibberish(300, seed=5)

    def test_seed_sensitivity(self):
        assert make_gibberish(5, seed=1) != make_gibberish(5, seed=2)


class TestAugmentLabeled:
    def test_expansion_preserves_labels(self):
        corpus = LabeledCorpus(
            [
                ClassificationSample("play a song", "music"),
                ClassificationSample("what is the weather", "weather"),
            ]
        )
        out = augment_labeled(corpus, n_per_sample=3, seed=0)
        assert len(out) == 2 * 3
        assert set(out.class_counts()) == {"music", "weather"}
        assert out.class_counts() == {"music": 3, "weather": 3}

    def test_deterministic(self):
        corpus = LabeledCorpus(
            [
                ClassificationSample("play a song", "music"),
                ClassificationSample("check my balance", "bank"),
            ]
        )
        a = augment_labeled(corpus, n_per_sample=2, seed=9)
        b = augment_labeled(corpus, n_per_sample=2, seed=9)
        assert a.texts == b.texts and a.labels == b.labels
