import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from sklearn.metrics import f1_score, roc_auc_score

from autonlu.corpus import EntitySpan
from autonlu.errors import DegenerateScoresError, LengthMismatchError
from autonlu.metrics import (
    auroc,
    classification_report,
    entity_report,
)

from oracles import (
    brute_force_partial_total,
    brute_force_strict_tp,
    prf,
    rank_auroc,
)


class TestClassificationReport:
    def test_hand_example(self):
        # two classes, one mistake on 'a'
        rep = classification_report(["a", "a", "b", "b"], ["a", "b", "b", "b"])
        assert rep.per_class["a"].f1 == pytest.approx(2 / 3)
        assert rep.per_class["b"].f1 == pytest.approx(0.8)
        assert rep.macro_f1 == pytest.approx((2 / 3 + 0.8) / 2)

    def test_zero_over_zero_is_zero(self):
        rep = classification_report(["a", "a"], ["b", "b"], )
        # 'a' has no predictions -> precision 0/0 -> 0; 'b' no gold -> recall 0
        assert rep.per_class["a"].precision == 0.0
        assert rep.per_class["a"].f1 == 0.0
        assert rep.per_class["b"].f1 == 0.0

    def test_classes_are_union_of_gold_and_pred(self):
        rep = classification_report(["a", "b"], ["a", "c"])
        assert sorted(rep.per_class) == ["a", "b", "c"]

    def test_length_mismatch(self):
        with pytest.raises(LengthMismatchError):
            classification_report(["a"], ["a", "b"])

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            classification_report([], [])

    @given(
        n=st.integers(min_value=1, max_value=60),
        seed=st.integers(min_value=0, max_value=1000),
    )
    @settings(max_examples=80, deadline=None)
    def test_macro_f1_matches_sklearn(self, n, seed):
        rng = np.random.default_rng(seed)
        labels = ["a", "b", "c", "d"]
        gold = [labels[i] for i in rng.integers(0, 4, size=n)]
        pred = [labels[i] for i in rng.integers(0, 4, size=n)]
        rep = classification_report(gold, pred)
        union = sorted(set(gold) | set(pred))
        expect = f1_score(gold, pred, labels=union, average="macro", zero_division=0)
        assert rep.macro_f1 == pytest.approx(expect, abs=1e-12)

    def test_ood_views(self):
        gold = ["a", "b", "outOfScope", "outOfScope"]
        pred = ["a", "outOfScope", "outOfScope", "b"]
        rep = classification_report(gold, pred, ood_label="outOfScope")
        # in-scope macro excludes the rejection label
        assert set(rep.per_class) == {"a", "b", "outOfScope"}
        in_scope = (rep.per_class["a"].f1 + rep.per_class["b"].f1) / 2
        assert rep.f1_in_scope == pytest.approx(in_scope)
        # binary decision: OOD positive
        gold_bin = [1 if g == "outOfScope" else 0 for g in gold]
        pred_bin = [1 if p == "outOfScope" else 0 for p in pred]
        assert rep.f1_ood == pytest.approx(f1_score(gold_bin, pred_bin))

    def test_to_dict_sorted_and_complete(self):
        rep = classification_report(["a", "b"], ["b", "a"])
        d = rep.to_dict()
        assert list(d["per_class"]) == sorted(d["per_class"])
        assert {"precision", "recall", "f1"} <= set(d["per_class"]["a"])


def spans(*triples):
    return [EntitySpan(s, e, t) for s, e, t in triples]


def random_spanset(rng, max_spans=6, text_len=40):
    out = []
    n = int(rng.integers(0, max_spans + 1))
    tries = 0
    while len(out) < n and tries < 50:
        tries += 1
        s = int(rng.integers(0, text_len - 1))
        e = int(rng.integers(s + 1, min(s + 8, text_len)))
        if any(s < o.end and o.start < e for o in out):
            continue
        out.append(EntitySpan(s, e, str(rng.choice(["PER", "LOC", "ORG"]))))
    return sorted(out, key=lambda x: x.start)


class TestEntityReport:
    def test_exact_match(self):
        g = [spans((0, 4, "PER"), (10, 14, "LOC"))]
        rep = entity_report(g, g)
        assert rep.strict.f1 == 1.0
        assert rep.partial.f1 == 1.0

    def test_boundary_error_gets_half_credit(self):
        g = [spans((0, 4, "PER"))]
        p = [spans((0, 6, "PER"))]
        rep = entity_report(g, p)
        assert rep.strict.f1 == 0.0
        # one overlap pair at 0.5: precision 0.5/1, recall 0.5/1
        assert rep.partial.f1 == pytest.approx(0.5)

    def test_partial_scheme_ignores_type(self):
        # exact boundaries, wrong type: zero strict credit, full partial
        g = [spans((0, 4, "PER"))]
        p = [spans((0, 4, "LOC"))]
        rep = entity_report(g, p)
        assert rep.strict.f1 == 0.0
        assert rep.partial.f1 == pytest.approx(1.0)
        assert rep.counts["incorrect_type"] == 1
        assert rep.counts["correct"] == 0

    def test_error_counts(self):
        g = [spans((0, 4, "PER"), (10, 14, "LOC"), (20, 24, "ORG"))]
        p = [spans((0, 4, "PER"), (10, 13, "LOC"), (30, 34, "ORG"))]
        rep = entity_report(g, p)
        assert rep.counts == {
            "correct": 1,
            "incorrect_type": 0,
            "partial": 1,
            "missed": 1,
            "spurious": 1,
        }

    def test_exact_pairs_matched_before_overlaps(self):
        # pred span overlaps two golds but exactly matches the second;
        # greedy overlap-first would strand the exact pair.
        g = [spans((0, 4, "PER"), (4, 8, "PER"))]
        p = [spans((4, 8, "PER"))]
        rep = entity_report(g, p)
        assert rep.counts["correct"] == 1
        assert rep.counts["missed"] == 1
        assert rep.strict.recall == pytest.approx(0.5)

    def test_per_type_strict_breakdown(self):
        g = [spans((0, 4, "PER"), (10, 14, "LOC"))]
        p = [spans((0, 4, "PER"), (10, 13, "LOC"))]
        rep = entity_report(g, p)
        assert rep.per_type["PER"].f1 == 1.0
        assert rep.per_type["LOC"].f1 == 0.0

    def test_lengths_must_align(self):
        with pytest.raises(LengthMismatchError):
            entity_report([[]], [[], []])

    @given(seed=st.integers(min_value=0, max_value=10_000))
    @settings(max_examples=100, deadline=None)
    def test_agreement_with_brute_force(self, seed):
        rng = np.random.default_rng(seed)
        gold = [random_spanset(rng) for _ in range(3)]
        pred = [random_spanset(rng) for _ in range(3)]
        rep = entity_report(gold, pred)

        tp = sum(brute_force_strict_tp(g, p) for g, p in zip(gold, pred))
        n_gold = sum(len(g) for g in gold)
        n_pred = sum(len(p) for p in pred)
        _, _, strict_f1 = prf(tp, n_pred, n_gold)
        assert rep.strict.f1 == pytest.approx(strict_f1, abs=1e-12)

        total = sum(
            brute_force_partial_total(g, p) for g, p in zip(gold, pred)
        )
        _, _, partial_f1 = prf(total, n_pred, n_gold)
        assert rep.partial.f1 == pytest.approx(partial_f1, abs=1e-12)

        assert rep.partial.f1 >= rep.strict.f1 - 1e-12


class TestAuroc:
    def test_perfect_separation(self):
        assert auroc([0, 0, 1, 1], [0.1, 0.2, 0.8, 0.9]) == 1.0

    def test_chance(self):
        assert auroc([0, 1], [0.5, 0.5]) == pytest.approx(0.5)

    def test_ties_get_midrank(self):
        labels = [0, 0, 1, 1, 1]
        scores = [0.3, 0.5, 0.5, 0.5, 0.9]
        assert auroc(labels, scores) == pytest.approx(
            roc_auc_score(labels, scores)
        )

    def test_single_class_rejected(self):
        with pytest.raises(DegenerateScoresError):
            auroc([1, 1], [0.1, 0.2])

    @given(
        n=st.integers(min_value=2, max_value=80),
        seed=st.integers(min_value=0, max_value=5000),
        quantize=st.booleans(),
    )
    @settings(max_examples=120, deadline=None)
    def test_matches_sklearn_and_reference(self, n, seed, quantize):
        rng = np.random.default_rng(seed)
        labels = rng.integers(0, 2, size=n)
        if labels.min() == labels.max():
            labels[0] = 1 - labels[0]
        scores = rng.random(n)
        if quantize:
            scores = np.round(scores, 1)  # force ties
        ours = auroc(labels.tolist(), scores.tolist())
        assert ours == pytest.approx(roc_auc_score(labels, scores), abs=1e-12)
        assert ours == pytest.approx(rank_auroc(labels, scores), abs=1e-12)
