"""Evaluation metrics: classification reports, entity matching, AUROC."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .corpus import EntitySpan
from .errors import DegenerateScoresError, LengthMismatchError


@dataclass
class ClassMetrics:
    precision: float
    recall: float
    f1: float
    support: int

    def to_dict(self) -> dict:
        return {
            "precision": self.precision,
            "recall": self.recall,
            "f1": self.f1,
            "support": self.support,
        }


def _prf(tp: float, n_pred: float, n_gold: float) -> tuple[float, float, float]:
    """Precision/recall/F1 with the 0/0 -> 0 convention at every stage."""
    precision = tp / n_pred if n_pred > 0 else 0.0
    recall = tp / n_gold if n_gold > 0 else 0.0
    denom = precision + recall
    f1 = 2.0 * precision * recall / denom if denom > 0 else 0.0
    return precision, recall, f1


@dataclass
class ClassificationReport:
    per_class: dict[str, ClassMetrics]
    macro_f1: float
    accuracy: float
    f1_in_scope: float | None = None
    f1_ood: float | None = None

    def to_dict(self) -> dict:
        d = {
            "per_class": {k: v.to_dict() for k, v in self.per_class.items()},
            "macro_f1": self.macro_f1,
            "accuracy": self.accuracy,
        }
        if self.f1_in_scope is not None:
            d["f1_in_scope"] = self.f1_in_scope
        if self.f1_ood is not None:
            d["f1_ood"] = self.f1_ood
        return d


def classification_report(
    gold: Sequence[str], pred: Sequence[str], ood_label: str | None = None
) -> ClassificationReport:
    """Per-class one-vs-rest metrics over the union of observed labels.

    When ood_label is given, f1_in_scope is the macro F1 over the remaining
    classes and f1_ood is the binary F1 with the scope-rejection label as
    the positive class.
    """
    if len(gold) != len(pred):
        raise LengthMismatchError(
            f"{len(gold)} gold labels vs {len(pred)} predictions"
        )
    if not gold:
        raise ValueError("cannot score an empty prediction set")

    classes = sorted(set(gold) | set(pred))
    per_class: dict[str, ClassMetrics] = {}
    for c in classes:
        tp = sum(1 for g, p in zip(gold, pred) if g == c and p == c)
        n_pred = sum(1 for p in pred if p == c)
        n_gold = sum(1 for g in gold if g == c)
        precision, recall, f1 = _prf(tp, n_pred, n_gold)
        per_class[c] = ClassMetrics(precision, recall, f1, n_gold)

    macro_f1 = float(np.mean([m.f1 for m in per_class.values()]))
    accuracy = float(np.mean([g == p for g, p in zip(gold, pred)]))

    f1_in_scope = None
    f1_ood = None
    if ood_label is not None:
        in_scope = [c for c in classes if c != ood_label]
        f1_in_scope = (
            float(np.mean([per_class[c].f1 for c in in_scope])) if in_scope else 0.0
        )
        tp = sum(1 for g, p in zip(gold, pred) if g == ood_label and p == ood_label)
        n_pred = sum(1 for p in pred if p == ood_label)
        n_gold = sum(1 for g in gold if g == ood_label)
        _, _, f1_ood = _prf(tp, n_pred, n_gold)

    return ClassificationReport(per_class, macro_f1, accuracy, f1_in_scope, f1_ood)


def _max_bipartite_matching(adj: list[list[int]], n_right: int) -> int:
    """Kuhn's augmenting-path algorithm. adj[i] lists right nodes reachable
    from left node i. Returns the size of a maximum matching."""
    match_right = [-1] * n_right

    def try_augment(i: int, visited: list[bool]) -> bool:
        for j in adj[i]:
            if visited[j]:
                continue
            visited[j] = True
            if match_right[j] == -1 or try_augment(match_right[j], visited):
                match_right[j] = i
                return True
        return False

    size = 0
    for i in range(len(adj)):
        if try_augment(i, [False] * n_right):
            size += 1
    return size


def _spans_overlap(a: EntitySpan, b: EntitySpan) -> bool:
    return a.start < b.end and b.start < a.end


def _match_sample(
    gold: Sequence[EntitySpan], pred: Sequence[EntitySpan]
) -> dict[str, int]:
    """Align one sample's spans and bucket every span into an error category.

    Boundary-exact pairs are forced first (always part of some optimum since
    spans on each side are disjoint), split into correct (same type) and
    incorrect_type. The remaining spans get a maximum one-to-one matching
    over boundary overlaps (partial); leftovers are missed (gold) or
    spurious (pred). Assumes spans within a sample do not overlap."""
    gold_bounds = {(g.start, g.end): g for g in gold}
    pred_bounds = {(p.start, p.end): p for p in pred}
    exact_keys = set(gold_bounds) & set(pred_bounds)
    correct = sum(
        1 for k in exact_keys if gold_bounds[k].label == pred_bounds[k].label
    )

    rest_gold = [g for g in gold if (g.start, g.end) not in exact_keys]
    rest_pred = [p for p in pred if (p.start, p.end) not in exact_keys]
    adj = [
        [j for j, p in enumerate(rest_pred) if _spans_overlap(g, p)]
        for g in rest_gold
    ]
    overlapped = _max_bipartite_matching(adj, len(rest_pred))
    return {
        "correct": correct,
        "incorrect_type": len(exact_keys) - correct,
        "partial": overlapped,
        "missed": len(rest_gold) - overlapped,
        "spurious": len(rest_pred) - overlapped,
    }


@dataclass
class EntityReport:
    strict: ClassMetrics
    partial: ClassMetrics
    per_type: dict[str, ClassMetrics]
    counts: dict[str, int]

    def to_dict(self) -> dict:
        return {
            "strict": self.strict.to_dict(),
            "partial": self.partial.to_dict(),
            "per_type": {k: v.to_dict() for k, v in self.per_type.items()},
            "counts": dict(self.counts),
        }


def entity_report(
    gold: Sequence[Sequence[EntitySpan]], pred: Sequence[Sequence[EntitySpan]]
) -> EntityReport:
    """Micro-averaged entity scores.

    Strict credit requires identical boundaries and type. Partial credit is
    type-agnostic: boundary-exact pairs earn 1.0 and overlapping pairs 0.5,
    under a one-to-one matching that maximises total credit.
    """
    if len(gold) != len(pred):
        raise LengthMismatchError(f"{len(gold)} gold samples vs {len(pred)} predicted")

    n_gold = 0
    n_pred = 0
    counts = {k: 0 for k in ("correct", "incorrect_type", "partial", "missed", "spurious")}
    type_tp: dict[str, int] = {}
    type_gold: dict[str, int] = {}
    type_pred: dict[str, int] = {}

    for g_spans, p_spans in zip(gold, pred):
        g_set = {(s.start, s.end, s.label) for s in g_spans}
        p_set = {(s.start, s.end, s.label) for s in p_spans}
        n_gold += len(g_set)
        n_pred += len(p_set)
        for s, e, lab in g_set:
            type_gold[lab] = type_gold.get(lab, 0) + 1
        for s, e, lab in p_set:
            type_pred[lab] = type_pred.get(lab, 0) + 1
        for s, e, lab in g_set & p_set:
            type_tp[lab] = type_tp.get(lab, 0) + 1
        sample = _match_sample(list(g_spans), list(p_spans))
        for k, v in sample.items():
            counts[k] += v

    strict_tp = counts["correct"]
    partial_credit = (
        counts["correct"] + counts["incorrect_type"] + 0.5 * counts["partial"]
    )
    sp, sr, sf = _prf(strict_tp, n_pred, n_gold)
    pp, pr, pf = _prf(partial_credit, n_pred, n_gold)

    per_type: dict[str, ClassMetrics] = {}
    for lab in sorted(set(type_gold) | set(type_pred)):
        tp = type_tp.get(lab, 0)
        prec, rec, f1 = _prf(tp, type_pred.get(lab, 0), type_gold.get(lab, 0))
        per_type[lab] = ClassMetrics(prec, rec, f1, type_gold.get(lab, 0))

    return EntityReport(
        strict=ClassMetrics(sp, sr, sf, n_gold),
        partial=ClassMetrics(pp, pr, pf, n_gold),
        per_type=per_type,
        counts=counts,
    )


def auroc(labels: Sequence[int], scores: Sequence[float]) -> float:
    """Area under the ROC curve via the rank statistic, with tie correction.

    labels are 0/1 with 1 the positive class; higher scores mean more
    positive. Raises DegenerateScoresError when either class is absent.
    """
    if len(labels) != len(scores):
        raise LengthMismatchError(f"{len(labels)} labels vs {len(scores)} scores")
    y = np.asarray(labels, dtype=np.int64)
    s = np.asarray(scores, dtype=np.float64)
    n_pos = int(np.sum(y == 1))
    n_neg = int(np.sum(y == 0))
    if n_pos == 0 or n_neg == 0:
        raise DegenerateScoresError("need both positive and negative examples")

    order = np.argsort(s, kind="mergesort")
    ranks = np.empty(len(s), dtype=np.float64)
    sorted_scores = s[order]
    i = 0
    while i < len(s):
        j = i
        while j + 1 < len(s) and sorted_scores[j + 1] == sorted_scores[i]:
            j += 1
        # average rank for the tie block, 1-based
        ranks[order[i : j + 1]] = 0.5 * (i + j) + 1.0
        i = j + 1

    rank_sum = float(np.sum(ranks[y == 1]))
    u = rank_sum - n_pos * (n_pos + 1) / 2.0
    return u / (n_pos * n_neg)
