"""Independent reference implementations the tests check the package against.

Everything here is written for clarity over speed and deliberately avoids
sharing code with the package.
"""

from __future__ import annotations

import numpy as np


def osa_distance(a: str, b: str) -> int:
    """Optimal string alignment distance (Damerau-Levenshtein without
    substring moves): insert, delete, substitute, swap adjacent."""
    la, lb = len(a), len(b)
    d = [[0] * (lb + 1) for _ in range(la + 1)]
    for i in range(la + 1):
        d[i][0] = i
    for j in range(lb + 1):
        d[0][j] = j
    for i in range(1, la + 1):
        for j in range(1, lb + 1):
            cost = 0 if a[i - 1] == b[j - 1] else 1
            d[i][j] = min(
                d[i - 1][j] + 1,
                d[i][j - 1] + 1,
                d[i - 1][j - 1] + cost,
            )
            if (
                i > 1
                and j > 1
                and a[i - 1] == b[j - 2]
                and a[i - 2] == b[j - 1]
            ):
                d[i][j] = min(d[i][j], d[i - 2][j - 2] + 1)
    return d[la][lb]


def word_osa_distance(a: str, b: str) -> int:
    """Same distance over whitespace tokens instead of characters."""
    ta, tb = a.split(), b.split()
    la, lb = len(ta), len(tb)
    d = [[0] * (lb + 1) for _ in range(la + 1)]
    for i in range(la + 1):
        d[i][0] = i
    for j in range(lb + 1):
        d[0][j] = j
    for i in range(1, la + 1):
        for j in range(1, lb + 1):
            cost = 0 if ta[i - 1] == tb[j - 1] else 1
            d[i][j] = min(
                d[i - 1][j] + 1,
                d[i][j - 1] + 1,
                d[i - 1][j - 1] + cost,
            )
            if (
                i > 1
                and j > 1
                and ta[i - 1] == tb[j - 2]
                and ta[i - 2] == tb[j - 1]
            ):
                d[i][j] = min(d[i][j], d[i - 2][j - 2] + 1)
    return d[la][lb]


def _pair_score(gold, pred) -> float:
    """Scoring rule for one gold/pred span pair under the partial scheme.

    Entirely type-agnostic: exact boundaries earn 1.0, any overlap 0.5."""
    if gold.start == pred.start and gold.end == pred.end:
        return 1.0
    if gold.start < pred.end and pred.start < gold.end:
        return 0.5
    return 0.0


def brute_force_partial_total(gold: list, pred: list) -> float:
    """Maximum total pair score over all one-to-one matchings, by recursion.

    Feasible for the small span sets the tests use (< 8 per side).
    """
    best = 0.0

    def recurse(g_idx: int, used_pred: set, total: float):
        nonlocal best
        if g_idx == len(gold):
            best = max(best, total)
            return
        # leave gold[g_idx] unmatched
        recurse(g_idx + 1, used_pred, total)
        for p_idx in range(len(pred)):
            if p_idx in used_pred:
                continue
            s = _pair_score(gold[g_idx], pred[p_idx])
            if s > 0:
                recurse(g_idx + 1, used_pred | {p_idx}, total + s)

    recurse(0, set(), 0.0)
    return best


def brute_force_strict_tp(gold: list, pred: list) -> int:
    """Strict matches are unambiguous: exact (start, end, label) triples."""
    gold_keys = [(g.start, g.end, g.label) for g in gold]
    tp = 0
    used = [False] * len(gold_keys)
    for p in pred:
        key = (p.start, p.end, p.label)
        for i, gk in enumerate(gold_keys):
            if not used[i] and gk == key:
                used[i] = True
                tp += 1
                break
    return tp


def prf(tp: float, n_pred: float, n_gold: float) -> tuple[float, float, float]:
    p = tp / n_pred if n_pred else 0.0
    r = tp / n_gold if n_gold else 0.0
    f = 2 * p * r / (p + r) if p + r else 0.0
    return p, r, f


def nearest_centroid_predict(
    X_train: np.ndarray, y_train: np.ndarray, X_test: np.ndarray
) -> np.ndarray:
    """Cosine nearest-centroid baseline on already-normalized features."""
    y_train = np.asarray(y_train)
    classes = np.unique(y_train)
    centroids = np.stack([X_train[y_train == c].mean(axis=0) for c in classes])
    norms = np.linalg.norm(centroids, axis=1, keepdims=True)
    norms[norms == 0] = 1.0
    centroids = centroids / norms
    sims = X_test @ centroids.T
    return classes[np.argmax(sims, axis=1)]


def fnv1a_64(codepoints: list[int], seed: int = 0) -> int:
    """Independent FNV-1a over Unicode code points, one absorb per point.

    The seed is folded into the basis with one extra xor-multiply round
    before the data is absorbed.
    """
    basis = 0xCBF29CE484222325
    prime = 0x100000001B3
    mask = (1 << 64) - 1
    h = ((basis ^ (seed & mask)) * prime) & mask
    for cp in codepoints:
        h = ((h ^ cp) * prime) & mask
    return h


def rank_auroc(labels: np.ndarray, scores: np.ndarray) -> float:
    """AUROC via the Mann-Whitney U statistic with midranks for ties."""
    labels = np.asarray(labels)
    scores = np.asarray(scores, dtype=np.float64)
    n_pos = int(np.sum(labels == 1))
    n_neg = int(np.sum(labels == 0))
    order = np.argsort(scores, kind="mergesort")
    ranks = np.empty(len(scores), dtype=np.float64)
    sorted_scores = scores[order]
    i = 0
    while i < len(scores):
        j = i
        while j + 1 < len(scores) and sorted_scores[j + 1] == sorted_scores[i]:
            j += 1
        ranks[order[i : j + 1]] = (i + j) / 2.0 + 1.0
        i = j + 1
    rank_sum = float(np.sum(ranks[labels == 1]))
    u = rank_sum - n_pos * (n_pos + 1) / 2.0
    return u / (n_pos * n_neg)
