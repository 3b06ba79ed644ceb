"""The three training methods behind regime selection.

* full training: softmax regression on hashed features with a held-out
  split, early stopping and optional hyperparameter search.
* contrastive few-shot: a square projection warmed up with a cosine pair
  loss, then a softmax head on the projected features.
* anchored few-shot: the projection is pulled toward per-class anchor
  texts with a triplet loss; the final linear weights blend normalized
  projected-anchor similarity with a trained softmax head.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .augment import derive_seed
from .corpus import LabeledCorpus, stratified_split
from .embed import HashingFeaturizer
from .errors import (
    AnchorCollisionError,
    DivergenceError,
    MissingAnchorError,
)
from .linear import (
    LinearClassifier,
    TrainConfig,
    TrainingTrace,
    TrainResult,
    train_softmax,
)
from .regime import Regime, RebalanceReport, rebalance
from .tpe import CategoricalParam, FloatParam, TPEResult, optimize

CONTRASTIVE_ITERATIONS = 20
BACKBONE_LR = 1e-5
TRIPLET_MARGIN = 0.25
VAL_FRACTION = 0.1
HPO_TRIALS = 10


@dataclass
class TrainOutput:
    model: LinearClassifier
    regime: Regime
    train_result: TrainResult
    rebalance_report: RebalanceReport | None = None
    trace: TrainingTrace | None = None
    hpo: TPEResult | None = None
    anchors: dict[str, str] | None = None


def _design(corpus: LabeledCorpus, featurizer: HashingFeaturizer):
    classes = corpus.classes()
    index = {c: i for i, c in enumerate(classes)}
    X = featurizer.encode_batch(corpus.texts).astype(np.float64)
    y = np.array([index[s.label] for s in corpus.samples], dtype=np.int64)
    return classes, X, y


def default_hpo_space():
    return [
        FloatParam("learning_rate", 1e-6, 1e-3, log=True),
        CategoricalParam("batch_size", (8, 16, 32, 64)),
        FloatParam("weight_decay", 0.0, 0.1),
    ]


def train_full(
    corpus: LabeledCorpus,
    featurizer: HashingFeaturizer,
    config: TrainConfig | None = None,
    seed: int = 0,
    hpo: bool = False,
    n_trials: int = HPO_TRIALS,
    trace: bool = False,
) -> TrainOutput:
    """Softmax regression with a stratified held-out split for early stopping."""
    config = config or TrainConfig(seed=seed)
    split = stratified_split(corpus, VAL_FRACTION, seed)
    classes = corpus.classes()
    index = {c: i for i, c in enumerate(classes)}

    X_tr = featurizer.encode_batch(split.train.texts).astype(np.float64)
    y_tr = np.array([index[s.label] for s in split.train.samples], dtype=np.int64)
    X_val = featurizer.encode_batch(split.test.texts).astype(np.float64)
    y_val = np.array([index[s.label] for s in split.test.samples], dtype=np.int64)

    hpo_result = None
    if hpo:

        def objective(params: dict) -> float:
            cfg = TrainConfig(
                learning_rate=params["learning_rate"],
                batch_size=int(params["batch_size"]),
                weight_decay=params["weight_decay"],
                max_epochs=config.max_epochs,
                patience=config.patience,
                seed=seed,
            )
            _, _, result, _ = train_softmax(
                X_tr, y_tr, len(classes), cfg, X_val, y_val
            )
            return max(result.val_scores) if result.val_scores else 0.0

        hpo_result = optimize(
            objective,
            default_hpo_space(),
            n_trials=n_trials,
            seed=derive_seed(seed, "hpo"),
            direction="maximize",
        )
        config = TrainConfig(
            learning_rate=hpo_result.best_params["learning_rate"],
            batch_size=int(hpo_result.best_params["batch_size"]),
            weight_decay=hpo_result.best_params["weight_decay"],
            max_epochs=config.max_epochs,
            patience=config.patience,
            seed=seed,
        )

    W, b, result, trace_obj = train_softmax(
        X_tr, y_tr, len(classes), config, X_val, y_val, trace=trace
    )
    model = LinearClassifier(classes, W, b)
    return TrainOutput(
        model=model,
        regime=Regime.FULL_TRAIN,
        train_result=result,
        trace=trace_obj,
        hpo=hpo_result,
    )


def _cos_with_grads(u: np.ndarray, v: np.ndarray, eps: float = 1e-12):
    nu = max(float(np.linalg.norm(u)), eps)
    nv = max(float(np.linalg.norm(v)), eps)
    c = float(u @ v) / (nu * nv)
    dc_du = v / (nu * nv) - c * u / (nu * nu)
    dc_dv = u / (nu * nv) - c * v / (nv * nv)
    return c, dc_du, dc_dv


def _check_finite(P: np.ndarray, what: str) -> None:
    if not np.all(np.isfinite(P)):
        raise DivergenceError(f"{what} produced non-finite values")


def train_contrastive(
    corpus: LabeledCorpus,
    featurizer: HashingFeaturizer,
    seed: int = 0,
    iterations: int = CONTRASTIVE_ITERATIONS,
    backbone_lr: float = BACKBONE_LR,
    head_config: TrainConfig | None = None,
    trace: bool = False,
) -> TrainOutput:
    """Cosine pair loss on a square projection, then a softmax head.

    Each iteration draws one positive and one negative partner per example
    (balanced pairs); the loss is the squared error between pair cosine and
    its target (1 same-class, 0 otherwise).
    """
    classes, X, y = _design(corpus, featurizer)
    n, d = X.shape
    P = np.eye(d, dtype=np.float64)
    rng = np.random.default_rng(derive_seed(seed, "contrastive"))

    by_class = {c: np.flatnonzero(y == i) for i, c in enumerate(classes)}
    class_of = {i: classes[y[i]] for i in range(n)}

    for _ in range(iterations):
        pairs: list[tuple[int, int, float]] = []
        for i in rng.permutation(n):
            i = int(i)
            same = by_class[class_of[i]]
            pool = same[same != i]
            if len(pool) == 0:
                pool = same
            j = int(pool[int(rng.integers(len(pool)))])
            pairs.append((i, j, 1.0))
            other = np.flatnonzero(y != y[i])
            k = int(other[int(rng.integers(len(other)))])
            pairs.append((i, k, 0.0))

        grad = np.zeros_like(P)
        for i, j, target in pairs:
            u = X[i] @ P
            v = X[j] @ P
            c, dc_du, dc_dv = _cos_with_grads(u, v)
            scale = 2.0 * (c - target) / len(pairs)
            grad += np.outer(X[i], scale * dc_du)
            grad += np.outer(X[j], scale * dc_dv)
        P -= backbone_lr * grad
        _check_finite(P, "contrastive projection update")

    Z = X @ P
    W, b, result, trace_obj = train_softmax(
        Z, y, len(classes), head_config or TrainConfig(seed=seed), trace=trace
    )
    model = LinearClassifier(classes, W, b, projection=P)
    return TrainOutput(
        model=model,
        regime=Regime.CONTRASTIVE_FEW_SHOT,
        train_result=result,
        trace=trace_obj,
    )


def resolve_anchors(
    classes: list[str], anchors: dict[str, str] | None
) -> dict[str, str]:
    """Anchor text per class; the label string itself is the default."""
    if anchors is None:
        resolved = {c: c for c in classes}
    else:
        resolved = {}
        for c in classes:
            if c not in anchors:
                raise MissingAnchorError(c)
            resolved[c] = anchors[c]
    seen: dict[str, str] = {}
    for c in sorted(resolved):
        text = resolved[c]
        if text in seen:
            raise AnchorCollisionError(
                f"labels {seen[text]!r} and {c!r} share anchor text {text!r}"
            )
        seen[text] = c
    return resolved


def train_anchored(
    corpus: LabeledCorpus,
    featurizer: HashingFeaturizer,
    anchors: dict[str, str] | None = None,
    seed: int = 0,
    iterations: int = CONTRASTIVE_ITERATIONS,
    backbone_lr: float = BACKBONE_LR,
    margin: float = TRIPLET_MARGIN,
    anchor_scale: float = 1.0,
    head_config: TrainConfig | None = None,
    trace: bool = False,
) -> TrainOutput:
    """Triplet loss toward each example's own anchor against the nearest
    other anchor, then a blended linear head.

    The final weights are anchor_scale * (normalized projected anchors) plus
    a softmax head trained on projected features; the sum is still a single
    linear map, so the result serializes like any other model.
    """
    classes, X, y = _design(corpus, featurizer)
    n, d = X.shape
    resolved = resolve_anchors(classes, anchors)
    A_raw = featurizer.encode_batch([resolved[c] for c in classes]).astype(np.float64)
    for i in range(len(classes)):
        for j in range(i + 1, len(classes)):
            if np.array_equal(A_raw[i], A_raw[j]):
                raise AnchorCollisionError(
                    f"anchors for {classes[i]!r} and {classes[j]!r} "
                    "hash to identical vectors"
                )

    P = np.eye(d, dtype=np.float64)
    rng = np.random.default_rng(derive_seed(seed, "anchored"))

    for _ in range(iterations):
        A = A_raw @ P
        grad = np.zeros_like(P)
        active = 0
        for i in rng.permutation(n):
            i = int(i)
            u = X[i] @ P
            pos = int(y[i])
            cos_all = [
                _cos_with_grads(u, A[k])[0] if k != pos else None
                for k in range(len(classes))
            ]
            neg = min(
                (k for k in range(len(classes)) if k != pos),
                key=lambda k: 1.0 - cos_all[k],
            )
            c_pos, du_pos, da_pos = _cos_with_grads(u, A[pos])
            c_neg, du_neg, da_neg = _cos_with_grads(u, A[neg])
            loss = margin + (1.0 - c_pos) - (1.0 - c_neg)
            if loss <= 0.0:
                continue
            active += 1
            # d(1 - cos)/d· = -dcos/d·
            dL_du = -du_pos + du_neg
            grad += np.outer(X[i], dL_du)
            grad += np.outer(A_raw[pos], -da_pos)
            grad += np.outer(A_raw[neg], da_neg)
        if active:
            P -= backbone_lr * grad / active
        _check_finite(P, "anchored projection update")

    Z = X @ P
    W_head, b, result, trace_obj = train_softmax(
        Z, y, len(classes), head_config or TrainConfig(seed=seed), trace=trace
    )

    A_proj = A_raw @ P
    norms = np.linalg.norm(A_proj, axis=1, keepdims=True)
    norms[norms == 0.0] = 1.0
    A_unit = A_proj / norms
    W = W_head + anchor_scale * A_unit.T

    model = LinearClassifier(classes, W, b, projection=P)
    return TrainOutput(
        model=model,
        regime=Regime.ANCHORED_FEW_SHOT,
        train_result=result,
        trace=trace_obj,
        anchors=resolved,
    )


def train_auto(
    corpus: LabeledCorpus,
    featurizer: HashingFeaturizer,
    seed: int = 0,
    anchors: dict[str, str] | None = None,
    config: TrainConfig | None = None,
    hpo: bool = False,
    trace: bool = False,
) -> TrainOutput:
    """Rebalance, resolve the regime, and dispatch to the matching trainer."""
    balanced, report = rebalance(corpus, seed=seed)
    regime = report.final_regime
    if regime is Regime.FULL_TRAIN:
        out = train_full(
            balanced, featurizer, config=config, seed=seed, hpo=hpo, trace=trace
        )
    elif regime is Regime.CONTRASTIVE_FEW_SHOT:
        out = train_contrastive(
            balanced, featurizer, seed=seed, head_config=config, trace=trace
        )
    else:
        out = train_anchored(
            balanced,
            featurizer,
            anchors=anchors,
            seed=seed,
            head_config=config,
            trace=trace,
        )
    out.rebalance_report = report
    return out
