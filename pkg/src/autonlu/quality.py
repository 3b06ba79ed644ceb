"""Training-data diagnostics.

All evaluators share one short diagnostic run (dynamic_tune): six epochs of
softmax regression over the full corpus with per-epoch probability traces,
plus a null model fit on blank inputs for information-value scoring.

Evaluators:

* retag: out-of-fold predictions from a stratified k-fold; disagreement
  with the recorded label is a flag.
* uncertainty: final-epoch gold probability below tau.
* pvi: pointwise information value log2 p_model(y|x) - log2 p_null(y);
  non-positive values are flags.
* cartography: confidence/variability regions over the trace, written as
  CSV and an SVG map (informational, no flags).
* label aggregation: feature-zeroing prediction passes treated as noisy
  annotators, reconciled by Dawid-Skene EM; consensus disagreeing with the
  recorded label is a flag.

A sample's overall flag is the union over the flagging evaluators.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .augment import derive_seed
from .corpus import LabeledCorpus, NerCorpus
from .embed import HashingFeaturizer
from .errors import IncompatibleEvaluatorError, InsufficientExamplesError
from .linear import LinearClassifier, TrainConfig, TrainingTrace, train_softmax

DIAG_EPOCHS = 6
UNCERTAINTY_TAU = 0.5
PVI_FLOOR = 1e-12
MC_PASSES = 10
MC_RATE = 0.2
DS_SMOOTHING = 0.01
DS_TOL = 1e-6
DS_MAX_ITERS = 200
RETAG_FOLDS = 5

CLASSIFICATION_EVALUATORS = (
    "retag",
    "uncertainty",
    "pvi",
    "cartography",
    "label_aggregation",
)


@dataclass
class TunedRun:
    classes: list[str]
    y: np.ndarray
    model: LinearClassifier
    trace: TrainingTrace
    null_model: LinearClassifier
    null_trace: TrainingTrace
    X: np.ndarray


def _diag_config(seed: int, epochs: int) -> TrainConfig:
    return TrainConfig(max_epochs=epochs, patience=epochs, seed=seed)


def dynamic_tune(
    corpus: LabeledCorpus,
    featurizer: HashingFeaturizer,
    seed: int = 0,
    epochs: int = DIAG_EPOCHS,
) -> TunedRun:
    """Short full-corpus training run whose trace feeds the evaluators.

    The null model sees a blank input for every sample, so it can only learn
    the label marginals; it anchors the information-value baseline.
    """
    classes = corpus.classes()
    index = {c: i for i, c in enumerate(classes)}
    X = featurizer.encode_batch(corpus.texts).astype(np.float64)
    y = np.array([index[s.label] for s in corpus.samples], dtype=np.int64)

    cfg = _diag_config(seed, epochs)
    W, b, _, trace = train_softmax(X, y, len(classes), cfg, trace=True)
    model = LinearClassifier(classes, W, b)

    X_null = np.repeat(featurizer.encode("").astype(np.float64)[None, :], len(y), axis=0)
    Wn, bn, _, null_trace = train_softmax(X_null, y, len(classes), cfg, trace=True)
    null_model = LinearClassifier(classes, Wn, bn)

    return TunedRun(
        classes=classes,
        y=y,
        model=model,
        trace=trace,
        null_model=null_model,
        null_trace=null_trace,
        X=X,
    )


@dataclass
class RetagFlag:
    index: int
    gold: str
    predicted: str
    confidence: float


def retag_flags(
    corpus: LabeledCorpus,
    featurizer: HashingFeaturizer,
    seed: int = 0,
    k: int = RETAG_FOLDS,
    epochs: int = DIAG_EPOCHS,
) -> list[RetagFlag]:
    """Out-of-fold relabeling. k is reduced to the smallest class size."""
    counts = corpus.class_counts()
    n_min = min(counts.values())
    if n_min < 2:
        label = min((l for l, c in counts.items() if c < 2), key=str)
        raise InsufficientExamplesError(label, "need >= 2 examples per class to retag")
    k = min(k, n_min)

    classes = corpus.classes()
    index = {c: i for i, c in enumerate(classes)}
    X = featurizer.encode_batch(corpus.texts).astype(np.float64)
    y = np.array([index[s.label] for s in corpus.samples], dtype=np.int64)

    folds = np.zeros(len(y), dtype=np.int64)
    for c_idx in range(len(classes)):
        members = np.flatnonzero(y == c_idx)
        rng = np.random.default_rng(derive_seed(seed, "retag", classes[c_idx]))
        members = members[rng.permutation(len(members))]
        for pos, i in enumerate(members):
            folds[i] = pos % k

    flags: list[RetagFlag] = []
    for fold in range(k):
        held = np.flatnonzero(folds == fold)
        rest = np.flatnonzero(folds != fold)
        cfg = _diag_config(derive_seed(seed, "retag-fold", fold) % (2**32), epochs)
        W, b, _, _ = train_softmax(X[rest], y[rest], len(classes), cfg)
        model = LinearClassifier(classes, W, b)
        probs = model.proba(X[held])
        preds = np.argmax(probs, axis=1)
        for row, i in enumerate(held):
            if preds[row] != y[i]:
                flags.append(
                    RetagFlag(
                        index=int(i),
                        gold=classes[y[i]],
                        predicted=classes[preds[row]],
                        confidence=float(probs[row, preds[row]]),
                    )
                )
    flags.sort(key=lambda f: f.index)
    return flags


@dataclass
class UncertaintyFlag:
    index: int
    gold_prob: float


def uncertainty_flags(
    trace: TrainingTrace, tau: float = UNCERTAINTY_TAU
) -> list[UncertaintyFlag]:
    """Samples whose final-epoch gold probability is below tau."""
    final = trace.gold_probs[-1]
    return [
        UncertaintyFlag(index=i, gold_prob=float(p))
        for i, p in enumerate(final)
        if p < tau
    ]


def pvi_scores(run: TunedRun) -> np.ndarray:
    """log2 p_model(y|x) - log2 p_null(y), floored away from log(0)."""
    p_model = np.maximum(run.trace.gold_probs[-1], PVI_FLOOR)
    p_null = np.maximum(run.null_trace.gold_probs[-1], PVI_FLOOR)
    return np.log2(p_model) - np.log2(p_null)


@dataclass
class PVIFlag:
    index: int
    pvi: float


def pvi_flags(run: TunedRun) -> list[PVIFlag]:
    scores = pvi_scores(run)
    return [PVIFlag(index=i, pvi=float(v)) for i, v in enumerate(scores) if v <= 0.0]


REGION_EASY = "easy"
REGION_AMBIGUOUS = "ambiguous"
REGION_HARD = "hard_to_learn"


def region_of(confidence: float, variability: float) -> str:
    if variability < 0.2:
        if confidence < 0.5:
            return REGION_HARD
        if confidence >= 0.75:
            return REGION_EASY
    return REGION_AMBIGUOUS


@dataclass
class CartographyRow:
    index: int
    confidence: float
    variability: float
    region: str


def cartography(trace: TrainingTrace) -> list[CartographyRow]:
    """Confidence is the mean gold probability across epochs, variability
    its population standard deviation."""
    conf = trace.gold_probs.mean(axis=0)
    var = trace.gold_probs.std(axis=0)  # ddof=0
    return [
        CartographyRow(
            index=i,
            confidence=float(conf[i]),
            variability=float(var[i]),
            region=region_of(float(conf[i]), float(var[i])),
        )
        for i in range(trace.gold_probs.shape[1])
    ]


def write_cartography_csv(rows: list[CartographyRow], path: str | Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["id", "confidence", "variability", "region"])
        for r in rows:
            writer.writerow([r.index, f"{r.confidence:.6f}", f"{r.variability:.6f}", r.region])


_REGION_COLORS = {
    REGION_EASY: "#2a9d3f",
    REGION_AMBIGUOUS: "#e09f3e",
    REGION_HARD: "#c03221",
}


def cartography_svg(rows: list[CartographyRow], width: int = 640, height: int = 480) -> str:
    """Scatter of variability (x) against confidence (y)."""
    pad = 50
    plot_w = width - 2 * pad
    plot_h = height - 2 * pad

    def sx(v: float) -> float:
        return pad + min(max(v, 0.0), 0.5) / 0.5 * plot_w

    def sy(c: float) -> float:
        return height - pad - min(max(c, 0.0), 1.0) * plot_h

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<line x1="{pad}" y1="{height - pad}" x2="{width - pad}" y2="{height - pad}" '
        'stroke="black"/>',
        f'<line x1="{pad}" y1="{pad}" x2="{pad}" y2="{height - pad}" stroke="black"/>',
        f'<text x="{width // 2}" y="{height - 12}" text-anchor="middle" '
        'font-size="14">variability</text>',
        f'<text x="16" y="{height // 2}" text-anchor="middle" font-size="14" '
        f'transform="rotate(-90 16 {height // 2})">confidence</text>',
    ]
    for r in rows:
        color = _REGION_COLORS[r.region]
        parts.append(
            f'<circle cx="{sx(r.variability):.1f}" cy="{sy(r.confidence):.1f}" r="3" '
            f'fill="{color}" fill-opacity="0.7"><title>{r.index}</title></circle>'
        )
    for i, (region, color) in enumerate(sorted(_REGION_COLORS.items())):
        y = pad + 16 * i
        parts.append(f'<circle cx="{width - pad - 110}" cy="{y}" r="4" fill="{color}"/>')
        parts.append(
            f'<text x="{width - pad - 100}" y="{y + 4}" font-size="12">{region}</text>'
        )
    parts.append("</svg>")
    return "\n".join(parts)


def mc_votes(
    model: LinearClassifier,
    X: np.ndarray,
    passes: int = MC_PASSES,
    rate: float = MC_RATE,
    seed: int = 0,
) -> np.ndarray:
    """Label votes from repeated feature-zeroing passes.

    Each pass drops every feature independently with probability rate and
    rescales the survivors by 1/(1 - rate), then takes the argmax label.
    Returns [n, passes] class indices.
    """
    X = np.asarray(X, dtype=np.float64)
    n = len(X)
    votes = np.zeros((n, passes), dtype=np.int64)
    for p in range(passes):
        rng = np.random.default_rng(derive_seed(seed, "mcpass", p))
        keep = rng.random(X.shape) >= rate
        Xp = X * keep / (1.0 - rate)
        votes[:, p] = np.argmax(model.proba(Xp), axis=1)
    return votes


@dataclass
class DawidSkeneResult:
    posterior: np.ndarray  # [n, k]
    consensus: np.ndarray  # [n] class indices
    priors: np.ndarray  # [k]
    converged: bool
    objective_trace: list[float] = field(default_factory=list)


def dawid_skene(
    votes: np.ndarray,
    n_classes: int,
    smoothing: float = DS_SMOOTHING,
    tol: float = DS_TOL,
    max_iters: int = DS_MAX_ITERS,
) -> DawidSkeneResult:
    """EM label aggregation over per-pass confusion matrices.

    The smoothed M-step is the MAP update under a Dirichlet(1 + smoothing)
    prior, so the reported objective (log-likelihood plus prior terms) is
    non-decreasing across iterations. Hitting max_iters without the
    objective settling below tol is reported via converged=False, not an
    exception.
    """
    votes = np.asarray(votes, dtype=np.int64)
    n, m = votes.shape
    k = n_classes
    s = smoothing

    # soft majority-vote init
    q = np.zeros((n, k), dtype=np.float64)
    for a in range(m):
        q[np.arange(n), votes[:, a]] += 1.0
    q /= q.sum(axis=1, keepdims=True)

    vote_onehot = np.zeros((m, n, k), dtype=np.float64)
    for a in range(m):
        vote_onehot[a, np.arange(n), votes[:, a]] = 1.0

    objective_trace: list[float] = []
    converged = False
    prev_obj: float | None = None

    for _ in range(max_iters):
        # M-step (MAP with add-s smoothing)
        priors = (q.sum(axis=0) + s) / (n + s * k)
        theta = np.empty((m, k, k), dtype=np.float64)
        for a in range(m):
            counts = q.T @ vote_onehot[a]  # [k, k]: true class x voted label
            theta[a] = (counts + s) / (counts.sum(axis=1, keepdims=True) + s * k)

        # E-step in log space
        log_lik = np.log(priors)[None, :].repeat(n, axis=0)
        for a in range(m):
            log_lik += np.log(theta[a][:, votes[:, a]].T)
        max_l = log_lik.max(axis=1, keepdims=True)
        q = np.exp(log_lik - max_l)
        q /= q.sum(axis=1, keepdims=True)

        data_term = float(
            np.sum(max_l[:, 0] + np.log(np.exp(log_lik - max_l).sum(axis=1)))
        )
        prior_term = s * float(np.sum(np.log(priors))) + s * float(
            np.sum(np.log(theta))
        )
        obj = data_term + prior_term
        objective_trace.append(obj)
        if prev_obj is not None and abs(obj - prev_obj) < tol:
            converged = True
            break
        prev_obj = obj

    consensus = np.argmax(q, axis=1)
    return DawidSkeneResult(
        posterior=q,
        consensus=consensus,
        priors=priors,
        converged=converged,
        objective_trace=objective_trace,
    )


@dataclass
class AggregationFlag:
    index: int
    gold: str
    consensus: str
    posterior: float


def aggregation_flags(
    run: TunedRun, seed: int = 0, passes: int = MC_PASSES, rate: float = MC_RATE
) -> tuple[list[AggregationFlag], DawidSkeneResult]:
    votes = mc_votes(run.model, run.X, passes=passes, rate=rate, seed=seed)
    ds = dawid_skene(votes, n_classes=len(run.classes))
    flags = [
        AggregationFlag(
            index=int(i),
            gold=run.classes[run.y[i]],
            consensus=run.classes[ds.consensus[i]],
            posterior=float(ds.posterior[i, ds.consensus[i]]),
        )
        for i in range(len(run.y))
        if ds.consensus[i] != run.y[i]
    ]
    return flags, ds


@dataclass
class QualityReport:
    n_samples: int
    evaluators: list[str]
    flags: dict[str, list[dict]]
    flagged_indices: list[int]
    cartography: list[CartographyRow] = field(default_factory=list)
    aggregation_converged: bool = True

    def to_dict(self) -> dict:
        return {
            "n_samples": self.n_samples,
            "evaluators": self.evaluators,
            "flags": self.flags,
            "flagged_indices": self.flagged_indices,
            "cartography": [
                {
                    "id": r.index,
                    "confidence": r.confidence,
                    "variability": r.variability,
                    "region": r.region,
                }
                for r in self.cartography
            ],
            "aggregation_converged": self.aggregation_converged,
        }


def diagnose(
    corpus: LabeledCorpus,
    featurizer: HashingFeaturizer,
    seed: int = 0,
    evaluators: list[str] | None = None,
    out_dir: str | Path | None = None,
) -> QualityReport:
    """Run the requested evaluators (all of them by default) and merge flags.

    Only classification corpora are supported; NER input raises
    IncompatibleEvaluatorError for the first requested evaluator.
    """
    evaluators = list(evaluators) if evaluators is not None else list(
        CLASSIFICATION_EVALUATORS
    )
    for name in evaluators:
        if name not in CLASSIFICATION_EVALUATORS:
            raise ValueError(f"unknown evaluator {name!r}")
    if isinstance(corpus, NerCorpus):
        raise IncompatibleEvaluatorError("ner", evaluators[0] if evaluators else "any")

    run = dynamic_tune(corpus, featurizer, seed=seed)
    flags: dict[str, list[dict]] = {}
    flagged: set[int] = set()
    cart_rows: list[CartographyRow] = []
    agg_converged = True

    if "retag" in evaluators:
        rows = retag_flags(corpus, featurizer, seed=seed)
        flags["retag"] = [
            {
                "index": f.index,
                "gold": f.gold,
                "predicted": f.predicted,
                "confidence": f.confidence,
            }
            for f in rows
        ]
        flagged.update(f.index for f in rows)

    if "uncertainty" in evaluators:
        rows = uncertainty_flags(run.trace)
        flags["uncertainty"] = [
            {"index": f.index, "gold_prob": f.gold_prob} for f in rows
        ]
        flagged.update(f.index for f in rows)

    if "pvi" in evaluators:
        rows = pvi_flags(run)
        flags["pvi"] = [{"index": f.index, "pvi": f.pvi} for f in rows]
        flagged.update(f.index for f in rows)

    if "cartography" in evaluators:
        cart_rows = cartography(run.trace)
        if out_dir is not None:
            out = Path(out_dir)
            out.mkdir(parents=True, exist_ok=True)
            write_cartography_csv(cart_rows, out / "cartography.csv")
            (out / "cartography.svg").write_text(
                cartography_svg(cart_rows), encoding="utf-8"
            )

    if "label_aggregation" in evaluators:
        rows, ds = aggregation_flags(run, seed=seed)
        agg_converged = ds.converged
        flags["label_aggregation"] = [
            {
                "index": f.index,
                "gold": f.gold,
                "consensus": f.consensus,
                "posterior": f.posterior,
            }
            for f in rows
        ]
        flagged.update(f.index for f in rows)

    return QualityReport(
        n_samples=len(corpus),
        evaluators=evaluators,
        flags=flags,
        flagged_indices=sorted(flagged),
        cartography=cart_rows,
        aggregation_converged=agg_converged,
    )
