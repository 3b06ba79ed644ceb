"""End-to-end flows: train, calibrate scope rejection, bundle, evaluate.

This ties the pieces together the way the CLI uses them: rebalance and pick
a regime (or honor a forced method), train, fit the scope detector, set its
threshold against gibberish probes, and hand back something that can predict
or be saved as a bundle.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

from .augment import derive_seed, make_gibberish
from .bundle import InferenceManager, save_model
from .corpus import ClassificationSample, LabeledCorpus, NerCorpus, stratified_split
from .embed import FeaturizerConfig, HashingFeaturizer
from .errors import ConfigError
from .linear import TrainConfig
from .metrics import ClassificationReport, EntityReport, classification_report, entity_report
from .ner import NerTrainOutput, train_ner
from .ood import (
    OOD_METHODS,
    OOS_LABEL,
    MahalanobisDetector,
    MSPDetector,
    OOSClassDetector,
    calibrate_threshold,
    default_ood_method,
)
from .regime import Regime, rebalance
from .trainers import (
    TrainOutput,
    train_anchored,
    train_contrastive,
    train_full,
)

GIBBERISH_N = 1000
VAL_FRACTION = 0.1

METHOD_CHOICES = ("auto",) + tuple(r.value for r in Regime)


@dataclass
class CalibrationInfo:
    threshold: float
    threshold_factor: float
    f1: float
    n_id: int
    n_probe: int

    def to_dict(self) -> dict:
        return {
            "threshold": self.threshold,
            "threshold_factor": self.threshold_factor,
            "f1": self.f1,
            "n_id": self.n_id,
            "n_probe": self.n_probe,
        }


@dataclass
class PipelineResult:
    featurizer: HashingFeaturizer
    output: TrainOutput
    detector: MahalanobisDetector | MSPDetector | OOSClassDetector | None
    ood_method: str
    calibration: CalibrationInfo | None
    corpus_used: LabeledCorpus

    @property
    def model(self):
        return self.output.model

    @property
    def regime(self) -> Regime:
        return self.output.regime

    def manager(self, max_batch: int = 256) -> InferenceManager:
        return InferenceManager(
            self.featurizer, self.model, detector=self.detector, max_batch=max_batch
        )

    def save(self, path: str | Path) -> None:
        save_model(
            path,
            self.model,
            self.featurizer,
            method=self.regime.value,
            detector=self.detector,
            anchors=self.output.anchors,
        )


def train_classifier(
    corpus: LabeledCorpus,
    method: str = "auto",
    ood_method: str | None = None,
    threshold_factor: float = 1.0,
    seed: int = 0,
    featurizer_config: FeaturizerConfig | None = None,
    train_config: TrainConfig | None = None,
    anchors: dict[str, str] | None = None,
    hpo: bool = False,
    gibberish_n: int = GIBBERISH_N,
    trace: bool = False,
) -> PipelineResult:
    """Train a classifier with scope rejection ready to use.

    method 'auto' rebalances the corpus and resolves the regime from class
    counts; a forced method trains as-is. ood_method None picks the regime's
    default pairing; 'none' disables rejection. The detection threshold is
    calibrated by maximizing F1 between held-in validation scores and
    gibberish probe scores, then scaled by threshold_factor.
    """
    if method not in METHOD_CHOICES:
        raise ConfigError(f"method must be one of {METHOD_CHOICES}")
    if ood_method is not None and ood_method not in OOD_METHODS:
        raise ConfigError(f"ood_method must be one of {OOD_METHODS}")

    featurizer = HashingFeaturizer(featurizer_config or FeaturizerConfig())

    work = corpus
    rebalance_report = None
    if method == "auto":
        work, rebalance_report = rebalance(corpus, seed=seed)
        regime = rebalance_report.final_regime
    else:
        regime = Regime(method)

    resolved_ood = ood_method if ood_method is not None else default_ood_method(regime)

    if resolved_ood == "out_of_scope_class" and OOS_LABEL not in work.class_counts():
        n_extra = max(2, len(work) // 2)
        probes = make_gibberish(n_extra, seed=derive_seed(seed, "oos-train"))
        work = LabeledCorpus(
            list(work.samples)
            + [ClassificationSample(text=t, label=OOS_LABEL) for t in probes]
        )

    if regime is Regime.FULL_TRAIN:
        output = train_full(
            work, featurizer, config=train_config, seed=seed, hpo=hpo, trace=trace
        )
    elif regime is Regime.CONTRASTIVE_FEW_SHOT:
        output = train_contrastive(
            work, featurizer, seed=seed, head_config=train_config, trace=trace
        )
    else:
        output = train_anchored(
            work, featurizer, anchors=anchors, seed=seed,
            head_config=train_config, trace=trace,
        )
    output.rebalance_report = rebalance_report

    id_samples = [s for s in work.samples if s.label != OOS_LABEL]
    detector = None
    calibration = None
    if resolved_ood != "none":
        if resolved_ood == "mahalanobis":
            X_id = featurizer.encode_batch([s.text for s in id_samples])
            detector = MahalanobisDetector.fit(X_id)
        elif resolved_ood == "msp":
            detector = MSPDetector(output.model)
        else:
            detector = OOSClassDetector(output.model)

        if regime is Regime.FULL_TRAIN:
            val_texts = [
                s.text
                for s in stratified_split(work, VAL_FRACTION, seed).test.samples
                if s.label != OOS_LABEL
            ]
        else:
            val_texts = [s.text for s in id_samples]
        probes = make_gibberish(gibberish_n, seed=seed)
        id_scores = detector.scores(featurizer.encode_batch(val_texts))
        probe_scores = detector.scores(featurizer.encode_batch(probes))
        threshold, f1 = calibrate_threshold(id_scores, probe_scores)
        detector.threshold = threshold
        detector.threshold_factor = threshold_factor
        calibration = CalibrationInfo(
            threshold=threshold,
            threshold_factor=threshold_factor,
            f1=f1,
            n_id=len(val_texts),
            n_probe=len(probes),
        )

    return PipelineResult(
        featurizer=featurizer,
        output=output,
        detector=detector,
        ood_method=resolved_ood,
        calibration=calibration,
        corpus_used=work,
    )


@dataclass
class NerPipelineResult:
    featurizer: HashingFeaturizer
    output: NerTrainOutput

    @property
    def model(self):
        return self.output.model

    def manager(self, max_batch: int = 256) -> InferenceManager:
        return InferenceManager(self.featurizer, self.model, max_batch=max_batch)

    def save(self, path: str | Path) -> None:
        save_model(path, self.model, self.featurizer, method="ner")


def train_ner_pipeline(
    corpus: NerCorpus,
    seed: int = 0,
    featurizer_config: FeaturizerConfig | None = None,
    train_config: TrainConfig | None = None,
) -> NerPipelineResult:
    featurizer = HashingFeaturizer(featurizer_config or FeaturizerConfig())
    output = train_ner(corpus, featurizer, config=train_config, seed=seed)
    return NerPipelineResult(featurizer=featurizer, output=output)


def evaluate_classification(
    manager: InferenceManager,
    corpus: LabeledCorpus,
    ood_texts: list[str] | None = None,
    ood_label: str = OOS_LABEL,
) -> ClassificationReport:
    """Score a manager on labeled data, optionally with OOD probes whose
    gold label is the scope-rejection class."""
    texts = list(corpus.texts)
    gold = list(corpus.labels)
    if ood_texts:
        texts.extend(ood_texts)
        gold.extend([ood_label] * len(ood_texts))
    preds = [p.label for p in manager.predict(texts)]
    return classification_report(
        gold, preds, ood_label=ood_label if ood_texts else None
    )


def evaluate_ner(manager: InferenceManager, corpus: NerCorpus) -> EntityReport:
    preds = manager.predict_entities([s.text for s in corpus.samples])
    gold = [list(s.entities) for s in corpus.samples]
    return entity_report(gold, preds)
