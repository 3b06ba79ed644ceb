"""Training-regime selection and adaptive class rebalancing.

The regime is a function of the rarest class. With n_min the smallest class
count: 2 <= n_min <= 5 selects the anchored few-shot method, 5 < n_min <= 80
the contrastive few-shot method, and n_min > 80 full training. Any class
with fewer than two examples is an error.

Rebalancing first considers upsampling: when more than 30% of classes are
low-resource (at most 80 examples), every low-resource class is upsampled to
81 examples, which re-resolves the regime to full training. Afterwards a
per-class ceiling is applied for the few-shot regimes (80 for contrastive,
5 for anchored) so their pairwise costs stay bounded.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Callable

import numpy as np

from .augment import derive_seed, perturb
from .corpus import ClassificationSample, LabeledCorpus
from .errors import EmptyCorpusError, InsufficientExamplesError

ANCHORED_LO = 2
ANCHORED_HI = 5
CONTRASTIVE_HI = 80
UPSAMPLE_TARGET = 81
LOW_RESOURCE_FRACTION = 0.3


class Regime(str, Enum):
    ANCHORED_FEW_SHOT = "anchored_few_shot"
    CONTRASTIVE_FEW_SHOT = "contrastive_few_shot"
    FULL_TRAIN = "full_train"


def resolve_regime(counts: dict[str, int]) -> Regime:
    """Pick the regime from per-class counts; see the module docstring."""
    if not counts:
        raise EmptyCorpusError("no classes to resolve a regime for")
    for label in sorted(counts):
        if counts[label] < ANCHORED_LO:
            raise InsufficientExamplesError(
                label, f"class {label!r} has {counts[label]} examples; need >= {ANCHORED_LO}"
            )
    n_min = min(counts.values())
    if n_min <= ANCHORED_HI:
        return Regime.ANCHORED_FEW_SHOT
    if n_min <= CONTRASTIVE_HI:
        return Regime.CONTRASTIVE_FEW_SHOT
    return Regime.FULL_TRAIN


def low_resource_fraction(counts: dict[str, int]) -> float:
    if not counts:
        raise EmptyCorpusError("no classes")
    low = sum(1 for c in counts.values() if c <= CONTRASTIVE_HI)
    return low / len(counts)


@dataclass
class RebalanceAction:
    label: str
    kind: str  # "upsample" or "downsample"
    before: int
    after: int


@dataclass
class RebalanceReport:
    initial_regime: Regime
    final_regime: Regime
    low_resource_fraction: float
    actions: list[RebalanceAction] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "initial_regime": self.initial_regime.value,
            "final_regime": self.final_regime.value,
            "low_resource_fraction": self.low_resource_fraction,
            "actions": [
                {"label": a.label, "kind": a.kind, "before": a.before, "after": a.after}
                for a in self.actions
            ],
        }


def default_augmenter(seed: int) -> Callable[[str, int], str]:
    """Perturbation-backed source for upsampled copies."""

    def aug(text: str, k: int) -> str:
        return perturb(text, 1, seed=derive_seed(seed, "upsample-variant", k))[0]

    return aug


def rebalance(
    corpus: LabeledCorpus,
    seed: int = 0,
    augmenter: Callable[[str, int], str] | None = None,
) -> tuple[LabeledCorpus, RebalanceReport]:
    """Apply upsampling and ceilings; returns the new corpus and a report.

    Upsampled copies are perturbed variants of existing texts; pass an
    augmenter to substitute another source (each copy is
    augmenter(text, draw_index), e.g. an LLM paraphraser). Downsampling keeps
    a seeded random subset of each oversized class.
    """
    if augmenter is None:
        augmenter = default_augmenter(seed)
    counts = corpus.class_counts()
    initial = resolve_regime(counts)
    fraction = low_resource_fraction(counts)
    actions: list[RebalanceAction] = []

    by_class: dict[str, list[ClassificationSample]] = {}
    for s in corpus.samples:
        by_class.setdefault(s.label, []).append(s)

    if fraction > LOW_RESOURCE_FRACTION:
        for label in sorted(by_class):
            members = by_class[label]
            if len(members) > CONTRASTIVE_HI:
                continue
            rng = np.random.default_rng(derive_seed(seed, "upsample", label))
            need = UPSAMPLE_TARGET - len(members)
            extras = []
            for k in range(need):
                src = members[int(rng.integers(len(members)))]
                extras.append(
                    ClassificationSample(text=augmenter(src.text, k), label=src.label)
                )
            actions.append(
                RebalanceAction(label, "upsample", len(members), len(members) + need)
            )
            by_class[label] = members + extras

    mid_counts = {label: len(v) for label, v in by_class.items()}
    final = resolve_regime(mid_counts)

    cap = None
    if final is Regime.ANCHORED_FEW_SHOT:
        cap = ANCHORED_HI
    elif final is Regime.CONTRASTIVE_FEW_SHOT:
        cap = CONTRASTIVE_HI
    if cap is not None:
        for label in sorted(by_class):
            members = by_class[label]
            if len(members) <= cap:
                continue
            rng = np.random.default_rng(derive_seed(seed, "downsample", label))
            keep = sorted(rng.permutation(len(members))[:cap].tolist())
            actions.append(RebalanceAction(label, "downsample", len(members), cap))
            by_class[label] = [members[i] for i in keep]

    samples = [s for label in sorted(by_class) for s in by_class[label]]
    report = RebalanceReport(
        initial_regime=initial,
        final_regime=final,
        low_resource_fraction=fraction,
        actions=actions,
    )
    return LabeledCorpus(samples), report
