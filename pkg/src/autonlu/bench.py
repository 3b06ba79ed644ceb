"""Benchmark protocols with replayable manifests.

A benchmark run carves a labeled dataset into an in-domain part and
out-of-domain probes of several kinds:

* close: held-out classes sharing a scenario with an in-domain class
  (optional; needs a scenario mapping for the dataset);
* mid: the remaining held-out classes of the same dataset;
* far: a paired unrelated dataset;
* gibberish: random letter strings.

Classes too small to supply a full training draw are filtered out up front
(the few-shot upper bound, or 100 for full runs). Of the retained classes,
80% are drawn at random as in-domain and get a 90/10 train/test split; the
rest feed the held-out probe pools. Few-shot runs then draw a per-class
training count uniformly from the configured range and drop classes that
cannot meet the range minimum. The OOD test budget is the nearest-rank 95th
percentile of the original in-domain class sizes, divided equally across the
probe types with the remainder going to the later types. The scope-aware
variant additionally labels train-time probes as the rejection class, sized
at half the in-domain train set, split across the same types, and disjoint
from the test probes.

Every run serializes a manifest with the exact texts in each part, so it
can be replayed later without the dataset loaders.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .augment import derive_seed, make_gibberish
from .corpus import ClassificationSample, LabeledCorpus, stratified_split
from .errors import ConfigError, NotEnoughClassesError, UnknownDatasetError
from .metrics import ClassificationReport
from .ood import OOS_LABEL
from .pipeline import PipelineResult, evaluate_classification, train_classifier
from .synthdata import intent_scenarios, make_far_corpus, make_intent_corpus

MANIFEST_VERSION = 1
FULL_CAP = 100
ID_CLASS_FRACTION = 0.8
TEST_FRACTION = 0.1
SIZE_PERCENTILE = 0.95
TRAIN_OOD_RATIO = 0.5
OOD_TYPES = ("mid", "far", "gibberish")

# Cross-dataset pairing for far-domain probes.
FAR_OOD_PAIRING = {
    "Banking77": "HWU64",
    "HWU64": "Banking77",
    "MASSIVE": "Banking77",
    "SNIPS": "Banking77",
}

_LOADERS: dict[str, Callable[[], LabeledCorpus]] = {}
_CUSTOM_PAIRS: dict[str, str] = {}
_SCENARIOS: dict[str, dict[str, str]] = {}


def register_dataset(
    name: str,
    loader: Callable[[], LabeledCorpus],
    far_pair: str | None = None,
    scenarios: dict[str, str] | None = None,
) -> None:
    """Make a dataset available to benchmark runs by name.

    scenarios maps each label to a macro-category and enables the close-OOD
    probe type for this dataset.
    """
    _LOADERS[name] = loader
    if far_pair is not None:
        _CUSTOM_PAIRS[name] = far_pair
    if scenarios is not None:
        _SCENARIOS[name] = dict(scenarios)


def available_datasets() -> list[str]:
    return sorted(_LOADERS)


def load_dataset(name: str) -> LabeledCorpus:
    if name not in _LOADERS:
        raise UnknownDatasetError(
            f"no loader registered for dataset {name!r}; "
            f"available: {available_datasets()}"
        )
    return _LOADERS[name]()


def far_pair_for(name: str) -> str | None:
    if name in _CUSTOM_PAIRS:
        return _CUSTOM_PAIRS[name]
    return FAR_OOD_PAIRING.get(name)


def scenarios_for(name: str) -> dict[str, str] | None:
    return _SCENARIOS.get(name)


register_dataset(
    "synthetic7",
    lambda: make_intent_corpus(200, seed=1234),
    far_pair="synthetic_far",
    scenarios=intent_scenarios(),
)
register_dataset(
    "synthetic_far", lambda: make_far_corpus(150, seed=4321), far_pair="synthetic7"
)


def _round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def ood_budget(id_class_sizes: list[int]) -> int:
    """Nearest-rank 95th percentile of the in-domain class sizes."""
    if not id_class_sizes:
        raise ValueError("no in-domain classes")
    ordered = sorted(id_class_sizes)
    k = math.ceil(SIZE_PERCENTILE * len(ordered))
    return ordered[k - 1]


def split_allocation(budget: int, types: list[str]) -> dict[str, int]:
    """Equal split; the remainder goes to the later types."""
    base, rem = divmod(budget, len(types))
    return {
        t: base + (1 if i >= len(types) - rem else 0) for i, t in enumerate(types)
    }


def _draw(
    pool: list[str], k: int, rng: np.random.Generator
) -> tuple[list[str], list[int], bool]:
    """k texts from pool, without replacement until exhausted, then with.

    Returns (texts, used_indices, exhausted).
    """
    if k <= 0:
        return [], [], False
    if len(pool) >= k:
        idx = rng.choice(len(pool), size=k, replace=False)
        return [pool[int(i)] for i in idx], [int(i) for i in idx], False
    extra = rng.integers(0, len(pool), size=k - len(pool)) if pool else []
    texts = list(pool) + [pool[int(i)] for i in extra]
    return texts, list(range(len(pool))), True


@dataclass
class BenchConfig:
    dataset: str = "synthetic7"
    n_shot_range: tuple[int, int] | None = None  # None runs the full protocol
    ood_aware: bool = False
    include_close: bool = False
    method: str = "auto"
    threshold_factor: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.n_shot_range is not None:
            lo, hi = self.n_shot_range
            if lo < 1 or lo > hi:
                raise ConfigError("n_shot_range must satisfy 1 <= lo <= hi")
            self.n_shot_range = (int(lo), int(hi))


def build_manifest(config: BenchConfig) -> dict:
    """Materialize the run's splits as a replayable manifest."""
    corpus = load_dataset(config.dataset)
    counts = corpus.class_counts()

    retention_bound = (
        config.n_shot_range[1] if config.n_shot_range is not None else FULL_CAP
    )
    retained = sorted(c for c, k in counts.items() if k >= retention_bound)
    n = len(retained)
    if n < 3:
        raise NotEnoughClassesError(
            f"{n} classes have >= {retention_bound} examples; "
            "the protocol needs at least 3"
        )

    n_id = min(n - 1, max(2, _round_half_up(ID_CLASS_FRACTION * n)))
    rng = np.random.default_rng(derive_seed(config.seed, "bench-classes"))
    perm = rng.permutation(n)
    id_classes = sorted(retained[int(i)] for i in perm[:n_id])
    held_out = sorted(retained[int(i)] for i in perm[n_id:])

    scenarios = scenarios_for(config.dataset)
    close_classes: list[str] = []
    if config.include_close:
        if scenarios is None:
            raise ConfigError(
                f"dataset {config.dataset!r} has no scenario mapping; "
                "close-OOD probes need one"
            )
        id_scenarios = {scenarios.get(c) for c in id_classes}
        close_classes = [c for c in held_out if scenarios.get(c) in id_scenarios]
    mid_classes = [c for c in held_out if c not in set(close_classes)]

    id_corpus = LabeledCorpus([s for s in corpus.samples if s.label in id_classes])
    split = stratified_split(
        id_corpus, TEST_FRACTION, derive_seed(config.seed, "bench-id-split") % (2**32)
    )

    by_class: dict[str, list[ClassificationSample]] = {}
    for s in split.train.samples:
        by_class.setdefault(s.label, []).append(s)

    dropped: list[str] = []
    train_samples: list[ClassificationSample] = []
    for label in sorted(by_class):
        members = by_class[label]
        if config.n_shot_range is not None:
            lo, hi = config.n_shot_range
            r = np.random.default_rng(derive_seed(config.seed, "bench-nshot", label))
            want = int(r.integers(lo, hi + 1))
            take = min(want, len(members))
            if take < lo:
                dropped.append(label)
                continue
        else:
            take = min(FULL_CAP, len(members))
        if take < len(members):
            r = np.random.default_rng(derive_seed(config.seed, "bench-cap", label))
            keep = sorted(r.permutation(len(members))[:take].tolist())
            members = [members[i] for i in keep]
        train_samples.extend(members)

    if dropped:
        id_classes = [c for c in id_classes if c not in set(dropped)]
        if len(id_classes) < 2:
            raise NotEnoughClassesError(
                "fewer than 2 in-domain classes survive the few-shot draw"
            )
    test_id = [s for s in split.test.samples if s.label in set(id_classes)]

    budget = ood_budget([counts[c] for c in id_classes])

    types = ["close", "mid", "far", "gibberish"] if config.include_close else list(
        OOD_TYPES
    )
    if not close_classes:
        types = [t for t in types if t != "close"]
    if not mid_classes:
        types = [t for t in types if t != "mid"]
    far_name = far_pair_for(config.dataset)
    if far_name is None:
        types = [t for t in types if t != "far"]
    alloc = split_allocation(budget, types)

    pools: dict[str, list[str]] = {
        "close": [s.text for s in corpus.samples if s.label in set(close_classes)],
        "mid": [s.text for s in corpus.samples if s.label in set(mid_classes)],
        "far": [s.text for s in load_dataset(far_name).samples] if far_name else [],
    }

    test_ood: dict[str, list[str]] = {}
    exhausted_test: dict[str, bool] = {}
    used: dict[str, set[int]] = {"close": set(), "mid": set(), "far": set()}
    gib_cursor = 0
    gib_stream = make_gibberish(
        budget * 2 + len(train_samples), seed=derive_seed(config.seed, "bench-gib")
    )
    for t in types:
        rng_t = np.random.default_rng(derive_seed(config.seed, "bench-test-ood", t))
        if t == "gibberish":
            texts = gib_stream[gib_cursor : gib_cursor + alloc[t]]
            gib_cursor += alloc[t]
            exhausted = False
        else:
            texts, used_idx, exhausted = _draw(pools[t], alloc[t], rng_t)
            used[t] = set(used_idx)
        test_ood[t] = texts
        exhausted_test[t] = exhausted

    train_ood: list[str] = []
    alloc_train: dict[str, int] = {}
    exhausted_train: dict[str, bool] = {}
    if config.ood_aware:
        n_train_ood = int(len(train_samples) * TRAIN_OOD_RATIO)
        alloc_train = split_allocation(n_train_ood, types)
        for t in types:
            rng_t = np.random.default_rng(
                derive_seed(config.seed, "bench-train-ood", t)
            )
            if t == "gibberish":
                texts = gib_stream[gib_cursor : gib_cursor + alloc_train[t]]
                gib_cursor += alloc_train[t]
                exhausted = False
            else:
                pool = [x for i, x in enumerate(pools[t]) if i not in used[t]]
                texts, _, exhausted = _draw(pool, alloc_train[t], rng_t)
            train_ood.extend(texts)
            exhausted_train[t] = exhausted

    return {
        "manifest_version": MANIFEST_VERSION,
        "dataset": config.dataset,
        "far_dataset": far_name,
        "seed": config.seed,
        "n_shot_range": list(config.n_shot_range) if config.n_shot_range else None,
        "ood_aware": config.ood_aware,
        "include_close": config.include_close,
        "method": config.method,
        "threshold_factor": config.threshold_factor,
        "id_classes": id_classes,
        "close_ood_classes": close_classes,
        "mid_ood_classes": mid_classes,
        "dropped_classes": dropped,
        "budget": budget,
        "allocation": alloc,
        "train_ood_allocation": alloc_train,
        "exhausted": {"test": exhausted_test, "train": exhausted_train},
        "train": [{"text": s.text, "label": s.label} for s in train_samples],
        "test_id": [{"text": s.text, "label": s.label} for s in test_id],
        "test_ood": test_ood,
        "train_ood": train_ood,
    }


@dataclass
class BenchRun:
    config: BenchConfig
    manifest: dict
    report: ClassificationReport
    pipeline: PipelineResult
    regime: str
    ood_method: str

    def to_dict(self) -> dict:
        return {
            "dataset": self.manifest["dataset"],
            "n_shot_range": self.manifest["n_shot_range"],
            "ood_aware": self.manifest["ood_aware"],
            "seed": self.manifest["seed"],
            "regime": self.regime,
            "ood_method": self.ood_method,
            "budget": self.manifest["budget"],
            "allocation": self.manifest["allocation"],
            "exhausted": self.manifest["exhausted"],
            "metrics": self.report.to_dict(),
        }


def run_from_manifest(manifest: dict) -> BenchRun:
    """Train and evaluate exactly the splits recorded in a manifest."""
    version = manifest.get("manifest_version")
    if version != MANIFEST_VERSION:
        raise UnknownDatasetError(f"unsupported manifest version {version!r}")

    train_samples = [
        ClassificationSample(text=r["text"], label=r["label"])
        for r in manifest["train"]
    ]
    if manifest["ood_aware"]:
        train_samples += [
            ClassificationSample(text=t, label=OOS_LABEL)
            for t in manifest["train_ood"]
        ]
    train_corpus = LabeledCorpus(train_samples)
    test_corpus = LabeledCorpus(
        [
            ClassificationSample(text=r["text"], label=r["label"])
            for r in manifest["test_id"]
        ]
    )
    ood_texts = [t for probe in manifest["test_ood"].values() for t in probe]

    result = train_classifier(
        train_corpus,
        method=manifest["method"],
        ood_method="out_of_scope_class" if manifest["ood_aware"] else None,
        threshold_factor=manifest["threshold_factor"],
        seed=manifest["seed"],
    )
    report = evaluate_classification(result.manager(), test_corpus, ood_texts=ood_texts)

    rng_range = manifest["n_shot_range"]
    config = BenchConfig(
        dataset=manifest["dataset"],
        n_shot_range=tuple(rng_range) if rng_range else None,
        ood_aware=manifest["ood_aware"],
        include_close=manifest.get("include_close", False),
        method=manifest["method"],
        threshold_factor=manifest["threshold_factor"],
        seed=manifest["seed"],
    )
    return BenchRun(
        config=config,
        manifest=manifest,
        report=report,
        pipeline=result,
        regime=result.regime.value,
        ood_method=result.ood_method,
    )


def run_benchmark(config: BenchConfig) -> BenchRun:
    """Build the manifest for config, then run it."""
    manifest = build_manifest(config)
    return run_from_manifest(manifest)
