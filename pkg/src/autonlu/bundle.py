"""Portable model bundles and batched inference.

A bundle is a directory:

* meta.json — format_version, task, method, ood_method, featurizer config,
  created_unix, weights_manifest (names and shapes, in file order) and a
  sha256 checksum of weights.bin;
* labels.json — class names (classification) or BIO tags (NER);
* weights.bin — the manifest's arrays as little-endian float32, concatenated;
* anchors.json — optional, anchor text per label.

All learned arrays are float32 before saving, and inference always runs on
float32 parameters, so a loaded bundle predicts bit-identically to the model
it was saved from.
"""

from __future__ import annotations

import hashlib
import json
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .embed import FeaturizerConfig, HashingFeaturizer
from .errors import InferenceError, IntegrityError, VersionError
from .linear import LinearClassifier
from .ner import NerModel
from .ood import (
    OOS_LABEL,
    MahalanobisDetector,
    MSPDetector,
    OOSClassDetector,
)

FORMAT_VERSION = 1
META_FILE = "meta.json"
LABELS_FILE = "labels.json"
WEIGHTS_FILE = "weights.bin"
ANCHORS_FILE = "anchors.json"

MAX_BATCH = 256


def _write_weights(path: Path, arrays: dict[str, np.ndarray]) -> tuple[list[dict], str]:
    blobs = []
    manifest = []
    for name, arr in arrays.items():
        arr32 = np.ascontiguousarray(arr, dtype="<f4")
        blobs.append(arr32.tobytes())
        manifest.append({"name": name, "shape": list(arr32.shape)})
    payload = b"".join(blobs)
    (path / WEIGHTS_FILE).write_bytes(payload)
    return manifest, hashlib.sha256(payload).hexdigest()


def save_bundle(
    path: str | Path,
    *,
    task: str,
    method: str,
    labels: list[str],
    arrays: dict[str, np.ndarray],
    featurizer_config: FeaturizerConfig,
    ood_method: str = "none",
    ood_threshold: float | None = None,
    ood_threshold_factor: float = 1.0,
    anchors: dict[str, str] | None = None,
) -> None:
    """Write a bundle directory (created if needed, files overwritten)."""
    out = Path(path)
    out.mkdir(parents=True, exist_ok=True)
    manifest, checksum = _write_weights(out, arrays)
    meta = {
        "format_version": FORMAT_VERSION,
        "task": task,
        "method": method,
        "ood_method": ood_method,
        "featurizer": featurizer_config.to_dict(),
        "created_unix": int(time.time()),
        "weights_manifest": manifest,
        "checksum": checksum,
        "ood": {
            "threshold": ood_threshold,
            "threshold_factor": ood_threshold_factor,
        },
    }
    if ood_method == "out_of_scope_class":
        meta["oos_label"] = OOS_LABEL
    (out / META_FILE).write_text(
        json.dumps(meta, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    (out / LABELS_FILE).write_text(
        json.dumps(labels, indent=2) + "\n", encoding="utf-8"
    )
    anchors_path = out / ANCHORS_FILE
    if anchors is not None:
        anchors_path.write_text(
            json.dumps(anchors, indent=2, sort_keys=True) + "\n", encoding="utf-8"
        )
    elif anchors_path.exists():
        anchors_path.unlink()


def save_model(
    path: str | Path,
    model: LinearClassifier | NerModel,
    featurizer: HashingFeaturizer,
    method: str,
    detector=None,
    anchors: dict[str, str] | None = None,
) -> None:
    """Bundle a trained model together with its scope detector."""
    arrays: dict[str, np.ndarray] = {}
    if isinstance(model, NerModel):
        task = "ner"
        head = model.head
        labels = head.classes
        if head.projection is not None:
            arrays["projection"] = head.projection
        arrays["weights"] = head.weights
        arrays["bias"] = head.bias
    else:
        task = "classification"
        labels = model.classes
        if model.projection is not None:
            arrays["projection"] = model.projection
        arrays["weights"] = model.weights
        arrays["bias"] = model.bias

    ood_method = "none"
    threshold = None
    factor = 1.0
    if detector is not None:
        ood_method = detector.method
        threshold = detector.threshold
        factor = detector.threshold_factor
        if isinstance(detector, MahalanobisDetector):
            arrays["ood_mean"] = detector.mean
            arrays["ood_precision"] = detector.precision

    save_bundle(
        path,
        task=task,
        method=method,
        labels=list(labels),
        arrays=arrays,
        featurizer_config=featurizer.config,
        ood_method=ood_method,
        ood_threshold=threshold,
        ood_threshold_factor=factor,
        anchors=anchors,
    )


@dataclass
class LoadedBundle:
    meta: dict
    labels: list[str]
    featurizer: HashingFeaturizer
    model: LinearClassifier | NerModel
    detector: MahalanobisDetector | MSPDetector | OOSClassDetector | None
    anchors: dict[str, str] | None

    @property
    def task(self) -> str:
        return self.meta["task"]


def load_bundle(path: str | Path) -> LoadedBundle:
    """Read a bundle back; verifies the format version and the checksum."""
    root = Path(path)
    try:
        meta = json.loads((root / META_FILE).read_text(encoding="utf-8"))
    except FileNotFoundError as exc:
        raise IntegrityError(f"missing {META_FILE} in {root}") from exc
    version = meta.get("format_version")
    if version != FORMAT_VERSION:
        raise VersionError(f"unsupported bundle format_version {version!r}")

    payload = (root / WEIGHTS_FILE).read_bytes()
    checksum = hashlib.sha256(payload).hexdigest()
    if checksum != meta.get("checksum"):
        raise IntegrityError("weights checksum mismatch; bundle is corrupt")

    arrays: dict[str, np.ndarray] = {}
    offset = 0
    for entry in meta["weights_manifest"]:
        shape = tuple(entry["shape"])
        count = int(np.prod(shape)) if shape else 1
        nbytes = count * 4
        if offset + nbytes > len(payload):
            raise IntegrityError("weights file shorter than its manifest")
        arr = np.frombuffer(payload, dtype="<f4", count=count, offset=offset)
        arrays[entry["name"]] = arr.reshape(shape).copy()
        offset += nbytes
    if offset != len(payload):
        raise IntegrityError("weights file longer than its manifest")

    labels = json.loads((root / LABELS_FILE).read_text(encoding="utf-8"))
    featurizer = HashingFeaturizer(FeaturizerConfig.from_dict(meta["featurizer"]))

    head = LinearClassifier(
        labels,
        arrays["weights"],
        arrays["bias"],
        projection=arrays.get("projection"),
    )
    model: LinearClassifier | NerModel
    if meta["task"] == "ner":
        model = NerModel(featurizer, head)
    else:
        model = head

    ood_meta = meta.get("ood") or {}
    threshold = ood_meta.get("threshold")
    factor = ood_meta.get("threshold_factor", 1.0)
    method = meta.get("ood_method", "none")
    detector = None
    if method == "mahalanobis":
        detector = MahalanobisDetector(
            arrays["ood_mean"],
            arrays["ood_precision"],
            threshold=threshold if threshold is not None else float("inf"),
            threshold_factor=factor,
        )
    elif method == "msp":
        detector = MSPDetector(
            head,
            threshold=threshold if threshold is not None else float("inf"),
            threshold_factor=factor,
        )
    elif method == "out_of_scope_class":
        detector = OOSClassDetector(
            head,
            oos_label=meta.get("oos_label", OOS_LABEL),
            threshold=threshold if threshold is not None else float("inf"),
            threshold_factor=factor,
        )

    anchors = None
    anchors_path = root / ANCHORS_FILE
    if anchors_path.exists():
        anchors = json.loads(anchors_path.read_text(encoding="utf-8"))

    return LoadedBundle(
        meta=meta,
        labels=labels,
        featurizer=featurizer,
        model=model,
        detector=detector,
        anchors=anchors,
    )


@dataclass
class Prediction:
    label: str
    flagged: bool = False
    ood_score: float | None = None

    def to_dict(self) -> dict:
        d: dict = {"label": self.label, "flagged": self.flagged}
        if self.ood_score is not None:
            d["ood_score"] = self.ood_score
        return d


class InferenceManager:
    """Batched prediction over a loaded model.

    Inputs are processed in batches of at most max_batch texts. An
    allocation failure halves the batch size and retries; once the batch
    is a single text the failure is surfaced as InferenceError.
    """

    def __init__(
        self,
        featurizer: HashingFeaturizer,
        model: LinearClassifier | NerModel,
        detector=None,
        max_batch: int = MAX_BATCH,
        oos_label: str = OOS_LABEL,
    ):
        if max_batch < 1:
            raise ValueError("max_batch must be >= 1")
        self.featurizer = featurizer
        self.model = model
        self.detector = detector
        self.max_batch = max_batch
        self.oos_label = oos_label

    @classmethod
    def from_bundle(cls, bundle: LoadedBundle, max_batch: int = MAX_BATCH):
        return cls(
            bundle.featurizer,
            bundle.model,
            detector=bundle.detector,
            max_batch=max_batch,
        )

    @property
    def task(self) -> str:
        return "ner" if isinstance(self.model, NerModel) else "classification"

    def _run_batched(self, texts: list[str], fn):
        out = []
        i = 0
        batch = self.max_batch
        while i < len(texts):
            chunk = texts[i : i + batch]
            try:
                out.extend(fn(chunk))
            except MemoryError as exc:
                if batch <= 1:
                    raise InferenceError(
                        "allocation failed even at batch size 1"
                    ) from exc
                batch = max(1, batch // 2)
                continue
            i += len(chunk)
        return out

    def _classify_chunk(self, chunk: list[str]) -> list[Prediction]:
        X = self.featurizer.encode_batch(chunk)
        assert isinstance(self.model, LinearClassifier)
        labels = self.model.predict(X)
        if self.detector is None:
            return [Prediction(label=l) for l in labels]
        scores = self.detector.scores(X)
        flags = scores > self.detector.effective_threshold
        return [
            Prediction(
                label=self.oos_label if flag else label,
                flagged=bool(flag),
                ood_score=float(score),
            )
            for label, flag, score in zip(labels, flags, scores)
        ]

    def predict(self, texts: list[str]) -> list[Prediction]:
        if self.task != "classification":
            raise InferenceError("predict() requires a classification bundle")
        return self._run_batched(texts, self._classify_chunk)

    def predict_entities(self, texts: list[str]):
        if self.task != "ner":
            raise InferenceError("predict_entities() requires a NER bundle")
        assert isinstance(self.model, NerModel)
        return self._run_batched(texts, lambda chunk: self.model.predict(chunk))
