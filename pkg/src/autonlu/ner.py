"""Token-level entity recognition.

Sentences are whitespace-tokenized, spans become BIO tags (any character
overlap claims the token), and a softmax head scores each token from hashed
lexical features: the token itself, a two-word context window on each side,
and prefixes/suffixes up to length three. Decoding is greedy per token;
orphan I-X tags are repaired to B-X while rebuilding spans.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .corpus import EntitySpan, NerCorpus, bio_to_spans, stratified_split, to_bio, tokenize_with_offsets
from .embed import HashingFeaturizer
from .linear import LinearClassifier, TrainConfig, TrainResult, train_softmax

CONTEXT_WINDOW = 2
AFFIX_MAX = 3
PAD = "<pad>"


def token_features(tokens: list[str], i: int) -> list[str]:
    feats = [f"w0={tokens[i]}"]
    for off in range(-CONTEXT_WINDOW, CONTEXT_WINDOW + 1):
        if off == 0:
            continue
        j = i + off
        word = tokens[j] if 0 <= j < len(tokens) else PAD
        feats.append(f"w{off:+d}={word}")
    word = tokens[i]
    for length in range(1, AFFIX_MAX + 1):
        if len(word) >= length:
            feats.append(f"pre{length}={word[:length]}")
            feats.append(f"suf{length}={word[-length:]}")
    return feats


def _encode_tokens(featurizer: HashingFeaturizer, tokens: list[str]) -> np.ndarray:
    out = np.empty((len(tokens), featurizer.dim), dtype=np.float32)
    for i in range(len(tokens)):
        out[i] = featurizer.encode_features(token_features(tokens, i))
    return out


class NerModel:
    """BIO tagger: linear head over hashed token features."""

    def __init__(self, featurizer: HashingFeaturizer, head: LinearClassifier):
        self.featurizer = featurizer
        self.head = head

    @property
    def tags(self) -> list[str]:
        return self.head.classes

    def predict_sample(self, text: str) -> list[EntitySpan]:
        triples = tokenize_with_offsets(text)
        if not triples:
            return []
        tokens = [t[0] for t in triples]
        offsets = [(t[1], t[2]) for t in triples]
        X = _encode_tokens(self.featurizer, tokens)
        idx = np.argmax(self.head.logits(X), axis=1)
        tags = [self.head.classes[i] for i in idx]
        return bio_to_spans(tags, offsets)

    def predict(self, texts: list[str]) -> list[list[EntitySpan]]:
        return [self.predict_sample(t) for t in texts]


@dataclass
class NerTrainOutput:
    model: NerModel
    train_result: TrainResult


def train_ner(
    corpus: NerCorpus,
    featurizer: HashingFeaturizer,
    config: TrainConfig | None = None,
    seed: int = 0,
) -> NerTrainOutput:
    """Fit the token tagger with a held-out sentence split for early stopping."""
    config = config or TrainConfig(seed=seed)
    split = stratified_split(corpus, 0.1, seed)

    def build(part: NerCorpus):
        feats: list[np.ndarray] = []
        tags: list[str] = []
        for sample in part.samples:
            tokens, bio, _ = to_bio(sample)
            if not tokens:
                continue
            feats.append(_encode_tokens(featurizer, tokens))
            tags.extend(bio)
        X = np.concatenate(feats) if feats else np.zeros((0, featurizer.dim), np.float32)
        return X, tags

    X_tr, tags_tr = build(split.train)
    X_val, tags_val = build(split.test)

    classes = sorted(set(tags_tr) | set(tags_val) | {"O"})
    index = {t: i for i, t in enumerate(classes)}
    y_tr = np.array([index[t] for t in tags_tr], dtype=np.int64)
    y_val = np.array([index[t] for t in tags_val], dtype=np.int64)

    W, b, result, _ = train_softmax(
        X_tr.astype(np.float64),
        y_tr,
        len(classes),
        config,
        X_val.astype(np.float64),
        y_val,
    )
    model = NerModel(featurizer, LinearClassifier(classes, W, b))
    return NerTrainOutput(model=model, train_result=result)
