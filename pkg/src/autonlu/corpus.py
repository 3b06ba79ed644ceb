"""Dataset containers, loaders and split utilities.

Two record shapes are supported, both as JSON Lines:

* classification: ``{"text": ..., "label": ...}``
* span NER: ``{"text": ..., "entities": [{"start": ..., "end": ..., "label": ...}]}``

NER data may alternatively be written with inline markup, one sentence per
line, where each entity surface is bracketed as ``[surface](LABEL)``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import (
    EmptyCorpusError,
    MarkupError,
    OverlapError,
    ParseError,
    SingleClassError,
)


@dataclass(frozen=True)
class ClassificationSample:
    text: str
    label: str


@dataclass(frozen=True)
class EntitySpan:
    """Character span [start, end) with an entity type."""

    start: int
    end: int
    label: str

    def overlaps(self, other: "EntitySpan") -> bool:
        return self.start < other.end and other.start < self.end


@dataclass(frozen=True)
class NerSample:
    text: str
    entities: tuple[EntitySpan, ...]


@dataclass
class LabeledCorpus:
    """A classification dataset. Construction does not validate; loaders do."""

    samples: list[ClassificationSample]

    def __len__(self) -> int:
        return len(self.samples)

    def __iter__(self):
        return iter(self.samples)

    @property
    def texts(self) -> list[str]:
        return [s.text for s in self.samples]

    @property
    def labels(self) -> list[str]:
        return [s.label for s in self.samples]

    def class_counts(self) -> dict[str, int]:
        counts: dict[str, int] = {}
        for s in self.samples:
            counts[s.label] = counts.get(s.label, 0) + 1
        return counts

    def classes(self) -> list[str]:
        return sorted(self.class_counts())

    def n_min(self) -> int:
        counts = self.class_counts()
        if not counts:
            return 0
        return min(counts.values())

    def subset(self, indices: Iterable[int]) -> "LabeledCorpus":
        return LabeledCorpus([self.samples[i] for i in indices])


@dataclass
class NerCorpus:
    samples: list[NerSample]

    def __len__(self) -> int:
        return len(self.samples)

    def __iter__(self):
        return iter(self.samples)

    def entity_types(self) -> list[str]:
        types = {e.label for s in self.samples for e in s.entities}
        return sorted(types)

    def subset(self, indices: Iterable[int]) -> "NerCorpus":
        return NerCorpus([self.samples[i] for i in indices])


@dataclass
class SplitPair:
    train: LabeledCorpus | NerCorpus
    test: LabeledCorpus | NerCorpus


def _read_lines(path: str | Path) -> list[str]:
    return Path(path).read_text(encoding="utf-8").splitlines()


def load_classification(path: str | Path) -> LabeledCorpus:
    """Load a classification JSONL file.

    Raises ParseError (with the offending 1-based line number) on malformed
    records, EmptyCorpusError when no records remain, and SingleClassError
    when fewer than two distinct labels appear.
    """
    samples: list[ClassificationSample] = []
    for line_no, raw in enumerate(_read_lines(path), start=1):
        if not raw.strip():
            continue
        try:
            obj = json.loads(raw)
        except json.JSONDecodeError as exc:
            raise ParseError(line_no, f"invalid JSON: {exc.msg}") from exc
        if not isinstance(obj, dict):
            raise ParseError(line_no, "record is not a JSON object")
        text = obj.get("text")
        label = obj.get("label")
        if not isinstance(text, str) or not text.strip():
            raise ParseError(line_no, "missing or empty 'text'")
        if not isinstance(label, str) or not label.strip():
            raise ParseError(line_no, "missing or empty 'label'")
        samples.append(ClassificationSample(text=text, label=label))
    if not samples:
        raise EmptyCorpusError(f"no records in {path}")
    corpus = LabeledCorpus(samples)
    if len(corpus.class_counts()) < 2:
        raise SingleClassError("corpus must contain at least two distinct labels")
    return corpus


def parse_bracket_ner(line: str, line_no: int = 1) -> NerSample:
    """Parse one inline-markup sentence: entities written ``[surface](LABEL)``.

    Returns the plain text (markup stripped) and spans indexed into it.
    """
    plain: list[str] = []
    entities: list[EntitySpan] = []
    i = 0
    pos = 0  # cursor in the plain text
    n = len(line)
    while i < n:
        ch = line[i]
        if ch == "[":
            close = line.find("]", i + 1)
            if close == -1:
                raise MarkupError(f"line {line_no}: unclosed '[' at column {i}")
            surface = line[i + 1 : close]
            if "[" in surface:
                raise MarkupError(f"line {line_no}: nested '[' inside entity surface")
            if close + 1 >= n or line[close + 1] != "(":
                raise MarkupError(
                    f"line {line_no}: expected '(LABEL)' after ']' at column {close}"
                )
            close_paren = line.find(")", close + 2)
            if close_paren == -1:
                raise MarkupError(f"line {line_no}: unclosed '(' at column {close + 1}")
            label = line[close + 2 : close_paren]
            if not surface:
                raise MarkupError(f"line {line_no}: empty entity surface")
            if not label:
                raise MarkupError(f"line {line_no}: empty entity label")
            plain.append(surface)
            entities.append(EntitySpan(start=pos, end=pos + len(surface), label=label))
            pos += len(surface)
            i = close_paren + 1
        elif ch == "]":
            raise MarkupError(f"line {line_no}: unmatched ']' at column {i}")
        else:
            plain.append(ch)
            pos += 1
            i += 1
    return NerSample(text="".join(plain), entities=tuple(entities))


def _validate_spans(text: str, spans: Sequence[EntitySpan], line_no: int) -> None:
    for sp in spans:
        if not (0 <= sp.start < sp.end <= len(text)):
            raise ParseError(
                line_no, f"span [{sp.start}, {sp.end}) out of bounds for text of length {len(text)}"
            )
    ordered = sorted(spans, key=lambda s: (s.start, s.end))
    for a, b in zip(ordered, ordered[1:]):
        if a.overlaps(b):
            raise OverlapError(
                f"line {line_no}: spans [{a.start},{a.end}) and [{b.start},{b.end}) overlap"
            )


def load_ner(path: str | Path, fmt: str = "jsonl") -> NerCorpus:
    """Load a span-annotated NER file. ``fmt`` is 'jsonl' or 'bracket'."""
    samples: list[NerSample] = []
    if fmt == "jsonl":
        for line_no, raw in enumerate(_read_lines(path), start=1):
            if not raw.strip():
                continue
            try:
                obj = json.loads(raw)
            except json.JSONDecodeError as exc:
                raise ParseError(line_no, f"invalid JSON: {exc.msg}") from exc
            if not isinstance(obj, dict):
                raise ParseError(line_no, "record is not a JSON object")
            text = obj.get("text")
            ents = obj.get("entities")
            if not isinstance(text, str) or not text.strip():
                raise ParseError(line_no, "missing or empty 'text'")
            if not isinstance(ents, list):
                raise ParseError(line_no, "missing 'entities' list")
            spans = []
            for e in ents:
                if not isinstance(e, dict):
                    raise ParseError(line_no, "entity is not a JSON object")
                try:
                    start, end, label = int(e["start"]), int(e["end"]), e["label"]
                except (KeyError, TypeError, ValueError) as exc:
                    raise ParseError(line_no, "entity needs integer start/end and a label") from exc
                if not isinstance(label, str) or not label:
                    raise ParseError(line_no, "entity label must be a non-empty string")
                spans.append(EntitySpan(start=start, end=end, label=label))
            _validate_spans(text, spans, line_no)
            samples.append(NerSample(text=text, entities=tuple(sorted(spans, key=lambda s: s.start))))
    elif fmt == "bracket":
        for line_no, raw in enumerate(_read_lines(path), start=1):
            if not raw.strip():
                continue
            sample = parse_bracket_ner(raw, line_no)
            _validate_spans(sample.text, sample.entities, line_no)
            samples.append(sample)
    else:
        raise ValueError(f"unknown NER format {fmt!r}")
    if not samples:
        raise EmptyCorpusError(f"no records in {path}")
    corpus = NerCorpus(samples)
    if not corpus.entity_types():
        raise EmptyCorpusError("NER corpus contains no entity annotations")
    return corpus


def tokenize_with_offsets(text: str) -> list[tuple[str, int, int]]:
    """Whitespace tokenization. Returns (token, start, end) triples."""
    tokens: list[tuple[str, int, int]] = []
    i = 0
    n = len(text)
    while i < n:
        if text[i].isspace():
            i += 1
            continue
        j = i
        while j < n and not text[j].isspace():
            j += 1
        tokens.append((text[i:j], i, j))
        i = j
    return tokens


def to_bio(sample: NerSample) -> tuple[list[str], list[str], list[tuple[int, int]]]:
    """Convert a span-annotated sample to token-level BIO tags.

    A token is claimed by a span when their character ranges overlap at all.
    Returns (tokens, tags, offsets).
    """
    triples = tokenize_with_offsets(sample.text)
    tokens = [t[0] for t in triples]
    offsets = [(t[1], t[2]) for t in triples]
    tags = ["O"] * len(tokens)
    for span in sorted(sample.entities, key=lambda s: s.start):
        inside = [
            k for k, (s, e) in enumerate(offsets) if s < span.end and span.start < e
        ]
        for rank, k in enumerate(inside):
            tags[k] = ("B-" if rank == 0 else "I-") + span.label
    return tokens, tags, offsets


def bio_to_spans(tags: Sequence[str], offsets: Sequence[tuple[int, int]]) -> list[EntitySpan]:
    """Decode BIO tags back to character spans.

    An I-X with no preceding B-X/I-X of the same type is repaired to B-X.
    """
    spans: list[EntitySpan] = []
    cur_label: str | None = None
    cur_start = 0
    cur_end = 0

    def flush():
        nonlocal cur_label
        if cur_label is not None:
            spans.append(EntitySpan(start=cur_start, end=cur_end, label=cur_label))
            cur_label = None

    for tag, (s, e) in zip(tags, offsets):
        if tag == "O":
            flush()
            continue
        prefix, _, label = tag.partition("-")
        if prefix == "B" or cur_label != label:
            flush()
            cur_label = label
            cur_start = s
        cur_end = e
    flush()
    return spans


def _round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def stratified_split(
    corpus: LabeledCorpus | NerCorpus, test_fraction: float, seed: int
) -> SplitPair:
    """Deterministic stratified train/test split.

    Classification corpora stratify by label; each class contributes
    round-half-up(n * test_fraction) test samples, clamped to [1, n - 1],
    so every class appears on both sides. NER corpora stratify by the set
    of entity types present in a sentence; groups with a single member go
    to train.
    """
    if not 0.0 < test_fraction < 1.0:
        raise ValueError("test_fraction must be in (0, 1)")
    rng = np.random.default_rng(seed)

    if isinstance(corpus, LabeledCorpus):
        by_group: dict[str, list[int]] = {}
        for idx, s in enumerate(corpus.samples):
            by_group.setdefault(s.label, []).append(idx)
        singleton_to_train = False
    else:
        by_group = {}
        for idx, s in enumerate(corpus.samples):
            key = "|".join(sorted({e.label for e in s.entities})) or "<none>"
            by_group.setdefault(key, []).append(idx)
        singleton_to_train = True

    train_idx: list[int] = []
    test_idx: list[int] = []
    for key in sorted(by_group):
        members = np.array(by_group[key])
        n = len(members)
        if n < 2:
            if singleton_to_train:
                train_idx.extend(members.tolist())
                continue
            raise SingleClassError(
                f"class {key!r} has a single example; cannot split"
            )
        k = _round_half_up(n * test_fraction)
        k = max(1, min(n - 1, k))
        perm = rng.permutation(n)
        shuffled = members[perm]
        test_idx.extend(shuffled[:k].tolist())
        train_idx.extend(shuffled[k:].tolist())

    train_idx.sort()
    test_idx.sort()
    return SplitPair(train=corpus.subset(train_idx), test=corpus.subset(test_idx))
