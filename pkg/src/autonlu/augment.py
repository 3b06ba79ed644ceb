"""Seeded text perturbation and gibberish synthesis.

Perturbation is deterministic per (seed, variant index, source text), so
regenerating a corpus never depends on iteration order. Every variant stays
within the requested edit budget of its source: a single variant only ever
draws operations from one family (character edits or word edits), so the
budget is checkable with the matching edit distance.
"""

from __future__ import annotations

import hashlib
import string

import numpy as np

from .corpus import ClassificationSample, LabeledCorpus

CHAR_ALPHABET = string.ascii_lowercase + string.digits + " "


def derive_seed(*parts) -> int:
    """Stable integer seed from the string forms of parts.

    Built on sha256, not the builtin hash, which is salted per process.
    """
    key = ":".join(str(p) for p in parts)
    return int.from_bytes(hashlib.sha256(key.encode("utf-8")).digest(), "big")


def _char_edit(chars: list[str], rng: np.random.Generator, alphabet: str) -> None:
    n = len(chars)
    if n == 0:
        chars.append(alphabet[int(rng.integers(len(alphabet)))])
        return
    ops = ["substitute", "insert"]
    if n >= 2:
        ops.append("delete")
        if any(a != b for a, b in zip(chars, chars[1:])):
            ops.append("swap")
    op = ops[int(rng.integers(len(ops)))]
    if op == "substitute":
        i = int(rng.integers(n))
        choices = [c for c in alphabet if c != chars[i]]
        chars[i] = choices[int(rng.integers(len(choices)))]
    elif op == "insert":
        i = int(rng.integers(n + 1))
        chars.insert(i, alphabet[int(rng.integers(len(alphabet)))])
    elif op == "delete":
        del chars[int(rng.integers(n))]
    else:
        idxs = [i for i in range(n - 1) if chars[i] != chars[i + 1]]
        i = idxs[int(rng.integers(len(idxs)))]
        chars[i], chars[i + 1] = chars[i + 1], chars[i]


def _word_edit(words: list[str], rng: np.random.Generator) -> None:
    n = len(words)
    if n == 0:
        return
    ops = ["duplicate"]
    if n >= 2:
        ops.append("drop")
        if any(a != b for a, b in zip(words, words[1:])):
            ops.append("swap")
    op = ops[int(rng.integers(len(ops)))]
    if op == "duplicate":
        i = int(rng.integers(n))
        words.insert(i, words[i])
    elif op == "drop":
        del words[int(rng.integers(n))]
    else:
        idxs = [i for i in range(n - 1) if words[i] != words[i + 1]]
        i = idxs[int(rng.integers(len(idxs)))]
        words[i], words[i + 1] = words[i + 1], words[i]


def _one_variant(
    text: str, rng: np.random.Generator, max_edits: int, alphabet: str
) -> str:
    for _ in range(8):
        n_edits = int(rng.integers(1, max_edits + 1))
        use_words = len(text.split()) >= 1 and rng.random() < 0.5
        if use_words:
            words = text.split()
            for _ in range(n_edits):
                _word_edit(words, rng)
            candidate = " ".join(words)
        else:
            chars = list(text)
            for _ in range(n_edits):
                _char_edit(chars, rng, alphabet)
            candidate = "".join(chars)
        if candidate != text:
            return candidate
    # edits cancelled out repeatedly; force one substitution
    chars = list(text)
    _char_edit(chars, rng, alphabet if text else alphabet)
    if "".join(chars) == text and chars:
        i = int(rng.integers(len(chars)))
        choices = [c for c in alphabet if c != chars[i]]
        chars[i] = choices[int(rng.integers(len(choices)))]
    return "".join(chars)


def perturb(
    text: str,
    n_variants: int = 1,
    max_edits: int = 2,
    seed: int = 0,
    alphabet: str = CHAR_ALPHABET,
) -> list[str]:
    """Produce n_variants perturbed copies of text.

    Each variant differs from the source and lies within max_edits edit
    operations of it (character-level or word-level, never mixed within one
    variant).
    """
    if max_edits < 1:
        raise ValueError("max_edits must be >= 1")
    out = []
    for k in range(n_variants):
        rng = np.random.default_rng(derive_seed(seed, k, text))
        out.append(_one_variant(text, rng, max_edits, alphabet))
    return out


def make_gibberish(
    n: int = 1000,
    seed: int = 0,
    min_words: int = 1,
    max_words: int = 8,
    min_word_len: int = 2,
    max_word_len: int = 10,
) -> list[str]:
    """Random letter strings used as stand-in out-of-distribution probes.

    Prefix-stable: the first k strings do not depend on n.
    """
    rng = np.random.default_rng(derive_seed(seed, "gibberish"))
    letters = string.ascii_lowercase
    out = []
    for _ in range(n):
        n_words = int(rng.integers(min_words, max_words + 1))
        words = []
        for _ in range(n_words):
            length = int(rng.integers(min_word_len, max_word_len + 1))
            idx = rng.integers(0, len(letters), size=length)
            words.append("".join(letters[int(i)] for i in idx))
        out.append(" ".join(words))
    return out


def augment_labeled(
    corpus: LabeledCorpus, n_per_sample: int, max_edits: int = 2, seed: int = 0
) -> LabeledCorpus:
    """Perturbed copies of every sample, labels carried over. Originals are
    not included in the result."""
    samples = []
    for s in corpus.samples:
        for variant in perturb(s.text, n_per_sample, max_edits=max_edits, seed=seed):
            samples.append(ClassificationSample(text=variant, label=s.label))
    return LabeledCorpus(samples)
