"""Deterministic text vectors from signed character n-gram hashing.

The hot loop lives in a compiled kernel (autonlu._hashing_c) when the
extension built; otherwise the pure-Python reference kernel is used. Both
produce bit-identical signed counts, and the count -> float pipeline here is
shared, so vectors never depend on which kernel ran.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _hashing_py

try:
    from . import _hashing_c

    _DEFAULT_KERNEL = _hashing_c
    KERNEL_NAME = "compiled"
except ImportError:  # extension not built on this install
    _DEFAULT_KERNEL = _hashing_py
    KERNEL_NAME = "python"


def available_kernels() -> list[str]:
    names = ["python"]
    if _DEFAULT_KERNEL is not _hashing_py:
        names.insert(0, "compiled")
    return names


def get_kernel(name: str):
    if name == "python":
        return _hashing_py
    if name == "compiled":
        if _DEFAULT_KERNEL is _hashing_py:
            raise ImportError("compiled hashing kernel is not available")
        return _DEFAULT_KERNEL
    raise ValueError(f"unknown kernel {name!r}")


@dataclass(frozen=True)
class FeaturizerConfig:
    dim: int = 512
    ngram_lo: int = 2
    ngram_hi: int = 4
    hash_seed: int = 13
    normalize: bool = True

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError("dim must be positive")
        if self.ngram_lo < 1:
            raise ValueError("ngram_lo must be >= 1")
        if self.ngram_hi < self.ngram_lo:
            raise ValueError("ngram_hi must be >= ngram_lo")

    def to_dict(self) -> dict:
        return {
            "dim": self.dim,
            "ngram_lo": self.ngram_lo,
            "ngram_hi": self.ngram_hi,
            "hash_seed": self.hash_seed,
            "normalize": self.normalize,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "FeaturizerConfig":
        return cls(
            dim=int(d["dim"]),
            ngram_lo=int(d["ngram_lo"]),
            ngram_hi=int(d["ngram_hi"]),
            hash_seed=int(d["hash_seed"]),
            normalize=bool(d["normalize"]),
        )


class HashingFeaturizer:
    """Maps text to a fixed-size float32 vector. Stateless and seeded."""

    def __init__(self, config: FeaturizerConfig | None = None, kernel: str | None = None):
        self.config = config or FeaturizerConfig()
        self._kernel = get_kernel(kernel) if kernel else _DEFAULT_KERNEL

    @property
    def dim(self) -> int:
        return self.config.dim

    @property
    def kernel_name(self) -> str:
        return "python" if self._kernel is _hashing_py else "compiled"

    def _finish(self, counts: np.ndarray) -> np.ndarray:
        vec = counts.astype(np.float64)
        if self.config.normalize:
            norm = float(np.linalg.norm(vec))
            if norm > 0.0:
                vec /= norm
        return vec.astype(np.float32)

    def encode(self, text: str) -> np.ndarray:
        cfg = self.config
        counts = np.zeros(cfg.dim, dtype=np.int64)
        self._kernel.hash_counts(
            text, cfg.dim, cfg.ngram_lo, cfg.ngram_hi, cfg.hash_seed, counts
        )
        return self._finish(counts)

    def encode_batch(self, texts: list[str]) -> np.ndarray:
        out = np.empty((len(texts), self.config.dim), dtype=np.float32)
        for i, text in enumerate(texts):
            out[i] = self.encode(text)
        return out

    def encode_features(self, features: list[str]) -> np.ndarray:
        """Hash each feature string whole (no n-gramming) into one vector."""
        cfg = self.config
        counts = np.zeros(cfg.dim, dtype=np.int64)
        for feat in features:
            self._kernel.hash_whole(feat, cfg.dim, cfg.hash_seed, counts)
        return self._finish(counts)
