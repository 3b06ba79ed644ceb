"""LLM-backed utterance generation for augmentation and synthetic test sets.

Transports speak the plain chat-completions wire format (model, messages,
temperature); the extra `hint` argument is a local side channel so the
deterministic mock can fabricate relevant output without anything
non-standard entering the HTTP payload.

Generated items must arrive as a JSON array of {"text": ..., "label": ...}
objects. Validation is strict: unknown labels, empty texts, duplicates of
the seed corpus and within-batch duplicates are all dropped and counted.
Falling short after the retry rounds emits ShortfallWarning and is recorded
in the result metadata rather than raised.
"""

from __future__ import annotations

import hashlib
import json
import os
import time
import warnings
from dataclasses import dataclass, field
from typing import Protocol

import numpy as np
import requests

from .augment import derive_seed
from .corpus import ClassificationSample, LabeledCorpus
from .errors import ShortfallWarning, TransportError

DEFAULT_TEMPERATURE = 0.7
ENV_BASE_URL = "AUTONLU_LLM_BASE_URL"
ENV_API_KEY = "AUTONLU_LLM_API_KEY"
ENV_MODEL = "AUTONLU_LLM_MODEL"


class Transport(Protocol):
    def complete(
        self, messages: list[dict], *, temperature: float, hint: dict | None = None
    ) -> str: ...


class HttpTransport:
    """Chat-completions client. Credentials come from arguments or the
    AUTONLU_LLM_* environment variables; the API key is never echoed into
    logs or exceptions."""

    def __init__(
        self,
        base_url: str | None = None,
        api_key: str | None = None,
        model: str | None = None,
        timeout: float = 30.0,
        max_retries: int = 2,
        backoff: float = 0.5,
    ):
        self.base_url = base_url or os.environ.get(ENV_BASE_URL)
        self.api_key = api_key or os.environ.get(ENV_API_KEY)
        self.model = model or os.environ.get(ENV_MODEL)
        if not self.base_url:
            raise TransportError(f"no base URL; set {ENV_BASE_URL} or pass base_url")
        if not self.model:
            raise TransportError(f"no model name; set {ENV_MODEL} or pass model")
        self.timeout = timeout
        self.max_retries = max_retries
        self.backoff = backoff

    def complete(
        self, messages: list[dict], *, temperature: float, hint: dict | None = None
    ) -> str:
        del hint  # local-only; never sent over the wire
        url = self.base_url.rstrip("/") + "/chat/completions"
        payload = {
            "model": self.model,
            "messages": messages,
            "temperature": temperature,
        }
        headers = {"Content-Type": "application/json"}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"

        attempts = self.max_retries + 1
        last_error = "unknown error"
        for attempt in range(attempts):
            if attempt > 0:
                time.sleep(self.backoff * (2 ** (attempt - 1)))
            try:
                resp = requests.post(
                    url, json=payload, headers=headers, timeout=self.timeout
                )
            except requests.RequestException as exc:
                last_error = type(exc).__name__
                continue
            if resp.status_code == 429 or resp.status_code >= 500:
                last_error = f"HTTP {resp.status_code}"
                continue
            if resp.status_code != 200:
                raise TransportError(f"request failed with HTTP {resp.status_code}")
            try:
                return resp.json()["choices"][0]["message"]["content"]
            except (ValueError, KeyError, IndexError, TypeError) as exc:
                raise TransportError("malformed completion response") from exc
        raise TransportError(f"gave up after {attempts} attempts ({last_error})")


class MockTransport:
    """Deterministic offline stand-in; reads the hint instead of a prompt."""

    def __init__(self, seed: int = 0, shortfall: int = 0, invalid: int = 0):
        self.seed = seed
        self.shortfall = shortfall
        self.invalid = invalid
        self.calls: list[dict] = []

    _WORDS = (
        "please", "today", "quickly", "again", "now", "for me",
        "right away", "as soon as possible", "when you can", "thanks",
    )

    def complete(
        self, messages: list[dict], *, temperature: float, hint: dict | None = None
    ) -> str:
        self.calls.append({"messages": messages, "temperature": temperature, "hint": hint})
        hint = hint or {}
        if hint.get("kind") == "analyze":
            labels = hint.get("labels", [])
            return f"Short user requests spanning {len(labels)} intents: " + ", ".join(labels)

        needs: dict[str, int] = dict(hint.get("needs", {}))
        round_no = int(hint.get("round", 0))
        items = []
        emitted = 0
        budget = sum(needs.values()) - self.shortfall
        for label in sorted(needs):
            for k in range(needs[label]):
                if emitted >= budget:
                    break
                rng = np.random.default_rng(
                    derive_seed(self.seed, "mockgen", label, round_no, k)
                )
                tail = self._WORDS[int(rng.integers(len(self._WORDS)))]
                text = f"{label.replace('_', ' ')} request variant {round_no}-{k} {tail}"
                if emitted < self.invalid:
                    items.append({"text": text})  # missing label on purpose
                else:
                    items.append({"text": text, "label": label})
                emitted += 1
        return json.dumps(items)


@dataclass
class GeneratedSet:
    samples: list[ClassificationSample]
    requested: int
    produced: int
    shortfall: int
    rejected: dict[str, int] = field(default_factory=dict)
    domain_analysis: str | None = None

    def to_corpus(self) -> LabeledCorpus:
        return LabeledCorpus(list(self.samples))

    def to_dict(self) -> dict:
        return {
            "requested": self.requested,
            "produced": self.produced,
            "shortfall": self.shortfall,
            "rejected": self.rejected,
            "domain_analysis": self.domain_analysis,
        }


_SYSTEM_PROMPT = (
    "You write training utterances for an intent classifier. "
    "Reply with a JSON array only; each element is an object with "
    '"text" and "label" keys. No commentary.'
)


class LLMGenerator:
    """Drives a transport to produce labeled utterances for a corpus."""

    def __init__(
        self,
        transport: Transport,
        temperature: float = DEFAULT_TEMPERATURE,
        max_rounds: int = 3,
    ):
        self.transport = transport
        self.temperature = temperature
        self.max_rounds = max_rounds
        self._analysis_cache: dict[str, str] = {}

    def _corpus_key(self, corpus: LabeledCorpus) -> str:
        h = hashlib.sha256()
        for s in sorted(corpus.samples, key=lambda s: (s.label, s.text)):
            h.update(s.label.encode("utf-8"))
            h.update(b"\x00")
            h.update(s.text.encode("utf-8"))
            h.update(b"\x01")
        return h.hexdigest()

    def analyze_domain(self, corpus: LabeledCorpus) -> str:
        """One-paragraph domain summary, cached per corpus content."""
        key = self._corpus_key(corpus)
        if key not in self._analysis_cache:
            labels = corpus.classes()
            examples = []
            for label in labels:
                text = next(s.text for s in corpus.samples if s.label == label)
                examples.append(f"{label}: {text}")
            messages = [
                {
                    "role": "user",
                    "content": (
                        "Summarize the domain of this intent dataset in one "
                        "paragraph. Labels with one example each:\n"
                        + "\n".join(examples)
                    ),
                }
            ]
            self._analysis_cache[key] = self.transport.complete(
                messages,
                temperature=self.temperature,
                hint={"kind": "analyze", "labels": labels},
            )
        return self._analysis_cache[key]

    def generate(
        self,
        corpus: LabeledCorpus,
        n_per_class: int,
        purpose: str = "test",
    ) -> GeneratedSet:
        """Request n_per_class new utterances for every label.

        Invariants on the result: every label occurs in the seed corpus, and
        no generated text exactly duplicates a seed text or another
        generated text.
        """
        labels = corpus.classes()
        seed_texts = set(corpus.texts)
        analysis = self.analyze_domain(corpus)

        requested = n_per_class * len(labels)
        needs = {label: n_per_class for label in labels}
        rejected: dict[str, int] = {}
        accepted: list[ClassificationSample] = []
        seen_texts: set[str] = set()

        def reject(reason: str) -> None:
            rejected[reason] = rejected.get(reason, 0) + 1

        for round_no in range(self.max_rounds):
            pending = {label: k for label, k in needs.items() if k > 0}
            if not pending:
                break
            ask = "\n".join(f"- {label}: {k} items" for label, k in sorted(pending.items()))
            messages = [
                {"role": "system", "content": _SYSTEM_PROMPT},
                {
                    "role": "user",
                    "content": (
                        f"Domain: {analysis}\n\n"
                        f"Purpose: {'held-out test' if purpose == 'test' else 'training augmentation'} "
                        "utterances.\n"
                        f"Produce new utterances per label:\n{ask}\n"
                        "Do not repeat existing dataset sentences."
                    ),
                },
            ]
            raw = self.transport.complete(
                messages,
                temperature=self.temperature,
                hint={"kind": "generate", "needs": pending, "round": round_no},
            )
            try:
                items = json.loads(raw)
            except json.JSONDecodeError:
                reject("unparseable_response")
                continue
            if not isinstance(items, list):
                reject("not_an_array")
                continue
            for item in items:
                if not isinstance(item, dict):
                    reject("not_an_object")
                    continue
                text = item.get("text")
                label = item.get("label")
                if not isinstance(text, str) or not text.strip():
                    reject("bad_text")
                    continue
                if not isinstance(label, str) or label not in needs:
                    reject("unknown_label")
                    continue
                if text in seed_texts:
                    reject("duplicate_of_seed")
                    continue
                if text in seen_texts:
                    reject("duplicate_generated")
                    continue
                if needs[label] <= 0:
                    reject("label_quota_met")
                    continue
                seen_texts.add(text)
                needs[label] -= 1
                accepted.append(ClassificationSample(text=text, label=label))

        produced = len(accepted)
        shortfall = requested - produced
        if shortfall > 0:
            warnings.warn(
                f"generated {produced} of {requested} requested items",
                ShortfallWarning,
                stacklevel=2,
            )
        return GeneratedSet(
            samples=accepted,
            requested=requested,
            produced=produced,
            shortfall=shortfall,
            rejected=rejected,
            domain_analysis=analysis,
        )
