"""Synthetic corpora for demos, tests and benchmark runs.

Template-based and fully seeded: the same arguments always produce the same
corpus. The intent corpus covers seven assistant-style classes; the far
corpus is a disjoint domain used as a stand-in for cross-dataset probes.
"""

from __future__ import annotations

import numpy as np

from .augment import derive_seed
from .corpus import (
    ClassificationSample,
    EntitySpan,
    LabeledCorpus,
    NerCorpus,
    NerSample,
)

_INTENTS: dict[str, tuple[list[str], dict[str, list[str]]]] = {
    "play_music": (
        [
            "play {artist} songs",
            "put on some {genre}",
            "start my {genre} playlist",
            "play the new {artist} album",
            "queue up {genre} music",
            "i want to hear {artist}",
            "shuffle {genre} tracks",
        ],
        {
            "artist": [
                "the headlamps", "rosa linden", "dj meridian", "the fog banks",
                "carla voss", "midnight parade", "ivory tides", "ben okafor",
                "the paper suns", "lena march", "quiet engines", "the violet keys",
            ],
            "genre": [
                "jazz", "indie rock", "lofi", "classical", "synthwave",
                "blues", "folk", "ambient", "hip hop", "bossa nova",
            ],
        },
    ),
    "set_alarm": (
        [
            "wake me up at {time}",
            "set an alarm for {time}",
            "i need an alarm at {time} {day}",
            "alarm at {time} please",
            "can you set a {time} alarm",
            "schedule a wake up call for {time}",
        ],
        {
            "time": [
                "5 am", "6 am", "6:30", "7 am", "7:45", "8 o'clock",
                "9 in the morning", "noon", "quarter past six", "5:15",
            ],
            "day": [
                "tomorrow", "on monday", "on tuesday", "on friday",
                "this weekend", "every weekday",
            ],
        },
    ),
    "weather_query": (
        [
            "what's the weather in {city}",
            "will it rain in {city} {day}",
            "do i need an umbrella in {city}",
            "how cold is it in {city} right now",
            "forecast for {city} {day}",
            "is it snowing in {city}",
        ],
        {
            "city": [
                "oslo", "lisbon", "denver", "taipei", "nairobi", "prague",
                "adelaide", "quito", "porto", "hanoi", "leeds", "tucson",
            ],
            "day": [
                "today", "tomorrow", "on thursday", "this weekend",
                "next week", "tonight",
            ],
        },
    ),
    "book_restaurant": (
        [
            "book a table for {n} at {restaurant}",
            "reserve {restaurant} for {n} people",
            "get me a reservation at {restaurant}",
            "table for {n} tonight at {restaurant}",
            "can you book {restaurant} for dinner",
            "i want to eat at {restaurant} {day}",
        ],
        {
            "restaurant": [
                "luigi's", "the copper pot", "sakura garden", "casa verde",
                "old mill tavern", "harbor lights", "spice route", "el nido",
                "the brass onion", "fig and vine",
            ],
            "n": ["two", "three", "four", "five", "six", "eight"],
            "day": ["tonight", "tomorrow", "on saturday", "next friday"],
        },
    ),
    "send_message": (
        [
            "text {name} that {msg}",
            "send a message to {name}",
            "tell {name} {msg}",
            "message {name} saying {msg}",
            "let {name} know {msg}",
            "shoot {name} a text",
        ],
        {
            "name": [
                "maria", "devon", "aunt priya", "coach miller", "sam", "yuki",
                "grandpa", "noor", "tobias", "mrs alvarez",
            ],
            "msg": [
                "i'm running late", "dinner is at seven", "the game moved",
                "i found the keys", "we're out of milk", "the meeting shifted",
            ],
        },
    ),
    "check_balance": (
        [
            "how much money is in my {account} account",
            "check my {account} balance",
            "what's my balance on the {account} card",
            "show me the {account} account balance",
            "did my {account} account get the deposit",
            "balance for {account} please",
        ],
        {
            "account": [
                "checking", "savings", "credit", "joint", "business",
                "travel", "student", "retirement",
            ],
        },
    ),
    "turn_on_lights": (
        [
            "turn on the {room} lights",
            "lights on in the {room}",
            "switch the {room} lamp on",
            "make the {room} brighter",
            "can you dim the {room} lights",
            "turn off the lights in the {room}",
        ],
        {
            "room": [
                "kitchen", "bedroom", "living room", "hallway", "garage",
                "office", "bathroom", "porch", "attic", "basement",
            ],
        },
    ),
}

_FAR_CLASSES: dict[str, tuple[list[str], dict[str, list[str]]]] = {
    "recipe_search": (
        [
            "find a recipe for {dish}",
            "how do i cook {dish}",
            "show me a quick {dish} recipe",
            "ingredients for {dish}",
        ],
        {
            "dish": [
                "ratatouille", "pad thai", "shakshuka", "goulash", "paella",
                "miso soup", "empanadas", "falafel", "risotto", "borscht",
            ],
        },
    ),
    "sports_scores": (
        [
            "who won the {team} game",
            "score of the {team} match",
            "did the {team} win yesterday",
            "latest {team} result",
        ],
        {
            "team": [
                "rovers", "falcons", "mariners", "wolves", "comets",
                "harriers", "pioneers", "stallions",
            ],
        },
    ),
    "stock_quote": (
        [
            "stock price of {ticker}",
            "how is {ticker} trading",
            "quote for {ticker} shares",
            "did {ticker} go up today",
        ],
        {
            "ticker": [
                "acme corp", "globex", "initech", "umbrella", "hooli",
                "vandelay", "wonka industries", "stark labs",
            ],
        },
    ),
    "movie_showtimes": (
        [
            "showtimes for {movie}",
            "when is {movie} playing",
            "tickets for {movie} tonight",
            "is {movie} still in theaters",
        ],
        {
            "movie": [
                "the long harvest", "paper lanterns", "iron orchard",
                "the seventh tide", "glass hours", "river of sparks",
            ],
        },
    ),
    "flight_status": (
        [
            "status of flight {flight}",
            "is flight {flight} delayed",
            "when does flight {flight} land",
            "gate for flight {flight}",
        ],
        {
            "flight": [
                "ba 117", "qf 22", "ua 480", "lh 903", "nz 5",
                "ek 412", "ac 33", "jl 61",
            ],
        },
    ),
}


def _fill(
    templates: list[str],
    slots: dict[str, list[str]],
    rng: np.random.Generator,
) -> str:
    template = templates[int(rng.integers(len(templates)))]
    text = template
    for slot, values in slots.items():
        if "{" + slot + "}" in text:
            text = text.replace("{" + slot + "}", values[int(rng.integers(len(values)))])
    return text


def _make_classification(
    spec: dict[str, tuple[list[str], dict[str, list[str]]]],
    n_per_class: int | dict[str, int],
    seed: int,
    tag: str,
) -> LabeledCorpus:
    if isinstance(n_per_class, dict):
        unknown = set(n_per_class) - set(spec)
        if unknown:
            raise ValueError(f"unknown classes: {sorted(unknown)}")
        counts = dict(n_per_class)
    else:
        counts = {label: n_per_class for label in spec}

    samples: list[ClassificationSample] = []
    for label in sorted(counts):
        templates, slots = spec[label]
        rng = np.random.default_rng(derive_seed(seed, tag, label))
        seen: set[str] = set()
        while len(seen) < counts[label]:
            text = _fill(templates, slots, rng)
            attempts = 0
            while text in seen and attempts < 40:
                text = _fill(templates, slots, rng)
                attempts += 1
            if text in seen:
                text = f"{text} ({len(seen)})"
            seen.add(text)
            samples.append(ClassificationSample(text=text, label=label))
    return LabeledCorpus(samples)


def make_intent_corpus(
    n_per_class: int | dict[str, int] = 100, seed: int = 0
) -> LabeledCorpus:
    """Seven-intent assistant corpus. n_per_class may be a per-label dict."""
    return _make_classification(_INTENTS, n_per_class, seed, "intent")


def intent_classes() -> list[str]:
    return sorted(_INTENTS)


def intent_scenarios() -> dict[str, str]:
    """Macro-category per intent, for protocols that group related classes."""
    return {
        "play_music": "media",
        "set_alarm": "assistant",
        "send_message": "assistant",
        "weather_query": "info",
        "book_restaurant": "booking",
        "check_balance": "finance",
        "turn_on_lights": "home",
    }


def make_far_corpus(
    n_per_class: int | dict[str, int] = 100, seed: int = 0
) -> LabeledCorpus:
    """Five-class corpus from an unrelated domain, for cross-domain probes."""
    return _make_classification(_FAR_CLASSES, n_per_class, seed, "far")


_NER_TEMPLATES: list[list[tuple[str, str | None]]] = [
    [("meet ", None), ("{person}", "PERSON"), (" in ", None), ("{city}", "CITY"),
     (" on ", None), ("{date}", "DATE")],
    [("remind me to call ", None), ("{person}", "PERSON"), (" ", None),
     ("{date}", "DATE")],
    [("book a flight to ", None), ("{city}", "CITY"), (" for ", None),
     ("{date}", "DATE")],
    [("is ", None), ("{person}", "PERSON"), (" still in ", None),
     ("{city}", "CITY")],
    [("schedule lunch with ", None), ("{person}", "PERSON"), (" at ", None),
     ("{city}", "CITY"), (" station ", None), ("{date}", "DATE")],
    [("the train to ", None), ("{city}", "CITY"), (" leaves ", None),
     ("{date}", "DATE")],
]

_NER_SLOTS: dict[str, list[str]] = {
    "person": [
        "maria", "devon", "priya", "tobias", "yuki", "noor", "samuel",
        "ingrid", "carlos", "amara",
    ],
    "city": [
        "oslo", "lisbon", "denver", "taipei", "nairobi", "prague", "quito",
        "porto", "hanoi", "leeds",
    ],
    "date": [
        "tomorrow", "on monday", "next friday", "tonight", "this weekend",
        "on the third", "next week",
    ],
}


def make_ner_corpus(n: int = 200, seed: int = 0) -> NerCorpus:
    """Person/city/date sentences with character-offset annotations."""
    rng = np.random.default_rng(derive_seed(seed, "ner"))
    samples: list[NerSample] = []
    seen: set[str] = set()
    while len(samples) < n:
        template = _NER_TEMPLATES[int(rng.integers(len(_NER_TEMPLATES)))]
        parts: list[str] = []
        spans: list[EntitySpan] = []
        pos = 0
        for piece, ent_type in template:
            if ent_type is None:
                parts.append(piece)
                pos += len(piece)
            else:
                slot = piece.strip("{}").lower()
                value = _NER_SLOTS[slot][int(rng.integers(len(_NER_SLOTS[slot])))]
                parts.append(value)
                spans.append(EntitySpan(start=pos, end=pos + len(value), label=ent_type))
                pos += len(value)
        text = "".join(parts)
        if text in seen:
            continue
        seen.add(text)
        samples.append(NerSample(text=text, entities=tuple(spans)))
    return NerCorpus(samples)
