"""Tree-structured Parzen estimator for hyperparameter search.

Past trials are split into a good and a bad group by objective value; new
candidates are drawn from a kernel density fit to the good group and ranked
by the good/bad density ratio. Parameters are handled independently. Each
density is a Parzen mixture that includes one prior pseudo-observation at
the domain midpoint, so the bandwidth never collapses while the good group
is a single point and early suggestions keep exploring.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np


@dataclass(frozen=True)
class FloatParam:
    name: str
    lo: float
    hi: float
    log: bool = False

    def __post_init__(self):
        if not self.lo < self.hi:
            raise ValueError(f"{self.name}: lo must be < hi")
        if self.log and self.lo <= 0:
            raise ValueError(f"{self.name}: log-scale bounds must be positive")

    def to_internal(self, x: float) -> float:
        return math.log10(x) if self.log else x

    def to_external(self, u: float) -> float:
        return 10.0**u if self.log else u

    @property
    def internal_bounds(self) -> tuple[float, float]:
        return self.to_internal(self.lo), self.to_internal(self.hi)


@dataclass(frozen=True)
class CategoricalParam:
    name: str
    choices: tuple

    def __post_init__(self):
        if len(self.choices) < 1:
            raise ValueError(f"{self.name}: needs at least one choice")


Param = FloatParam | CategoricalParam


@dataclass
class Trial:
    params: dict
    value: float


@dataclass
class TPEResult:
    best_params: dict
    best_value: float
    trials: list[Trial] = field(default_factory=list)


def _kde_bandwidth(values: np.ndarray, value_range: float) -> float:
    """Scott-style bandwidth with a floor so the KDE never collapses."""
    n = len(values)
    sigma = float(np.std(values))
    bw = sigma * n ** (-0.2)
    return max(bw, 1e-3 * value_range)


def _kde_pdf(x: float, centers: np.ndarray, bw: float) -> float:
    z = (x - centers) / bw
    dens = np.exp(-0.5 * z * z) / (bw * math.sqrt(2.0 * math.pi))
    return float(np.mean(dens))


class TPESampler:
    """Suggests one parameter set at a time given the trial history."""

    def __init__(
        self,
        space: Sequence[Param],
        seed: int = 0,
        gamma: float = 0.25,
        n_startup: int = 3,
        n_candidates: int = 24,
        direction: str = "maximize",
    ):
        if direction not in ("maximize", "minimize"):
            raise ValueError("direction must be 'maximize' or 'minimize'")
        names = [p.name for p in space]
        if len(names) != len(set(names)):
            raise ValueError("duplicate parameter names")
        self.space = list(space)
        self.gamma = gamma
        self.n_startup = n_startup
        self.n_candidates = n_candidates
        self.direction = direction
        self.rng = np.random.default_rng(seed)

    def _random_params(self) -> dict:
        params = {}
        for p in self.space:
            if isinstance(p, FloatParam):
                lo, hi = p.internal_bounds
                params[p.name] = p.to_external(float(self.rng.uniform(lo, hi)))
            else:
                params[p.name] = p.choices[int(self.rng.integers(len(p.choices)))]
        return params

    def _split(self, trials: list[Trial]) -> tuple[list[Trial], list[Trial]]:
        reverse = self.direction == "maximize"
        ordered = sorted(trials, key=lambda t: t.value, reverse=reverse)
        n_good = math.ceil(self.gamma * len(ordered))
        return ordered[:n_good], ordered[n_good:]

    def _suggest_float(self, p: FloatParam, good: list[Trial], bad: list[Trial]) -> float:
        lo, hi = p.internal_bounds
        value_range = hi - lo
        mid = 0.5 * (lo + hi)
        # prior pseudo-observation joins both mixtures
        g = np.array([p.to_internal(t.params[p.name]) for t in good] + [mid])
        b = np.array([p.to_internal(t.params[p.name]) for t in bad] + [mid])
        bw_g = _kde_bandwidth(g, value_range)
        bw_b = _kde_bandwidth(b, value_range)

        best_u, best_ratio = None, -np.inf
        for _ in range(self.n_candidates):
            center = g[int(self.rng.integers(len(g)))]
            u = float(np.clip(self.rng.normal(center, bw_g), lo, hi))
            ratio = _kde_pdf(u, g, bw_g) / (_kde_pdf(u, b, bw_b) + 1e-12)
            if ratio > best_ratio:
                best_ratio, best_u = ratio, u
        return p.to_external(best_u)

    def _suggest_categorical(self, p: CategoricalParam, good: list[Trial], bad: list[Trial]):
        k = len(p.choices)

        def smoothed(trials: list[Trial]) -> np.ndarray:
            counts = np.ones(k, dtype=np.float64)  # add-one smoothing
            for t in trials:
                counts[p.choices.index(t.params[p.name])] += 1.0
            return counts / counts.sum()

        pg, pb = smoothed(good), smoothed(bad)
        best_choice, best_ratio = None, -np.inf
        for _ in range(self.n_candidates):
            idx = int(self.rng.choice(k, p=pg))
            ratio = pg[idx] / pb[idx]
            if ratio > best_ratio:
                best_ratio, best_choice = ratio, p.choices[idx]
        return best_choice

    def suggest(self, trials: list[Trial]) -> dict:
        if len(trials) < self.n_startup:
            return self._random_params()
        good, bad = self._split(trials)
        if not good:
            return self._random_params()
        params = {}
        for p in self.space:
            if isinstance(p, FloatParam):
                params[p.name] = self._suggest_float(p, good, bad)
            else:
                params[p.name] = self._suggest_categorical(p, good, bad)
        return params


def optimize(
    objective: Callable[[dict], float],
    space: Sequence[Param],
    n_trials: int,
    seed: int = 0,
    direction: str = "maximize",
    gamma: float = 0.25,
    n_startup: int = 3,
    n_candidates: int = 24,
) -> TPEResult:
    """Run sequential TPE for n_trials evaluations of objective."""
    sampler = TPESampler(
        space,
        seed=seed,
        gamma=gamma,
        n_startup=n_startup,
        n_candidates=n_candidates,
        direction=direction,
    )
    trials: list[Trial] = []
    for _ in range(n_trials):
        params = sampler.suggest(trials)
        value = float(objective(params))
        trials.append(Trial(params=params, value=value))

    sign = 1.0 if direction == "maximize" else -1.0
    best = max(trials, key=lambda t: sign * t.value)
    return TPEResult(best_params=dict(best.params), best_value=best.value, trials=trials)
