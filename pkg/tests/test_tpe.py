import math

import numpy as np
import pytest

from autonlu.tpe import (
    CategoricalParam,
    FloatParam,
    TPESampler,
    Trial,
    optimize,
)


class TestParams:
    def test_float_bounds_validated(self):
        with pytest.raises(ValueError):
            FloatParam("x", 1.0, 1.0)
        with pytest.raises(ValueError):
            FloatParam("x", 2.0, 1.0)

    def test_log_requires_positive_lo(self):
        with pytest.raises(ValueError):
            FloatParam("lr", 0.0, 1.0, log=True)

    def test_log_round_trip(self):
        p = FloatParam("lr", 1e-6, 1e-3, log=True)
        assert p.to_internal(1e-4) == pytest.approx(-4.0)
        assert p.to_external(-4.0) == pytest.approx(1e-4)
        assert p.internal_bounds == pytest.approx((-6.0, -3.0))

    def test_linear_param_is_identity(self):
        p = FloatParam("wd", 0.0, 0.1)
        assert p.to_internal(0.05) == 0.05
        assert p.to_external(0.05) == 0.05

    def test_categorical_needs_choices(self):
        with pytest.raises(ValueError):
            CategoricalParam("b", ())

    def test_duplicate_names_rejected(self):
        with pytest.raises(ValueError):
            TPESampler([FloatParam("x", 0, 1), FloatParam("x", 0, 2)])

    def test_bad_direction_rejected(self):
        with pytest.raises(ValueError):
            TPESampler([FloatParam("x", 0, 1)], direction="up")


class TestSampler:
    def space(self):
        return [
            FloatParam("lr", 1e-6, 1e-3, log=True),
            CategoricalParam("batch", (8, 16, 32, 64)),
            FloatParam("wd", 0.0, 0.1),
        ]

    def test_startup_trials_are_random_but_bounded(self):
        s = TPESampler(self.space(), seed=1)
        for hist in ([], [Trial({"lr": 1e-4, "batch": 8, "wd": 0.0}, 1.0)]):
            params = s.suggest(hist)
            assert 1e-6 <= params["lr"] <= 1e-3
            assert params["batch"] in (8, 16, 32, 64)
            assert 0.0 <= params["wd"] <= 0.1

    def test_good_group_size(self):
        # ceil(0.25 * 8) = 2
        s = TPESampler(self.space())
        trials = [
            Trial({"lr": 10.0 ** -(4 + 0.1 * i), "batch": 8, "wd": 0.0}, float(i))
            for i in range(8)
        ]
        good, bad = s._split(trials)
        assert len(good) == 2
        assert len(bad) == 6
        assert {t.value for t in good} == {7.0, 6.0}

    def test_split_respects_direction(self):
        s = TPESampler(self.space(), direction="minimize")
        trials = [
            Trial({"lr": 1e-4, "batch": 8, "wd": 0.0}, float(i)) for i in range(8)
        ]
        good, _ = s._split(trials)
        assert {t.value for t in good} == {0.0, 1.0}

    def test_suggestions_stay_in_bounds(self):
        s = TPESampler(self.space(), seed=5)
        rng = np.random.default_rng(0)
        trials = [
            Trial(
                {
                    "lr": float(10.0 ** rng.uniform(-6, -3)),
                    "batch": int(rng.choice((8, 16, 32, 64))),
                    "wd": float(rng.uniform(0, 0.1)),
                },
                float(rng.random()),
            )
            for _ in range(10)
        ]
        for _ in range(20):
            params = s.suggest(trials)
            assert 1e-6 <= params["lr"] <= 1e-3
            assert params["batch"] in (8, 16, 32, 64)
            assert 0.0 <= params["wd"] <= 0.1

    def test_deterministic_given_seed(self):
        trials = [
            Trial({"lr": 10.0 ** -(3.5 + 0.3 * i), "batch": 16, "wd": 0.01}, -i)
            for i in range(6)
        ]
        a = TPESampler(self.space(), seed=3).suggest(trials)
        b = TPESampler(self.space(), seed=3).suggest(trials)
        assert a == b

    def test_exploits_good_region(self):
        # good trials cluster near log10 lr = -4; suggestions should too
        space = [FloatParam("lr", 1e-6, 1e-3, log=True)]
        rng = np.random.default_rng(0)
        trials = []
        for _ in range(30):
            u = rng.uniform(-6, -3)
            trials.append(Trial({"lr": 10.0**u}, -((u + 4.0) ** 2)))
        s = TPESampler(space, seed=7)
        drawn = [math.log10(s.suggest(trials)["lr"]) for _ in range(30)]
        assert abs(float(np.median(drawn)) + 4.0) < 0.75


class TestOptimize:
    def test_result_tracks_best(self):
        space = [FloatParam("x", 0.0, 1.0)]
        res = optimize(lambda p: -((p["x"] - 0.3) ** 2), space, n_trials=12, seed=0)
        assert len(res.trials) == 12
        assert res.best_value == max(t.value for t in res.trials)
        assert res.best_params["x"] == [
            t for t in res.trials if t.value == res.best_value
        ][0].params["x"]

    def test_minimize_direction(self):
        space = [FloatParam("x", 0.0, 1.0)]
        res = optimize(
            lambda p: (p["x"] - 0.5) ** 2,
            space,
            n_trials=12,
            seed=0,
            direction="minimize",
        )
        assert res.best_value == min(t.value for t in res.trials)

    def test_deterministic(self):
        space = [FloatParam("lr", 1e-6, 1e-3, log=True)]
        f = lambda p: -((math.log10(p["lr"]) + 4.5) ** 2)
        r1 = optimize(f, space, n_trials=10, seed=42)
        r2 = optimize(f, space, n_trials=10, seed=42)
        assert [t.params for t in r1.trials] == [t.params for t in r2.trials]
        assert r1.best_value == r2.best_value

    def test_beats_random_search_on_quadratic(self):
        # smaller rehearsal of the acceptance protocol: paired seeds,
        # identical budget, TPE should win the majority
        space = [FloatParam("lr", 1e-6, 1e-3, log=True)]

        def f(params):
            return -((math.log10(params["lr"]) + 4.5) ** 2)

        wins = 0
        n_pairs = 30
        for seed in range(n_pairs):
            tpe_best = optimize(f, space, n_trials=10, seed=seed).best_value
            rng = np.random.default_rng(seed)
            rand_best = max(
                f({"lr": 10.0 ** rng.uniform(-6.0, -3.0)}) for _ in range(10)
            )
            if tpe_best > rand_best:
                wins += 1
        assert wins >= 0.5 * n_pairs
