import numpy as np
import pytest

from autonlu.corpus import ClassificationSample, LabeledCorpus
from autonlu.embed import FeaturizerConfig, HashingFeaturizer


@pytest.fixture(scope="session")
def featurizer() -> HashingFeaturizer:
    return HashingFeaturizer()


@pytest.fixture(scope="session")
def small_featurizer() -> HashingFeaturizer:
    return HashingFeaturizer(FeaturizerConfig(dim=64))


def make_blob_corpus(
    n_classes: int = 4, per_class: int = 30, seed: int = 0
) -> LabeledCorpus:
    """Trivially separable synthetic texts: each class has its own vocabulary."""
    rng = np.random.default_rng(seed)
    vocab = {
        f"c{i}": [f"word{i}{j}" for j in range(12)] for i in range(n_classes)
    }
    samples = []
    for label, words in vocab.items():
        for _ in range(per_class):
            k = int(rng.integers(3, 7))
            text = " ".join(rng.choice(words, size=k))
            samples.append(ClassificationSample(text=text, label=label))
    return LabeledCorpus(samples)


@pytest.fixture()
def blob_corpus() -> LabeledCorpus:
    return make_blob_corpus()
