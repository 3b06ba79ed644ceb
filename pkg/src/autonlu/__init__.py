"""Data-aware AutoML for text classification and NER.

The public surface: corpus loading, deterministic hashed featurization,
regime selection with rebalancing, the three trainers, scope (OOD)
detection, data-quality diagnostics, entity and classification metrics,
portable bundles, benchmark protocols, and LLM-backed generation.
"""

from .augment import augment_labeled, derive_seed, make_gibberish, perturb
from .bench import (
    FAR_OOD_PAIRING,
    BenchConfig,
    BenchRun,
    available_datasets,
    far_pair_for,
    load_dataset,
    ood_budget,
    register_dataset,
    run_benchmark,
    run_from_manifest,
    split_allocation,
)
from .bundle import (
    InferenceManager,
    LoadedBundle,
    Prediction,
    load_bundle,
    save_bundle,
    save_model,
)
from .corpus import (
    ClassificationSample,
    EntitySpan,
    LabeledCorpus,
    NerCorpus,
    NerSample,
    SplitPair,
    bio_to_spans,
    load_classification,
    load_ner,
    parse_bracket_ner,
    stratified_split,
    to_bio,
    tokenize_with_offsets,
)
from .embed import FeaturizerConfig, HashingFeaturizer, available_kernels, get_kernel
from .errors import (
    AnchorCollisionError,
    AutoNLUError,
    ConfigError,
    DegenerateScoresError,
    DimensionMismatchError,
    DivergenceError,
    EmptyCorpusError,
    IncompatibleEvaluatorError,
    InferenceError,
    InsufficientExamplesError,
    IntegrityError,
    LengthMismatchError,
    MarkupError,
    MissingAnchorError,
    OverlapError,
    ParseError,
    ShortfallWarning,
    SingleClassError,
    SingularCovarianceError,
    TransportError,
    UnknownDatasetError,
    VersionError,
)
from .linear import LinearClassifier, TrainConfig, TrainingTrace, train_softmax
from .llmgen import GeneratedSet, HttpTransport, LLMGenerator, MockTransport
from .metrics import (
    ClassificationReport,
    ClassMetrics,
    EntityReport,
    auroc,
    classification_report,
    entity_report,
)
from .ner import NerModel, token_features, train_ner
from .ood import (
    OOD_METHODS,
    OOS_LABEL,
    MahalanobisDetector,
    MSPDetector,
    OOSClassDetector,
    calibrate_threshold,
    default_ood_method,
)
from .pipeline import (
    PipelineResult,
    evaluate_classification,
    evaluate_ner,
    train_classifier,
    train_ner_pipeline,
)
from .quality import (
    DawidSkeneResult,
    QualityReport,
    cartography,
    dawid_skene,
    diagnose,
    dynamic_tune,
    pvi_scores,
    region_of,
    retag_flags,
    uncertainty_flags,
)
from .regime import Regime, RebalanceReport, rebalance, resolve_regime
from .synthdata import make_far_corpus, make_intent_corpus, make_ner_corpus
from .tpe import CategoricalParam, FloatParam, TPEResult, TPESampler, optimize
from .trainers import (
    TrainOutput,
    train_anchored,
    train_auto,
    train_contrastive,
    train_full,
)

__version__ = "0.1.0"
