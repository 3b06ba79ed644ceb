"""Exception hierarchy shared across the library."""


class AutoNLUError(Exception):
    """Base class for all library errors."""


class ParseError(AutoNLUError):
    """A dataset record could not be parsed. Carries the 1-based line number."""

    def __init__(self, line_no: int, reason: str):
        super().__init__(f"line {line_no}: {reason}")
        self.line_no = line_no
        self.reason = reason


class EmptyCorpusError(AutoNLUError):
    pass


class SingleClassError(AutoNLUError):
    pass


class MarkupError(AutoNLUError):
    pass


class OverlapError(AutoNLUError):
    pass


class InsufficientExamplesError(AutoNLUError):
    """A class (or entity type) has too few examples for the requested operation."""

    def __init__(self, label: str, message: str | None = None):
        super().__init__(message or f"class {label!r} has too few examples")
        self.label = label


class MissingAnchorError(AutoNLUError):
    def __init__(self, label: str):
        super().__init__(f"no anchor description for label {label!r}")
        self.label = label


class AnchorCollisionError(AutoNLUError):
    pass


class DivergenceError(AutoNLUError):
    pass


class SingularCovarianceError(AutoNLUError):
    pass


class DimensionMismatchError(AutoNLUError):
    pass


class DegenerateScoresError(AutoNLUError):
    pass


class IncompatibleEvaluatorError(AutoNLUError):
    def __init__(self, task: str, evaluator: str):
        super().__init__(f"evaluator {evaluator!r} is not applicable to task {task!r}")
        self.task = task
        self.evaluator = evaluator


class IntegrityError(AutoNLUError):
    pass


class VersionError(AutoNLUError):
    pass


class InferenceError(AutoNLUError):
    pass


class TransportError(AutoNLUError):
    pass


class LengthMismatchError(AutoNLUError):
    pass


class UnknownDatasetError(AutoNLUError):
    pass


class NotEnoughClassesError(AutoNLUError):
    pass


class ConfigError(AutoNLUError):
    """Invalid user configuration (bad flag value, missing path, ...)."""


class ShortfallWarning(UserWarning):
    """Generation produced fewer valid items than requested."""
