"""Exception hierarchy shared by every pipeline stage."""


class SpeechDurError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(SpeechDurError, ValueError):
    pass


# ingestion / signal
class NonMonotonicTimestamps(SpeechDurError):
    pass


class TooFewSamples(SpeechDurError):
    pass


class MixedChannelPresence(SpeechDurError):
    pass


class SeriesTooShort(SpeechDurError):
    pass


class SeriesShorterThanWindow(SeriesTooShort):
    pass


class RateMismatchAcrossChannels(SpeechDurError):
    pass


# features
class EmptySpectrum(SpeechDurError):
    pass


class InconsistentChannelSets(SpeechDurError):
    pass


# classifiers
class SingleClassDataset(SpeechDurError):
    pass


class NonFiniteFeature(SpeechDurError):
    pass


class LayoutMismatch(SpeechDurError):
    pass


class ModelRecordingLayoutMismatch(LayoutMismatch):
    pass


class UnsupportedVersion(SpeechDurError):
    pass


class CorruptModel(SpeechDurError):
    pass


# evaluation
class DatasetTooSmall(SpeechDurError):
    pass


class LengthMismatch(SpeechDurError):
    pass


class EmptyInput(SpeechDurError):
    pass


# annotations / synthetic data
class UnsortedAnnotations(SpeechDurError):
    pass


class DurationTooShort(SpeechDurError):
    pass


class IntervalOutOfRange(SpeechDurError):
    pass


class IoError(SpeechDurError):
    pass


class StageError(SpeechDurError):
    """A pipeline error annotated with the stage and input file that failed."""

    def __init__(self, stage: str, path, cause: Exception):
        self.stage = stage
        self.path = path
        self.cause = cause
        where = f" ({path})" if path is not None else ""
        super().__init__(f"[{stage}]{where} {type(cause).__name__}: {cause}")
