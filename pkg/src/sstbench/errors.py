"""Exception hierarchy for the harness."""


class HarnessError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(HarnessError):
    """Invalid configuration value or combination."""


class CorpusError(HarnessError):
    """Problem with corpus layout or contents."""


class EmptyCorpusError(CorpusError):
    """A scan found no audio files."""


class UnsupportedFormatError(HarnessError):
    """Audio file is not a supported RIFF/SPHERE PCM16 mono file."""


class AudioDecodeError(HarnessError):
    """Audio header parsed but the payload is truncated or inconsistent."""


class InsufficientDataError(HarnessError):
    """Not enough utterances to build the requested protocol."""


class InfeasibleGroupingError(HarnessError):
    """A speaker has too few sentences for the requested grouping."""


class ShortUtteranceError(HarnessError):
    """Clip shorter than one analysis window."""


class EmptyUtteranceError(HarnessError):
    """Spectrogram has zero frames."""


class DegenerateTrialsError(HarnessError):
    """Trial set contains only targets or only non-targets."""


class UndefinedScoreError(HarnessError):
    """Cosine score requested for a zero vector."""


class InvalidEmbeddingError(HarnessError):
    """Embedding contains NaN/Inf or has inconsistent dimension."""


class TensorFileError(HarnessError):
    """Malformed tensor file (bad magic, version, dtype or truncation)."""


class AdapterError(HarnessError):
    """Base class for external-adapter subprocess failures."""


class AdapterFailure(AdapterError):
    """Adapter exited nonzero or reported a failing status."""


class AdapterTimeout(AdapterError):
    """Adapter did not finish within the configured timeout."""


class ProtocolError(AdapterError):
    """Adapter finished but violated the file-exchange protocol."""
