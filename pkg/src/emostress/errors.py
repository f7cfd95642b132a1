"""Exception types shared across the package.

Every error raised by this package derives from EmoStressError so callers
can catch one base class.  The CLI maps subfamilies to exit codes:
config/usage errors -> 2, dataset errors -> 3, anything else -> 1.
"""


class EmoStressError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(EmoStressError):
    """Invalid configuration or usage (CLI exit code 2)."""


class DatasetError(EmoStressError):
    """Dataset discovery or parsing problem (CLI exit code 3)."""


# --- audio decoding ---

class UnsupportedFormatError(EmoStressError):
    """WAV file uses a codec or sample format outside the PCM/float set."""


class CorruptHeaderError(EmoStressError):
    """RIFF/WAVE chunk structure is malformed."""


class ChannelMismatchError(EmoStressError):
    """Interleaved sample count is not divisible by the channel count."""


class InvalidRateError(ConfigError):
    """Sample rate must be a positive integer."""


# --- feature extraction ---

class InvalidConfigError(ConfigError):
    """Feature or model configuration violates its invariants."""


class ClipTooShortError(EmoStressError):
    """Audio clip shorter than one analysis frame."""


class EmptyCollectionError(EmoStressError):
    """An operation that needs at least one element got none."""


class ShapeMismatchError(EmoStressError):
    """Array shapes disagree with the operation's contract."""


# --- neural network ---

class InputTooSmallError(EmoStressError):
    """Spatial input too small for the requested pooling."""


class LabelOutOfRangeError(EmoStressError):
    """Class label outside the valid code range."""


class EmptyDatasetError(DatasetError):
    """Training or evaluation set is empty."""


# --- checkpoint container ---

class CheckpointError(EmoStressError):
    """Base for checkpoint container failures."""


class BadMagicError(CheckpointError):
    """File does not start with the expected magic bytes."""


class UnsupportedVersionError(CheckpointError):
    """Container version not understood by this build."""


class ChecksumMismatchError(CheckpointError):
    """Stored CRC-32 does not match the file contents."""


class TruncatedFileError(CheckpointError):
    """File ends before the declared payload is complete."""


# --- PCA ---

class TooFewSamplesError(EmoStressError):
    """PCA needs at least two samples."""


class DegenerateDataError(EmoStressError):
    """Data has zero variance; no principal directions exist."""


# --- cube calibration / scoring ---

class TooFewCentroidsError(EmoStressError):
    """Calibration needs at least three emotion centroids."""


class MissingEmotionError(EmoStressError):
    """An emotion required for calibration has no clips to average."""


class InvalidTauError(ConfigError):
    """Softmin temperature must be positive."""


# --- dataset manifests ---

class BadNameError(DatasetError):
    """File name does not follow the dataset's naming convention."""


class UnknownEmotionCodeError(DatasetError):
    """Emotion code in a file name is not in the dataset's alphabet."""


class UnknownSpeakerError(DatasetError):
    """Speaker directory is not one of the dataset's speakers."""


class MissingDirectoryError(DatasetError):
    """Dataset root directory does not exist."""


class DuplicatePathError(DatasetError):
    """Two manifest records share the same path."""


class InvalidCountError(ConfigError):
    """Split size outside (0, total)."""
