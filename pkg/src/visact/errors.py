"""Exception types shared across the pipeline.

Two broad families matter to callers: ``FormatError`` covers malformed
input files (CLI exit code 2), everything else under ``VisactError`` is a
runtime failure (exit code 3). ``ConfigError`` is raised before any work
starts (exit code 1).
"""


class VisactError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(VisactError):
    """Bad or missing configuration (unknown key, unreadable path)."""


class FormatError(VisactError):
    """An input file does not match its documented format."""


# -- transcripts ------------------------------------------------------------

class MalformedTimestamp(FormatError):
    """A cue timing token is not HH:MM:SS.mmm."""


class EmptyTranscript(FormatError):
    """The transcript file contains no cues."""


class ZeroDuration(VisactError):
    """Words-per-second is undefined for a zero-length video."""


# -- tagging / chunking -----------------------------------------------------

class TagTokenMismatch(FormatError):
    """POS tag stream length differs from the transcript token count."""


class DanglingCueIndex(VisactError):
    """A token references a cue index outside the transcript."""


# -- miniclips / frames -----------------------------------------------------

class EmptyActionList(VisactError):
    """Segmentation needs at least one timestamped action."""


class DimensionMismatch(VisactError):
    """Two frames have different shapes."""


class ZeroVariance(VisactError):
    """A constant frame has no defined correlation."""


class TooFewFrames(VisactError):
    """Fewer than two sampled frames survive striding."""


# -- annotation -------------------------------------------------------------

class InsufficientGroundTruth(VisactError):
    """No usable pre-labeled miniclip is available for HIT composition."""


class IncompleteSubmission(VisactError):
    """A worker submission does not cover every action in the HIT."""


class WrongAnnotatorCount(VisactError):
    """An action does not have exactly three accepted annotations."""


class RowSumMismatch(FormatError):
    """A kappa count row does not sum to the rater count."""


class DegenerateAgreement(VisactError):
    """Expected agreement is 1 (all mass in one category); kappa undefined."""


class UnknownChannel(VisactError):
    """An item's channel is not in the configured channel order."""


# -- feature bank / binary files ---------------------------------------------

class BadMagic(FormatError):
    """A binary file does not start with the expected magic bytes."""


class TruncatedFile(FormatError):
    """A binary file ends before its declared payload."""


class DimMismatch(VisactError):
    """Vector or matrix dimensions disagree with the declared ones."""


class UnknownLabel(VisactError):
    """A label is not a node of the taxonomy."""


class ZeroVector(VisactError):
    """Cosine similarity is undefined for a zero-norm vector."""


# -- classifiers / neural models ----------------------------------------------

class EmptyValidation(VisactError):
    """Threshold tuning requires a non-empty validation set."""


class EmptySequence(VisactError):
    """The LSTM needs at least one input step."""


class EmptyDataset(VisactError):
    """Training requires at least one example."""


class MissingFeatureBank(VisactError):
    """A miniclip has no video feature rows."""


class ExtrasDimMismatch(VisactError):
    """Extra feature vectors disagree in dimension across examples."""


# -- evaluation ---------------------------------------------------------------

class LengthMismatch(VisactError):
    """Paired inputs have different lengths."""


class DegeneratePairs(VisactError):
    """A paired t-test needs at least two pairs."""
