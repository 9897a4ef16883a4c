"""Exception hierarchy shared across the package."""


class VizPickError(Exception):
    """Base class for every error raised by this package."""


class MalformedInput(VizPickError):
    """Input bytes/payload could not be parsed in the declared format."""


class TooFewColumns(VizPickError):
    """Fewer than two numeric columns survived parsing."""


class TooFewRows(VizPickError):
    """Table has fewer rows than the pipeline admits."""


class EmptyInput(VizPickError):
    """An operation that needs at least one element got none."""


class EmptySequence(VizPickError):
    """Statistics of an empty value sequence were requested."""


class LengthMismatch(VizPickError):
    """Paired sequences differ in length."""


class WrongArity(VizPickError):
    """Table does not have exactly the two columns this stage expects."""


class NotNormalized(VizPickError):
    """Table values fall outside [0, 1]; run normalize first."""


class ShapeMismatch(VizPickError):
    """Array shape does not match what the model architecture expects."""


class EmptyTrainingSet(VizPickError):
    """A plot type has no training pairs."""


class EmptyEnsemble(VizPickError):
    """An ensemble prediction was requested with zero member models."""


class IoFailure(VizPickError):
    """Filesystem read/write failed."""


class VersionMismatch(VizPickError):
    """Serialized bundle carries an unsupported schema version."""


class CorruptBundle(VizPickError):
    """Bundle file is truncated, unparseable, or fails its checksum."""


class KOutOfRange(VizPickError):
    """Top-K parameter k is outside 1..n_features."""


class MissingModel(VizPickError):
    """Model bundle lacks a regressor for a requested plot type."""


class UnknownTask(VizPickError):
    """Judgment references a task id that was never generated."""


class KeyMismatch(VizPickError):
    """Prediction and gold-label maps cover different tables."""
