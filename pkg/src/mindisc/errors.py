"""Exception types shared across the package."""


class MindiscError(Exception):
    """Base class for all mindisc errors."""


class ShapeMismatch(MindiscError):
    """Operand shapes are incompatible."""


class DegenerateBatch(MindiscError):
    """Batch too small or too degenerate for the requested statistic."""


class EmptyBatch(MindiscError):
    """An operation received a batch with zero rows."""


class LabelOutOfRange(MindiscError):
    """A class label falls outside [0, num_classes)."""


class InvalidSpec(MindiscError):
    """Network layer specification is inconsistent."""


class InvalidParam(MindiscError):
    """A parameter violates its documented constraint."""


class MalformedRow(MindiscError):
    """A CSV row could not be parsed. Row/column numbers are 1-based."""

    def __init__(self, message, row=None, col=None):
        super().__init__(message)
        self.row = row
        self.col = col


class NonFiniteValue(MindiscError):
    """A NaN or infinity was found where finite data is required."""

    def __init__(self, message, row=None, col=None):
        super().__init__(message)
        self.row = row
        self.col = col


class NonFiniteLoss(MindiscError):
    """Training produced a non-finite loss; carries the offending step."""

    def __init__(self, message, step):
        super().__init__(message)
        self.step = step


class UnlabeledDataset(MindiscError):
    """Labels were required but the dataset has none."""


class EmptyDataset(MindiscError):
    """The dataset has zero rows."""


class ClassCountMismatch(MindiscError):
    """Model and dataset disagree on the number of classes."""


class VersionMismatch(MindiscError):
    """Checkpoint format version is not supported."""


class CorruptCheckpoint(MindiscError):
    """Checkpoint file failed structural or checksum validation."""


class ConfigError(MindiscError):
    """A config file or override could not be interpreted."""
