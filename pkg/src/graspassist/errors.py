"""Exception types shared across the control stack."""


class GraspAssistError(Exception):
    """Base class for all errors raised by this package."""


class EmptyMask(GraspAssistError):
    """Segmentation mask has no set pixels."""


class DimensionMismatch(GraspAssistError):
    """Mask and depth frame rasters differ in size."""


class InsufficientDepth(GraspAssistError):
    """Fewer than 3 boundary pixels carry valid depth; caller should
    hold the previous grasp point."""


class EmptyCloud(GraspAssistError):
    """Boundary cloud has no points."""


class ClockRegression(GraspAssistError):
    """Tick timestamp did not strictly increase."""


class MalformedRecord(GraspAssistError):
    """Serialized state record could not be parsed."""


class TruncatedFrame(GraspAssistError):
    """Wire frame shorter than its declared length."""


class UnknownTag(GraspAssistError):
    """Wire frame carries a tag outside the protocol."""


class OversizedFrame(GraspAssistError):
    """Wire frame declares a length above the 16 MiB cap."""


class NonFiniteState(GraspAssistError):
    """Plant integration produced NaN or infinity (bad parameters)."""


class UnknownCommand(GraspAssistError):
    """Actuation command kind not understood by the low-level controller."""


class IncompleteLog(GraspAssistError):
    """Event log is missing records the scorer needs."""


class ScenarioError(GraspAssistError):
    """Scenario file failed schema validation."""
