"""Exception types raised across the pipeline."""


class VidsumError(Exception):
    """Base class for every error raised by this package."""


class SourceError(VidsumError):
    pass


class UnreadableSource(SourceError):
    pass


class EmptySource(UnreadableSource):
    """The source exists but holds no frames."""


class InconsistentDimensions(SourceError):
    pass


class ModelError(VidsumError):
    pass


class ModelLoadError(ModelError):
    pass


class ShapeMismatch(ModelError):
    pass


class EmptyMask(VidsumError, ValueError):
    pass


class LengthMismatch(VidsumError, ValueError):
    pass


class InvalidLambda(VidsumError, ValueError):
    pass


class MixedDescriptorKinds(VidsumError, TypeError):
    pass


class KTooLarge(VidsumError, ValueError):
    pass


class InstanceTooLarge(VidsumError, ValueError):
    pass


class TooFewFrames(VidsumError, ValueError):
    pass


class TooFewSamples(VidsumError, ValueError):
    pass


class NotSymmetric(VidsumError, ValueError):
    pass


class DimensionMismatch(VidsumError, ValueError):
    pass


class EmptyStoryboard(VidsumError, ValueError):
    pass


class WidthTooSmall(VidsumError, ValueError):
    pass
