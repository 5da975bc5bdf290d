"""Exception types shared across the package."""


class CrossviewError(Exception):
    """Base class for all package-specific errors."""


class UnknownColor(CrossviewError):
    """A mask pixel color has no entry in the palette."""

    def __init__(self, x, y, rgb):
        self.x = x
        self.y = y
        self.rgb = tuple(int(v) for v in rgb)
        super().__init__(f"pixel at (x={x}, y={y}) has color {self.rgb} not in palette")


class BadMagic(CrossviewError):
    """A binary file does not start with the expected magic bytes."""


class TruncatedFile(CrossviewError):
    """A binary file ended before the declared payload was complete."""


class DimensionOverflow(CrossviewError):
    """Declared tensor dimensions are zero or implausibly large."""


class NonSquareInput(CrossviewError):
    """An aerial raster must be square before polar warping."""


class InvalidConfig(CrossviewError):
    """A model or training configuration violates one of its invariants."""


class ShapeMismatch(CrossviewError):
    """Operands have incompatible shapes."""


class InputTooNarrow(CrossviewError):
    """Input raster too narrow for the extractor's downsampling factor."""


class ChannelOverflow(CrossviewError):
    """An auxiliary volume has more channels than the primary volume."""


class NonSquare(CrossviewError):
    """A distance matrix passed to the loss must be square."""


class DatasetTooSmall(CrossviewError):
    """Not enough training samples for the requested batch size."""


class EmptyRanks(CrossviewError):
    """Recall cannot be computed from an empty rank list."""
