"""Exception types shared across the package."""


class CrlQaError(Exception):
    """Base class for all errors raised by this package."""


class DecodeError(CrlQaError):
    """Raised when an image payload cannot be decoded as an 8-bit single-channel raster."""


class InvalidLabelError(DecodeError):
    """A mask pixel carries a value outside the known class palette."""

    def __init__(self, value: int, x: int, y: int):
        self.value = value
        self.x = x
        self.y = y
        super().__init__(f"invalid class label {value} at pixel ({x}, {y}); expected 0..4")


class ShapeMismatchError(CrlQaError):
    """Two rasters that must share dimensions do not."""


class DegenerateGeometryError(CrlQaError):
    """Geometry is undefined for the given input (coincident points, zero-length line)."""


class IsotropicAxisError(CrlQaError):
    """The pixel blob has no preferred axis (equal covariance eigenvalues)."""


class MissingStructureError(CrlQaError):
    """A required anatomical class is absent or below the minimum component area."""

    def __init__(self, structure: str, detail: str = ""):
        self.structure = structure
        msg = f"missing or too-small structure: {structure}"
        if detail:
            msg += f" ({detail})"
        super().__init__(msg)


class PhantomDegenerateError(CrlQaError):
    """Phantom parameters produced an unusable scene (e.g. head and body not touching)."""


class ConfigError(CrlQaError):
    """Bad configuration key or value."""


class SpreadsheetError(CrlQaError):
    """Malformed spreadsheet payload."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class DuplicateKeyError(SpreadsheetError):
    """Two spreadsheet rows share an image_id."""
