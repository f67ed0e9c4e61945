"""Exception types raised by the crfe package."""


class CrfeError(Exception):
    """Base class for all crfe errors."""


class ConfigError(CrfeError):
    """Invalid experiment or CLI configuration."""


# data ingestion / preprocessing

class MissingFileError(CrfeError):
    """Input file does not exist."""


class MissingLabelColumnError(CrfeError):
    """The requested label column is not in the CSV header."""


class UnparsableCellError(CrfeError):
    """A CSV cell is neither a number nor the missing token."""

    def __init__(self, row: int, col: int, value: str):
        self.row = row
        self.col = col
        self.value = value
        super().__init__(f"cell ({row}, {col}) is not numeric: {value!r}")


class SingleClassError(CrfeError):
    """Fewer than two distinct labels in the data."""


class NotEnoughDonorsError(CrfeError):
    """Too few rows with an observed value to impute a column."""


class EmptyRowSetError(CrfeError):
    """An operation received an empty row index list."""


class TooFewSamplesError(CrfeError):
    """Dataset too small to split (or no class-preserving split found)."""


class InvalidSpecError(CrfeError):
    """Synthetic generator parameters are inconsistent."""


# classifier

class DegenerateLabelsError(CrfeError):
    """Binary training labels contain only one sign."""


class NonFiniteInputError(CrfeError):
    """Training data contains NaN or infinite values."""


class DimensionMismatchError(CrfeError):
    """Vector/matrix shapes are incompatible."""


class UnknownFeatureError(CrfeError):
    """A feature index is not among the active features."""


# conformal

class EmptyCalibrationError(CrfeError):
    """Calibration set is empty."""


# selection

class EmptyVectorError(CrfeError):
    """A per-feature score vector is empty."""


class InvalidPolicyError(CrfeError):
    """Stopping policy parameters violate their invariants."""


# metrics

class LengthMismatchError(CrfeError):
    """Prediction and truth sequences have different lengths."""


class EmptyTestSetError(CrfeError):
    """Metrics requested over zero samples."""


# consistency

class InvalidFamilyError(CrfeError):
    """Subset family violates the equal-cardinality/universe invariants."""


class InvalidCardinalityError(CrfeError):
    """Chance-corrected index undefined for empty or full subsets."""
