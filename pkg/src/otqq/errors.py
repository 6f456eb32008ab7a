"""Exception types shared across the package."""


class OtqqError(Exception):
    """Base class for all errors raised by this package."""


class DimensionMismatch(OtqqError):
    """Two objects that must share a dimension do not."""


class ConstantColumn(OtqqError):
    """A column has zero standard deviation and cannot be standardized."""

    def __init__(self, index: int):
        self.index = index
        super().__init__(f"column {index} is constant")


class EmptyRestriction(OtqqError):
    """No point of the cloud lies inside the requested region."""


class BadSpec(OtqqError):
    """A generator specification is invalid (e.g. covariance not PSD)."""


class NonSquare(OtqqError):
    """Exact assignment requires equally sized point sets."""


class InfeasibleDuals(OtqqError):
    """Assignment duals violate feasibility; indicates a solver bug."""


class NumericalOverflow(OtqqError):
    """Log-domain arithmetic produced non-finite values; indicates a bug."""


class DegenerateFit(OtqqError):
    """Least squares is undefined because all abscissae coincide."""


class InsufficientData(OtqqError):
    """Not enough observations for the requested resampling scheme."""


class ParseError(OtqqError):
    """A CSV cell could not be parsed."""

    def __init__(self, line: int, column: int, reason: str):
        self.line = line
        self.column = column
        self.reason = reason
        super().__init__(f"line {line}, column {column}: {reason}")


class RaggedRows(OtqqError):
    """A CSV row has a different number of fields than the first row."""

    def __init__(self, line: int):
        self.line = line
        super().__init__(f"line {line} has a different number of fields")


class IoError(OtqqError):
    """A result file could not be written."""

    def __init__(self, path, reason: str = ""):
        self.path = path
        super().__init__(f"cannot write {path}" + (f": {reason}" if reason else ""))
