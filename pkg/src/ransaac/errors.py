"""Exception types shared across the package."""


class RansaacError(Exception):
    """Base class for all errors raised by this package."""


class HorizonDegenerate(RansaacError):
    """A point lies on or numerically too close to the line a homography
    maps to infinity, so its projection is undefined."""


class SingularModel(RansaacError):
    """A transformation matrix is not invertible."""


class DegenerateSample(RansaacError):
    """A point sample does not determine a unique homography
    (rank-deficient or ill-separated least-squares system)."""


class InsufficientData(RansaacError):
    """Fewer correspondences than the minimum sample size."""


class NoValidHypothesis(RansaacError):
    """Every drawn sample was degenerate; no model could be produced."""


class EmptyCloud(RansaacError):
    """Aggregation was requested on an empty estimate set."""


class UnknownModelKind(RansaacError):
    """Unrecognised transformation model identifier."""


class GenerationFailed(RansaacError):
    """Synthetic data generation exhausted its retry budget."""


class ParseError(RansaacError):
    """A matches file could not be parsed.

    Attributes:
        line_number: 1-based line where parsing failed.
    """

    def __init__(self, line_number: int, message: str):
        super().__init__(f"line {line_number}: {message}")
        self.line_number = line_number
