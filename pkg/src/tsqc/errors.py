"""Exception hierarchy."""


class TSQCError(Exception):
    """Base class for all library errors."""


class DimensionMismatch(TSQCError, ValueError):
    pass


class ZeroVector(TSQCError, ValueError):
    """Raised when normalizing a vector whose squared norm is numerically zero.

    In a collapse this signals a branch that cannot occur.
    """


class ValidationError(TSQCError, ValueError):
    """A structural invariant failed.

    ``invariant`` names the violated property and ``deviation`` is the largest
    entrywise deviation found.
    """

    def __init__(self, message: str, invariant: str = "", deviation: float = 0.0):
        super().__init__(message)
        self.invariant = invariant
        self.deviation = deviation


class InvalidMeasurement(ValidationError):
    pass


class ImpossiblePostselection(TSQCError, ArithmeticError):
    """The pre/post pair cannot co-occur given the intermediate measurement."""


class ZeroOverlap(TSQCError, ArithmeticError):
    pass


class RankError(TSQCError, ValueError):
    pass


class LabelMismatch(TSQCError, ValueError):
    pass


class ParseError(TSQCError, ValueError):
    """Scenario file could not be parsed.

    ``where`` is either ``line N`` for JSON syntax errors or a dotted field
    path such as ``measurements[0].partition``.
    """

    def __init__(self, message: str, where: str = ""):
        super().__init__(f"{where}: {message}" if where else message)
        self.where = where
