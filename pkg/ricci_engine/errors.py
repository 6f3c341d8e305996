class GeometryError(ValueError):
    """Base class for every error the engine raises on bad input or geometry."""


class JetDomainError(GeometryError):
    pass


class JetDivisionError(JetDomainError):
    pass


class ExpressionError(GeometryError):
    """
    Syntax error in a field expression.
    offset is the byte offset of the offending token in the source text.
    """

    def __init__(self, message, offset=None):
        if offset is not None:
            message = f"{message} (at offset {offset})"
        super().__init__(message)
        self.offset = offset


class UnknownIdentifierError(ExpressionError):
    pass


class ArityError(ExpressionError):
    pass


class DomainViolation(GeometryError):
    pass


class DegenerateMetricError(GeometryError):
    pass


class ChartMismatchError(GeometryError):
    pass


class VarianceError(GeometryError):
    pass


class DimensionError(GeometryError):
    pass


class NullFieldError(GeometryError):
    pass


class FrameError(GeometryError):
    pass


class PreconditionError(GeometryError):
    pass


class UnknownMetricError(GeometryError):
    pass


class ConfigError(GeometryError):
    pass
