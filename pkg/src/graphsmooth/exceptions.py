"""Exception hierarchy for graphsmooth."""


class GraphSmoothError(Exception):
    """Base class for all errors raised by this package."""


class InvalidEdge(GraphSmoothError):
    pass


class DuplicateEdge(InvalidEdge):
    pass


class DisconnectedGraph(GraphSmoothError):
    pass


class DisconnectedAfterCutoff(DisconnectedGraph):
    pass


class DimensionMismatch(GraphSmoothError, ValueError):
    pass


class InvalidParameter(GraphSmoothError, ValueError):
    pass


class ZeroFilter(GraphSmoothError):
    pass


class LowBandZero(GraphSmoothError):
    """The low-band minimum of a filter is zero, so eta_k is undefined."""


class OrderTooHigh(GraphSmoothError):
    pass


class InconsistentResponse(GraphSmoothError):
    """A response differs across numerically equal eigenvalues."""


class MeanNotEigenvector(GraphSmoothError):
    pass


class EmptySupport(GraphSmoothError):
    pass


class NumericalFailure(GraphSmoothError):
    def __init__(self, message, error_bound=None):
        super().__init__(message)
        self.error_bound = error_bound


class DegenerateSpectrum(GraphSmoothError):
    pass


class EmptyBatch(GraphSmoothError):
    pass


class ZeroSignal(GraphSmoothError):
    pass


class NonPositiveSigma(GraphSmoothError, ValueError):
    pass


class InvalidOrder(GraphSmoothError, ValueError):
    pass


class ParseError(GraphSmoothError):
    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class ColumnCountMismatch(ParseError):
    pass
