"""Exception hierarchy.

Everything raised deliberately by the package derives from `CogmapError`.
`InputError` covers bad files, names and arguments; `NumericalError` covers
models or data the numerics cannot handle (the CLI maps these to exit 2).
"""


class CogmapError(Exception):
    pass


class InputError(CogmapError, ValueError):
    pass


class NumericalError(CogmapError, ArithmeticError):
    pass


# data
class SchemaError(InputError):
    pass


class DuplicateKeyError(InputError):
    pass


class MappingError(InputError):
    pass


# stats
class DegenerateColumnError(InputError):
    pass


class InsufficientDataError(InputError):
    pass


class DimensionError(InputError):
    pass


# model
class DuplicateEdgeError(InputError):
    pass


class UnknownIndicatorError(InputError):
    pass


class UnknownEdgeError(InputError):
    pass


class EdgeConflictError(InputError):
    pass


class FormatError(InputError):
    """Malformed persisted file. `position` locates the problem (offset or path)."""

    def __init__(self, message, position=None):
        if position is not None:
            message = f"{message} (at {position})"
        super().__init__(message)
        self.position = position


class ScenarioError(InputError):
    pass


class SpectralEstimateError(NumericalError):
    """Power iteration did not settle. `bound` is a guaranteed upper bound on rho(A)."""

    def __init__(self, message, bound, estimate=None):
        super().__init__(f"{message}; spectral radius <= {bound:.6g}")
        self.bound = bound
        self.estimate = estimate


class NotContractiveError(NumericalError):
    def __init__(self, message, spectral_radius=None):
        super().__init__(message)
        self.spectral_radius = spectral_radius


class SolveError(NumericalError):
    pass
