"""Exception hierarchy shared by the library and the CLI."""


class BsglError(Exception):
    """Base class for all library errors."""


class InputError(BsglError, ValueError):
    """Malformed or non-finite input data."""


class DimensionError(InputError):
    """Input has the wrong shape or too few observations."""


class ParameterError(BsglError, ValueError):
    """A tuning parameter is outside its valid range."""


class PreconditionError(BsglError):
    """An operation was called on data that violates its precondition,
    e.g. an unbalanced Laplacian handed to the spectral tools."""


class SolverError(BsglError, RuntimeError):
    """The LP machinery failed in a way the caller has to handle."""
