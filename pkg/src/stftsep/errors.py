"""Exception types shared across the package."""


class ShapeError(ValueError):
    """Tensor shapes or dimensions are inconsistent."""


class ParameterError(ValueError):
    """An argument lies outside its documented domain."""


class SpecError(ValueError):
    """A block or network specification violates its invariants."""


class FormatError(ValueError):
    """A serialized file does not match its documented layout."""


class DegenerateDataError(ValueError):
    """Input data has no usable variation (e.g. a zero-variance channel)."""
