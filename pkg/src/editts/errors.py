"""Exception types shared across the package.

All of them derive from :class:`ValueError` so callers that only care about
"bad input" can catch that.
"""


class EdittsError(ValueError):
    """Base class for input errors raised by this package."""


class DimensionError(EdittsError):
    """Grid or mask shapes do not line up."""


class RangeError(EdittsError):
    """A frame range or index falls outside the grid."""


class DomainError(EdittsError):
    """A diffusion time lies outside ``[0, 1]``."""


class ValidationError(EdittsError):
    """A value violates a type invariant (bad config, non-finite grid, ...)."""
