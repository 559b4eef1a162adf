"""Exception types shared across the package.

The CLI maps these onto exit codes, so keep the hierarchy flat.
"""


class ParameterError(ValueError):
    """Invalid scalar argument (sizes, counts, thresholds)."""


class ShapeError(ValueError):
    """Array shape does not match the pattern or transform."""


class PatternMismatchError(ValueError):
    """Descriptor was produced by a different pattern than the one supplied."""


class DescriptorTypeError(TypeError):
    """Binary payload handed to a real-valued solver, or vice versa."""


class FormatError(ValueError):
    """Corrupted or unsupported file content."""
