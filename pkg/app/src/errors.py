"""Exception hierarchy shared by every module.

Input-validation errors also derive from ``ValueError`` so callers that only
know the builtin still catch them.
"""


class ToolkitError(Exception):
    """Base class for all errors raised by the toolkit"""


class DomainError(ToolkitError, ValueError):
    """A point lies outside Σₙ, Δₙ₋₁, the cube or the scaled triangle"""


class DimensionMismatch(ToolkitError, ValueError):
    pass


class IndexOutOfRange(ToolkitError, IndexError):
    pass


class InvalidValues(ToolkitError, ValueError):
    pass


class InvalidWeights(ToolkitError, ValueError):
    pass


class InvalidDensity(ToolkitError, ValueError):
    pass


class InvalidInterval(ToolkitError, ValueError):
    pass


class DegenerateInput(ToolkitError, ValueError):
    pass


class InstanceFormatError(ToolkitError, ValueError):
    """An instance or solution document failed validation"""


class NotSparse(ToolkitError):
    pass


class InvariantBroken(ToolkitError):
    """An oracle answered in a way no KKM covering can"""


class NoPanchromaticCell(ToolkitError):
    pass


class MissingWitnesses(ToolkitError):
    pass


class TooManySubsets(ToolkitError):
    pass


class NoSuchReduction(ToolkitError):
    pass


class NotRenderable(ToolkitError):
    pass


class BackmapError(ToolkitError):
    """A target solution cannot be translated back to the source problem"""
