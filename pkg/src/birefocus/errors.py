"""Exception types shared across the package.

Two failure families matter to callers (and to the command line tool, which
maps them to exit codes): bad input and numerical breakdown.
"""


class BirefocusError(Exception):
    """Base class for errors raised by this package."""


class InputError(BirefocusError, ValueError):
    """Invalid user input: bad parameter, malformed file, out-of-range value."""


class CatalogError(InputError):
    """A material catalog file could not be parsed or validated."""


class StackFileError(InputError):
    """A layer-stack file could not be parsed or validated."""


class EvanescentWaveError(InputError):
    """Transverse direction cosine too large: the wave would be evanescent."""


class NumericalError(BirefocusError, RuntimeError):
    """A computation failed to converge or produced a non-finite result."""
