"""Exception hierarchy shared across the package.

The CLI maps these onto exit codes: usage errors exit 1, data/config errors
exit 2, numerical failures exit 3.
"""


class JJShadowError(Exception):
    """Base class for all package errors."""


class GeometryError(JJShadowError):
    """Evaporator geometry violates its invariants (e.g. D <= 0)."""


class ShadowedError(JJShadowError):
    """An electrode is fully shadowed (computed width <= 0) at this point."""


class DataError(JJShadowError):
    """Malformed or inconsistent input data (CSV, layout, truth flags)."""


class ConfigError(JJShadowError):
    """Bad run configuration: unknown key, unparsable value, bad range."""


class FitError(JJShadowError):
    """A regression or radial fit is underdetermined or failed."""


class ExtractionError(JJShadowError):
    """Image width/area extraction found no usable edges."""


class TargetError(JJShadowError):
    """Pre-compensation target area is unattainable at this position."""
