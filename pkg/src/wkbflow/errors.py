"""Exception hierarchy.

Every error carries an ``exit_code`` used by the command line runner:
2 for configuration problems, 3 for numerical failures and 4 for
geometries the construction does not cover.
"""


class WKBError(Exception):
    exit_code = 3

    def __init__(self, message, **context):
        super().__init__(message)
        self.context = context

    def to_dict(self):
        return {
            "error": type(self).__name__,
            "message": str(self),
            "context": {k: _plain(v) for k, v in self.context.items()},
            "exit_code": self.exit_code,
        }


class ConfigError(WKBError):
    exit_code = 2


class NumericalError(WKBError):
    exit_code = 3


class RootFindingError(NumericalError):
    pass


class BranchError(NumericalError):
    """A path came within the clearance radius of a turning point."""


class QuadratureError(NumericalError):
    pass


class FlowError(NumericalError):
    pass


class GateError(NumericalError):
    """The step parameter h is too large for the envelope at a point."""


class RegionError(NumericalError):
    """A point or a stencil lies outside the admissible region."""


class UnsupportedGeometryError(WKBError):
    exit_code = 4


def _plain(value):
    if isinstance(value, complex):
        return [value.real, value.imag]
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    if isinstance(value, (str, int, float, bool)) or value is None:
        return value
    return repr(value)
