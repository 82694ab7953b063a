"""Backend selection for the numerical hot loops.

The compiled extension ``wkbflow._ckernels`` is used when it imports;
otherwise, or when ``WKBFLOW_PURE_PYTHON=1`` is set, the pure Python
versions in ``wkbflow._pykernels`` are used.  Both expose the same
functions with the same semantics.
"""
import os

from . import _pykernels

STATUS_DONE = _pykernels.STATUS_DONE
STATUS_CLEARANCE = _pykernels.STATUS_CLEARANCE
STATUS_UNDERFLOW = _pykernels.STATUS_UNDERFLOW
STATUS_MAX_STEPS = _pykernels.STATUS_MAX_STEPS
STATUS_RADIUS = _pykernels.STATUS_RADIUS

_NAMES = ("horner", "align_sqrt_sequence", "linear_recurrence", "flow_integrate")


def _load(prefer_compiled=True):
    if prefer_compiled and os.environ.get("WKBFLOW_PURE_PYTHON", "") not in ("1", "true", "yes"):
        try:
            from . import _ckernels
            return _ckernels, "cython"
        except ImportError:
            pass
    return _pykernels, "python"


_impl, BACKEND = _load()

horner = _impl.horner
align_sqrt_sequence = _impl.align_sqrt_sequence
linear_recurrence = _impl.linear_recurrence
flow_integrate = _impl.flow_integrate


def backends():
    """Map backend name to module for every backend importable here."""
    out = {"python": _pykernels}
    try:
        from . import _ckernels
        out["cython"] = _ckernels
    except ImportError:
        pass
    return out
