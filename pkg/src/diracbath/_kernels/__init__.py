"""Kernel backend selection: compiled extension if available, NumPy otherwise.

Set ``DIRACBATH_PURE_PYTHON=1`` to force the fallback (used by the
benchmark and the backend-equivalence tests).
"""

import os

from . import _fallback

if os.environ.get("DIRACBATH_PURE_PYTHON", "") == "1":
    _impl = _fallback
else:
    try:
        from . import _core as _impl
    except ImportError:
        _impl = _fallback

BACKEND = _impl.BACKEND
rk4_evolve = _impl.rk4_evolve
dipole_phase_sum = _impl.dipole_phase_sum


def backends():
    """All importable backends, name -> module."""
    out = {"python": _fallback}
    try:
        from . import _core
        out["compiled"] = _core
    except ImportError:
        pass
    return out
