"""Back-end selection for the search kernels.

The compiled core is used when importable. Set PALIGN_PURE_PYTHON=1 to force
the pure-Python mirror.
"""

import os

from . import _kernels_py

_compiled = None
if os.environ.get("PALIGN_PURE_PYTHON") != "1":
    try:
        from . import _kernels as _compiled
    except ImportError:
        _compiled = None

BACKENDS = {"python": _kernels_py}
if _compiled is not None:
    BACKENDS["compiled"] = _compiled

backend = _compiled if _compiled is not None else _kernels_py
BACKEND_NAME = "compiled" if _compiled is not None else "python"


def get(name=None):
    if name is None:
        return backend
    try:
        return BACKENDS[name]
    except KeyError:
        raise ValueError(f"backend {name!r} unavailable; have {sorted(BACKENDS)}") from None
