"""Backend selection for the trajectory kernel.

The compiled kernel is used when importable; set ``OPTOENT_PURE_PYTHON=1`` to
force the numpy fallback.
"""

import os

from . import _em_py

_FORCE_PY = os.environ.get("OPTOENT_PURE_PYTHON", "").lower() in ("1", "true", "yes")

try:
    if _FORCE_PY:
        raise ImportError
    from . import _em as _em_c
except ImportError:
    _em_c = None

BACKENDS = {"python": _em_py.em_chunk}
if _em_c is not None:
    BACKENDS["cython"] = _em_c.em_chunk

DEFAULT_BACKEND = "cython" if _em_c is not None else "python"


def get_kernel(backend=None):
    name = backend or DEFAULT_BACKEND
    try:
        return name, BACKENDS[name]
    except KeyError:
        raise ValueError(f"kernel backend {name!r} unavailable; have {sorted(BACKENDS)}") from None
