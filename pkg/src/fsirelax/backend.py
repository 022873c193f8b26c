"""Selection of the time-loop kernel.

The compiled Cython kernel is used when it was built; otherwise the numpy
implementation takes over. ``FSIRELAX_BACKEND=python`` forces the fallback,
``FSIRELAX_BACKEND=c`` makes a missing extension an import error.
"""

import os

from . import _pykernel

_choice = os.environ.get("FSIRELAX_BACKEND", "").strip().lower()

try:
    from . import _ckernel
except ImportError:
    if _choice == "c":
        raise
    _ckernel = None

KERNELS = {"python": _pykernel}
if _ckernel is not None:
    KERNELS["c"] = _ckernel

default = _pykernel if _choice == "python" or _ckernel is None else _ckernel


def get(name=None):
    """Kernel module by name (``"c"`` or ``"python"``); ``None`` gives the default."""
    if name is None:
        return default
    try:
        return KERNELS[name]
    except KeyError:
        raise ValueError(f"backend {name!r} not available (have {sorted(KERNELS)})") from None
