"""Backend selection for the hot 1-D kernels.

The compiled extension is preferred; the numpy module is used when the
extension is missing or ``WEIGHTFLOW_PURE`` is set to a non-empty value other
than ``0``.
"""
import os

from . import _pykernels

try:
    from . import _ckernels
except ImportError:  # extension not built
    _ckernels = None

BACKENDS = {"python": _pykernels}
if _ckernels is not None:
    BACKENDS["compiled"] = _ckernels

if os.environ.get("WEIGHTFLOW_PURE", "0") not in ("", "0") or _ckernels is None:
    BACKEND = "python"
else:
    BACKEND = "compiled"

kernels = BACKENDS[BACKEND]


def get_backend(name=None):
    """Return the kernel module called ``name`` (default: the active one)."""
    if name is None:
        return kernels
    try:
        return BACKENDS[name]
    except KeyError:
        raise ValueError(f"backend {name!r} unavailable; have {sorted(BACKENDS)}") from None
