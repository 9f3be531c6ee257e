"""Backend selection for the grid kernels.

The compiled extension is used when it imports; otherwise the pure-Python
reference is used. Set ``PARTIALCHAN_PURE=1`` to force the fallback.
"""
import os

from . import _pykernels

BACKEND = "python"
_impl = _pykernels

if os.environ.get("PARTIALCHAN_PURE", "") not in ("1", "true", "yes"):
    try:
        from . import _ckernels as _impl  # noqa: F811

        BACKEND = "cython"
    except ImportError:  # pragma: no cover - depends on the build
        _impl = _pykernels


def available_backends():
    """Names and modules of every backend importable in this environment."""
    out = {"python": _pykernels}
    try:
        from . import _ckernels

        out["cython"] = _ckernels
    except ImportError:  # pragma: no cover
        pass
    return out


segment_clear = _impl.segment_clear
unobserved_length = _impl.unobserved_length
image_paths = _impl.image_paths
observe = _impl.observe
frontier_step = _impl.frontier_step
