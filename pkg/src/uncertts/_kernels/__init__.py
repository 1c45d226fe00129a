"""Backend selection for the distance kernels.

The compiled extension is preferred. Set ``UNCERTTS_PURE_PYTHON=1`` to force
the numpy fallback (useful for benchmarking or when debugging the extension).
"""
import importlib
import logging
import os

from . import _pykernels

logger = logging.getLogger(__name__)


def _load_compiled():
    try:
        return importlib.import_module(__name__ + "._ckernels")
    except ImportError:
        return None


_compiled = None
if os.environ.get("UNCERTTS_PURE_PYTHON", "") in ("", "0"):
    _compiled = _load_compiled()
    if _compiled is None:
        logger.debug("compiled kernels not available, using numpy fallback")

backend = _compiled if _compiled is not None else _pykernels
BACKEND_NAME = "cython" if _compiled is not None else "python"

lp_rows = backend.lp_rows
munich_count = backend.munich_count
quantized_convolve = backend.quantized_convolve
weighted_window = backend.weighted_window
dust_rows = backend.dust_rows
proud_rows = backend.proud_rows


def available_backends():
    """Map of backend name to kernel module, compiled first when it loads."""
    out = {}
    compiled = _compiled if _compiled is not None else _load_compiled()
    if compiled is not None:
        out["cython"] = compiled
    out["python"] = _pykernels
    return out
