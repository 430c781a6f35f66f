"""Backend selection for the hot kernels.

The compiled extension ``xdiff_sis._kernels`` is preferred; if it is missing
(or ``XDIFF_SIS_PURE=1`` is set) the NumPy twin in ``_pykernels`` is used.
Both expose the same functions, so callers never branch on the backend.
"""
import logging
import os

from . import _pykernels

logger = logging.getLogger(__name__)


def _load():
    if os.environ.get("XDIFF_SIS_PURE", "") not in ("", "0"):
        return _pykernels
    try:
        from . import _kernels
    except ImportError:  # extension not built
        logger.debug("compiled kernels unavailable, using pure-Python fallback")
        return _pykernels
    return _kernels


_backend = _load()

BACKEND = _backend.BACKEND
thomas = _backend.thomas
neumann_solve = _backend.neumann_solve
laplacian = _backend.laplacian
cross_divergence = _backend.cross_divergence
incidence = _backend.incidence
drift_bounds = _backend.drift_bounds
imex_step = _backend.imex_step


def compiled_available():
    try:
        from . import _kernels  # noqa: F401
    except ImportError:
        return False
    return True


def get_backend(name):
    """Return the kernel module called ``name`` (``"cython"`` or ``"python"``)."""
    if name == "python":
        return _pykernels
    if name == "cython":
        from . import _kernels
        return _kernels
    raise ValueError(f"unknown kernel backend {name!r}")
