"""Kernel backend selection.

The hot inner loops (FIR convolution, dilated 1D convolution, 2D/3D
convolution) exist twice: a numba @njit version and a pure-numpy version.
Selection happens once at import time from the ATTNPIPE_BACKEND environment
variable:

    ATTNPIPE_BACKEND=numba   use numba kernels (error if numba is missing)
    ATTNPIPE_BACKEND=numpy   force the pure-numpy path
    (unset)                  numba if importable, numpy otherwise
"""

import os

_env = os.environ.get("ATTNPIPE_BACKEND", "").strip().lower()

if _env not in ("", "numba", "numpy"):
    raise RuntimeError(f"ATTNPIPE_BACKEND must be 'numba' or 'numpy', got {_env!r}")

if _env == "numpy":
    HAS_NUMBA = False
else:
    try:
        import numba  # noqa: F401

        HAS_NUMBA = True
    except ImportError:
        if _env == "numba":
            raise RuntimeError("ATTNPIPE_BACKEND=numba but numba is not installed")
        HAS_NUMBA = False

BACKEND = "numba" if HAS_NUMBA else "numpy"
