"""Kernel backend selection: compiled if available, numpy otherwise.

Set AMPSI_PURE_PYTHON=1 to force the numpy kernels (used by the backend
parity tests and the benchmark).
"""

import os

if os.environ.get("AMPSI_PURE_PYTHON"):
    from . import _kernels_py as _impl
else:
    try:
        from . import _kernels_c as _impl
    except ImportError:
        from . import _kernels_py as _impl

denoise_pass = _impl.denoise_pass
BACKEND = _impl.BACKEND_NAME
