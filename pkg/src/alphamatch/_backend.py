"""Select the kernel implementation at import time.

The compiled extension is used when it was built; otherwise the numpy
fallback is loaded.  Set ``ALPHAMATCH_BACKEND=python`` to force the fallback.
"""

import os

if os.environ.get("ALPHAMATCH_BACKEND", "").lower() == "python":
    from . import _pykernels as kernels
else:
    try:
        from . import _ckernels as kernels
    except ImportError:  # extension not built
        from . import _pykernels as kernels

BACKEND = kernels.BACKEND

__all__ = ["kernels", "BACKEND"]
