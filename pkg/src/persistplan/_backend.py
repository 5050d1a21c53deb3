"""Select the compiled kernels when available, else the numpy fallback.

Set ``PERSISTPLAN_BACKEND=python`` to force the fallback.
"""

import os

from . import _kernels_py

python = _kernels_py

if os.environ.get("PERSISTPLAN_BACKEND", "").lower() == "python":
    kernels = _kernels_py
    compiled = None
else:
    try:
        from . import _kernels as compiled
    except ImportError:
        compiled = None
    kernels = compiled if compiled is not None else _kernels_py

NAME = "cython" if kernels is compiled else "python"
