"""Select the compiled model kernels when available.

Set ``NSFIT_PURE_PYTHON=1`` to force the numpy fallback.
"""

import os

from . import _kernels_py

BACKEND = "python"
model_values = _kernels_py.model_values
model_and_jacobian = _kernels_py.model_and_jacobian

if os.environ.get("NSFIT_PURE_PYTHON", "").strip() not in ("1", "true", "yes"):
    try:
        from . import _kernels_cy
    except ImportError:
        pass
    else:
        BACKEND = "cython"
        model_values = _kernels_cy.model_values
        model_and_jacobian = _kernels_cy.model_and_jacobian
