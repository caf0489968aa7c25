"""Select the compiled kernels when available, else the numpy twins.

Set ``LSBTS_PURE_PYTHON=1`` to force the pure-Python path.
"""

import os

if os.environ.get("LSBTS_PURE_PYTHON", "") not in ("", "0"):
    from . import _kernels_py as _impl
    BACKEND = "python"
else:
    try:
        from . import _kernels as _impl
        BACKEND = "cython"
    except ImportError:  # extension not built
        from . import _kernels_py as _impl
        BACKEND = "python"

from . import _kernels_py as python_backend  # noqa: E402

CovarianceNotPD = _impl.CovarianceNotPD
ar_nll_sum = _impl.ar_nll_sum
ar_innovations = _impl.ar_innovations
ar_simulate = _impl.ar_simulate
fd_nll_sum = _impl.fd_nll_sum
fd_innovations = _impl.fd_innovations
ld_innovations = _impl.ld_innovations
nll_sum = _impl.nll_sum

# the two backends raise distinct classes; catch either
NOT_PD_ERRORS = (_impl.CovarianceNotPD, python_backend.CovarianceNotPD)


def get_backend(name=None):
    """Return the kernel module ``name`` ('cython' or 'python'); default is the active one."""
    if name is None:
        return _impl
    if name == "python":
        return python_backend
    if name == "cython":
        from . import _kernels
        return _kernels
    raise ValueError(f"unknown backend {name!r}")
