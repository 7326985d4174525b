"""Backend dispatch for the hot numeric kernels.

Two interchangeable implementations exist: numba-jitted loops and a pure
numpy fallback.  Selection is by the HARMONIC_LATTICE_BACKEND environment
variable ('numba' or 'numpy'); the default is numba when importable.
Both backends expose the same functions with identical semantics:

    sor_solve(boundary, omega, tol, max_sweeps) -> (grid, sweeps, residual)
    kernel_table(N) -> (2N-1)^2 x 4(2N-1) Poisson kernel matrix
    complex_scan_max(N, zs) -> per-z max of |g| over all boundary cells
                               and lines |m| <= N/2
"""

import os


def _select():
    choice = os.environ.get("HARMONIC_LATTICE_BACKEND", "").strip().lower()
    if choice not in ("", "numba", "numpy"):
        raise ValueError(f"HARMONIC_LATTICE_BACKEND must be 'numba' or 'numpy', got {choice!r}")
    if choice == "numpy":
        from . import numpy_impl as impl
        return impl
    try:
        from . import numba_impl as impl
    except ImportError:
        if choice == "numba":
            raise
        from . import numpy_impl as impl
    return impl


_impl = _select()

backend_name = _impl.BACKEND_NAME
sor_solve = _impl.sor_solve
kernel_table = _impl.kernel_table
complex_scan_max = _impl.complex_scan_max


def get_backend(name: str):
    """Load a specific backend module (used by the benchmark)."""
    if name == "numpy":
        from . import numpy_impl
        return numpy_impl
    if name == "numba":
        from . import numba_impl
        return numba_impl
    raise ValueError(f"unknown backend {name!r}")
