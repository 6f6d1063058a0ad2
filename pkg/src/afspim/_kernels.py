"""Selects the compiled kernels when available, else the numpy fallback.

Set ``AFSPIM_PURE_PYTHON=1`` to force the fallback.
"""
import os

if os.environ.get("AFSPIM_PURE_PYTHON"):
    from . import _pykernels as _impl
else:
    try:
        from . import _ckernels as _impl
    except ImportError:
        from . import _pykernels as _impl

IMPLEMENTATION = "cython" if _impl.__name__.endswith("_ckernels") else "numpy"

mattis_energy = _impl.mattis_energy
min_partition = _impl.min_partition
weighted_sum = _impl.weighted_sum
bilinear_shift = _impl.bilinear_shift
