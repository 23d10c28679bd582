"""Backend dispatch for the hot numeric kernels.

Two interchangeable backends ship with the package:

* ``hairline.kernels._numba``: numba ``@njit`` loops (default).
* ``hairline.kernels._numpy``: pure-numpy fallback.

Set ``HAIRLINE_NO_NUMBA=1`` in the environment to force the numpy
path; it is also selected automatically when numba cannot be imported.
``benchmarks/bench_kernels.py`` compares the two.

All kernels operate on float64 C-contiguous arrays and are
deterministic: the same inputs produce bit-identical outputs
regardless of thread or worker counts.
"""

import os

_flag = os.environ.get("HAIRLINE_NO_NUMBA", "").strip().lower()
_disabled = _flag not in ("", "0", "false")

if _disabled:
    from . import _numpy as _impl
else:
    try:
        from . import _numba as _impl
    except ImportError:  # numba missing or broken: degrade silently
        from . import _numpy as _impl

BACKEND = _impl.BACKEND

conv2d_forward = _impl.conv2d_forward
conv2d_backward_input = _impl.conv2d_backward_input
conv2d_backward_params = _impl.conv2d_backward_params
maxpool_forward = _impl.maxpool_forward
maxpool_backward = _impl.maxpool_backward
bilinear_resize = _impl.bilinear_resize
label_components = _impl.label_components
