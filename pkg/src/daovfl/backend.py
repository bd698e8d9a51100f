"""Kernel backend selection.

The compiled extension (``daovfl._cykernels``) is preferred when present;
otherwise the NumPy reference backend is used.  Set ``DAOVFL_KERNELS`` to
``python`` or ``cython`` to force a choice (``cython`` raises if the
extension was not built).  Results can differ between backends in the last
float64 bit, so byte-stable comparisons must pin the backend.
"""

import os

_choice = os.environ.get("DAOVFL_KERNELS", "auto")

if _choice not in ("auto", "cython", "python"):
    raise ValueError(f"DAOVFL_KERNELS must be auto|cython|python, got {_choice!r}")

if _choice in ("auto", "cython"):
    try:
        from daovfl import _cykernels as _impl

        KERNELS = "cython"
    except ImportError:
        if _choice == "cython":
            raise
        from daovfl import _pykernels as _impl

        KERNELS = "python"
else:
    from daovfl import _pykernels as _impl

    KERNELS = "python"

LINEAR, RELU, TANH, SIGMOID = 0, 1, 2, 3
ACT_CODES = {"linear": LINEAR, "relu": RELU, "tanh": TANH, "sigmoid": SIGMOID}

layer_forward = _impl.layer_forward
layer_backward = _impl.layer_backward
sgd_update = _impl.sgd_update
adam_update = _impl.adam_update
quantize_midtread = _impl.quantize_midtread
