"""Hot numerical kernels with a compiled core and a numpy fallback.

The compiled extension is preferred when it imports cleanly.  Setting the
environment variable BENARD_PURE_PYTHON to a non-empty value forces the
numpy fallback, which is what the benchmark uses for comparison.
"""

import os

from benard.kernels import _fallback

if os.environ.get("BENARD_PURE_PYTHON"):
    _impl = _fallback
    HAVE_COMPILED = False
else:
    try:
        from benard.kernels import _ckernels as _impl

        HAVE_COMPILED = True
    except ImportError:
        _impl = _fallback
        HAVE_COMPILED = False

dz_centered = _impl.dz_centered
thomas_batch = _impl.thomas_batch

__all__ = ["dz_centered", "thomas_batch", "HAVE_COMPILED"]
