"""Kernel backend selection.

Prefers the compiled Cython extension; falls back to the pure-Python kernel
when the extension is missing or when ``RIVKIT_PURE_PYTHON=1`` is set.
"""

import os

if os.environ.get("RIVKIT_PURE_PYTHON", "") == "1":
    from rivkit import _iir_py as _impl
else:
    try:
        from rivkit import _iir as _impl  # type: ignore[attr-defined]
    except ImportError:
        from rivkit import _iir_py as _impl

BACKEND = _impl.BACKEND
filt = _impl.filt
