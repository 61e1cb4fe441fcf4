"""Hot numeric loops with two interchangeable backends.

The compiled Cython extension is preferred; the pure-python module is the
fallback when the extension was not built. Set ``EEGPIPE_KERNELS=python``
to force the fallback (or ``=ext`` to require the extension)."""

import os

_forced = os.environ.get("EEGPIPE_KERNELS", "").strip().lower()
if _forced not in ("", "ext", "python"):
    raise RuntimeError(f"EEGPIPE_KERNELS must be 'ext' or 'python', got {_forced!r}")

if _forced == "python":
    from . import _py as _impl
    BACKEND = "python"
else:
    try:
        from . import _ext as _impl  # type: ignore[attr-defined]
        BACKEND = "ext"
    except ImportError:
        if _forced == "ext":
            raise
        from . import _py as _impl
        BACKEND = "python"

lfilter = _impl.lfilter
windowed_sumsq = _impl.windowed_sumsq
maxpool_columns = _impl.maxpool_columns

__all__ = ["BACKEND", "lfilter", "windowed_sumsq", "maxpool_columns"]
