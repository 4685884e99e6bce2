"""Kernel backend selection.

The compiled ``_kernels`` extension is used when it imports; otherwise
the pure-Python ``_fallback`` module.  Setting ``STARMAP_PURE_PYTHON=1``
forces the fallback.  ``STARMAP_THREADS`` caps worker threads for the
compiled kernels (0 or unset means one per CPU).
"""
import os

from . import _fallback

compiled = None
if os.environ.get("STARMAP_PURE_PYTHON", "") != "1":
    try:
        from . import _kernels as compiled
    except ImportError:  # pragma: no cover - depends on build
        compiled = None

kernels = compiled if compiled is not None else _fallback
BACKEND = "compiled" if compiled is not None else "python"


def get_kernels(name=None):
    """Return the kernel module by name ('compiled', 'python') or the default."""
    if name is None:
        return kernels
    if name == "python":
        return _fallback
    if name == "compiled":
        if compiled is None:
            raise RuntimeError("compiled kernels are not available; build the extension")
        return compiled
    raise ValueError(f"unknown backend {name!r}")


def thread_count():
    raw = os.environ.get("STARMAP_THREADS", "0").strip() or "0"
    try:
        requested = int(raw)
    except ValueError:
        raise ValueError(f"STARMAP_THREADS must be an integer, got {raw!r}") from None
    available = os.cpu_count() or 1
    if requested <= 0:
        return available
    return min(requested, available)
