"""Backend selection for the menu-search kernel.

The compiled extension is used when it is importable; otherwise the
pure-Python module is used. Set ``MENUABC_PURE_PYTHON=1`` to force the
fallback.
"""
import importlib
import os

from . import _pykernel

_FORCE_PURE = os.environ.get("MENUABC_PURE_PYTHON", "").strip() not in ("", "0")


def load_backend(name):
    """Return the kernel module named ``"cython"`` or ``"python"``."""
    if name == "python":
        return _pykernel
    if name == "cython":
        return importlib.import_module("menuabc._kernel")
    raise ValueError(f"unknown kernel backend {name!r}")


def available_backends():
    names = ["python"]
    try:
        load_backend("cython")
    except ImportError:
        pass
    else:
        names.insert(0, "cython")
    return names


if _FORCE_PURE:
    impl = _pykernel
else:
    try:
        impl = load_backend("cython")
    except ImportError:
        impl = _pykernel

BACKEND = impl.BACKEND
