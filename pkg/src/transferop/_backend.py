"""Select the compiled kernels when available, else the numpy fallback.

Set ``TRANSFEROP_BACKEND=python`` to force the fallback even when the
extension is built.
"""
import importlib
import os

from . import _pykernels

BACKENDS = ("cython", "python")


def load(name):
    """Return the kernel module for backend ``name``."""
    if name == "python":
        return _pykernels
    if name == "cython":
        return importlib.import_module("transferop._ckernels")
    raise ValueError(f"unknown backend {name!r}; expected one of {BACKENDS}")


def available():
    """Names of the backends importable in this installation."""
    names = []
    for name in BACKENDS:
        try:
            load(name)
        except ImportError:
            continue
        names.append(name)
    return names


def _select():
    wanted = os.environ.get("TRANSFEROP_BACKEND", "").strip().lower()
    if wanted:
        return wanted, load(wanted)
    try:
        return "cython", load("cython")
    except ImportError:
        return "python", _pykernels


BACKEND, kernels = _select()
