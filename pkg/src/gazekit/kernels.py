"""Kernel backend selection.

The compiled extension is used when importable; set ``GAZEKIT_PURE_PYTHON=1``
to force the numpy fallback. Both backends expose the same five functions.
"""
import importlib
import os

BACKENDS = ("cython", "python")


def load_backend(name):
    """Return the kernel module for ``name`` ("cython" or "python")."""
    if name == "cython":
        return importlib.import_module("gazekit._kernels")
    if name == "python":
        return importlib.import_module("gazekit._kernels_py")
    raise ValueError(f"unknown kernel backend {name!r}")


def available_backends():
    names = []
    for name in BACKENDS:
        try:
            load_backend(name)
        except ImportError:
            continue
        names.append(name)
    return names


def _select():
    if os.environ.get("GAZEKIT_PURE_PYTHON", "") not in ("", "0"):
        return "python", load_backend("python")
    try:
        return "cython", load_backend("cython")
    except ImportError:
        return "python", load_backend("python")


BACKEND, _impl = _select()

lstm_recurrence = _impl.lstm_recurrence
lstm_recurrence_backward = _impl.lstm_recurrence_backward
resample_means = _impl.resample_means
run_lengths = _impl.run_lengths
window_starts = _impl.window_starts
