"""Backend selection for the round-based search kernels.

Two interchangeable implementations exist: a numba ``@njit`` one and a pure
numpy/python fallback. ``TRANSIT_PRUNE_BACKEND`` picks one explicitly
(``numba`` or ``numpy``); the default ``auto`` uses numba when it imports.
Both backends produce bit-identical labels, parents and counters; the test
suite asserts this, and benchmarks/compare_backends.py measures the gap.
"""
from __future__ import annotations

import os

# parent-record kinds shared by kernels, drivers and reconstruction
PK_NONE = 0
PK_SOURCE = 1
PK_RIDE = 2
PK_WALK = 3

_ENV_VAR = "TRANSIT_PRUNE_BACKEND"


def available_backends() -> list[str]:
    names = []
    try:
        import numba  # noqa: F401
        names.append("numba")
    except ImportError:
        pass
    names.append("numpy")
    return names


def resolve_backend(name: str | None = None) -> str:
    """Map an explicit name or the environment setting to a backend name."""
    if name is None:
        name = os.environ.get(_ENV_VAR, "auto")
    name = name.lower()
    if name == "auto":
        return "numba" if "numba" in available_backends() else "numpy"
    if name not in ("numba", "numpy"):
        raise ValueError(f"unknown backend {name!r} (use numba, numpy or auto)")
    if name == "numba" and "numba" not in available_backends():
        raise ValueError("numba backend requested but numba is not importable")
    return name


def get_kernels(name: str | None = None):
    """Return the kernel module for the resolved backend."""
    resolved = resolve_backend(name)
    if resolved == "numba":
        from . import numba_impl
        return numba_impl
    from . import numpy_impl
    return numpy_impl
