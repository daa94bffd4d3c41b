"""Kernel backend selection: compiled extension when built, numpy otherwise.

The compiled backend is a Cython extension holding the literal triple loops;
the Python backend reproduces the same semantics with vectorized numpy.  Both
expose identical functions, so callers pick a backend module and stay
agnostic.  Set SPARSE_KMEANS_KERNELS=python (or compiled) to override the
default.
"""

from __future__ import annotations

import os

from . import _pykernels

try:
    from . import _kernels
except ImportError:  # extension not built; fall back to numpy
    _kernels = None

HAVE_COMPILED = _kernels is not None

_MODULES = {"python": _pykernels}
if HAVE_COMPILED:
    _MODULES["compiled"] = _kernels


def available_backends() -> tuple[str, ...]:
    return tuple(sorted(_MODULES))


def default_backend() -> str:
    env = os.environ.get("SPARSE_KMEANS_KERNELS")
    if env:
        if env not in _MODULES:
            raise ValueError(
                f"SPARSE_KMEANS_KERNELS={env!r} unavailable; "
                f"choices: {', '.join(available_backends())}"
            )
        return env
    return "compiled" if HAVE_COMPILED else "python"


def backend_module(name: str | None = None):
    if name is None:
        name = default_backend()
    try:
        return _MODULES[name]
    except KeyError:
        raise ValueError(
            f"unknown backend {name!r}; choices: {', '.join(available_backends())}"
        ) from None
