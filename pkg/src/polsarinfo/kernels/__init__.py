"""Hot numeric kernels with a numba path and a pure-numpy fallback.

The backend is chosen once at import time. Set ``POLSARINFO_BACKEND=numpy``
to force the fallback, or ``POLSARINFO_BACKEND=numba`` to require numba.
Both modules expose the same functions; :func:`get_backend` returns either
one explicitly, which the benchmarks and equivalence tests use.
"""
import os
import types

from . import _numpy

try:
    from . import _numba

    HAS_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    _numba = None
    HAS_NUMBA = False

__all__ = [
    "BACKEND",
    "HAS_NUMBA",
    "get_backend",
    "box_sum",
    "scene_draws",
    "directional_lee",
    "smo_solve",
    "rbf_matrix",
    "decision_values",
]


def get_backend(name):
    if name == "numpy":
        return _numpy
    if name == "numba":
        if _numba is None:
            raise RuntimeError("numba backend requested but numba is not importable")
        return _numba
    raise ValueError(f"unknown backend {name!r}; expected 'numba' or 'numpy'")


def _select():
    requested = os.environ.get("POLSARINFO_BACKEND", "").strip().lower()
    if requested:
        return requested
    return "numba" if HAS_NUMBA else "numpy"


BACKEND = _select()
_impl: types.ModuleType = get_backend(BACKEND)

box_sum = _impl.box_sum
scene_draws = _impl.scene_draws
directional_lee = _impl.directional_lee
smo_solve = _impl.smo_solve
rbf_matrix = _impl.rbf_matrix
decision_values = _impl.decision_values
