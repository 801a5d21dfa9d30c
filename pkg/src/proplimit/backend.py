"""Kernel backend selection.

The compiled Cython extension is preferred when importable; otherwise the
numpy fallback in ``_kernels_py`` is used.  Set ``PROPLIMIT_BACKEND`` to
``cython`` or ``python`` to force a choice (forcing an unavailable backend
is an error).  Both backends are engineered to be bit-identical, so the
selection affects wall time only.
"""

from __future__ import annotations

import os

from . import _kernels_py

BACKEND_ENV = "PROPLIMIT_BACKEND"

try:
    from . import _kernels as _compiled
except ImportError:  # extension not built
    _compiled = None


def _select():
    forced = os.environ.get(BACKEND_ENV, "").strip().lower()
    if forced == "python":
        return _kernels_py
    if forced == "cython":
        if _compiled is None:
            raise ImportError(
                f"{BACKEND_ENV}=cython but the compiled extension is not available"
            )
        return _compiled
    if forced:
        raise ValueError(f"unknown {BACKEND_ENV} value {forced!r}")
    return _compiled if _compiled is not None else _kernels_py


_active = _select()


def active_backend() -> str:
    """Name of the kernel backend in use: ``cython`` or ``python``."""
    return _active.NAME


def available_backends() -> tuple[str, ...]:
    return ("cython", "python") if _compiled is not None else ("python",)


def get_kernels(name: str | None = None):
    """Return the kernel module; ``name`` overrides the import-time choice."""
    if name is None:
        return _active
    if name == "python":
        return _kernels_py
    if name == "cython":
        if _compiled is None:
            raise ValueError("compiled backend not available")
        return _compiled
    raise ValueError(f"unknown backend {name!r}")


def lt_chain_multiply(diag, low):
    return _active.lt_chain_multiply(diag, low)


def suffix_mac(w, g, dw):
    return _active.suffix_mac(w, g, dw)
