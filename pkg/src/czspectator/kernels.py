"""Backend selection for the time-stepping kernel.

The compiled extension ``czspectator._magnus`` is used when it imports;
otherwise the numpy implementation in ``_fallback`` takes over. Setting
``CZSPECTATOR_PURE_PYTHON=1`` forces the fallback.
"""

import os

import numpy as np

from czspectator import _fallback

try:
    if os.environ.get("CZSPECTATOR_PURE_PYTHON") == "1":
        raise ImportError("pure-python backend requested")
    from czspectator import _magnus
except ImportError:
    _magnus = None

BACKEND = "cython" if _magnus is not None else "python"

#: MHz -> rad/ns
ANGULAR = 2e-3 * np.pi


def available_backends():
    return ["cython", "python"] if _magnus is not None else ["python"]


def evolve(h0, h1, fa, fb, dt, psi, backend=None):
    """Propagate state columns ``psi`` under ``H(t) = h0 + f(t) h1``.

    ``h0`` and ``h1`` are in MHz (ordinary frequency), ``dt`` in ns; ``fa`` and
    ``fb`` sample the envelope at the two Gauss-Legendre nodes of every step.
    Returns the propagated states; the input array is not modified.
    """
    backend = backend or BACKEND
    psi = np.array(psi, dtype=complex, order="C", copy=True)
    if psi.ndim == 1:
        return evolve(h0, h1, fa, fb, dt, psi[:, None], backend)[:, 0]
    h0 = np.ascontiguousarray(h0, dtype=complex) * ANGULAR
    h1 = np.ascontiguousarray(h1, dtype=complex) * ANGULAR
    comm = np.ascontiguousarray(h0 @ h1 - h1 @ h0)
    fa = np.ascontiguousarray(fa, dtype=float)
    fb = np.ascontiguousarray(fb, dtype=float)
    if backend == "cython":
        if _magnus is None:
            raise RuntimeError("compiled backend is not built")
        return np.asarray(_magnus.evolve(h0, h1, comm, fa, fb, float(dt), psi))
    if backend == "python":
        return _fallback.evolve(h0, h1, comm, fa, fb, float(dt), psi)
    raise ValueError(f"unknown backend {backend!r}")


def gauss_nodes(t0, dt, nsteps):
    """Times of the two Gauss-Legendre nodes inside each of ``nsteps`` steps."""
    starts = t0 + dt * np.arange(nsteps)
    off = 0.5 * dt * (1.0 / np.sqrt(3.0))
    mid = starts + 0.5 * dt
    return mid - off, mid + off
