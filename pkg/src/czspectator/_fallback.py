"""Pure-numpy version of the compiled propagator in ``_magnus.pyx``.

Step propagators are built in batches with a stacked ``eigh`` and then applied
to the state one after another.
"""

import numpy as np

_CHUNK = 2048
_SQRT3_12 = np.sqrt(3.0) / 12.0


def evolve(h0, h1, comm, fa, fb, dt, psi):
    h0 = np.asarray(h0, dtype=complex)
    h1 = np.asarray(h1, dtype=complex)
    comm = np.asarray(comm, dtype=complex)
    fa = np.asarray(fa, dtype=float)
    fb = np.asarray(fb, dtype=float)
    psi = np.array(psi, dtype=complex, copy=True)
    if fa.shape != fb.shape:
        raise ValueError("fa and fb must have the same length")
    if not (h0.shape == h1.shape == comm.shape) or psi.shape[0] != h0.shape[0]:
        raise ValueError("operator and state dimensions disagree")

    for start in range(0, fa.size, _CHUNK):
        a = fa[start:start + _CHUNK]
        b = fb[start:start + _CHUNK]
        s = 0.5 * dt * (a + b)
        d = _SQRT3_12 * dt * dt * (a - b)
        k = (dt * h0)[None] + s[:, None, None] * h1[None] - 1j * d[:, None, None] * comm[None]
        w, v = np.linalg.eigh(k)
        u = (v * np.exp(-1j * w)[:, None, :]) @ np.conj(np.swapaxes(v, 1, 2))
        for step in u:
            psi = step @ psi
    return psi
