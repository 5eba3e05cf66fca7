# Compiled fixed-step propagator for H(t) = H0 + f(t) H1.
#
# Each step is the two-point Gauss-Legendre Magnus expansion of order four,
# U = exp(-i K). Its action on the state block is summed as a Taylor series
# until the next term drops below TERM_TOL, which keeps the step unitary to
# rounding error without an eigendecomposition.

from libc.math cimport fabs, sqrt
from libc.stdlib cimport free, malloc

cdef double TERM_TOL = 1e-17
cdef int MAX_TERMS = 60
cdef double MAX_STEP_NORM = 1.0


def evolve(
    const double complex[:, ::1] h0,
    const double complex[:, ::1] h1,
    const double complex[:, ::1] comm,
    const double[::1] fa,
    const double[::1] fb,
    double dt,
    double complex[:, ::1] psi,
):
    """Propagate the columns of ``psi`` in place and return it.

    ``h0``, ``h1`` are in angular units (rad/ns), ``comm`` is ``[h0, h1]`` and
    ``fa``/``fb`` hold the drive envelope at the two Gauss points of each step.
    """
    cdef int n = h0.shape[0]
    cdef int m = psi.shape[1]
    cdef Py_ssize_t nsteps = fa.shape[0]
    if h1.shape[0] != n or comm.shape[0] != n or psi.shape[0] != n:
        raise ValueError("operator and state dimensions disagree")
    if fb.shape[0] != nsteps:
        raise ValueError("fa and fb must have the same length")

    cdef double c1 = 0.5 * dt
    cdef double c2 = sqrt(3.0) / 12.0 * dt * dt
    # real and imaginary parts kept apart: plain double arithmetic avoids the
    # NaN-checking complex multiply of C99
    cdef double *kr = <double *> malloc(n * n * sizeof(double))
    cdef double *ki = <double *> malloc(n * n * sizeof(double))
    cdef double *tr = <double *> malloc(n * m * sizeof(double))
    cdef double *ti = <double *> malloc(n * m * sizeof(double))
    cdef double *nr = <double *> malloc(n * m * sizeof(double))
    cdef double *ni = <double *> malloc(n * m * sizeof(double))
    cdef double *pr = <double *> malloc(n * m * sizeof(double))
    cdef double *pi = <double *> malloc(n * m * sizeof(double))
    if not (kr and ki and tr and ti and nr and ni and pr and pi):
        free(kr); free(ki); free(tr); free(ti); free(nr); free(ni); free(pr); free(pi)
        raise MemoryError()

    cdef Py_ssize_t k
    cdef int i, j, c, order
    cdef double s, d, big, rowsum, inv, ar, ai, xr, xi, yr, yi
    cdef double complex val
    cdef double *swap
    try:
        for i in range(n):
            for c in range(m):
                pr[i * m + c] = psi[i, c].real
                pi[i * m + c] = psi[i, c].imag
        for k in range(nsteps):
            s = c1 * (fa[k] + fb[k])
            d = c2 * (fa[k] - fb[k])
            # -1j * K,  K = dt*h0 + s*h1 - 1j*d*comm
            big = 0.0
            for i in range(n):
                rowsum = 0.0
                for j in range(n):
                    val = -1j * (dt * h0[i, j] + s * h1[i, j]) - d * comm[i, j]
                    kr[i * n + j] = val.real
                    ki[i * n + j] = val.imag
                    rowsum += fabs(val.real) + fabs(val.imag)
                if rowsum > big:
                    big = rowsum
            if big > MAX_STEP_NORM:
                raise ValueError(f"step {k}: |K| = {big:.3g} too large, reduce dt")
            for i in range(n * m):
                tr[i] = pr[i]
                ti[i] = pi[i]
            for order in range(1, MAX_TERMS + 1):
                inv = 1.0 / order
                big = 0.0
                for i in range(n):
                    for c in range(m):
                        ar = 0.0
                        ai = 0.0
                        for j in range(n):
                            xr = kr[i * n + j]
                            xi = ki[i * n + j]
                            yr = tr[j * m + c]
                            yi = ti[j * m + c]
                            ar += xr * yr - xi * yi
                            ai += xr * yi + xi * yr
                        ar *= inv
                        ai *= inv
                        nr[i * m + c] = ar
                        ni[i * m + c] = ai
                        pr[i * m + c] += ar
                        pi[i * m + c] += ai
                        if fabs(ar) + fabs(ai) > big:
                            big = fabs(ar) + fabs(ai)
                swap = tr
                tr = nr
                nr = swap
                swap = ti
                ti = ni
                ni = swap
                if big < TERM_TOL:
                    break
            else:
                raise ArithmeticError(f"Taylor series did not converge at step {k}")
        for i in range(n):
            for c in range(m):
                psi[i, c] = pr[i * m + c] + 1j * pi[i * m + c]
    finally:
        free(kr); free(ki); free(tr); free(ti); free(nr); free(ni); free(pr); free(pi)
    return psi
