# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled Euler-Maruyama kernel for linear SDEs du = A u dt + diag(scale) dW."""

cdef enum:
    MAXDIM = 16


def em_chunk(const double[:, ::1] a, const double[::1] scale, double dt,
             double[:, ::1] u, const double[:, :, ::1] noise,
             double[:, :, ::1] acc, Py_ssize_t acc_start,
             double[:, :, ::1] record, Py_ssize_t stride):
    """Advance a batch of trajectories through one chunk of standard normals.

    u       (B, n)            state, updated in place
    noise   (B, steps, n)     standard normal draws
    acc     (B, n, n)         upper triangle += u uᵀ for steps k >= acc_start
    record  (B, steps//stride, n)  state after every stride-th step (stride > 0)
    """
    cdef Py_ssize_t nb = u.shape[0]
    cdef Py_ssize_t n = u.shape[1]
    cdef Py_ssize_t steps = noise.shape[1]
    cdef Py_ssize_t b, k, i, j
    cdef double x[MAXDIM]
    cdef double y[MAXDIM]
    cdef double s

    if n > MAXDIM:
        raise ValueError("state dimension above compiled limit")
    if a.shape[0] != n or a.shape[1] != n or scale.shape[0] != n:
        raise ValueError("drift/scale shape mismatch")
    if noise.shape[0] != nb or noise.shape[2] != n:
        raise ValueError("noise shape mismatch")
    if acc.shape[0] != nb or acc.shape[1] != n or acc.shape[2] != n:
        raise ValueError("accumulator shape mismatch")
    if stride > 0 and (record.shape[0] != nb or record.shape[1] < steps // stride or record.shape[2] != n):
        raise ValueError("record buffer too small")

    with nogil:
        for b in range(nb):
            for i in range(n):
                x[i] = u[b, i]
            for k in range(steps):
                for i in range(n):
                    s = 0.0
                    for j in range(n):
                        s = s + a[i, j] * x[j]
                    y[i] = x[i] + dt * s + scale[i] * noise[b, k, i]
                for i in range(n):
                    x[i] = y[i]
                if k >= acc_start:
                    for i in range(n):
                        for j in range(i, n):
                            acc[b, i, j] += x[i] * x[j]
                if stride > 0 and (k + 1) % stride == 0:
                    for i in range(n):
                        record[b, (k + 1) // stride - 1, i] = x[i]
            for i in range(n):
                u[b, i] = x[i]
