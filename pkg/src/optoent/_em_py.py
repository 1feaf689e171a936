"""Pure-numpy Euler-Maruyama kernel; same contract as the compiled ``_em.em_chunk``.

Vectorized across the trajectory batch, sequential in time.
"""

import numpy as np


def em_chunk(a, scale, dt, u, noise, acc, acc_start, record, stride):
    nb, steps, n = noise.shape
    at = np.ascontiguousarray(np.asarray(a).T)
    incr = noise * np.asarray(scale)
    states = np.empty((nb, steps, n))
    x = np.array(u, copy=True)
    for k in range(steps):
        x = x + dt * (x @ at) + incr[:, k]
        states[:, k] = x
    u[...] = x
    if acc_start < steps:
        tail = states[:, max(acc_start, 0):]
        acc += np.triu(np.ones((n, n))) * np.matmul(tail.transpose(0, 2, 1), tail)
    if stride > 0:
        m = steps // stride
        record[:, :m] = states[:, stride - 1::stride][:, :m]
