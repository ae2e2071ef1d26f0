"""Compiled batch kernel for the driven Euler-Maruyama recursion.

Bit-identical to _kernel_numpy.em_chunk: the per-step expression tree is the
same and the extension is built with -ffp-contract=off so the compiler does
not fuse multiply-adds. Keep any change here in lockstep with the .py file.
"""

import numpy as np

cimport numpy as cnp

cnp.import_array()


def em_chunk(const double[::1] x0, const double[:, ::1] z,
             const double[::1] xbar, double a, double sigma):
    """Advance a chunk of paths, accumulating the midpoint work sum.

    Returns (eta, acc); see _kernel_numpy.em_chunk for the contract.
    """
    cdef Py_ssize_t m = z.shape[0]
    cdef Py_ssize_t n = z.shape[1]
    if x0.shape[0] != m:
        raise ValueError("x0 length does not match chunk size")
    if xbar.shape[0] != n + 1:
        raise ValueError("protocol grid length must be n_steps + 1")
    eta_arr = np.empty(m, dtype=np.float64)
    acc_arr = np.empty(m, dtype=np.float64)
    cdef double[::1] eta = eta_arr
    cdef double[::1] acc = acc_arr
    cdef Py_ssize_t i, k
    cdef double x, xn, dx, xm, xbm, s
    with nogil:
        for i in range(m):
            x = x0[i]
            s = 0.0
            for k in range(n):
                xbm = 0.5 * (xbar[k] + xbar[k + 1])
                xn = (x - a * (x - xbar[k])) + sigma * z[i, k]
                dx = xn - x
                xm = 0.5 * (x + xn)
                s = s + (xbm - xm) * dx
                x = xn
            eta[i] = x
            acc[i] = s
    return eta_arr, acc_arr
