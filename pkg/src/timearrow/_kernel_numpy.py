"""Pure-NumPy batch kernel for the driven Euler-Maruyama recursion.

Op-for-op identical to the compiled kernel in _kernel_cy.pyx: each step
applies the same IEEE-754 double operations in the same order, so the two
backends produce bitwise-identical endpoints and functional sums. Keep any
change here in lockstep with the .pyx file.
"""

from __future__ import annotations

import numpy as np


def em_chunk(x0, z, xbar, a, sigma):
    """Advance a chunk of paths, accumulating the midpoint work sum.

    x0    : (m,) initial values.
    z     : (m, n) standard normal step increments.
    xbar  : (n+1,) protocol values on the time grid.
    a     : lambda*dt.
    sigma : sqrt(2*gamma*dt).

    Returns (eta, acc) where eta is the final value per path and acc is
    sum_k (xbar_mid_k - x_mid_k) * (x_{k+1} - x_k), unscaled.
    """
    m, n = z.shape
    x = np.array(x0, dtype=np.float64, copy=True)
    acc = np.zeros(m, dtype=np.float64)
    # step-major copy so each step reads a contiguous row
    zt = np.ascontiguousarray(z.T)
    t = np.empty(m, dtype=np.float64)
    u = np.empty(m, dtype=np.float64)
    xn = np.empty(m, dtype=np.float64)
    for k in range(n):
        xb0 = float(xbar[k])
        xbm = 0.5 * (xb0 + float(xbar[k + 1]))
        np.subtract(x, xb0, out=t)
        np.multiply(t, a, out=t)
        np.subtract(x, t, out=t)          # x - a*(x - xbar_k)
        np.multiply(zt[k], sigma, out=u)
        np.add(t, u, out=xn)              # x_{k+1}
        np.subtract(xn, x, out=t)         # dx
        np.add(x, xn, out=u)
        np.multiply(u, 0.5, out=u)        # x_mid
        np.subtract(xbm, u, out=u)
        np.multiply(u, t, out=u)          # (xbar_mid - x_mid) * dx
        np.add(acc, u, out=acc)
        x, xn = xn, x
    return x, acc


def em_chunk_store(x0, z, xbar, a, sigma):
    """em_chunk variant that also records full trajectories.

    Returns (paths, acc) with paths of shape (m, n+1). Endpoints and the
    accumulator match em_chunk bitwise.
    """
    m, n = z.shape
    paths = np.empty((m, n + 1), dtype=np.float64)
    paths[:, 0] = x0
    acc = np.zeros(m, dtype=np.float64)
    zt = np.ascontiguousarray(z.T)
    x = np.array(x0, dtype=np.float64, copy=True)
    t = np.empty(m, dtype=np.float64)
    u = np.empty(m, dtype=np.float64)
    xn = np.empty(m, dtype=np.float64)
    for k in range(n):
        xb0 = float(xbar[k])
        xbm = 0.5 * (xb0 + float(xbar[k + 1]))
        np.subtract(x, xb0, out=t)
        np.multiply(t, a, out=t)
        np.subtract(x, t, out=t)
        np.multiply(zt[k], sigma, out=u)
        np.add(t, u, out=xn)
        np.subtract(xn, x, out=t)
        np.add(x, xn, out=u)
        np.multiply(u, 0.5, out=u)
        np.subtract(xbm, u, out=u)
        np.multiply(u, t, out=u)
        np.add(acc, u, out=acc)
        paths[:, k + 1] = xn
        x, xn = xn, x
    return paths, acc
