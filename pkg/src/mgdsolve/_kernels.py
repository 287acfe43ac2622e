"""Compiled inner loops.  Callers validate shapes and diagonals."""

import numba
import numpy as np


@numba.njit(cache=True, nogil=True)
def gauss_seidel(row_ptr, col_idx, values, diag, x, b, order):
    # Off-diagonal terms are accumulated in ascending column order.
    for t in range(order.shape[0]):
        i = order[t]
        s = b[i]
        for jj in range(row_ptr[i], row_ptr[i + 1]):
            j = col_idx[jj]
            if j != i:
                s -= values[jj] * x[j]
        x[i] = s / diag[i]


@numba.njit(cache=True, nogil=True)
def residual(row_ptr, col_idx, values, x, b):
    n = b.shape[0]
    r = np.empty(n)
    for i in range(n):
        s = 0.0
        for jj in range(row_ptr[i], row_ptr[i + 1]):
            s += values[jj] * x[col_idx[jj]]
        r[i] = b[i] - s
    return r
