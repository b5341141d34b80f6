"""Allocation-free numeric kernels for the Lindblad RHS and the RK stepper.

Large temporaries (a 288x288 complex state is ~1.3 MB) are page-faulted on
every fresh allocation, which dominated the runtime of a pure-numpy RHS.
All kernels here write into caller-owned buffers.
"""
import numpy as np
from numba import njit


@njit(cache=True)
def csr_matmul_add(indptr, indices, data, x, out, alpha):
    """out += alpha * A @ x  (A in CSR form, x and out dense 2-D)."""
    ncol = out.shape[1]
    for i in range(indptr.size - 1):
        for p in range(indptr[i], indptr[i + 1]):
            c = alpha * data[p]
            k = indices[p]
            for j in range(ncol):
                out[i, j] += c * x[k, j]


@njit(cache=True)
def csr_matmul_adj_add(indptr, indices, data, x, out, alpha):
    """out += alpha * A @ x^+ ."""
    ncol = out.shape[1]
    for i in range(indptr.size - 1):
        for p in range(indptr[i], indptr[i + 1]):
            c = alpha * data[p]
            k = indices[p]
            for j in range(ncol):
                out[i, j] += c * np.conj(x[j, k])


@njit(cache=True)
def add_adjoint_inplace(x):
    """x <- x + x^+ (result exactly Hermitian)."""
    n = x.shape[0]
    for i in range(n):
        x[i, i] = 2.0 * x[i, i].real
        for j in range(i + 1, n):
            s = x[i, j] + np.conj(x[j, i])
            x[i, j] = s
            x[j, i] = np.conj(s)


@njit(cache=True)
def combine(y, ks, coeffs, h, out):
    """out = y + h * sum_i coeffs[i] * ks[i]  (1-D vectors)."""
    out[:] = y
    for i in range(coeffs.size):
        if coeffs[i] != 0.0:
            hc = h * coeffs[i]
            k = ks[i]
            for j in range(out.size):
                out[j] += hc * k[j]


@njit(cache=True)
def error_norm(y, y_new, ks, err_coeffs, h, rtol, atol, work):
    """Max over entries of |h sum_i e_i k_i| / (atol + rtol max(|y|, |y_new|))."""
    w = work.view(np.float64)
    kr = ks.view(np.float64)
    w[:] = 0.0
    for i in range(err_coeffs.size):
        if err_coeffs[i] != 0.0:
            hc = h * err_coeffs[i]
            k = kr[i]
            for j in range(w.size):
                w[j] += hc * k[j]
    worst = 0.0
    for j in range(y.size):
        a = y[j].real * y[j].real + y[j].imag * y[j].imag
        b = y_new[j].real * y_new[j].real + y_new[j].imag * y_new[j].imag
        sc = atol + rtol * np.sqrt(max(a, b))
        r = (w[2 * j] * w[2 * j] + w[2 * j + 1] * w[2 * j + 1]) / (sc * sc)
        if r > worst:
            worst = r
    return np.sqrt(worst)


@njit(cache=True)
def hermitize_inplace(x):
    """x <- (x + x^+) / 2."""
    n = x.shape[0]
    for i in range(n):
        x[i, i] = x[i, i].real
        for j in range(i + 1, n):
            s = 0.5 * (x[i, j] + np.conj(x[j, i]))
            x[i, j] = s
            x[j, i] = np.conj(s)
