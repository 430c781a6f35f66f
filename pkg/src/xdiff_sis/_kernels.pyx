# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled inner loops: tridiagonal solves, flux stencils and the fused IMEX step.

Every function here has a twin in :mod:`xdiff_sis._pykernels` with the same
signature and the same floating-point operation order wherever practical.
"""
import numpy as np
cimport numpy as cnp
from libc.math cimport log1p, fabs

cnp.import_array()

BACKEND = "cython"


cdef inline double _face_weight(double t) noexcept nogil:
    # 1/log1p(t) - 1/t, the log-mean face weight; series near t = 0
    if fabs(t) < 1e-3:
        return 0.5 - t / 12.0 + t * t / 24.0 - 19.0 * t * t * t / 720.0
    return 1.0 / log1p(t) - 1.0 / t


cdef void _thomas(double[::1] sub, double[::1] diag, double[::1] sup,
                  double[::1] rhs, double[::1] out, double[::1] work) noexcept nogil:
    cdef Py_ssize_t n = diag.shape[0]
    cdef Py_ssize_t k
    cdef double denom
    denom = diag[0]
    work[0] = sup[0] / denom
    out[0] = rhs[0] / denom
    for k in range(1, n):
        denom = diag[k] - sub[k] * work[k - 1]
        work[k] = sup[k] / denom
        out[k] = (rhs[k] - sub[k] * out[k - 1]) / denom
    for k in range(n - 2, -1, -1):
        out[k] = out[k] - work[k] * out[k + 1]


cdef void _neumann_solve(double r, double[::1] rhs, double[::1] out,
                         double[::1] work) noexcept nogil:
    # (Id - r*h^2*L) x = rhs with the zero-flux Laplacian: diag 1+2r, ends 1+r
    cdef Py_ssize_t n = rhs.shape[0]
    cdef Py_ssize_t k
    cdef double denom, d
    denom = 1.0 + r
    work[0] = -r / denom
    out[0] = rhs[0] / denom
    for k in range(1, n):
        d = 1.0 + r if k == n - 1 else 1.0 + 2.0 * r
        denom = d + r * work[k - 1]
        work[k] = -r / denom
        out[k] = (rhs[k] + r * out[k - 1]) / denom
    for k in range(n - 2, -1, -1):
        out[k] = out[k] - work[k] * out[k + 1]


cdef void _conservative_solve(double r, double[::1] rhs, double[::1] out,
                             double[::1] tmp, double[::1] work) noexcept nogil:
    # solve, then rebuild out = rhs + r*(flux differences of the solution) so
    # the discrete sum is preserved independently of the solve's backward error
    cdef Py_ssize_t n = rhs.shape[0]
    cdef Py_ssize_t j
    cdef double left = 0.0, right
    _neumann_solve(r, rhs, tmp, work)
    for j in range(n):
        right = tmp[j + 1] - tmp[j] if j < n - 1 else 0.0
        out[j] = rhs[j] + r * (right - left)
        left = right


def thomas(double[::1] sub, double[::1] diag, double[::1] sup, double[::1] rhs):
    """Solve a tridiagonal system; ``sub[0]`` and ``sup[-1]`` are ignored."""
    cdef Py_ssize_t n = diag.shape[0]
    out = np.empty(n)
    work = np.empty(n)
    _thomas(sub, diag, sup, rhs, out, work)
    return out


def neumann_solve(double r, double[::1] rhs):
    """Solve ``(Id - r*h^2*L) x = rhs`` for the zero-flux Laplacian ``L``."""
    cdef Py_ssize_t n = rhs.shape[0]
    out = np.empty(n)
    work = np.empty(n)
    _neumann_solve(r, rhs, out, work)
    return out


def laplacian(double[::1] u, double h):
    cdef Py_ssize_t n = u.shape[0]
    cdef Py_ssize_t j
    cdef double flux_left = 0.0, flux_right
    cdef double inv_h = 1.0 / h
    res = np.empty(n)
    cdef double[::1] r = res
    for j in range(n):
        if j < n - 1:
            flux_right = (u[j + 1] - u[j]) * inv_h
        else:
            flux_right = 0.0
        r[j] = (flux_right - flux_left) * inv_h
        flux_left = flux_right
    return res


def cross_divergence(double[::1] S, double[::1] I, double h, double chi,
                     double d_I, bint log_mean):
    cdef Py_ssize_t n = S.shape[0]
    cdef Py_ssize_t j
    cdef double flux_left = 0.0, flux_right, s_face, dS, t
    cdef double inv_h = 1.0 / h
    res = np.empty(n)
    cdef double[::1] r = res
    for j in range(n):
        if j < n - 1:
            dS = S[j + 1] - S[j]
            if log_mean and dS != 0.0:
                t = chi * dS / (d_I + chi * S[j])
                s_face = S[j] + dS * _face_weight(t)
            else:
                s_face = 0.5 * (S[j] + S[j + 1])
            flux_right = chi * s_face * (I[j + 1] - I[j]) * inv_h
        else:
            flux_right = 0.0
        r[j] = (flux_right - flux_left) * inv_h
        flux_left = flux_right
    return res


def incidence(double[::1] S, double[::1] I, double[::1] beta, double eps):
    cdef Py_ssize_t n = S.shape[0]
    cdef Py_ssize_t j
    cdef double total
    res = np.empty(n)
    cdef double[::1] r = res
    for j in range(n):
        total = S[j] + I[j]
        if total <= eps:
            r[j] = 0.0
        else:
            r[j] = beta[j] * S[j] * I[j] / total
    return res


def drift_bounds(double[::1] I, double h):
    """Return ``(max |grad I|, max |lap I|)`` over faces and cells."""
    cdef Py_ssize_t n = I.shape[0]
    cdef Py_ssize_t j
    cdef double g, gmax = 0.0, lmax = 0.0, left = 0.0, right, lap
    cdef double inv_h = 1.0 / h
    for j in range(n):
        right = (I[j + 1] - I[j]) * inv_h if j < n - 1 else 0.0
        g = fabs(right)
        if g > gmax:
            gmax = g
        lap = fabs(right - left) * inv_h
        if lap > lmax:
            lmax = lap
        left = right
    return gmax, lmax


def imex_step(double[::1] S, double[::1] I, double[::1] beta, double[::1] gamma,
              double[::1] lam, bint has_source, double d_S, double d_I,
              double chi, double dt, double h, double eps, bint log_mean):
    """One fused IMEX step; returns ``(S_new, I_new)``."""
    cdef Py_ssize_t n = S.shape[0]
    cdef Py_ssize_t j
    cdef double total, inc, dI, dS, flux_left, flux_right, s_face, dSface, t
    cdef double inv_h = 1.0 / h
    cdef double r_I = dt * d_I * inv_h * inv_h
    cdef double r_S = dt * d_S * inv_h * inv_h
    rhs_I_arr = np.empty(n)
    react_S_arr = np.empty(n)
    rhs_S_arr = np.empty(n)
    work_arr = np.empty(n)
    tmp_arr = np.empty(n)
    I_new_arr = np.empty(n)
    S_new_arr = np.empty(n)
    cdef double[::1] rhs_I = rhs_I_arr
    cdef double[::1] react_S = react_S_arr
    cdef double[::1] rhs_S = rhs_S_arr
    cdef double[::1] work = work_arr
    cdef double[::1] tmp = tmp_arr
    cdef double[::1] I_new = I_new_arr
    cdef double[::1] S_new = S_new_arr

    with nogil:
        for j in range(n):
            total = S[j] + I[j]
            if total <= eps:
                inc = 0.0
            else:
                inc = beta[j] * S[j] * I[j] / total
            dI = inc - gamma[j] * I[j]
            dS = -dI
            if has_source:
                dS = (lam[j] - S[j]) + dS
            rhs_I[j] = I[j] + dt * dI
            react_S[j] = dS
        _conservative_solve(r_I, rhs_I, I_new, tmp, work)

        flux_left = 0.0
        for j in range(n):
            if j < n - 1:
                dSface = S[j + 1] - S[j]
                if log_mean and dSface != 0.0:
                    t = chi * dSface / (d_I + chi * S[j])
                    s_face = S[j] + dSface * _face_weight(t)
                else:
                    s_face = 0.5 * (S[j] + S[j + 1])
                flux_right = chi * s_face * (I_new[j + 1] - I_new[j]) * inv_h
            else:
                flux_right = 0.0
            rhs_S[j] = S[j] + dt * ((flux_right - flux_left) * inv_h + react_S[j])
            flux_left = flux_right
        _conservative_solve(r_S, rhs_S, S_new, tmp, work)

    return S_new_arr, I_new_arr
