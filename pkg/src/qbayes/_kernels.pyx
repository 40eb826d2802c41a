# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled particle kernels; same contracts as ``_kernels_py``."""
import numpy as np
cimport numpy as cnp

cnp.import_array()


def born_likelihoods(states, effect):
    cdef const double complex[:, :, ::1] rho = np.ascontiguousarray(states, dtype=np.complex128)
    cdef const double complex[:, ::1] e = np.ascontiguousarray(effect, dtype=np.complex128)
    cdef Py_ssize_t n = rho.shape[0], d = rho.shape[1]
    cdef Py_ssize_t i, a, b
    cdef double acc
    out = np.empty(n, dtype=np.float64)
    cdef double[::1] o = out
    with nogil:
        for i in range(n):
            acc = 0.0
            for a in range(d):
                for b in range(d):
                    acc += (rho[i, a, b] * e[b, a]).real
            o[i] = acc
    return out


def weighted_tensor_power(weights, states, int n):
    cdef const double[::1] w = np.ascontiguousarray(weights, dtype=np.float64)
    cdef const double complex[:, :, ::1] rho = np.ascontiguousarray(states, dtype=np.complex128)
    cdef Py_ssize_t npart = rho.shape[0], d = rho.shape[1]
    cdef Py_ssize_t big = d ** n
    out = np.zeros((big, big), dtype=np.complex128)
    cdef double complex[:, ::1] o = out
    buf_a = np.empty(big * big, dtype=np.complex128)
    buf_b = np.empty(big * big, dtype=np.complex128)
    cdef double complex[::1] va = buf_a
    cdef double complex[::1] vb = buf_b
    cdef double complex* cur
    cdef double complex* nxt
    cdef double complex* tmp
    cdef double complex* acc = &o[0, 0]
    cdef const double complex* r
    cdef Py_ssize_t p, s, t, i, j, k, l, ns, row
    cdef double complex x
    cdef double wp
    with nogil:
        for p in range(npart):
            wp = w[p]
            if wp == 0.0:
                continue
            r = &rho[p, 0, 0]
            cur = &va[0]
            nxt = &vb[0]
            for i in range(d * d):
                cur[i] = r[i]
            s = d
            for t in range(n - 1):
                ns = s * d
                for i in range(s):
                    for k in range(d):
                        row = (i * d + k) * ns
                        for j in range(s):
                            x = cur[i * s + j]
                            for l in range(d):
                                nxt[row + j * d + l] = x * r[k * d + l]
                tmp = cur
                cur = nxt
                nxt = tmp
                s = ns
            for i in range(big * big):
                acc[i] = acc[i] + wp * cur[i]
    return out


def systematic_resample(weights, double u):
    cdef const double[::1] w = np.ascontiguousarray(weights, dtype=np.float64)
    cdef Py_ssize_t n = w.shape[0], i, j = 0
    out = np.empty(n, dtype=np.int64)
    cdef long long[::1] o = out
    cdef double total = 0.0, cum, pos
    for i in range(n):
        total += w[i]
    # running raw sum divided by total mirrors cumsum(w) / cumsum(w)[-1]
    cum = w[0]
    with nogil:
        for i in range(n):
            pos = (u + i) / n
            while cum / total <= pos and j < n - 1:
                j += 1
                cum += w[j]
            o[i] = j
    return out
