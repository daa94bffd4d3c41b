# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled assignment kernels: the hot triple loops of every variant.

Loop order and tie handling match _pykernels exactly; counters are exact
integer tallies incremented inside the loops.  Counter slots: mults, adds,
inner_entries, branch_checks, merge_steps.
"""

import numpy as np

from libc.math cimport INFINITY
from libc.stdint cimport int32_t, int64_t

BACKEND_NAME = "compiled"


cdef inline int32_t _argmax_label(const double* rho, Py_ssize_t k) noexcept nogil:
    # Smallest index among maximizers wins: strict ">" from -inf.
    cdef double best = -INFINITY
    cdef int32_t lab = 1
    cdef Py_ssize_t j
    for j in range(k):
        if rho[j] > best:
            best = rho[j]
            lab = <int32_t>(j + 1)
    return lab


def assign_mfn(const int64_t[::1] indptr, const int32_t[::1] terms,
               const double[::1] vals, const double[:, ::1] means,
               double[::1] rho, int32_t[::1] labels, int64_t[::1] ctr):
    cdef Py_ssize_t n = indptr.shape[0] - 1
    cdef Py_ssize_t k = means.shape[0]
    cdef Py_ssize_t i, h, j, t
    cdef double v
    cdef int64_t total = 0
    with nogil:
        for i in range(n):
            for j in range(k):
                rho[j] = 0.0
            for h in range(indptr[i], indptr[i + 1]):
                t = terms[h] - 1
                v = vals[h]
                for j in range(k):
                    rho[j] = rho[j] + v * means[j, t]
                total += k
            labels[i] = _argmax_label(&rho[0], k)
    ctr[0] += total
    ctr[1] += total
    ctr[2] += total


def assign_ifn(const int64_t[::1] indptr, const int32_t[::1] terms,
               const double[::1] vals, const double[:, ::1] means_inv,
               double[::1] rho, int32_t[::1] labels, int64_t[::1] ctr):
    cdef Py_ssize_t n = indptr.shape[0] - 1
    cdef Py_ssize_t k = means_inv.shape[1]
    cdef Py_ssize_t i, h, j, t
    cdef double v
    cdef int64_t total = 0
    with nogil:
        for i in range(n):
            for j in range(k):
                rho[j] = 0.0
            for h in range(indptr[i], indptr[i + 1]):
                t = terms[h] - 1
                v = vals[h]
                for j in range(k):
                    rho[j] = rho[j] + v * means_inv[t, j]
                total += k
            labels[i] = _argmax_label(&rho[0], k)
    ctr[0] += total
    ctr[1] += total
    ctr[2] += total


def assign_ifb(const int64_t[::1] indptr, const int32_t[::1] terms,
               const double[::1] vals, const double[:, ::1] means_inv,
               double[::1] rho, int32_t[::1] labels, int64_t[::1] ctr):
    cdef Py_ssize_t n = indptr.shape[0] - 1
    cdef Py_ssize_t k = means_inv.shape[1]
    cdef Py_ssize_t i, h, j, t
    cdef double v, u
    cdef int64_t checks = 0, taken = 0
    with nogil:
        for i in range(n):
            for j in range(k):
                rho[j] = 0.0
            for h in range(indptr[i], indptr[i + 1]):
                t = terms[h] - 1
                v = vals[h]
                for j in range(k):
                    checks += 1
                    u = means_inv[t, j]
                    if u == 0.0:
                        continue
                    rho[j] = rho[j] + v * u
                    taken += 1
            labels[i] = _argmax_label(&rho[0], k)
    ctr[0] += taken
    ctr[1] += taken
    ctr[2] += checks
    ctr[3] += checks


def assign_ivf(const int64_t[::1] indptr, const int32_t[::1] terms,
               const double[::1] vals, const int64_t[::1] m_indptr,
               const int32_t[::1] m_cids, const double[::1] m_vals,
               double[::1] rho, int32_t[::1] labels, int64_t[::1] ctr):
    cdef Py_ssize_t n = indptr.shape[0] - 1
    cdef Py_ssize_t k = rho.shape[0]
    cdef Py_ssize_t i, h, j, q, t
    cdef double v
    cdef int64_t total = 0
    with nogil:
        for i in range(n):
            for j in range(k):
                rho[j] = 0.0
            for h in range(indptr[i], indptr[i + 1]):
                t = terms[h] - 1
                v = vals[h]
                for q in range(m_indptr[t], m_indptr[t + 1]):
                    rho[m_cids[q] - 1] = rho[m_cids[q] - 1] + v * m_vals[q]
                    total += 1
            labels[i] = _argmax_label(&rho[0], k)
    ctr[0] += total
    ctr[1] += total
    ctr[2] += total


def assign_twm(const int64_t[::1] indptr, const int32_t[::1] terms,
               const double[::1] vals, const int64_t[::1] m_indptr,
               const int32_t[::1] m_terms, const double[::1] m_vals,
               Py_ssize_t dim, int32_t[::1] labels, int64_t[::1] ctr):
    # dim is unused here; the Python backend needs it to stage the merge.
    cdef Py_ssize_t n = indptr.shape[0] - 1
    cdef Py_ssize_t k = m_indptr.shape[0] - 1
    cdef Py_ssize_t i, j, a, b, ea, eb
    cdef int32_t ta, tb, lab
    cdef double s, best
    cdef int64_t steps = 0, matches = 0, iters = 0
    with nogil:
        for i in range(n):
            best = -INFINITY
            lab = 1
            for j in range(k):
                a = indptr[i]
                ea = indptr[i + 1]
                b = m_indptr[j]
                eb = m_indptr[j + 1]
                s = 0.0
                while a < ea and b < eb:
                    iters += 1
                    ta = terms[a]
                    tb = m_terms[b]
                    if ta < tb:
                        a += 1
                        steps += 1
                    elif tb < ta:
                        b += 1
                        steps += 1
                    else:
                        s += vals[a] * m_vals[b]
                        matches += 1
                        a += 1
                        b += 1
                        steps += 2
                if s > best:
                    best = s
                    lab = <int32_t>(j + 1)
            labels[i] = lab
    ctr[0] += matches
    ctr[1] += matches
    ctr[2] += iters
    ctr[4] += steps


def assign_ivfd(const int64_t[::1] x_indptr, const int32_t[::1] x_oids,
                const double[::1] x_vals, const int64_t[::1] m_indptr,
                const int32_t[::1] m_terms, const double[::1] m_vals,
                double[::1] rho, double[::1] rho_max, int32_t[::1] labels,
                int64_t[::1] ctr):
    cdef Py_ssize_t n = rho.shape[0]
    cdef Py_ssize_t k = m_indptr.shape[0] - 1
    cdef Py_ssize_t i, j, h, q, t
    cdef double v
    cdef int64_t total = 0
    with nogil:
        for i in range(n):
            rho_max[i] = 0.0
            labels[i] = 1
        for j in range(k):
            for i in range(n):
                rho[i] = 0.0
            for h in range(m_indptr[j], m_indptr[j + 1]):
                t = m_terms[h] - 1
                v = m_vals[h]
                for q in range(x_indptr[t], x_indptr[t + 1]):
                    rho[x_oids[q] - 1] = rho[x_oids[q] - 1] + v * x_vals[q]
                    total += 1
            for i in range(n):
                if rho[i] > rho_max[i]:
                    rho_max[i] = rho[i]
                    labels[i] = <int32_t>(j + 1)
    ctr[0] += total
    ctr[1] += total
    ctr[2] += total
