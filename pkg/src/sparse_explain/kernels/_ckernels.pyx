# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels; must stay result-identical to ``_pykernels``."""

import numpy as np
cimport numpy as cnp
from libc.stdlib cimport calloc, malloc, free

cnp.import_array()


cdef inline bint _beats(double s1, Py_ssize_t d1, double s2, Py_ssize_t d2) nogil:
    return s1 > s2 or (s1 == s2 and d1 < d2)


def bm25_topk(term_ids, const cnp.int64_t[::1] offsets, const cnp.int32_t[::1] post_docs,
              const double[::1] impacts, Py_ssize_t n_docs, Py_ssize_t k):
    cdef cnp.int64_t[::1] terms = np.ascontiguousarray(term_ids, dtype=np.int64)
    cdef Py_ssize_t n_terms = terms.shape[0]
    cdef Py_ssize_t i, j, p, d, lo, hi, n_touched = 0, count = 0
    cdef double s
    cdef double *acc
    cdef char *hit
    cdef Py_ssize_t *touched
    cdef cnp.ndarray[cnp.int64_t, ndim=1] out_docs
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out_scores
    cdef Py_ssize_t *best_d
    cdef double *best_s

    if k < 1 or n_docs == 0 or n_terms == 0:
        return np.empty(0, dtype=np.int64), np.empty(0, dtype=np.float64)

    acc = <double *> calloc(n_docs, sizeof(double))
    hit = <char *> calloc(n_docs, sizeof(char))
    touched = <Py_ssize_t *> malloc(n_docs * sizeof(Py_ssize_t))
    best_d = <Py_ssize_t *> malloc(k * sizeof(Py_ssize_t))
    best_s = <double *> malloc(k * sizeof(double))
    if acc == NULL or hit == NULL or touched == NULL or best_d == NULL or best_s == NULL:
        free(acc); free(hit); free(touched); free(best_d); free(best_s)
        raise MemoryError()
    try:
        with nogil:
            for i in range(n_terms):
                lo = offsets[terms[i]]
                hi = offsets[terms[i] + 1]
                for p in range(lo, hi):
                    d = post_docs[p]
                    if not hit[d]:
                        hit[d] = 1
                        touched[n_touched] = d
                        n_touched += 1
                    acc[d] += impacts[p]
            for i in range(n_touched):
                d = touched[i]
                s = acc[d]
                if count == k and not _beats(s, d, best_s[k - 1], best_d[k - 1]):
                    continue
                j = count if count < k else k - 1
                while j > 0 and _beats(s, d, best_s[j - 1], best_d[j - 1]):
                    best_s[j] = best_s[j - 1]
                    best_d[j] = best_d[j - 1]
                    j -= 1
                best_s[j] = s
                best_d[j] = d
                if count < k:
                    count += 1
        out_docs = np.empty(count, dtype=np.int64)
        out_scores = np.empty(count, dtype=np.float64)
        for i in range(count):
            out_docs[i] = best_d[i]
            out_scores[i] = best_s[i]
        return out_docs, out_scores
    finally:
        free(acc); free(hit); free(touched); free(best_d); free(best_s)


def rbo(a, b, Py_ssize_t k, double p):
    cdef cnp.int64_t[::1] av = np.ascontiguousarray(a, dtype=np.int64)
    cdef cnp.int64_t[::1] bv = np.ascontiguousarray(b, dtype=np.int64)
    cdef Py_ssize_t na = min(av.shape[0], k), nb = min(bv.shape[0], k)
    cdef Py_ssize_t depth = max(na, nb), i, j
    cdef Py_ssize_t overlap = 0
    cdef double num = 0.0, den = 0.0, weight = 1.0
    cdef bint has_x, has_y
    cdef cnp.int64_t x, y
    if depth == 0:
        return 0.0
    for i in range(depth):
        has_x = i < na
        has_y = i < nb
        if has_x:
            x = av[i]
        if has_y:
            y = bv[i]
        if has_x and has_y and x == y:
            overlap += 1
        else:
            if has_x:
                for j in range(min(i, nb)):
                    if bv[j] == x:
                        overlap += 1
                        break
            if has_y:
                for j in range(min(i + 1, na)):
                    if av[j] == y:
                        overlap += 1
                        break
        num += weight * (<double>overlap / (i + 1))
        den += weight
        weight *= p
    return num / den


def jaccard(a, b, Py_ssize_t k):
    cdef cnp.int64_t[::1] av = np.ascontiguousarray(a, dtype=np.int64)
    cdef cnp.int64_t[::1] bv = np.ascontiguousarray(b, dtype=np.int64)
    cdef Py_ssize_t na = min(av.shape[0], k), nb = min(bv.shape[0], k), i, j, inter = 0
    if na + nb == 0:
        return 0.0
    for i in range(na):
        for j in range(nb):
            if av[i] == bv[j]:
                inter += 1
                break
    return inter / <double>(na + nb - inter)
