# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled exhaustive set search.

Mirrors ``rocc._pykernel.search`` exactly, including summation order, so the
two backends return bit-identical scores.
"""

from libc.math cimport fabs
from libc.stdint cimport uint64_t
from libc.stdlib cimport calloc, free

import numpy as np

cdef extern from *:
    int __builtin_ctzll(unsigned long long x) nogil

cdef enum:
    R_ONLY = 1
    NO_OVERLAP = 2
    NO_CQ = 4
    NO_CA = 8


cdef struct State:
    int n
    int kmax
    int kmin
    int wq
    int wa
    int flags
    double eps
    double tol
    double nq
    double na
    const double* bm25
    const double* pair
    const uint64_t* qmask
    const uint64_t* amask
    const double* qw
    const double* aw
    const signed char* want_k
    # per-depth running state
    int* members
    double* rsum
    double* osum
    uint64_t* qcov
    uint64_t* acov
    # top-m table
    int m
    int count
    double* best_s
    int* best_k
    int* best_members
    long long n_scored


cdef inline double mask_sum(const uint64_t* mask, int w, const double* weights) noexcept nogil:
    cdef double total = 0.0
    cdef int i, b
    cdef uint64_t x
    for i in range(w):
        x = mask[i]
        while x:
            b = __builtin_ctzll(x)
            total += weights[i * 64 + b]
            x &= x - 1
    return total


cdef inline bint beats(double s, int k, double es, int ek, double tol) noexcept nogil:
    cdef double thr = tol * fabs(es)
    if s > es + thr:
        return True
    return s >= es - thr and k < ek


cdef void consider(State* st, int k, double s) noexcept nogil:
    cdef int p, i, q
    cdef int last = st.count
    if st.count == st.m:
        if not beats(s, k, st.best_s[st.m - 1], st.best_k[st.m - 1], st.tol):
            return
        last = st.m - 1
    p = 0
    while p < last and not beats(s, k, st.best_s[p], st.best_k[p], st.tol):
        p += 1
    i = last
    while i > p:
        st.best_s[i] = st.best_s[i - 1]
        st.best_k[i] = st.best_k[i - 1]
        for q in range(st.kmax):
            st.best_members[i * st.kmax + q] = st.best_members[(i - 1) * st.kmax + q]
        i -= 1
    st.best_s[p] = s
    st.best_k[p] = k
    for q in range(k):
        st.best_members[p * st.kmax + q] = st.members[q]
    if st.count < st.m:
        st.count += 1


cdef void score_leaf(State* st, int k) noexcept nogil:
    cdef double r = st.rsum[k] / k
    cdef double o = 0.0
    cdef double cq = 0.0
    cdef double ca = 0.0
    cdef double s
    if k >= 2:
        o = st.osum[k] / <double>(k * (k - 1) / 2)
    if st.nq > 0:
        cq = mask_sum(&st.qcov[k * st.wq], st.wq, st.qw) / st.nq
    if st.na > 0:
        ca = mask_sum(&st.acov[k * st.wa], st.wa, st.aw) / st.na
    if st.flags & R_ONLY:
        s = r
    else:
        if st.flags & NO_OVERLAP:
            s = r
        else:
            s = r / (st.eps + o)
        if not (st.flags & NO_CA):
            s *= st.eps + ca
        if not (st.flags & NO_CQ):
            s *= st.eps + cq
    st.n_scored += 1
    consider(st, k, s)


cdef void dfs(State* st, int depth, int start) noexcept nogil:
    cdef int j, l, w, d1
    cdef double inner
    cdef int n = st.n
    d1 = depth + 1
    # stop where the shortest wanted size is out of reach
    cdef int stop = n - st.kmin + d1
    if stop > n:
        stop = n
    for j in range(start, stop):
        st.members[depth] = j
        st.rsum[d1] = st.rsum[depth] + st.bm25[j]
        inner = 0.0
        for l in range(depth):
            inner += st.pair[st.members[l] * n + j]
        st.osum[d1] = st.osum[depth] + inner
        for w in range(st.wq):
            st.qcov[d1 * st.wq + w] = st.qcov[depth * st.wq + w] | st.qmask[j * st.wq + w]
        for w in range(st.wa):
            st.acov[d1 * st.wa + w] = st.acov[depth * st.wa + w] | st.amask[j * st.wa + w]
        if st.want_k[d1]:
            score_leaf(st, d1)
        if d1 < st.kmax:
            dfs(st, d1, j + 1)


def search(double[::1] bm25, double[:, ::1] pair, uint64_t[:, ::1] qmask, uint64_t[:, ::1] amask,
           double[::1] q_weights, double[::1] a_weights, int nq, int na, k_values,
           double epsilon, int flags, int top_m=1, double tol=1e-12):
    """Score every subset of the candidates whose size is in ``k_values``.

    Returns ``(ranked, n_scored)`` where ``ranked`` holds up to ``top_m``
    ``(score, positions)`` pairs, best first.
    """
    cdef State st
    cdef int n = bm25.shape[0]
    cdef int kk
    ks = []
    for kv in k_values:
        kk = kv
        if kk not in ks:
            ks.append(kk)
    ks.sort()
    if not ks or ks[0] < 1 or ks[len(ks) - 1] > n:
        raise ValueError("k values must lie in [1, n]")
    if top_m < 1:
        raise ValueError("top_m must be >= 1")
    cdef int kmax = ks[len(ks) - 1]
    want = np.zeros(kmax + 1, dtype=np.int8)
    for kv in ks:
        want[kv] = 1
    cdef signed char[::1] want_v = want
    # at least one word so pointers stay valid for empty term sets
    qm = np.ascontiguousarray(qmask) if qmask.shape[1] else np.zeros((n, 1), dtype=np.uint64)
    am = np.ascontiguousarray(amask) if amask.shape[1] else np.zeros((n, 1), dtype=np.uint64)
    qwv = np.ascontiguousarray(q_weights) if q_weights.shape[0] else np.zeros(64)
    awv = np.ascontiguousarray(a_weights) if a_weights.shape[0] else np.zeros(64)
    cdef uint64_t[:, ::1] qm_v = qm
    cdef uint64_t[:, ::1] am_v = am
    cdef double[::1] qw_v = qwv
    cdef double[::1] aw_v = awv

    st.n = n
    st.kmax = kmax
    st.kmin = ks[0]
    st.wq = qm_v.shape[1]
    st.wa = am_v.shape[1]
    st.flags = flags
    st.eps = epsilon
    st.tol = tol
    st.nq = nq
    st.na = na
    st.bm25 = &bm25[0]
    st.pair = &pair[0, 0]
    st.qmask = &qm_v[0, 0]
    st.amask = &am_v[0, 0]
    st.qw = &qw_v[0]
    st.aw = &aw_v[0]
    st.want_k = &want_v[0]
    st.m = top_m
    st.count = 0
    st.n_scored = 0
    st.members = <int*> calloc(kmax + 1, sizeof(int))
    st.rsum = <double*> calloc(kmax + 1, sizeof(double))
    st.osum = <double*> calloc(kmax + 1, sizeof(double))
    st.qcov = <uint64_t*> calloc((kmax + 1) * st.wq, sizeof(uint64_t))
    st.acov = <uint64_t*> calloc((kmax + 1) * st.wa, sizeof(uint64_t))
    st.best_s = <double*> calloc(top_m, sizeof(double))
    st.best_k = <int*> calloc(top_m, sizeof(int))
    st.best_members = <int*> calloc(top_m * kmax, sizeof(int))
    try:
        if (not st.members or not st.rsum or not st.osum or not st.qcov or not st.acov
                or not st.best_s or not st.best_k or not st.best_members):
            raise MemoryError()
        with nogil:
            dfs(&st, 0, 0)
        ranked = []
        for i in range(st.count):
            members = []
            for q in range(st.best_k[i]):
                members.append(st.best_members[i * kmax + q])
            ranked.append((st.best_s[i], tuple(members)))
        return ranked, st.n_scored
    finally:
        free(st.members)
        free(st.rsum)
        free(st.osum)
        free(st.qcov)
        free(st.acov)
        free(st.best_s)
        free(st.best_k)
        free(st.best_members)
