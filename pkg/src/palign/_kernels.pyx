# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled search kernels. Must agree bit for bit with _kernels_py."""

import numpy as np

from libc.math cimport INFINITY, fabs, floor
from libc.stdlib cimport free, malloc


cdef inline double fscore(double x, double y, int code, double rho) noexcept nogil:
    cdef double d
    if code == 0:
        return x * y
    if code == 1:
        d = x - y
        return -0.5 * d * d
    return -0.5 * rho * (x * x + y * y) + x * y


cdef struct Search:
    int n1
    int n2
    int m
    int code
    int prune
    double rho
    double gran
    double floor_score
    double* w1
    double* w2
    double* fm
    int* order
    int* src
    int* tgt
    char* used
    double* partial
    double* lin
    double* lval
    double* rb1
    double* rb2
    int* rbarg
    double* buf
    int* top
    int* best_src
    int* best_tgt
    double best
    int found
    long long nodes


cdef inline double topk_sum(double* vals, int cnt, int k, double* buf) noexcept nogil:
    # sum of the k largest of vals[0:cnt]; buf holds k slots
    cdef int i, j, filled = 0
    cdef double x, total = 0.0
    for i in range(cnt):
        x = vals[i]
        if filled < k:
            j = filled
            filled += 1
        elif x > buf[k - 1]:
            j = k - 1
        else:
            continue
        while j > 0 and buf[j - 1] < x:
            buf[j] = buf[j - 1]
            j -= 1
        buf[j] = x
    for i in range(filled):
        total += buf[i]
    return total


cdef inline bint cut(Search* s, double bound) noexcept nogil:
    cdef double ub, tol
    if s.gran > 0:
        ub = floor(bound / s.gran + 1e-6) * s.gran
        if ub < s.floor_score:
            return True
        return s.found and ub <= s.best
    tol = 1e-9 * (1.0 + fabs(bound))
    if bound + tol < s.floor_score:
        return True
    return s.found and bound + tol <= s.best


cdef void fill_linear(Search* s, int depth, int next_min) noexcept nogil:
    # lin[depth][u, t] = sum over assigned j of f(w1[src_j, u], w2[tgt_j, t])
    cdef int n1 = s.n1, n2 = s.n2, u, t, a, b
    cdef double* cur = s.lin + depth * n1 * n2
    cdef double* prev
    if depth == 0:
        for u in range(n1 * n2):
            cur[u] = 0.0
        return
    prev = s.lin + (depth - 1) * n1 * n2
    a = s.src[depth - 1]
    b = s.tgt[depth - 1]
    for u in range(next_min, n1):
        for t in range(n2):
            cur[u * n2 + t] = prev[u * n2 + t] + fscore(s.w1[a * n1 + u], s.w2[b * n2 + t], s.code, s.rho)


cdef void fill_bounds(Search* s, int depth, int next_min) noexcept nogil:
    # L(u,t) = lin(u,t) + Q(u,t)/2, Q = top-(r-1) of fm[u, v, t] over future v
    cdef int n1 = s.n1, n2 = s.n2, r = s.m - depth
    cdef int u, t, i, v, got
    cdef double c, q, b1, b2
    cdef int arg
    cdef int* ordp
    cdef double* lin = s.lin + depth * n1 * n2
    cdef double* lv = s.lval + depth * n1 * n2
    cdef double* rb1 = s.rb1 + depth * n1
    cdef double* rb2 = s.rb2 + depth * n1
    cdef int* rbarg = s.rbarg + depth * n1
    for u in range(next_min, n1):
        b1 = -INFINITY
        b2 = -INFINITY
        arg = -1
        for t in range(n2):
            if s.used[t]:
                continue
            # walk v in decreasing fm order
            ordp = s.order + (u * n2 + t) * n1
            q = 0.0
            got = 0
            i = 0
            while got < r - 1 and i < n1:
                v = ordp[i]
                i += 1
                if v >= next_min and v != u:
                    q += s.fm[(u * n1 + v) * n2 + t]
                    got += 1
            c = lin[u * n2 + t] + 0.5 * q
            lv[u * n2 + t] = c
            if c > b1:
                b2 = b1
                b1 = c
                arg = t
            elif c > b2:
                b2 = c
        rb1[u] = b1
        rb2[u] = b2
        rbarg[u] = arg


cdef void dfs(Search* s, int depth, int next_min) noexcept nogil:
    cdef int n1 = s.n1, n2 = s.n2, r = s.m - depth
    cdef int u, t, j, v, cnt, ntop, hit
    cdef double part, p, bound, rest_top
    cdef double* lv
    cdef double* lin
    cdef double* rb1
    cdef double* rb2
    cdef int* rbarg
    cdef int* top = s.top + depth * n1
    cdef double* tmp = s.buf + n1
    s.nodes += 1
    if r == 0:
        p = s.partial[depth]
        if not s.found or p > s.best:
            s.found = 1
            s.best = p
            for j in range(s.m):
                s.best_src[j] = s.src[j]
                s.best_tgt[j] = s.tgt[j]
        return
    part = s.partial[depth]
    lv = s.lval + depth * n1 * n2
    lin = s.lin + depth * n1 * n2
    rb1 = s.rb1 + depth * n1
    rb2 = s.rb2 + depth * n1
    rbarg = s.rbarg + depth * n1
    if s.prune:
        fill_linear(s, depth, next_min)
        if r >= 2:
            fill_bounds(s, depth, next_min)
            bound = part + topk_sum(rb1 + next_min, n1 - next_min, r, s.buf)
            if cut(s, bound):
                return
    for u in range(next_min, n1 - r + 1):
        if s.prune and r >= 2:
            # top-(r-1) of rb1 over v > u; exact unless a chosen v has its
            # best column at the child's target
            ntop = 0
            for v in range(u + 1, n1):
                tmp[ntop] = rb1[v]
                ntop += 1
            rest_top = topk_sum(tmp, ntop, r - 1, s.buf)
            ntop = 0
            for v in range(u + 1, n1):
                if rb1[v] >= s.buf[r - 2]:
                    top[ntop] = rbarg[v]
                    ntop += 1
        for t in range(n2):
            if s.used[t]:
                continue
            if s.prune:
                if r == 1:
                    bound = part + lin[u * n2 + t]
                else:
                    hit = 0
                    for j in range(ntop):
                        if top[j] == t:
                            hit = 1
                            break
                    if hit:
                        cnt = 0
                        for v in range(u + 1, n1):
                            tmp[cnt] = rb2[v] if rbarg[v] == t else rb1[v]
                            cnt += 1
                        bound = part + lv[u * n2 + t] + topk_sum(tmp, cnt, r - 1, s.buf)
                    else:
                        bound = part + lv[u * n2 + t] + rest_top
                if cut(s, bound):
                    continue
            p = part
            for j in range(depth):
                p += fscore(s.w1[s.src[j] * n1 + u], s.w2[s.tgt[j] * n2 + t], s.code, s.rho)
            s.src[depth] = u
            s.tgt[depth] = t
            s.used[t] = 1
            s.partial[depth + 1] = p
            dfs(s, depth + 1, u + 1)
            s.used[t] = 0


cdef double row_max(double x, double* ys, int cnt, int code, double rho) noexcept nogil:
    # max of f(x, y) over the sorted values ys[0:cnt]
    cdef double target, a, b
    cdef int lo, hi, mid
    if cnt == 0:
        return -INFINITY
    if code == 0 or (code == 2 and rho == 0.0):
        a = fscore(x, ys[0], code, rho)
        b = fscore(x, ys[cnt - 1], code, rho)
        return a if a > b else b
    target = x if code == 1 else x / rho
    lo = 0
    hi = cnt
    while lo < hi:
        mid = (lo + hi) // 2
        if ys[mid] < target:
            lo = mid + 1
        else:
            hi = mid
    a = -INFINITY
    b = -INFINITY
    if lo < cnt:
        a = fscore(x, ys[lo], code, rho)
    if lo > 0:
        b = fscore(x, ys[lo - 1], code, rho)
    return a if a > b else b


def row_max_table(double[:, ::1] w1, double[:, ::1] w2, int code, double rho):
    """fm[u, v, t] = max over w != t of f(w1[u, v], w2[t, w])."""
    cdef int n1 = w1.shape[0], n2 = w2.shape[0]
    cdef int u, v, t
    rows = np.asarray(w2)
    ys_arr = np.zeros((max(n2, 1), max(n2 - 1, 1)))
    for t in range(n2):
        ys_arr[t, : n2 - 1] = np.sort(np.delete(rows[t], t))
    cdef double[:, ::1] ys = ys_arr
    out = np.empty((n1, n1, n2))
    cdef double[:, :, ::1] fm = out
    for u in range(n1):
        for v in range(n1):
            for t in range(n2):
                fm[u, v, t] = row_max(w1[u, v], &ys[t, 0], n2 - 1, code, rho)
    return out


def score_pairs(double[:, ::1] w1, double[:, ::1] w2, src, tgt, int code, double rho):
    cdef int m = len(src), i, j
    cdef double total = 0.0
    for i in range(m):
        for j in range(i):
            total += fscore(w1[src[j], src[i]], w2[tgt[j], tgt[i]], code, rho)
    return total


def local_search(double[:, ::1] w1, double[:, ::1] w2, src, tgt, int code, double rho):
    """First-improvement hill climbing over retarget, resource and swap moves."""
    cdef int n1 = w1.shape[0], n2 = w2.shape[0], m = len(src)
    cdef int k, l, x, old, i, j
    cdef double d
    cdef int[::1] s = np.array(sorted(src), dtype=np.intc)
    order = np.argsort(np.asarray(src))
    cdef int[::1] tg = np.asarray(tgt, dtype=np.intc)[order].copy()
    cdef signed char[::1] used_s = np.zeros(max(n1, 1), dtype=np.int8)
    cdef signed char[::1] used_t = np.zeros(max(n2, 1), dtype=np.int8)
    for k in range(m):
        used_s[s[k]] = 1
        used_t[tg[k]] = 1

    improved = True
    while improved:
        improved = False
        for k in range(m):
            # gain of moving slot k: only terms touching slot k change
            for x in range(n2):
                if used_t[x]:
                    continue
                d = 0.0
                for l in range(m):
                    if l != k:
                        d += fscore(w1[s[k], s[l]], w2[x, tg[l]], code, rho) - fscore(w1[s[k], s[l]], w2[tg[k], tg[l]], code, rho)
                if d > 1e-12:
                    used_t[tg[k]] = 0
                    used_t[x] = 1
                    tg[k] = x
                    improved = True
            for x in range(n1):
                if used_s[x]:
                    continue
                d = 0.0
                for l in range(m):
                    if l != k:
                        d += fscore(w1[x, s[l]], w2[tg[k], tg[l]], code, rho) - fscore(w1[s[k], s[l]], w2[tg[k], tg[l]], code, rho)
                if d > 1e-12:
                    used_s[s[k]] = 0
                    used_s[x] = 1
                    s[k] = x
                    improved = True
            for l in range(k):
                d = 0.0
                for j in range(m):
                    if j != k and j != l:
                        d += fscore(w1[s[k], s[j]], w2[tg[l], tg[j]], code, rho) - fscore(w1[s[k], s[j]], w2[tg[k], tg[j]], code, rho)
                        d += fscore(w1[s[l], s[j]], w2[tg[k], tg[j]], code, rho) - fscore(w1[s[l], s[j]], w2[tg[l], tg[j]], code, rho)
                if d > 1e-12:
                    old = tg[k]
                    tg[k] = tg[l]
                    tg[l] = old
                    improved = True
    pairs = sorted(zip(np.asarray(s).tolist(), np.asarray(tg).tolist()))
    return [a for a, _ in pairs], [b for _, b in pairs]


def search(double[:, ::1] w1, double[:, ::1] w2, int m, int code, double rho,
           bint prune, double floor_score, double gran):
    """Lexicographically first argmax of the pair score over injections of size m.

    Sources are assigned in increasing order and targets tried in increasing
    order, so leaves are met in lexicographic order of their pair lists and a
    strict-improvement update keeps the first maximizer. Subtrees whose bound
    falls below floor_score are skipped; the caller guarantees floor_score is
    attained by some injection.
    """
    cdef int n1 = w1.shape[0], n2 = w2.shape[0]
    cdef int t, j
    cdef Search s
    if m > n1 or m > n2:
        raise ValueError("m exceeds a vertex count")
    fm_arr = row_max_table(w1, w2, code, rho) if prune else np.zeros((1, 1, 1))
    cdef double[:, :, ::1] fm = fm_arr
    # per (u, t): v sorted by decreasing fm[u, v, t], ties by v
    ord_arr = np.ascontiguousarray(np.argsort(-fm_arr, axis=1, kind="stable").transpose(0, 2, 1), dtype=np.intc)
    cdef int[:, :, ::1] order = ord_arr
    s.n1 = n1
    s.n2 = n2
    s.m = m
    s.code = code
    s.prune = prune
    s.rho = rho
    s.gran = gran
    s.floor_score = floor_score
    s.w1 = &w1[0, 0]
    s.w2 = &w2[0, 0]
    s.fm = &fm[0, 0, 0]
    s.order = &order[0, 0, 0]
    s.best = -INFINITY
    s.found = 0
    s.nodes = 0
    cdef int slots = (m + 1) * n1
    s.src = <int*> malloc(max(m, 1) * sizeof(int))
    s.tgt = <int*> malloc(max(m, 1) * sizeof(int))
    s.best_src = <int*> malloc(max(m, 1) * sizeof(int))
    s.best_tgt = <int*> malloc(max(m, 1) * sizeof(int))
    s.used = <char*> malloc(n2 * sizeof(char))
    s.partial = <double*> malloc((m + 1) * sizeof(double))
    s.lval = <double*> malloc(slots * n2 * sizeof(double))
    s.lin = <double*> malloc(slots * n2 * sizeof(double))
    s.top = <int*> malloc(slots * sizeof(int))
    s.rb1 = <double*> malloc(slots * sizeof(double))
    s.rb2 = <double*> malloc(slots * sizeof(double))
    s.rbarg = <int*> malloc(slots * sizeof(int))
    s.buf = <double*> malloc((2 * n1 + 2) * sizeof(double))
    try:
        for t in range(n2):
            s.used[t] = 0
        s.partial[0] = 0.0
        with nogil:
            dfs(&s, 0, 0)
        if not s.found:
            return None, None, -INFINITY, s.nodes
        src = [s.best_src[j] for j in range(m)]
        tgt = [s.best_tgt[j] for j in range(m)]
        return src, tgt, s.best, s.nodes
    finally:
        free(s.src)
        free(s.tgt)
        free(s.best_src)
        free(s.best_tgt)
        free(s.used)
        free(s.partial)
        free(s.lval)
        free(s.lin)
        free(s.top)
        free(s.rb1)
        free(s.rb2)
        free(s.rbarg)
        free(s.buf)
