"""Pure-Python search kernels, used when the compiled core is unavailable.

Arithmetic mirrors _kernels.pyx operation for operation so both back ends
return identical mappings and bit-identical scores.
"""

import bisect
import math
import sys

import numpy as np

INF = math.inf


def fscore(x, y, code, rho):
    if code == 0:
        return x * y
    if code == 1:
        d = x - y
        return -0.5 * d * d
    return -0.5 * rho * (x * x + y * y) + x * y


def topk_sum(vals, k):
    if k <= 0:
        return 0.0
    buf = sorted(vals, reverse=True)[:k]
    total = 0.0
    for x in buf:
        total += x
    return total


def _row_max(x, ys, code, rho):
    if not ys:
        return -INF
    if code == 0 or (code == 2 and rho == 0.0):
        a = fscore(x, ys[0], code, rho)
        b = fscore(x, ys[-1], code, rho)
        return a if a > b else b
    target = x if code == 1 else x / rho
    lo = bisect.bisect_left(ys, target)
    a = fscore(x, ys[lo], code, rho) if lo < len(ys) else -INF
    b = fscore(x, ys[lo - 1], code, rho) if lo > 0 else -INF
    return a if a > b else b


def row_max_table(w1, w2, code, rho):
    n1, n2 = len(w1), len(w2)
    ys = [sorted(w2[t][w] for w in range(n2) if w != t) for t in range(n2)]
    return [[[_row_max(w1[u][v], ys[t], code, rho) for t in range(n2)] for v in range(n1)] for u in range(n1)]


def score_pairs(w1, w2, src, tgt, code, rho):
    w1 = np.asarray(w1).tolist() if isinstance(w1, np.ndarray) else w1
    w2 = np.asarray(w2).tolist() if isinstance(w2, np.ndarray) else w2
    total = 0.0
    for i in range(len(src)):
        for j in range(i):
            total += fscore(w1[src[j]][src[i]], w2[tgt[j]][tgt[i]], code, rho)
    return total


def local_search(w1, w2, src, tgt, code, rho):
    w1 = np.asarray(w1).tolist()
    w2 = np.asarray(w2).tolist()
    n1, n2, m = len(w1), len(w2), len(src)
    order = sorted(range(m), key=lambda i: src[i])
    s = [int(src[i]) for i in order]
    tg = [int(tgt[i]) for i in order]
    used_s = [False] * n1
    used_t = [False] * n2
    for k in range(m):
        used_s[s[k]] = True
        used_t[tg[k]] = True
    improved = True
    while improved:
        improved = False
        for k in range(m):
            for x in range(n2):
                if used_t[x]:
                    continue
                d = 0.0
                for l in range(m):
                    if l != k:
                        d += fscore(w1[s[k]][s[l]], w2[x][tg[l]], code, rho) - fscore(w1[s[k]][s[l]], w2[tg[k]][tg[l]], code, rho)
                if d > 1e-12:
                    used_t[tg[k]] = False
                    used_t[x] = True
                    tg[k] = x
                    improved = True
            for x in range(n1):
                if used_s[x]:
                    continue
                d = 0.0
                for l in range(m):
                    if l != k:
                        d += fscore(w1[x][s[l]], w2[tg[k]][tg[l]], code, rho) - fscore(w1[s[k]][s[l]], w2[tg[k]][tg[l]], code, rho)
                if d > 1e-12:
                    used_s[s[k]] = False
                    used_s[x] = True
                    s[k] = x
                    improved = True
            for l in range(k):
                d = 0.0
                for j in range(m):
                    if j != k and j != l:
                        d += fscore(w1[s[k]][s[j]], w2[tg[l]][tg[j]], code, rho) - fscore(w1[s[k]][s[j]], w2[tg[k]][tg[j]], code, rho)
                        d += fscore(w1[s[l]][s[j]], w2[tg[k]][tg[j]], code, rho) - fscore(w1[s[l]][s[j]], w2[tg[l]][tg[j]], code, rho)
                if d > 1e-12:
                    tg[k], tg[l] = tg[l], tg[k]
                    improved = True
    pairs = sorted(zip(s, tg))
    return [a for a, _ in pairs], [b for _, b in pairs]


class _Search:
    def __init__(self, w1, w2, m, code, rho, prune, floor_score, gran):
        self.w1 = w1
        self.w2 = w2
        self.n1 = len(w1)
        self.n2 = len(w2)
        self.m = m
        self.code = code
        self.rho = rho
        self.prune = prune
        self.floor_score = floor_score
        self.gran = gran
        self.fm = row_max_table(w1, w2, code, rho) if prune else None
        if prune:
            # per (u, t): v sorted by decreasing fm[u][v][t], ties by v
            self.order = [[sorted(range(self.n1), key=lambda v: -self.fm[u][v][t]) for t in range(self.n2)]
                          for u in range(self.n1)]
        self.src = [0] * m
        self.tgt = [0] * m
        self.used = [False] * self.n2
        self.partial = [0.0] * (m + 1)
        self.lin = [None] * (m + 1)
        self.best = -INF
        self.best_pairs = None
        self.nodes = 0

    def cut(self, bound):
        if self.gran > 0:
            ub = math.floor(bound / self.gran + 1e-6) * self.gran
            if ub < self.floor_score:
                return True
            return self.best_pairs is not None and ub <= self.best
        tol = 1e-9 * (1.0 + abs(bound))
        if bound + tol < self.floor_score:
            return True
        return self.best_pairs is not None and bound + tol <= self.best

    def fill_linear(self, depth, next_min):
        n1, n2 = self.n1, self.n2
        if depth == 0:
            self.lin[0] = [[0.0] * n2 for _ in range(n1)]
            return
        prev = self.lin[depth - 1]
        a, b = self.src[depth - 1], self.tgt[depth - 1]
        cur = [None] * n1
        for u in range(next_min, n1):
            cur[u] = [prev[u][t] + fscore(self.w1[a][u], self.w2[b][t], self.code, self.rho) for t in range(n2)]
        self.lin[depth] = cur

    def fill_bounds(self, depth, next_min):
        r = self.m - depth
        fm = self.fm
        lin = self.lin[depth]
        lv = {}
        rb1, rb2, rbarg = {}, {}, {}
        for u in range(next_min, self.n1):
            b1 = b2 = -INF
            arg = -1
            for t in range(self.n2):
                if self.used[t]:
                    continue
                q = 0.0
                got = 0
                for v in self.order[u][t]:
                    if got == r - 1:
                        break
                    if v >= next_min and v != u:
                        q += fm[u][v][t]
                        got += 1
                c = lin[u][t] + 0.5 * q
                lv[u, t] = c
                if c > b1:
                    b2 = b1
                    b1 = c
                    arg = t
                elif c > b2:
                    b2 = c
            rb1[u] = b1
            rb2[u] = b2
            rbarg[u] = arg
        return lv, rb1, rb2, rbarg

    def dfs(self, depth, next_min):
        self.nodes += 1
        r = self.m - depth
        if r == 0:
            p = self.partial[depth]
            if self.best_pairs is None or p > self.best:
                self.best = p
                self.best_pairs = (list(self.src), list(self.tgt))
            return
        part = self.partial[depth]
        w1, w2, code, rho = self.w1, self.w2, self.code, self.rho
        if self.prune:
            self.fill_linear(depth, next_min)
            lin = self.lin[depth]
            if r >= 2:
                lv, rb1, rb2, rbarg = self.fill_bounds(depth, next_min)
                bound = part + topk_sum([rb1[u] for u in range(next_min, self.n1)], r)
                if self.cut(bound):
                    return
        for u in range(next_min, self.n1 - r + 1):
            if self.prune and r >= 2:
                # top-(r-1) of rb1 over v > u; exact unless a chosen v has
                # its best column at the child's target
                vals = sorted((rb1[v] for v in range(u + 1, self.n1)), reverse=True)
                rest_top = topk_sum(vals, r - 1)
                thr = vals[r - 2]
                top = {rbarg[v] for v in range(u + 1, self.n1) if rb1[v] >= thr}
            for t in range(self.n2):
                if self.used[t]:
                    continue
                if self.prune:
                    if r == 1:
                        bound = part + lin[u][t]
                    elif t in top:
                        rest = [rb2[v] if rbarg[v] == t else rb1[v] for v in range(u + 1, self.n1)]
                        bound = part + lv[u, t] + topk_sum(rest, r - 1)
                    else:
                        bound = part + lv[u, t] + rest_top
                    if self.cut(bound):
                        continue
                p = part
                for j in range(depth):
                    p += fscore(w1[self.src[j]][u], w2[self.tgt[j]][t], code, rho)
                self.src[depth] = u
                self.tgt[depth] = t
                self.used[t] = True
                self.partial[depth + 1] = p
                self.dfs(depth + 1, u + 1)
                self.used[t] = False


def search(w1, w2, m, code, rho, prune, floor_score, gran):
    w1 = np.asarray(w1).tolist()
    w2 = np.asarray(w2).tolist()
    if m > len(w1) or m > len(w2):
        raise ValueError("m exceeds a vertex count")
    sys.setrecursionlimit(max(sys.getrecursionlimit(), 4 * m + 100))
    s = _Search(w1, w2, m, code, rho, prune, floor_score, gran)
    s.dfs(0, 0)
    if s.best_pairs is None:
        return None, None, -INF, s.nodes
    return s.best_pairs[0], s.best_pairs[1], s.best, s.nodes
