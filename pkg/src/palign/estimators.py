"""Similarity scores and exact score-maximizing alignment.

All searches return the lexicographically smallest canonical pair list among
the maximizers, so the two exact solvers agree on every input.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass

import numpy as np

from . import kernels
from .cumulants import ScoreKind
from .models import DomainError, InjectiveMapping

DEFAULT_BUDGET = 10**8
BNB_BUDGET = 10**13
SCORE_CODES = {ScoreKind.PRODUCT: 0, ScoreKind.SQDIFF: 1, ScoreKind.MLE: 2}


class ResourceError(RuntimeError):
    def __init__(self, cardinality, budget):
        super().__init__(f"search space has {cardinality} mappings, budget is {budget}")
        self.cardinality = cardinality
        self.budget = budget


@dataclass
class AlignmentResult:
    mapping: InjectiveMapping
    score: float
    overlap: float | None = None
    distance: int | None = None
    nodes: int = 0

    def to_dict(self):
        return {
            "mapping": [list(pr) for pr in self.mapping.pairs],
            "score": self.score,
            "overlap": self.overlap,
            "distance": self.distance,
        }


def env_budget(default):
    raw = os.environ.get("PALIGN_BUDGET")
    return int(float(raw)) if raw else default


def search_space_size(n1, n2, m):
    return math.comb(n1, m) * math.comb(n2, m) * math.factorial(m)


def _weights(g):
    return np.ascontiguousarray(getattr(g, "weights", g), dtype=np.float64)


def _score_args(score, rho_for_mle):
    score = ScoreKind.parse(score)
    if score is ScoreKind.MLE:
        if rho_for_mle is None:
            raise DomainError("the MLE score needs rho")
        return SCORE_CODES[score], float(rho_for_mle)
    return SCORE_CODES[score], 0.0


def similarity_score(g1, g2, pi, score, rho_for_mle=None, backend=None):
    code, rho = _score_args(score, rho_for_mle)
    w1, w2 = _weights(g1), _weights(g2)
    pi.check_range(len(w1), len(w2))
    return kernels.get(backend).score_pairs(w1, w2, list(pi.sources), list(pi.targets), code, rho)


def overlap(truth, candidate):
    m = len(truth)
    if m == 0:
        raise DomainError("overlap is undefined for an empty truth")
    d = candidate.as_dict()
    return sum(1 for s, t in truth.pairs if d.get(s) == t) / m


def distance(pi, pi_prime):
    if len(pi) != len(pi_prime):
        raise DomainError(f"size mismatch: {len(pi)} vs {len(pi_prime)}")
    d = pi_prime.as_dict()
    return len(pi) - sum(1 for s, t in pi.pairs if d.get(s) == t)


def score_granularity(w1, w2, code, rho):
    """Common step q of all edge scores on 0/1 graphs, else 0 (real mode)."""
    binary = all(np.all((w == 0) | (w == 1)) for w in (w1, w2))
    if not binary:
        return 0.0
    f = kernels._kernels_py.fscore
    vals = [f(float(x), float(y), code, rho) for x in (0, 1) for y in (0, 1)]
    for q in (1.0, 0.5, 0.25):
        if all(float(v / q).is_integer() for v in vals):
            return q
    return 0.0


def _finish(w1, w2, src, tgt, score, nodes, truth):
    mapping = InjectiveMapping(tuple(zip(src, tgt)))
    res = AlignmentResult(mapping, score, nodes=nodes)
    if truth is not None and len(truth):
        res.overlap = overlap(truth, mapping)
        if len(truth) == len(mapping):
            res.distance = distance(mapping, truth)
    return res


def _check_budget(n1, n2, m, budget):
    if not 0 <= m <= min(n1, n2):
        raise DomainError(f"need 0 <= m <= min(n1, n2), got m={m}")
    size = search_space_size(n1, n2, m)
    if size > budget:
        raise ResourceError(size, budget)
    return size


def brute_force_align(g1, g2, m, score, rho_for_mle=None, budget=None, truth=None, backend=None):
    code, rho = _score_args(score, rho_for_mle)
    w1, w2 = _weights(g1), _weights(g2)
    _check_budget(len(w1), len(w2), m, env_budget(DEFAULT_BUDGET) if budget is None else budget)
    src, tgt, best, nodes = kernels.get(backend).search(w1, w2, m, code, rho, False, -math.inf, 0.0)
    return _finish(w1, w2, src, tgt, best, nodes, truth)


def heuristic_floor(w1, w2, m, code, rho, hints=(), restarts=4, backend=None):
    """Best score found by local search from the hints and a few fixed starts.

    Only used as a pruning floor: it is the score of an actual injection, so
    the exact optimum is never below it.
    """
    if m < 2:
        return -math.inf
    k = kernels.get(backend)
    n1, n2 = len(w1), len(w2)
    rng = np.random.default_rng([n1, n2, m])
    starts = [(list(h.sources), list(h.targets)) for h in hints if len(h) == m]
    for _ in range(restarts):
        starts.append((sorted(rng.choice(n1, m, replace=False).tolist()), rng.choice(n2, m, replace=False).tolist()))
    best = -math.inf
    for src, tgt in starts:
        src, tgt = k.local_search(w1, w2, src, tgt, code, rho)
        best = max(best, k.score_pairs(w1, w2, src, tgt, code, rho))
    return best


def branch_and_bound_align(g1, g2, m, score, rho_for_mle=None, budget=None, truth=None,
                           hints=(), restarts=4, backend=None, floor_score=-math.inf):
    """Exact argmax with bound-based pruning; same output as brute_force_align.

    ``hints`` are candidate injections (for instance the planted one) used to
    seed the incumbent. ``floor_score`` lets a caller skip all mappings scoring
    below a value; if no mapping reaches it the result is None.
    """
    code, rho = _score_args(score, rho_for_mle)
    w1, w2 = _weights(g1), _weights(g2)
    _check_budget(len(w1), len(w2), m, env_budget(BNB_BUDGET) if budget is None else budget)
    floor = max(floor_score, heuristic_floor(w1, w2, m, code, rho, hints, restarts, backend))
    gran = score_granularity(w1, w2, code, rho)
    src, tgt, best, nodes = kernels.get(backend).search(w1, w2, m, code, rho, True, floor, gran)
    if src is None or best < floor_score:
        return None
    return _finish(w1, w2, src, tgt, best, nodes, truth)


def penalized_align(g1, g2, lam, score, rho_for_mle=None, m_max=None, budget=None, truth=None, backend=None):
    """argmax over m <= m_max of score - lam m^2; ties go to the smaller m."""
    if lam < 0:
        raise DomainError("penalty must be non-negative")
    w1, w2 = _weights(g1), _weights(g2)
    m_max = min(len(w1), len(w2)) if m_max is None else m_max
    budget = env_budget(BNB_BUDGET) if budget is None else budget
    for m in range(m_max + 1):
        _check_budget(len(w1), len(w2), m, budget)
    best, best_obj = None, -math.inf
    for m in range(m_max + 1):
        need = best_obj + lam * m * m
        res = branch_and_bound_align(w1, w2, m, score, rho_for_mle, budget, truth,
                                     backend=backend, floor_score=need)
        if res is None:
            continue
        obj = res.score - lam * m * m
        if best is None or obj > best_obj:
            best, best_obj = res, obj
    return best
