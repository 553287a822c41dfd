"""Moment and cumulant generating functions of per-component score sums.

A component of length ell is a chain of correlated pairs (A_i, B_i). Its score
is sum_{i=1..ell} f(A_{i-1}, B_i); on a cycle B_ell is B_0, on a path B_ell is
a fresh independent weight. ``mgf`` functions return E[exp(t * score)].

Closed forms are two-term linear recurrences in ell. For ell > 50 they are
evaluated in log space.
"""

from __future__ import annotations

import enum
import itertools
import math
from dataclasses import dataclass

import numpy as np

from .digraph import CYCLE, PATH
from .models import DomainError, ModelKind, correlated_bernoulli_pmf

LOG_SPACE_ELL = 50
BOUNDARY_GAP = 1e-9
CONFLUENT_EPS = 1e-14
MAX_BRUTE_ELL = 12


class ScoreKind(str, enum.Enum):
    PRODUCT = "Product"
    SQDIFF = "NegHalfSquaredDiff"
    MLE = "MleGauss"

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        key = str(value).strip().lower()
        for kind, names in _SCORE_NAMES.items():
            if key in names:
                return kind
        raise DomainError(f"unknown score {value!r}")


_SCORE_NAMES = {
    ScoreKind.PRODUCT: ("product", "prod", "xy"),
    ScoreKind.SQDIFF: ("neghalfsquareddiff", "sqdiff", "squareddiff", "sq"),
    ScoreKind.MLE: ("mlegauss", "mle"),
}



def component_kind(kind):
    for k in (PATH, CYCLE):
        if str(kind).lower() == k.lower():
            return k
    raise DomainError(f"component must be {PATH} or {CYCLE}, got {kind!r}")


def score_fn(score, rho=0.0):
    """Scalar (or elementwise) edge score f(x, y)."""
    score = ScoreKind.parse(score)
    if score is ScoreKind.PRODUCT:
        return lambda x, y: x * y
    if score is ScoreKind.SQDIFF:
        return lambda x, y: -0.5 * (x - y) * (x - y)
    return lambda x, y: -0.5 * rho * (x * x + y * y) + x * y


@dataclass(frozen=True)
class CumulantQuery:
    model: ModelKind
    score: ScoreKind
    t: float
    ell: int = 1
    p: float | None = None
    rho: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "model", ModelKind.parse(self.model))
        object.__setattr__(self, "score", ScoreKind.parse(self.score))
        if self.ell < 1:
            raise DomainError(f"ell must be >= 1, got {self.ell}")

    def with_ell(self, ell):
        return CumulantQuery(self.model, self.score, self.t, ell, self.p, self.rho)


def _check_positive_t(t):
    if not t > 0:
        raise DomainError(f"tilt must be positive, got t={t}")


def _check_er(p, rho, t):
    _check_positive_t(t)
    if not 0 < p < 1 or not 0 <= rho <= 1:
        raise DomainError(f"need 0 < p < 1, 0 <= rho <= 1; got p={p}, rho={rho}")


def _check_gauss_product(rho, t):
    _check_positive_t(t)
    if not 0 <= rho <= 1:
        raise DomainError(f"need 0 <= rho <= 1, got {rho}")
    if t >= 1.0 / (1.0 + rho) - BOUNDARY_GAP:
        raise DomainError(f"product tilt needs t < 1/(1+rho) = {1 / (1 + rho)}, got {t}")


def _check_gauss_sq(rho, t):
    _check_positive_t(t)
    if not 0 <= rho <= 1:
        raise DomainError(f"need 0 <= rho <= 1, got {rho}")


def _roots(s, q):
    """Roots lam1 >= lam2 of x^2 - s x + q with s > 0 and real roots."""
    disc = s * s - 4.0 * q
    if disc < -CONFLUENT_EPS:
        raise AssertionError(f"negative discriminant {disc}")
    r = math.sqrt(max(disc, 0.0))
    lam1 = 0.5 * (s + r)
    lam2 = q / lam1 if lam1 > 0 else 0.0
    return lam1, lam2, disc


def _log_two_term(a1, lam1, a2, lam2, ell):
    """log(a1 lam1^ell + a2 lam2^ell) with lam1 > |lam2| >= 0 and a1 > 0."""
    return ell * math.log(lam1) + math.log(a1 + a2 * (lam2 / lam1) ** ell)


# ----------------------------------------------------------------------- ER

def er_transfer_matrix(p, rho, t):
    """(T, D): trace and determinant of the two-state transfer matrix."""
    _check_er(p, rho, t)
    x = math.expm1(t)
    p11 = correlated_bernoulli_pmf(p, rho)[3]
    return 1.0 + p11 * x, rho * p * (1.0 - p) * x


def _er_path_log(p, rho, t, ell):
    T, D = er_transfer_matrix(p, rho, t)
    m1 = 1.0 + p * p * math.expm1(t)
    lam1, lam2, disc = _roots(T, D)
    if abs(disc) < CONFLUENT_EPS:
        lam = 0.5 * T
        # double root: m_ell = (1 + b ell) lam^ell with m_1 = (1 + b) lam
        b = m1 / lam - 1.0
        return ell * math.log(lam) + math.log1p(b * ell)
    a1 = 0.5 + (2.0 * m1 - T) / (2.0 * math.sqrt(disc))
    a2 = 1.0 - a1
    if ell > LOG_SPACE_ELL:
        return _log_two_term(a1, lam1, a2, lam2, ell)
    return math.log(a1 * lam1**ell + a2 * lam2**ell)


def _er_cycle_log(p, rho, t, ell):
    T, D = er_transfer_matrix(p, rho, t)
    lam1, lam2, disc = _roots(T, D)
    if ell > LOG_SPACE_ELL:
        return ell * math.log(lam1) + math.log1p((lam2 / lam1) ** ell)
    return math.log(lam1**ell + lam2**ell)


def er_path_mgf(p, rho, t, ell):
    return math.exp(_er_path_log(p, rho, t, ell))


def er_cycle_mgf(p, rho, t, ell):
    return math.exp(_er_cycle_log(p, rho, t, ell))


def er_alphas(p, rho, t):
    """(alpha1, alpha2) of the path recurrence; both lie in (0, 1)."""
    T, D = er_transfer_matrix(p, rho, t)
    m1 = 1.0 + p * p * math.expm1(t)
    disc = T * T - 4.0 * D
    a1 = 0.5 + (2.0 * m1 - T) / (2.0 * math.sqrt(disc))
    return a1, 1.0 - a1


def brute_force_er_component_mgf(p, rho, t, ell, kind):
    """Sum over B-chain states; each A is integrated given its own B."""
    _check_er(p, rho, t)
    if ell > MAX_BRUTE_ELL:
        raise OverflowError(f"ell={ell} above brute-force cap {MAX_BRUTE_ELL}")
    p00, p01, p10, p11 = correlated_bernoulli_pmf(p, rho)
    x = math.expm1(t)
    marg = (1.0 - p, p)
    # E[exp(t A b) | B = b_prev]
    a_given_b = (p10 / (1.0 - p), p11 / p)

    def g(b_prev, b):
        return 1.0 + a_given_b[b_prev] * x if b else 1.0

    terms = []
    kind = component_kind(kind)
    n_free = ell + 1 if kind == PATH else ell
    for bs in itertools.product((0, 1), repeat=n_free):
        chain = bs if kind == PATH else bs + (bs[0],)
        w = 1.0
        for b in bs:
            w *= marg[b]
        for i in range(1, ell + 1):
            w *= g(chain[i - 1], chain[i])
        terms.append(w)
    return math.fsum(terms)


# ------------------------------------------------------ Gaussian, product

def gauss_product_path_mgf(rho, t, ell):
    return math.exp(_gauss_product_path_log(rho, t, ell))


def _gauss_product_path_log(rho, t, ell):
    _check_gauss_product(rho, t)
    s = 1.0 - t * t * (1.0 - rho * rho)
    q = t * t * rho * rho
    prev, cur = 1.0, 1.0 - t * t
    log_scale = 0.0
    for _ in range(2, ell + 1):
        nxt = s * cur - q * prev
        if ell > LOG_SPACE_ELL:
            # carry the pair relative to the newest value
            prev, cur = cur / nxt, 1.0
            log_scale += math.log(nxt)
        else:
            prev, cur = cur, nxt
        if cur <= 0 or (ell > LOG_SPACE_ELL and prev <= 0):
            raise AssertionError("tridiagonal determinant lost positivity")
    return -0.5 * (log_scale + math.log(cur))


def _gauss_product_roots(rho, t):
    _check_gauss_product(rho, t)
    return _roots(1.0 - t * t * (1.0 - rho * rho), t * t * rho * rho)


def _cycle_log_from_roots(lam1, lam2, ell):
    # -log(lam1^{ell/2} - lam2^{ell/2})
    return -(0.5 * ell * math.log(lam1) + math.log1p(-((lam2 / lam1) ** (0.5 * ell))))


def gauss_product_cycle_mgf(rho, t, ell):
    return math.exp(_gauss_product_cycle_log(rho, t, ell))


def _gauss_product_cycle_log(rho, t, ell):
    lam1, lam2, _ = _gauss_product_roots(rho, t)
    if ell > LOG_SPACE_ELL:
        return _cycle_log_from_roots(lam1, lam2, ell)
    return -math.log(lam1 ** (0.5 * ell) - lam2 ** (0.5 * ell))


# ------------------------------------------- Gaussian, squared difference

def _gauss_sq_roots(rho, t):
    _check_gauss_sq(rho, t)
    return _roots(1.0 + 2.0 * t, t * t * rho * rho)


def _gauss_sq_path_log(rho, t, ell):
    lam1, lam2, disc = _gauss_sq_roots(rho, t)
    s = 1.0 + 2.0 * t
    a1 = 0.5 + s / (2.0 * math.sqrt(disc))
    a2 = 1.0 - a1
    if ell > LOG_SPACE_ELL:
        return -0.5 * _log_two_term(a1, lam1, a2, lam2, ell)
    return -0.5 * math.log(a1 * lam1**ell + a2 * lam2**ell)


def _gauss_sq_cycle_log(rho, t, ell):
    lam1, lam2, _ = _gauss_sq_roots(rho, t)
    if ell > LOG_SPACE_ELL:
        return _cycle_log_from_roots(lam1, lam2, ell)
    return -math.log(lam1 ** (0.5 * ell) - lam2 ** (0.5 * ell))


def gauss_sq_path_mgf(rho, t, ell):
    return math.exp(_gauss_sq_path_log(rho, t, ell))


def gauss_sq_cycle_mgf(rho, t, ell):
    return math.exp(_gauss_sq_cycle_log(rho, t, ell))


# ----------------------------------------------------------- dispatch

def _log_mgf(query, kind):
    q = query
    kind = component_kind(kind)
    if q.model is ModelKind.ER:
        if q.score is not ScoreKind.PRODUCT:
            raise DomainError("ER cumulants exist for the product score only")
        fn = _er_path_log if kind == PATH else _er_cycle_log
        return fn(q.p, q.rho, q.t, q.ell)
    if q.score is ScoreKind.PRODUCT:
        fn = _gauss_product_path_log if kind == PATH else _gauss_product_cycle_log
    elif q.score is ScoreKind.SQDIFF:
        fn = _gauss_sq_path_log if kind == PATH else _gauss_sq_cycle_log
    else:
        raise DomainError("no closed form for the MLE score")
    return fn(q.rho, q.t, q.ell)


def kappa(query, component):
    return _log_mgf(query, component)


def mgf(query, component):
    return math.exp(kappa(query, component))


def chain_upper_bound(total_edges, self_loops, query):
    """(|E|/2) kC_2 + L (kC_1 - kC_2 / 2)."""
    if not 0 <= self_loops <= total_edges:
        raise DomainError("need 0 <= self_loops <= total_edges")
    kc1 = kappa(query.with_ell(1), CYCLE)
    kc2 = kappa(query.with_ell(2), CYCLE)
    return 0.5 * total_edges * kc2 + self_loops * (kc1 - 0.5 * kc2)


def decomposition_log_mgf(query, paths, cycles):
    """Exact log-MGF of a decomposition given its path and cycle lengths."""
    total = [kappa(query.with_ell(ell), PATH) for ell in paths]
    total += [kappa(query.with_ell(ell), CYCLE) for ell in cycles]
    return math.fsum(total)


# ------------------------------------------------------ verification

def default_kappa_grid():
    grid = []
    for p, rho, t in itertools.product((0.1, 0.3, 0.5), (0.1, 0.5, 0.9), (0.1, 0.5, 1.0)):
        grid.append(CumulantQuery(ModelKind.ER, ScoreKind.PRODUCT, t, 1, p, rho))
    for rho, frac in itertools.product((0.1, 0.3, 0.5, 0.7, 0.9, 0.99, 1.0), (0.1, 0.5, 0.9)):
        grid.append(CumulantQuery(ModelKind.GAUSSIAN, ScoreKind.PRODUCT, frac / (1 + rho), 1, None, rho))
    for rho, t in itertools.product((0.1, 0.5, 0.9, 0.99), (0.5, 2.0, 10.0)):
        grid.append(CumulantQuery(ModelKind.GAUSSIAN, ScoreKind.SQDIFF, t, 1, None, rho))
    return grid


@dataclass
class ChainReport:
    checked: int
    violations: list
    min_slack: float
    tol: float

    @property
    def ok(self):
        return not self.violations


def verify_kappa_chain(grid=None, max_ell=8, tol=1e-12, kc2_shift=0.0):
    """Check kP_1 <= kC_2/2 <= kC_1 and kP_l <= kC_l <= (l/2) kC_2 for 2 <= l <= max_ell.

    ``kc2_shift`` is added to every kC_2 value; it exists for fault injection.
    """
    grid = default_kappa_grid() if grid is None else grid
    checked = 0
    violations = []
    min_slack = math.inf

    def check(q, name, lhs, rhs):
        nonlocal checked, min_slack
        checked += 1
        slack = rhs - lhs
        min_slack = min(min_slack, slack)
        if slack < -tol:
            violations.append((q, name, slack))

    for q in grid:
        kp1 = kappa(q.with_ell(1), PATH)
        kc1 = kappa(q.with_ell(1), CYCLE)
        kc2 = kappa(q.with_ell(2), CYCLE) + kc2_shift
        check(q, "kP1 <= kC2/2", kp1, 0.5 * kc2)
        check(q, "kC2/2 <= kC1", 0.5 * kc2, kc1)
        for ell in range(2, max_ell + 1):
            kp = kappa(q.with_ell(ell), PATH)
            kc = kappa(q.with_ell(ell), CYCLE)
            check(q, f"kP{ell} <= kC{ell}", kp, kc)
            check(q, f"kC{ell} <= {ell}/2 kC2", kc, 0.5 * ell * kc2)
    return ChainReport(checked, violations, min_slack, tol)


# ------------------------------------------------------ Monte Carlo oracle

def _sample_pairs(model, p, rho, size, rng):
    if model is ModelKind.ER:
        cdf = np.cumsum(correlated_bernoulli_pmf(p, rho))
        cell = np.minimum(np.searchsorted(cdf, rng.random(size), side="right"), 3)
        return (cell >= 2).astype(np.float64), (cell % 2).astype(np.float64)
    a = rng.standard_normal(size)
    b = rho * a + math.sqrt(1.0 - rho * rho) * rng.standard_normal(size)
    return a, b


def component_scores(model, score, rho, p, ell, kind, samples, rng):
    """Samples of sum_{i=1..ell} f(A_{i-1}, B_i) over fresh chains."""
    model = ModelKind.parse(model)
    f = score_fn(score, rho)
    kind = component_kind(kind)
    a, b = _sample_pairs(model, p, rho, (samples, ell), rng)
    if kind == PATH:
        if model is ModelKind.ER:
            tail = (rng.random((samples, 1)) < p).astype(np.float64)
        else:
            tail = rng.standard_normal((samples, 1))
        nxt = np.concatenate([b[:, 1:], tail], axis=1)
    elif kind == CYCLE:
        nxt = np.roll(b, -1, axis=1)
    else:
        raise DomainError(f"unknown component kind {kind!r}")
    return f(a, nxt).sum(axis=1)


def monte_carlo_component_mgf(model, score, rho, p, t, ell, kind, samples, rng, chunk=250_000):
    if samples < 2:
        raise DomainError("need at least two samples")
    total = 0.0
    total_sq = 0.0
    done = 0
    while done < samples:
        size = min(chunk, samples - done)
        vals = np.exp(t * component_scores(model, score, rho, p, ell, kind, size, rng))
        total += vals.sum()
        total_sq += np.square(vals).sum()
        done += size
    mean = total / samples
    var = max(total_sq / samples - mean * mean, 0.0) * samples / (samples - 1)
    return mean, math.sqrt(var / samples)
