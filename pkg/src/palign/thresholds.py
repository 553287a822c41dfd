"""Recovery thresholds, tail bounds, counting bounds and Fano lower bounds.

Everything returning a probability bound returns its natural log. Bounds that
say nothing (log-probability >= 0, log-cardinality <= 0) come back with a
``vacuous`` flag where the return type carries one; nothing here raises for
vacuity alone.
"""

from __future__ import annotations

import enum
import math
import warnings
from dataclasses import asdict, dataclass

from .models import DomainError, ModelKind, correlated_bernoulli_pmf

C1_EXACT_ER = 3000.0
C4_STRONG_GAUSS = 100.0
GAUSS_REGIME_SPLIT = 1.0 - math.exp(-12.0)
LOG2 = math.log(2.0)


class Regime(str, enum.Enum):
    WEAK = "WeakSignal"
    STRONG = "StrongSignal"


class LogFactor(str, enum.Enum):
    NONE = "None"
    LOGN = "LogN"


def phi(gamma):
    """(1+g) log(1+g) - g, evaluated without cancellation for small g."""
    if gamma < 0:
        raise DomainError(f"phi needs gamma >= 0, got {gamma}")
    if gamma < 1e-4:
        # series: g^2/2 - g^3/6 + g^4/12
        return gamma * gamma * (0.5 - gamma / 6.0 + gamma * gamma / 12.0)
    return (1.0 + gamma) * math.log1p(gamma) - gamma


def binary_entropy(x):
    if not 0 <= x <= 1:
        raise DomainError(f"entropy argument must lie in [0, 1], got {x}")
    if x == 0 or x == 1:
        return 0.0
    return -x * math.log(x) - (1.0 - x) * math.log1p(-x)


@dataclass(frozen=True)
class SignalParams:
    gamma: float
    phi_gamma: float
    p11: float


def signal_params(p, rho):
    if not 0 < p < 1:
        raise DomainError(f"need 0 < p < 1, got {p}")
    gamma = rho * (1.0 - p) / p
    return SignalParams(gamma, phi(gamma), correlated_bernoulli_pmf(p, rho)[3])


def _check_er(p, rho):
    if not 0 < p <= 0.5 or not 0 <= rho < 1:
        raise DomainError(f"ER thresholds need 0 < p <= 1/2 and 0 <= rho < 1; got p={p}, rho={rho}")


def c1_partial(delta):
    if not 0 < delta < 1:
        raise DomainError(f"delta must lie in (0, 1), got {delta}")
    return max(100.0, 200.0 * binary_entropy(1.0 - delta) / (1.0 - delta))


def partial_threshold_er(n, p, rho, delta):
    _check_er(p, rho)
    s = signal_params(p, rho)
    if s.phi_gamma == 0:
        warnings.warn("gamma = 0: no finite partial-recovery threshold", RuntimeWarning)
        return math.inf
    return c1_partial(delta) * math.log(n) / (p * p * s.phi_gamma)


def exact_threshold_er(n, p, rho):
    _check_er(p, rho)
    s = signal_params(p, rho)
    if s.phi_gamma == 0:
        warnings.warn("gamma = 0: no finite exact-recovery threshold", RuntimeWarning)
        return math.inf
    first = math.log(n) / (p * p * s.phi_gamma)
    q = p * p * s.gamma
    if q >= 1:
        warnings.warn("p^2 gamma >= 1: dropping the log(1/(p^2 gamma)) term", RuntimeWarning)
        return C1_EXACT_ER * first
    return C1_EXACT_ER * max(first, math.log(1.0 / q) / q)


def c3_weak_gauss(c0=1.0):
    return max(25.0 * c0 * c0, 1100.0)


def default_c2(c0=1.0):
    return max(c3_weak_gauss(c0), C4_STRONG_GAUSS)


def gaussian_regime(rho):
    return Regime.WEAK if rho <= GAUSS_REGIME_SPLIT else Regime.STRONG


def er_regime(p, rho):
    return Regime.STRONG if signal_params(p, rho).gamma > 1 else Regime.WEAK


def gaussian_threshold(n, rho, c0=1.0, c2=None):
    if not 0 < rho < 1:
        raise DomainError(f"gaussian threshold needs 0 < rho < 1, got {rho}")
    c2 = default_c2(c0) if c2 is None else c2
    info = -math.log1p(-rho * rho)
    return c2 * max(math.log(n) / info, 1.0)


# ---------------------------------------------------------------- counting

def n_k(m, k):
    if not 0 <= k <= m:
        raise DomainError(f"need 0 <= k <= m, got k={k}, m={m}")
    return math.comb(m, 2) - math.comb(m - k, 2)


@dataclass(frozen=True)
class CountBound:
    log_middle: float
    log_intermediate: float
    log_relaxed: float


def t_k_count_bound(n, m, k):
    """log of C(m,m-k) C(n-m+k,k)^2 k!, of m^k n^2k / k!^2 and of n^3k / k!^2."""
    if not 1 <= k <= m <= n:
        raise DomainError(f"need 1 <= k <= m <= n, got n={n}, m={m}, k={k}")
    lf = math.lgamma(k + 1)
    middle = math.log(math.comb(m, m - k)) + 2 * math.log(math.comb(n - m + k, k)) + lf
    inter = k * math.log(m) + 2 * k * math.log(n) - 2 * lf
    relaxed = 3 * k * math.log(n) - 2 * lf
    return CountBound(middle, inter, relaxed)


# -------------------------------------------------------------- tail bounds

def bennett_noise_tail(tau, edges, p, gamma, k):
    mean = edges * p * p
    if not tau > mean:
        raise DomainError(f"need tau > edges p^2 = {mean}, got {tau}")
    return -0.5 * tau * math.log(tau / mean) + 0.5 * tau - 0.5 * mean + k * gamma / (4.0 * (2.0 + gamma))


def gaussian_product_noise_tail(tau, edges, rho, k):
    return -rho * tau / 6.0 + rho * rho * edges / 14.0 + math.log(5.0) / 8.0 * k


def gaussian_sq_noise_tail(tau, edges, rho, k):
    if not 0 < rho < 1:
        raise DomainError(f"need 0 < rho < 1, got {rho}")
    info = -math.log1p(-rho)
    return -rho * tau / (4.0 * (1.0 - rho)) - 0.25 * edges * info + k / 8.0 * info


def chernoff_binomial(mu, delta, side):
    """Log Chernoff bounds for a sum of independent Bernoullis with mean mu.

    upper-log and upper-simple bound P(X >= (1+delta) mu); lower bounds
    P(X <= (1-delta) mu).
    """
    if not mu > 0:
        raise DomainError(f"need mu > 0, got {mu}")
    if side == "lower":
        if not 0 < delta < 1:
            raise DomainError(f"lower tail needs 0 < delta < 1, got {delta}")
        return -0.5 * delta * delta * mu
    if not delta > 0:
        raise DomainError(f"upper tail needs delta > 0, got {delta}")
    if side == "upper-log":
        return -mu * phi(delta)
    if side == "upper-simple":
        # follows from phi(d) >= d^2 / (2 + d)
        return -delta * delta * mu / (2.0 + delta)
    raise DomainError(f"unknown side {side!r}")


def chisquare_tail(n_dof, delta):
    """log bound on P(chi2_n >= (1+delta) n)."""
    if not delta > 0:
        raise DomainError(f"need delta > 0, got {delta}")
    return -0.5 * n_dof * (delta - math.log1p(delta))


def hanson_wright_tau(rho, n_k_val, k, m, c0=1.0):
    if k == 0:
        return rho * n_k_val
    log_inv_theta = 2.0 * k * math.log(m)
    return rho * n_k_val - c0 * max(math.sqrt(n_k_val * log_inv_theta), log_inv_theta)


def hanson_wright_condition(n, m, rho, c0=1.0):
    """m rho^2 >= C3 log n, under which tau_k >= rho N_k / 2 for all k."""
    return m * rho * rho >= c3_weak_gauss(c0) * math.log(n)


# ------------------------------------------------------------------ Fano

@dataclass(frozen=True)
class LogBound:
    value: float
    vacuous: bool


def packing_lower_bound(n, m, delta):
    """log (delta n / e^3)^(delta m)."""
    if not 0 < delta < 1:
        raise DomainError(f"delta must lie in (0, 1), got {delta}")
    val = delta * m * (math.log(delta * n) - 3.0)
    return LogBound(val, val <= 0)


def packing_log_volume(n, m, delta):
    """log of |S_{n,m}| / max ball size at radius (1 - delta) m.

    A packing at pairwise distance > (1 - delta) m must agree on fewer than
    k = ceil(delta m) vertices, giving log[(C(n,k)/C(m,k))^2 k!].
    """
    if not 0 < delta < 1:
        raise DomainError(f"delta must lie in (0, 1), got {delta}")
    k = min(m, math.ceil(delta * m - 1e-12))
    val = 2.0 * (_log_comb(n, k) - _log_comb(m, k)) + math.lgamma(k + 1)
    return LogBound(val, val <= 0)


def _log_comb(a, b):
    return math.lgamma(a + 1) - math.lgamma(b + 1) - math.lgamma(a - b + 1)


def kl_pair_bound(model, p, rho):
    """ER: (exact KL of the correlated pair vs independence, 25 p^2 phi(gamma)).

    Gaussian: (exact KL, exact KL).
    """
    model = ModelKind.parse(model)
    if model is ModelKind.GAUSSIAN:
        if not 0 <= rho < 1:
            raise DomainError(f"need 0 <= rho < 1, got {rho}")
        kl = -0.5 * math.log1p(-rho * rho)
        return kl, kl
    _check_er(p, rho)
    pmf = correlated_bernoulli_pmf(p, rho)
    q = ((1 - p) ** 2, p * (1 - p), p * (1 - p), p * p)
    exact = math.fsum(a * math.log(a / b) for a, b in zip(pmf, q) if a > 0)
    bound = 25.0 * p * p * phi(signal_params(p, rho).gamma)
    if exact > bound * (1 + 1e-12):
        raise AssertionError(f"KL {exact} above 25 p^2 phi = {bound}")
    return exact, bound


def mutual_information_bound(model, m, p, rho):
    pairs = math.comb(m, 2)
    if pairs == 0:
        return 0.0
    return pairs * kl_pair_bound(model, p, rho)[1]


def _fano_raw(model, n, m, p, rho, delta):
    pack = max(packing_lower_bound(n, m, delta).value, packing_log_volume(n, m, delta).value)
    if pack <= 0:
        return None
    return max(0.0, 1.0 - (mutual_information_bound(model, m, p, rho) + LOG2) / pack)


def fano_turning_point(model, p, rho):
    """Smallest m past which the smooth part of the Fano bound decreases.

    Below it the log 2 term dominates and the bound rises with m.
    """
    a = kl_pair_bound(model, p, rho)[1]
    if a <= 0:
        return math.inf
    return max(1, math.ceil(math.sqrt(2.0 * LOG2 / a)))


def fano_failure_lower_bound(model, n, m, p, rho, delta):
    """Lower bound on P(overlap < delta) for any estimator.

    Raw value: max(0, 1 - (I + log 2) / log|M_delta|), with log|M_delta| the
    larger of the closed-form packing bound and the volume count it comes from.
    The ceiling in the volume count makes the raw value jump upward in m. Past
    the turning point m0 the result is the running minimum of raw values over
    [m0, m]; each is at least as small as the raw value at m, so it is still a
    valid bound, and it is nonincreasing for m >= m0.
    """
    if m < 1:
        raise DomainError(f"need m >= 1, got {m}")
    model = ModelKind.parse(model)
    m0 = fano_turning_point(model, p, rho)
    start = m if m <= m0 else m0
    best = 1.0
    for k in range(start, m + 1):
        val = _fano_raw(model, n, k, p, rho, delta)
        if val is None:
            if k == m:
                warnings.warn("packing bound is vacuous; Fano bound set to 0", RuntimeWarning)
            return 0.0
        best = min(best, val)
    return best


def support_recovery_check(n, m, p, rho, c):
    s = signal_params(p, rho)
    return 25.0 * m * p * p * s.phi_gamma <= 4.0 * c * (math.log(n) - math.log(m))


# ------------------------------------------------- auxiliary inequalities

@dataclass
class CheckReport:
    name: str
    checked: int
    failures: list

    @property
    def ok(self):
        return not self.failures


def eta_phi_inequality_check(gammas=None, etas=None):
    """phi((1-eta)(1+g) - 1) >= phi(g)/4 whenever eta <= g / (4 (1+g)).

    With etas=None each gamma is checked at eta in {0, eta_max/2, eta_max}.
    Explicit etas above eta_max for a gamma are skipped.
    """
    if gammas is None:
        gammas = [10 ** (x / 10.0) for x in range(-20, 21)]
    failures = []
    checked = 0
    for g in gammas:
        cap = g / (4.0 * (1.0 + g))
        cand = [0.0, 0.5 * cap, cap] if etas is None else [e for e in etas if 0 <= e <= cap]
        for eta in cand:
            checked += 1
            x = (1.0 - eta) * (1.0 + g)
            if not x > 1:
                failures.append((g, eta, "(1-eta)(1+g) <= 1"))
                continue
            if phi(x - 1.0) < 0.25 * phi(g) * (1 - 1e-12):
                failures.append((g, eta, "phi inequality"))
    return CheckReport("eta-phi", checked, failures)


def entropy_sum(m):
    terms = sorted(math.exp(-m * binary_entropy(k / m)) for k in range(1, m))
    return math.fsum(terms)


def entropy_sum_check(ms=(10, 50, 100, 1000, 10**5)):
    failures = []
    for m in ms:
        if m < 10:
            raise DomainError(f"entropy sum check needs m >= 10, got {m}")
        lhs = entropy_sum(m)
        rhs = (4.0 * math.log(m) + 2.0) / m
        if lhs > rhs:
            failures.append((m, lhs, rhs))
    return CheckReport("entropy-sum", len(ms), failures)


def phase_diagram_exponent(a1, a2, criterion):
    """(a3, log factor) for p = n^-a1, rho = n^-a2 (ER)."""
    if not (0 < a1 < 1 and 0 < a2 < 1):
        raise DomainError("need a1, a2 in (0, 1)")
    a3 = a1 + a2 if a1 >= a2 else 2.0 * a2
    crit = str(criterion).lower()
    if crit == "exact":
        return a3, LogFactor.LOGN
    if crit == "partial":
        return a3, LogFactor.NONE if a1 > a2 else LogFactor.LOGN
    raise DomainError(f"unknown criterion {criterion!r}")


# ---------------------------------------------------------------- report

@dataclass
class ThresholdReport:
    model: str
    n: int
    m: int | None
    p: float | None
    rho: float
    delta: float
    c0: float
    c2: float
    regime: str
    partial_er: float | None = None
    exact_er: float | None = None
    gaussian: float | None = None
    gamma: float | None = None
    phi_gamma: float | None = None
    fano_failure_lb: float | None = None
    packing_log: float | None = None
    packing_vacuous: bool | None = None
    mutual_information: float | None = None

    def to_dict(self):
        return asdict(self)


def threshold_report(model, n, rho, p=None, m=None, delta=0.5, c0=1.0, c2=None):
    model = ModelKind.parse(model)
    c2 = default_c2(c0) if c2 is None else c2
    if model is ModelKind.ER:
        s = signal_params(p, rho)
        rep = ThresholdReport(
            model.value, n, m, p, rho, delta, c0, c2, er_regime(p, rho).value,
            partial_er=partial_threshold_er(n, p, rho, delta),
            exact_er=exact_threshold_er(n, p, rho),
            gamma=s.gamma, phi_gamma=s.phi_gamma,
        )
    else:
        rep = ThresholdReport(
            model.value, n, m, p, rho, delta, c0, c2, gaussian_regime(rho).value,
            gaussian=gaussian_threshold(n, rho, c0, c2) if rho < 1 else c2,
        )
    if m is not None and m >= 1 and rho < 1:
        pack = packing_lower_bound(n, m, delta)
        rep.packing_log = pack.value
        rep.packing_vacuous = pack.vacuous
        rep.mutual_information = mutual_information_bound(model, m, p, rho)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            rep.fano_failure_lb = fano_failure_lower_bound(model, n, m, p, rho, delta)
    return rep
