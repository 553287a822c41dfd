import itertools
import math
import warnings

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from palign import thresholds as th
from palign.models import DomainError, InjectiveMapping

# reference numbers below were computed with 30-digit mpmath arithmetic


def test_phi_values():
    assert th.phi(0) == 0
    assert th.phi(math.e - 1) == pytest.approx(1.0, rel=1e-14)
    assert th.phi(1.0) == pytest.approx(0.386294361119890618834, rel=1e-14)
    assert th.phi(1e-6) == pytest.approx(0.5e-12, rel=1e-5)
    with pytest.raises(DomainError):
        th.phi(-0.1)


def test_binary_entropy():
    assert th.binary_entropy(0.5) == pytest.approx(math.log(2))
    assert th.binary_entropy(0) == th.binary_entropy(1) == 0
    assert th.binary_entropy(0.25) == pytest.approx(0.562335144618808350288, rel=1e-14)
    with pytest.raises(DomainError):
        th.binary_entropy(1.5)


def test_signal_params():
    s = th.signal_params(0.3, 0.5)
    assert s.gamma == pytest.approx(0.5 * 0.7 / 0.3)
    assert s.p11 == pytest.approx(0.09 * (1 + s.gamma))


def test_partial_threshold():
    assert th.c1_partial(0.5) == pytest.approx(277.258872223978123767, rel=1e-13)
    assert th.c1_partial(0.999) == pytest.approx(1581.45102244641740374, rel=1e-12)
    assert th.c1_partial(0.05) == 100.0
    # p^2 phi(gamma) = 1 and n = e leave c1 alone
    assert th.partial_threshold_er(math.e, 0.5, 0.5, 0.5) == pytest.approx(
        th.c1_partial(0.5) / (0.25 * th.phi(0.5)))


def test_partial_threshold_gamma_zero_warns():
    with pytest.warns(RuntimeWarning):
        assert th.partial_threshold_er(100, 0.3, 0.0, 0.5) == math.inf


def test_exact_threshold_terms():
    # weak signal: log n term active
    assert th.exact_threshold_er(1e6, 0.3, 0.1) == pytest.approx(3000 * 6062.14929040451014211, rel=1e-12)
    # strong signal: log(1/(p^2 gamma)) term active
    n = 1e4
    assert th.exact_threshold_er(n, n**-0.8, n**-0.1) == pytest.approx(3000 * 33023.6721155733751643, rel=1e-10)


def test_gaussian_threshold():
    assert th.default_c2() == 1100
    assert th.gaussian_threshold(1e4, 0.5) == pytest.approx(35217.2602304648115886, rel=1e-12)
    assert th.gaussian_threshold(3, 0.999) == th.default_c2()
    assert th.gaussian_regime(1 - math.exp(-12)) is th.Regime.WEAK
    assert th.gaussian_regime(1 - math.exp(-13)) is th.Regime.STRONG
    with pytest.raises(DomainError):
        th.gaussian_threshold(100, 1.0)


def test_n_k():
    assert th.n_k(10, 0) == 0
    assert th.n_k(10, 10) == 45
    assert th.n_k(10, 3) == 24
    for m in range(1, 13):
        for k in range(1, m + 1):
            assert th.n_k(m, k) == pytest.approx(m * k * (1 - (k + 1) / (2 * m)))
            if m >= 3:
                assert th.n_k(m, k) >= m * k / 3
    # the mk/3 bound needs m >= 3 when k = m
    assert th.n_k(1, 1) == 0 and th.n_k(2, 2) == 1
    with pytest.raises(DomainError):
        th.n_k(3, 4)


def test_t_k_count():
    b = th.t_k_count_bound(8, 4, 2)
    assert b.log_middle == pytest.approx(math.log(2700))
    assert b.log_middle <= b.log_relaxed
    assert th.t_k_count_bound(5, 5, 5).log_relaxed == pytest.approx(15 * math.log(5) - 2 * math.log(120))


def test_t_k_count_exhaustive():
    for n in range(1, 7):
        for m in range(1, n + 1):
            truth = InjectiveMapping.from_pairs((v, v) for v in range(m))
            counts = {}
            for srcs in itertools.combinations(range(n), m):
                for tgts in itertools.permutations(range(n), m):
                    d = dict(zip(srcs, tgts))
                    k = m - sum(1 for v in range(m) if d.get(v) == v)
                    counts[k] = counts.get(k, 0) + 1
            for k, c in counts.items():
                if k >= 1:
                    assert math.log(c) <= th.t_k_count_bound(n, m, k).log_middle + 1e-12


def test_bennett():
    edges, p, gamma, k = 20, 0.2, 1.5, 3
    tau = edges * p * p * math.e
    assert th.bennett_noise_tail(tau, edges, p, gamma, k) == pytest.approx(
        -edges * p * p / 2 + k * gamma / (4 * (2 + gamma)))
    with pytest.raises(DomainError):
        th.bennett_noise_tail(edges * p * p, edges, p, gamma, k)


def test_gaussian_tails():
    rho, edges = 0.6, 20
    val = th.gaussian_product_noise_tail(rho * edges, edges, rho, 0)
    assert val == pytest.approx(-rho * rho * edges / 6 + rho * rho * edges / 14) and val < 0
    assert th.gaussian_product_noise_tail(5.0, 10, 0.0, 4) == pytest.approx(math.log(5) / 2)
    # k = 2 edges: the log terms cancel
    assert th.gaussian_sq_noise_tail(-2.0, 5, 0.5, 10) == pytest.approx(0.5 * 2.0 / 2.0)
    tau = (0.99 - 1) / 3 * math.log(100) * 10
    assert th.gaussian_sq_noise_tail(tau, 10, 0.99, 2) == pytest.approx(-6.56236751503303019945, rel=1e-12)
    with pytest.raises(DomainError):
        th.gaussian_sq_noise_tail(1.0, 5, 1.0, 1)


def test_chernoff_and_chisquare():
    for d in [0.01 * i for i in range(1, 1001)]:
        assert th.chernoff_binomial(10, d, "upper-log") <= th.chernoff_binomial(10, d, "upper-simple") + 1e-15
    assert th.chernoff_binomial(300, 0.2, "lower") == pytest.approx(-6.0)
    assert th.chernoff_binomial(20, 0.5, "upper-simple") == pytest.approx(-2.0)
    assert th.chisquare_tail(10, 1.0) == pytest.approx(-1.53426409720027345291, rel=1e-13)
    with pytest.raises(DomainError):
        th.chernoff_binomial(10, 1.2, "lower")
    with pytest.raises(DomainError):
        th.chisquare_tail(10, 0.0)


def test_hanson_wright():
    assert th.hanson_wright_tau(0.8, 0, 0, 100) == 0
    assert th.hanson_wright_tau(0.8, 485, 5, 100) == pytest.approx(238.550759780980341262, rel=1e-13)
    assert th.hanson_wright_tau(0.8, 485, 5, 100, c0=0.0) == pytest.approx(0.8 * 485)


def test_hanson_wright_half_under_condition():
    n, c0 = 50, 1.0
    for rho in (0.5, 0.9):
        m = math.ceil(th.c3_weak_gauss(c0) * math.log(n) / rho**2)
        assert th.hanson_wright_condition(n, m, rho, c0)
        for k in (1, 2, 5, 20, m):
            nk = th.n_k(m, k)
            assert th.hanson_wright_tau(rho, nk, k, m, c0) >= rho * nk / 2


def test_packing_and_mi():
    assert th.packing_lower_bound(1000, 10, 0.5).value == pytest.approx(16.073040492110958713, rel=1e-13)
    assert th.packing_lower_bound(2 * math.exp(3), 10, 0.5).value == pytest.approx(0, abs=1e-12)
    assert th.packing_lower_bound(20, 10, 0.5).vacuous
    assert th.mutual_information_bound("ER", 1, 0.3, 0.5) == 0
    assert th.mutual_information_bound("ER", 10, 0.3, 0.5) == pytest.approx(51.4935317312200556685, rel=1e-13)
    assert th.mutual_information_bound("Gaussian", 10, None, 0.6) == pytest.approx(10.0414598091394390095, rel=1e-13)


def test_kl():
    exact, bound = th.kl_pair_bound("ER", 0.3, 0.5)
    assert exact == pytest.approx(0.120733948880310115502, rel=1e-12)
    assert bound == pytest.approx(1.14430070513822345930, rel=1e-12)
    assert th.kl_pair_bound("ER", 0.3, 0.0)[0] == 0
    assert th.kl_pair_bound("Gaussian", None, 0.6)[0] == pytest.approx(0.223143551314209755766, rel=1e-13)


def test_kl_bound_grid():
    for p, rho in itertools.product([0.01, 0.05, 0.1, 0.2, 0.3, 0.4, 0.5], [0.01, 0.1, 0.3, 0.5, 0.7, 0.9, 0.99]):
        exact, bound = th.kl_pair_bound("ER", p, rho)
        assert exact <= bound


def greedy_packing(n, m, delta):
    maps = [dict(zip(s, t)) for s in itertools.combinations(range(n), m)
            for t in itertools.permutations(range(n), m)]
    chosen = []
    for a in maps:
        if all(m - sum(1 for v, w in a.items() if b.get(v) == w) > (1 - delta) * m for b in chosen):
            chosen.append(a)
    return len(chosen)


@pytest.mark.parametrize("n,m,delta", [(5, 2, 0.5), (6, 3, 0.4), (7, 2, 0.5), (6, 4, 0.3)])
def test_packing_bounds_below_greedy(n, m, delta):
    size = greedy_packing(n, m, delta)
    assert th.packing_lower_bound(n, m, delta).value <= math.log(size)
    assert th.packing_log_volume(n, m, delta).value <= math.log(size) + 1e-12


def test_fano():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        assert th.fano_failure_lower_bound("ER", 1e6, 1, 0.3, 0.5, 0.5) > 0.9
        assert th.fano_failure_lower_bound("ER", 100, 50, 0.5, 0.9, 0.5) == 0.0
    with pytest.warns(RuntimeWarning):
        assert th.fano_failure_lower_bound("ER", 2, 2, 0.3, 0.5, 0.5) == 0.0


def test_fano_nonincreasing_in_m():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        for model, p, rho in (("ER", 0.01, 0.1), ("ER", 0.3, 0.5), ("Gaussian", None, 0.05), ("Gaussian", None, 0.5)):
            for n, delta in ((10**6, 0.5), (10**4, 0.3), (500, 0.8)):
                m0 = th.fano_turning_point(model, p, rho)
                vals = [th.fano_failure_lower_bound(model, n, m, p, rho, delta) for m in range(m0, m0 + 300)]
                assert all(b <= a + 1e-12 for a, b in zip(vals, vals[1:]))


def test_fano_rises_below_turning_point():
    # with no information the log 2 term alone drives the bound up in m
    lo = th.fano_failure_lower_bound("Gaussian", 10**6, 1, None, 0.05, 0.5)
    hi = th.fano_failure_lower_bound("Gaussian", 10**6, 20, None, 0.05, 0.5)
    assert lo < hi < 1


def test_support_recovery():
    assert not th.support_recovery_check(100, 100, 0.3, 0.5, 1.0)
    assert th.support_recovery_check(10**6, 1, 0.3, 0.5, 0.5)


def test_eta_phi():
    assert th.phi(0.75) >= th.phi(1) / 4
    assert th.phi(0.75) == pytest.approx(0.229327628886989700974, rel=1e-13)
    rep = th.eta_phi_inequality_check()
    assert rep.ok and rep.checked == 123
    assert th.eta_phi_inequality_check([1.0], [0.0]).ok


def test_entropy_sum():
    assert th.entropy_sum_check().ok
    assert th.entropy_sum(10) <= (4 * math.log(10) + 2) / 10
    with pytest.raises(DomainError):
        th.entropy_sum_check([5])


def test_phase_diagram():
    assert th.phase_diagram_exponent(0.6, 0.2, "Exact") == (pytest.approx(0.8), th.LogFactor.LOGN)
    assert th.phase_diagram_exponent(0.2, 0.6, "Partial") == (pytest.approx(1.2), th.LogFactor.LOGN)
    assert th.phase_diagram_exponent(0.4, 0.4, "Partial") == (pytest.approx(0.8), th.LogFactor.LOGN)
    assert th.phase_diagram_exponent(0.6, 0.2, "Partial")[1] is th.LogFactor.NONE


def test_report():
    rep = th.threshold_report("ER", 10**6, 0.1, p=0.01, m=85)
    assert rep.regime == "StrongSignal" and 0 <= rep.fano_failure_lb <= 1
    g = th.threshold_report("Gaussian", 1000, 0.5, m=10)
    assert g.gaussian > 0 and g.regime == "WeakSignal"


@settings(max_examples=100, deadline=None)
@given(st.floats(0, 50), st.floats(0, 50))
def test_phi_convex(x, y):
    assert th.phi((x + y) / 2) <= (th.phi(x) + th.phi(y)) / 2 + 1e-9
