import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from palign import cumulants as cm
from palign.digraph import restricted_decomposition
from palign.models import DomainError, InjectiveMapping, correlated_bernoulli_pmf


# ---- independent oracles -------------------------------------------------

def joint_er_oracle(p, rho, t, ell, kind):
    """Enumerate every (A_i, B_i) cell assignment; no conditioning, no recursion."""
    pmf = np.array(correlated_bernoulli_pmf(p, rho))
    nodes = ell + 1 if kind == cm.PATH else ell
    cells = np.indices((4,) * nodes).reshape(nodes, -1).T
    a, b = cells >> 1, cells & 1
    heads = [i % nodes for i in range(1, ell + 1)]
    score = sum(a[:, i - 1] * b[:, h] for i, h in zip(range(1, ell + 1), heads))
    weight = np.prod(pmf[cells], axis=1)
    return math.fsum(weight * np.exp(t * score))


def determinant_oracle(score, rho, t, ell, kind):
    """E exp(t z'Qz) = det(I - 2t Sigma Q)^(-1/2) for the component's quadratic form."""
    nodes = ell + 1 if kind == cm.PATH else ell
    sigma = np.eye(2 * nodes)
    for i in range(nodes):
        sigma[i, nodes + i] = sigma[nodes + i, i] = rho
    q = np.zeros((2 * nodes, 2 * nodes))
    for i in range(1, ell + 1):
        x, y = i - 1, nodes + i % nodes
        if score == "product":
            q[x, y] += 0.5
            q[y, x] += 0.5
        else:
            q[x, x] -= 0.5
            q[y, y] -= 0.5
            q[x, y] += 0.5
            q[y, x] += 0.5
    return np.linalg.det(np.eye(2 * nodes) - 2 * t * sigma @ q) ** -0.5


# ---- frozen values (40-digit joint enumeration / determinant) -----------

@pytest.mark.parametrize("fn,args,expected", [
    (cm.er_path_mgf, (0.3, 0.5, 0.5, 3), 1.1942692998545673469),
    (cm.er_cycle_mgf, (0.3, 0.5, 0.5, 3), 1.1993362472759648289),
    (cm.er_path_mgf, (0.1, 0.9, 1.0, 5), 1.1001383771770302306),
    (cm.er_cycle_mgf, (0.5, 0.1, 0.1, 2), 1.053421941264744956),
    (cm.gauss_product_path_mgf, (0.6, 0.4, 1), 1.0910894511799619179),
    (cm.gauss_product_cycle_mgf, (0.6, 0.4, 1), 1.5474611514754322383),
    (cm.gauss_product_cycle_mgf, (0.6, 0.4, 3), 1.360285822323692206),
    (cm.gauss_sq_path_mgf, (0.5, 1.0, 2), 0.338061701891406631),
    (cm.gauss_sq_cycle_mgf, (0.9, 2.0, 4), 0.057639041770423497917),
])
def test_frozen_values(fn, args, expected):
    assert fn(*args) == pytest.approx(expected, rel=1e-13)


@pytest.mark.parametrize("p,rho,t", [(0.1, 0.5, 0.5), (0.5, 0.9, 1.0), (0.3, 0.1, 0.1)])
@pytest.mark.parametrize("ell", [1, 2, 4, 7])
def test_er_against_joint_enumeration(p, rho, t, ell):
    assert cm.er_path_mgf(p, rho, t, ell) == pytest.approx(joint_er_oracle(p, rho, t, ell, cm.PATH), rel=1e-12)
    assert cm.er_cycle_mgf(p, rho, t, ell) == pytest.approx(joint_er_oracle(p, rho, t, ell, cm.CYCLE), rel=1e-12)


def test_brute_force_matches_joint_enumeration():
    for ell in (1, 3, 6):
        for kind in (cm.PATH, cm.CYCLE):
            assert cm.brute_force_er_component_mgf(0.3, 0.7, 0.8, ell, kind) == pytest.approx(
                joint_er_oracle(0.3, 0.7, 0.8, ell, kind), rel=1e-12)


def test_brute_force_cap():
    with pytest.raises(OverflowError):
        cm.brute_force_er_component_mgf(0.3, 0.5, 0.5, 13, cm.PATH)


@pytest.mark.parametrize("rho,frac", [(0.0, 0.5), (0.3, 0.2), (0.6, 0.9), (0.95, 0.5), (1.0, 0.4)])
@pytest.mark.parametrize("ell", [1, 2, 3, 6])
def test_gauss_product_against_determinant(rho, frac, ell):
    t = frac / (1 + rho)
    assert cm.gauss_product_path_mgf(rho, t, ell) == pytest.approx(
        determinant_oracle("product", rho, t, ell, cm.PATH), rel=1e-10)
    assert cm.gauss_product_cycle_mgf(rho, t, ell) == pytest.approx(
        determinant_oracle("product", rho, t, ell, cm.CYCLE), rel=1e-10)


@pytest.mark.parametrize("rho,t", [(0.1, 0.5), (0.5, 2.0), (0.9, 0.3), (0.99, 10.0), (1.0, 1.0)])
@pytest.mark.parametrize("ell", [1, 2, 3, 6])
def test_gauss_sq_against_determinant(rho, t, ell):
    assert cm.gauss_sq_path_mgf(rho, t, ell) == pytest.approx(
        determinant_oracle("sq", rho, t, ell, cm.PATH), rel=1e-10)
    assert cm.gauss_sq_cycle_mgf(rho, t, ell) == pytest.approx(
        determinant_oracle("sq", rho, t, ell, cm.CYCLE), rel=1e-10)


def test_long_components_stay_finite():
    # log-space branch for long paths and cycles
    for ell in (60, 500):
        q = cm.CumulantQuery("ER", "Product", 0.5, ell, p=0.3, rho=0.5)
        assert math.isfinite(cm.kappa(q, cm.PATH)) and math.isfinite(cm.kappa(q, cm.CYCLE))
        assert cm.kappa(q, cm.PATH) <= cm.kappa(q, cm.CYCLE) + 1e-9
        g = cm.CumulantQuery("Gaussian", "Product", 0.3, ell, rho=0.5)
        assert math.isfinite(cm.kappa(g, cm.PATH))


def test_er_alphas_in_unit_interval():
    for p, rho, t in itertools.product((0.1, 0.5), (0.1, 0.9), (0.1, 2.0)):
        a1, a2 = cm.er_alphas(p, rho, t)
        assert 0 < a1 < 1 and 0 < a2 < 1


def test_validity_errors():
    with pytest.raises(DomainError):
        cm.gauss_product_path_mgf(0.5, 1 / 1.5, 2)
    with pytest.raises(DomainError):
        cm.er_path_mgf(0.3, 0.5, -1.0, 2)
    with pytest.raises(DomainError):
        cm.kappa(cm.CumulantQuery("ER", "sqdiff", 0.5, 2, p=0.3, rho=0.5), cm.PATH)
    with pytest.raises(DomainError):
        cm.component_kind("loop")


def test_component_kind_is_case_insensitive():
    assert cm.component_kind("path") == cm.PATH
    assert cm.component_kind("CYCLE") == cm.CYCLE


def test_kappa_chain_default_grid():
    rep = cm.verify_kappa_chain()
    assert rep.ok and rep.checked > 0


def test_kappa_chain_fault_injection():
    assert not cm.verify_kappa_chain(kc2_shift=-1e-3).ok


def test_chain_bound_dominates_exact_decompositions():
    # exact log-MGF of every restricted decomposition <= (E/2) kC2 + L (kC1 - kC2/2)
    truth = InjectiveMapping.from_pairs((v, v) for v in range(4))
    queries = [cm.CumulantQuery("ER", "Product", 0.7, 1, p=0.2, rho=0.6),
               cm.CumulantQuery("Gaussian", "Product", 0.3, 1, rho=0.8),
               cm.CumulantQuery("Gaussian", "sqdiff", 2.0, 1, rho=0.9)]
    for srcs in itertools.combinations(range(6), 4):
        for tgts in itertools.permutations(range(6), 4):
            pi = InjectiveMapping.from_pairs(zip(srcs, tgts))
            dec = restricted_decomposition(pi, truth)
            if dec.total_edges == 0:
                continue
            paths = [len(c) for c in dec.paths()]
            cycles = [len(c) for c in dec.cycles()]
            for q in queries:
                exact = cm.decomposition_log_mgf(q, paths, cycles)
                bound = cm.chain_upper_bound(dec.total_edges, dec.self_loop_count, q)
                assert exact <= bound + 1e-12


def test_monte_carlo_er_agrees_with_closed_form():
    rng = np.random.default_rng(5)
    mean, se = cm.monte_carlo_component_mgf("ER", "Product", 0.6, 0.3, 0.8, 3, cm.CYCLE, 200_000, rng)
    assert abs(mean - cm.er_cycle_mgf(0.3, 0.6, 0.8, 3)) < 4 * se


@settings(max_examples=60, deadline=None)
@given(st.floats(0.05, 0.5), st.floats(0.0, 0.95), st.floats(0.01, 2.0), st.integers(1, 8))
def test_path_below_cycle_er(p, rho, t, ell):
    q = cm.CumulantQuery("ER", "Product", t, ell, p=p, rho=rho)
    assert cm.kappa(q, cm.PATH) <= cm.kappa(q, cm.CYCLE) + 1e-12
