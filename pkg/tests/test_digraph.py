import itertools

import pytest

from palign.digraph import (
    CYCLE,
    PATH,
    build_decomposition,
    distance,
    domain_edges,
    restricted_decomposition,
    restricted_edges,
)
from palign.models import DomainError, InjectiveMapping


def mp(*pairs):
    return InjectiveMapping.from_pairs(pairs)


def test_identity_gives_self_loops_on_all_edges():
    truth = mp((0, 0), (1, 1), (2, 2))
    dec = build_decomposition(truth, truth, domain_edges(truth))
    assert dec.self_loop_count == 3
    assert all(c.kind == CYCLE and len(c) == 1 for c in dec.components)


def test_swap_gives_one_self_loop():
    truth = mp((0, 0), (1, 1), (2, 2))
    pi = mp((0, 1), (1, 0), (2, 2))
    assert distance(pi, truth) == 2
    dec = restricted_decomposition(pi, truth)
    # E_pi = {01, 02, 12}; 01 maps onto itself, 02 <-> 12 form a 2-cycle
    kinds = sorted((c.kind, len(c)) for c in dec.components)
    assert kinds == [(CYCLE, 1), (CYCLE, 2)]
    assert dec.self_loop_count == 1


def test_disjoint_images_give_paths():
    truth = mp((0, 0), (1, 1))
    pi = mp((0, 2), (1, 3))
    dec = restricted_decomposition(pi, truth)
    assert [(c.kind, len(c)) for c in dec.components] == [(PATH, 1)]


def test_edge_outside_domain_rejected():
    truth = mp((0, 0), (1, 1))
    with pytest.raises(DomainError):
        build_decomposition(truth, truth, [(0, 5)])


def test_restricted_size_mismatch():
    with pytest.raises(DomainError):
        restricted_decomposition(mp((0, 0)), mp((0, 0), (1, 1)))


def test_restricted_edges_count():
    truth = mp(*[(v, v) for v in range(5)])
    pi = mp((0, 0), (1, 1), (2, 3), (3, 4), (4, 2))
    assert len(restricted_edges(pi, truth)) == 10 - 1


def test_json_shape():
    truth = mp((0, 0), (1, 1), (2, 2))
    dec = restricted_decomposition(mp((0, 1), (1, 0), (2, 2)), truth)
    assert '"self_loops": 1' in dec.to_json()


def test_small_exhaustive():
    truth = mp((0, 1), (1, 2), (2, 0))
    for tgts in itertools.permutations(range(4), 3):
        pi = mp(*zip(range(3), tgts))
        dec = restricted_decomposition(pi, truth)
        got = sorted(e for c in dec.components for e in c.edges)
        assert got == restricted_edges(pi, truth)
