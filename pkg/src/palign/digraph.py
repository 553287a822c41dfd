"""Functional digraph of a lifted edge mapping, merged along the truth.

Nodes are vertex pairs. An arc runs from each G1 edge e in the chosen edge set
to its image pi(e) in G2, and every G1 edge e' inside the truth's domain is
identified with the G2 edge pi*(e'). Merged nodes are keyed by their G1 edge;
G2 edges outside the truth's edge image keep a ``("G2", edge)`` key.

With pi and pi* both injective on edges, in- and out-degrees are at most one,
so each connected component is a simple path or a cycle.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field

from .models import DomainError, InjectiveMapping

PATH = "Path"
CYCLE = "Cycle"


def edge(u, v):
    if u == v:
        raise DomainError(f"loop edge ({u}, {v})")
    return (u, v) if u < v else (v, u)


@dataclass(frozen=True)
class Component:
    kind: str
    edges: tuple

    def __len__(self):
        return len(self.edges)

    @property
    def is_self_loop(self):
        return self.kind == CYCLE and len(self.edges) == 1


@dataclass
class DigraphDecomposition:
    components: list = field(default_factory=list)
    self_loop_count: int = 0
    total_edges: int = 0

    def paths(self):
        return [c for c in self.components if c.kind == PATH]

    def cycles(self):
        return [c for c in self.components if c.kind == CYCLE]

    def to_json(self):
        return json.dumps({
            "components": [{"kind": c.kind, "edges": [list(e) for e in c.edges]} for c in self.components],
            "self_loops": self.self_loop_count,
            "total": self.total_edges,
        })


def lift_to_edges(pi):
    """pi^E on C(domain(pi), 2): uv -> pi(u)pi(v)."""
    d = pi.as_dict()
    return {edge(u, v): edge(d[u], d[v]) for u, v in itertools.combinations(pi.sources, 2)}


def domain_edges(pi):
    return [edge(u, v) for u, v in itertools.combinations(pi.sources, 2)]


def merged_arcs(pi, truth, edge_set):
    """Arcs of the merged digraph as {tail node: head node}."""
    lifted = lift_to_edges(pi)
    merge = {img: ("G1", e) for e, img in lift_to_edges(truth).items()}
    arcs = {}
    for e in edge_set:
        e = edge(*e)
        if e not in lifted:
            raise DomainError(f"edge {e} outside C(domain(pi), 2)")
        img = lifted[e]
        arcs[("G1", e)] = merge.get(img, ("G2", img))
    return arcs


def build_decomposition(pi, truth, edge_set):
    arcs = merged_arcs(pi, truth, edge_set)
    heads = {}
    for tail, head in arcs.items():
        if head in heads:
            raise AssertionError("in-degree above one; mappings not injective")
        heads[head] = tail

    components = []
    seen = set()

    def walk(start):
        chain = []
        node = start
        while node in arcs and node not in seen:
            seen.add(node)
            chain.append(node[1])
            node = arcs[node]
        return chain, node

    # paths start at arc tails without an incoming arc
    for tail in sorted(arcs, key=lambda nd: nd[1]):
        if tail not in heads:
            chain, _ = walk(tail)
            components.append(Component(PATH, tuple(chain)))
    # the rest lies on cycles; start each from its smallest edge
    for tail in sorted(arcs, key=lambda nd: nd[1]):
        if tail not in seen:
            chain, end = walk(tail)
            if end != tail:
                raise AssertionError("open chain left after path extraction")
            components.append(Component(CYCLE, tuple(chain)))

    loops = sum(c.is_self_loop for c in components)
    return DigraphDecomposition(components, loops, len(arcs))


def fixed_vertices(pi, truth):
    """F_pi: vertices on which pi and pi* agree."""
    d, dt = pi.as_dict(), truth.as_dict()
    return sorted(v for v in d if v in dt and d[v] == dt[v])


def distance(pi, truth):
    return len(truth) - len(fixed_vertices(pi, truth))


def restricted_edges(pi, truth):
    """E_pi = C(S,2) minus C(F_pi,2), in lexicographic order."""
    fixed = set(fixed_vertices(pi, truth))
    return [e for e in domain_edges(pi) if not (e[0] in fixed and e[1] in fixed)]


def restricted_decomposition(pi, truth):
    if len(pi) != len(truth):
        raise DomainError(f"size mismatch: |pi|={len(pi)}, |truth|={len(truth)}")
    return build_decomposition(pi, truth, restricted_edges(pi, truth))


def identity_mapping(vertices):
    return InjectiveMapping.from_pairs((v, v) for v in vertices)
