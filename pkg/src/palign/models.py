"""Model parameters, planted instances and their samplers.

Vertices are 0-based throughout. A mapping is stored in canonical form: pairs
sorted by source vertex.
"""

from __future__ import annotations

import enum
import hashlib
import json
import math
from dataclasses import dataclass, field

import numpy as np


class DomainError(ValueError):
    """Parameters outside the model's admissible range."""


class ModelKind(str, enum.Enum):
    ER = "ER"
    GAUSSIAN = "Gaussian"

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        key = str(value).strip().lower()
        if key in ("er", "erdosrenyi", "erdos-renyi", "bernoulli"):
            return cls.ER
        if key in ("gaussian", "gaussianwigner", "wigner", "gauss"):
            return cls.GAUSSIAN
        raise DomainError(f"unknown model {value!r}")


class GraphKind(str, enum.Enum):
    BINARY = "Binary"
    REAL = "Real"


@dataclass(frozen=True)
class ModelParams:
    n: int
    m: int
    rho: float
    model: ModelKind
    p: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "model", ModelKind.parse(self.model))
        if self.n < 1:
            raise DomainError(f"n must be positive, got {self.n}")
        if not 0 <= self.m <= self.n:
            raise DomainError(f"need 0 <= m <= n, got m={self.m}, n={self.n}")
        if self.model is ModelKind.ER:
            if self.p is None or not 0 < self.p <= 0.5:
                raise DomainError(f"ER needs 0 < p <= 1/2, got p={self.p}")
            if not 0 < self.rho < 1:
                raise DomainError(f"ER needs 0 < rho < 1, got rho={self.rho}")
        else:
            if not 0 < self.rho <= 1:
                raise DomainError(f"Gaussian needs 0 < rho <= 1, got rho={self.rho}")


@dataclass
class WeightedGraph:
    weights: np.ndarray
    kind: GraphKind = GraphKind.REAL

    def __post_init__(self):
        w = np.ascontiguousarray(self.weights, dtype=np.float64)
        if w.ndim != 2 or w.shape[0] != w.shape[1]:
            raise DomainError("weights must be a square matrix")
        if np.any(np.diag(w) != 0):
            raise DomainError("diagonal must be zero")
        if not np.array_equal(w, w.T):
            raise DomainError("weights must be symmetric")
        self.kind = GraphKind(self.kind)
        if self.kind is GraphKind.BINARY and not np.all((w == 0) | (w == 1)):
            raise DomainError("binary graph with weights outside {0, 1}")
        self.weights = w

    @property
    def n(self):
        return self.weights.shape[0]

    def lower_triangle(self):
        n = self.n
        rows, cols = np.tril_indices(n, -1)
        return self.weights[rows, cols]

    @classmethod
    def from_lower_triangle(cls, n, values, kind=GraphKind.REAL):
        values = np.asarray(values, dtype=np.float64)
        if values.shape != (n * (n - 1) // 2,):
            raise DomainError(f"expected {n * (n - 1) // 2} weights for n={n}")
        w = np.zeros((n, n))
        rows, cols = np.tril_indices(n, -1)
        w[rows, cols] = values
        w[cols, rows] = values
        return cls(w, kind)


@dataclass(frozen=True)
class InjectiveMapping:
    pairs: tuple = ()

    def __post_init__(self):
        pairs = tuple((int(s), int(t)) for s, t in self.pairs)
        srcs = [s for s, _ in pairs]
        tgts = [t for _, t in pairs]
        if any(a >= b for a, b in zip(srcs, srcs[1:])):
            raise DomainError("sources must be strictly increasing")
        if len(set(tgts)) != len(tgts):
            raise DomainError("targets must be distinct")
        if any(v < 0 for v in srcs + tgts):
            raise DomainError("vertices must be non-negative")
        object.__setattr__(self, "pairs", pairs)

    @classmethod
    def from_pairs(cls, pairs):
        return cls(tuple(sorted((int(s), int(t)) for s, t in pairs)))

    @classmethod
    def from_dict(cls, mapping):
        return cls.from_pairs(mapping.items())

    def __len__(self):
        return len(self.pairs)

    @property
    def sources(self):
        return tuple(s for s, _ in self.pairs)

    @property
    def targets(self):
        return tuple(t for _, t in self.pairs)

    def as_dict(self):
        return dict(self.pairs)

    def check_range(self, n1, n2):
        if any(s >= n1 for s in self.sources) or any(t >= n2 for t in self.targets):
            raise DomainError(f"mapping leaves vertex range [{n1}] x [{n2}]")

    def edge_image(self, u, v):
        d = self.as_dict()
        a, b = d[u], d[v]
        return (a, b) if a < b else (b, a)


@dataclass
class PlantedInstance:
    g1: WeightedGraph
    g2: WeightedGraph
    truth: InjectiveMapping
    params: ModelParams
    seed: int = 0
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if len(self.truth) != self.params.m:
            raise DomainError("truth size differs from params.m")
        if self.g1.n != self.params.n or self.g2.n != self.params.n:
            raise DomainError("graph size differs from params.n")
        self.truth.check_range(self.params.n, self.params.n)


def mapping_space_size(n, m):
    """|S_{n,m}|: injections from an m-subset of [n] into [n]."""
    return math.comb(n, m) ** 2 * math.factorial(m)


def make_rng(seed):
    """Counter-based generator keyed by a 64-bit seed."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(int(seed))))


def stable_hash64(text):
    return int.from_bytes(hashlib.blake2b(text.encode(), digest_size=8).digest(), "little")


def derive_seed(master_seed, *keys):
    """64-bit child seed from a master seed and integer keys (order matters)."""
    entropy = [int(master_seed) & (2**64 - 1)] + [int(k) & (2**64 - 1) for k in keys]
    return int(np.random.SeedSequence(entropy).generate_state(1, np.uint64)[0])


def correlated_bernoulli_pmf(p, rho):
    """Cell probabilities (p00, p01, p10, p11) of a Bernoulli pair with marginals p."""
    if not 0 < p < 1 or not 0 <= rho <= 1:
        raise DomainError(f"need 0 < p < 1 and 0 <= rho <= 1, got p={p}, rho={rho}")
    q = p * (1 - p)
    p11 = p * p + rho * q
    p01 = (1 - rho) * q
    p00 = (1 - p) ** 2 + rho * q
    return p00, p01, p01, p11


def sample_truth(n, m, rng):
    if not 0 <= m <= n:
        raise DomainError(f"need 0 <= m <= n, got m={m}, n={n}")
    sources = np.sort(rng.choice(n, size=m, replace=False))
    targets = rng.choice(n, size=m, replace=False)
    return InjectiveMapping(tuple(zip(sources.tolist(), targets.tolist())))


def _matched_index_pairs(truth):
    """Upper-triangle indices of C(S*,2) in G1 and their images in G2."""
    src = np.array(truth.sources, dtype=np.int64)
    tgt = np.array(truth.targets, dtype=np.int64)
    i, j = np.triu_indices(len(src), 1)
    return src[i], src[j], tgt[i], tgt[j]


def _symmetrize(n, upper_values):
    w = np.zeros((n, n))
    rows, cols = np.triu_indices(n, 1)
    w[rows, cols] = upper_values
    w[cols, rows] = upper_values
    return w


def _check_truth(params, truth):
    if len(truth) != params.m:
        raise DomainError("truth size differs from params.m")
    truth.check_range(params.n, params.n)


def sample_er_pair(params, truth, rng, seed=0):
    if params.model is not ModelKind.ER:
        raise DomainError("sample_er_pair needs an ER model")
    _check_truth(params, truth)
    n, p = params.n, params.p
    n_edges = n * (n - 1) // 2
    w1 = _symmetrize(n, (rng.random(n_edges) < p).astype(np.float64))
    w2 = _symmetrize(n, (rng.random(n_edges) < p).astype(np.float64))
    s_i, s_j, t_i, t_j = _matched_index_pairs(truth)
    if len(s_i):
        cdf = np.cumsum(correlated_bernoulli_pmf(p, params.rho))
        cell = np.minimum(np.searchsorted(cdf, rng.random(len(s_i)), side="right"), 3)
        a = (cell >= 2).astype(np.float64)
        b = (cell % 2).astype(np.float64)
        w1[s_i, s_j] = w1[s_j, s_i] = a
        w2[t_i, t_j] = w2[t_j, t_i] = b
    return PlantedInstance(
        WeightedGraph(w1, GraphKind.BINARY), WeightedGraph(w2, GraphKind.BINARY), truth, params, seed
    )


def sample_wigner_pair(params, truth, rng, seed=0):
    if params.model is not ModelKind.GAUSSIAN:
        raise DomainError("sample_wigner_pair needs a Gaussian model")
    _check_truth(params, truth)
    n, rho = params.n, params.rho
    n_edges = n * (n - 1) // 2
    w1 = _symmetrize(n, rng.standard_normal(n_edges))
    w2 = _symmetrize(n, rng.standard_normal(n_edges))
    s_i, s_j, t_i, t_j = _matched_index_pairs(truth)
    if len(s_i):
        a = w1[s_i, s_j]
        z = rng.standard_normal(len(s_i))
        # at rho = 1 the noise coefficient is exactly 0, so b == a bitwise
        b = rho * a + math.sqrt(1.0 - rho * rho) * z
        w2[t_i, t_j] = w2[t_j, t_i] = b
    return PlantedInstance(WeightedGraph(w1), WeightedGraph(w2), truth, params, seed)


def sample_instance(params, seed):
    """Truth plus graph pair drawn from one seeded stream."""
    rng = make_rng(seed)
    truth = sample_truth(params.n, params.m, rng)
    if params.model is ModelKind.ER:
        return sample_er_pair(params, truth, rng, seed)
    return sample_wigner_pair(params, truth, rng, seed)


def _fmt_weights(graph):
    values = graph.lower_triangle()
    if graph.kind is GraphKind.BINARY:
        return "[" + ", ".join(str(int(v)) for v in values) + "]"
    return "[" + ", ".join(format(float(v), ".17g") for v in values) + "]"


def instance_to_json(inst):
    prm = inst.params
    head = {
        "n": prm.n,
        "m": prm.m,
        "p": prm.p,
        "rho": prm.rho,
        "model": prm.model.value,
        "seed": int(inst.seed),
        "truth": [list(pr) for pr in inst.truth.pairs],
    }
    body = json.dumps(head)[:-1]
    return body + f', "g1": {_fmt_weights(inst.g1)}, "g2": {_fmt_weights(inst.g2)}}}'


def instance_from_json(text):
    obj = json.loads(text) if isinstance(text, str) else text
    params = ModelParams(
        n=int(obj["n"]), m=int(obj["m"]), rho=float(obj["rho"]),
        model=obj["model"], p=None if obj.get("p") is None else float(obj["p"]),
    )
    kind = GraphKind.BINARY if params.model is ModelKind.ER else GraphKind.REAL
    g1 = WeightedGraph.from_lower_triangle(params.n, obj["g1"], kind)
    g2 = WeightedGraph.from_lower_triangle(params.n, obj["g2"], kind)
    truth = InjectiveMapping.from_pairs(obj["truth"])
    return PlantedInstance(g1, g2, truth, params, int(obj.get("seed", 0)))
