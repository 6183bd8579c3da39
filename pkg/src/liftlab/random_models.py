"""Random generators: phi-random lifts, pairing-model regular graphs, the
configuration model, unimodular Galton-Watson balls, and pendant-path
decorations with an exact Cheeger comparison.

Everything is a pure function of (inputs, seed): identical seeds give
byte-identical graphs.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import InputError, ResourceLimitError
from .graph_core import (
    Cut,
    MultiGraph,
    RootedBall,
    build_multigraph,
    count_loops,
    count_parallel_edges,
    cut_of_subset,
    is_connected,
)
from .voltages import WalkSource, derived_lift


@dataclass(frozen=True)
class DegreeDistribution:
    """Degree law with support >= 3 and its size-biased offspring law.

    offspring probability q_{i-1} = i p_i / sum_j j p_j.
    """

    support: tuple
    probabilities: tuple

    def __post_init__(self):
        if not self.support:
            raise InputError("degree distribution needs non-empty support")
        if any(i < 3 for i in self.support):
            raise InputError("degree support must be >= 3")
        if list(self.support) != sorted(set(self.support)):
            raise InputError("support must be strictly increasing")
        if any(p < 0 for p in self.probabilities):
            raise InputError("probabilities must be non-negative")
        if abs(sum(self.probabilities) - 1.0) > 1e-12:
            raise InputError("probabilities must sum to 1 within 1e-12")

    @classmethod
    def from_dict(cls, mapping):
        items = sorted((int(k), float(v)) for k, v in mapping.items())
        return cls(tuple(i for i, _ in items), tuple(p for _, p in items))

    @classmethod
    def from_json(cls, text):
        try:
            return cls.from_dict(json.loads(text))
        except (json.JSONDecodeError, AttributeError, ValueError) as exc:
            raise InputError(f"malformed degree distribution JSON: {exc}") from exc

    def to_json(self):
        return json.dumps({str(i): p for i, p in
                           zip(self.support, self.probabilities)})

    @property
    def min_degree(self):
        return min(i for i, p in zip(self.support, self.probabilities) if p > 0)

    def offspring_counts_and_probs(self):
        weights = [i * p for i, p in zip(self.support, self.probabilities)]
        total = sum(weights)
        return tuple(i - 1 for i in self.support), tuple(w / total for w in weights)

    def sample_degree(self, rng):
        return int(rng.choice(self.support, p=self.probabilities))

    def sample_offspring(self, rng):
        counts, probs = self.offspring_counts_and_probs()
        return int(rng.choice(counts, p=probs))


def phi_random_lift(base, voltage, n, seed):
    """n-fold random lift: uniform permutations for each generator, then the
    deterministic derived lift."""
    if n < 1:
        raise InputError("need n >= 1 sheets")
    rng = np.random.default_rng(seed)
    perms = [rng.permutation(n) for _ in range(voltage.rank)]
    return derived_lift(base, voltage, perms, n_sheets=n)


def _pairing(stub_owners, rng):
    order = rng.permutation(len(stub_owners))
    stubs = stub_owners[order]
    return list(zip(stubs[0::2].tolist(), stubs[1::2].tolist()))


def random_regular(n, d, seed, simple=False, max_attempts=1000):
    """Pairing-model d-regular multigraph on n vertices (nd must be even).

    With simple=True the matching is resampled until no loops or parallel
    edges remain.
    """
    if n < 1 or d < 1:
        raise InputError("need n >= 1 and d >= 1")
    if (n * d) % 2 != 0:
        raise InputError("n * d must be even")
    rng = np.random.default_rng(seed)
    owners = np.repeat(np.arange(n), d)
    for _ in range(max_attempts):
        edges = _pairing(owners, rng)
        g = build_multigraph(edges, n, max_degree=None)
        if not simple or (count_loops(g) == 0 and count_parallel_edges(g) == 0):
            return g
    raise ResourceLimitError(
        f"no simple pairing found in {max_attempts} attempts (n={n}, d={d})")


def configuration_model(degree_sequence, seed):
    """Uniform matching of the half-edge stubs of the given degree sequence."""
    degree_sequence = list(degree_sequence)
    if any(d < 0 for d in degree_sequence):
        raise InputError("degrees must be non-negative")
    if sum(degree_sequence) % 2 != 0:
        raise InputError("stub total must be even")
    rng = np.random.default_rng(seed)
    owners = np.repeat(np.arange(len(degree_sequence)), degree_sequence)
    edges = _pairing(owners, rng)
    return build_multigraph(edges, len(degree_sequence), max_degree=None)


def degree_sequence_for(dist, n):
    """Deterministic realizable degree sequence with proportions from dist.

    Rounds p_i * n, then fixes the total count and stub parity by adjusting
    multiplicities of support degrees.
    """
    counts = [int(round(p * n)) for p in dist.probabilities]
    while sum(counts) < n:
        counts[counts.index(max(counts))] += 1
    while sum(counts) > n:
        counts[counts.index(max(counts))] -= 1
    seq = [d for d, c in zip(dist.support, counts) for _ in range(c)]
    if sum(seq) % 2 != 0:
        # swap one vertex between two support degrees of different parity
        for i, d in enumerate(seq):
            for alt in dist.support:
                if (alt - d) % 2 != 0:
                    seq[i] = alt
                    if sum(seq) % 2 == 0:
                        return sorted(seq)
        raise InputError("cannot fix stub parity for this distribution")
    return sorted(seq)


# ---------------------------------------------------------------------------
# unimodular Galton-Watson balls
# ---------------------------------------------------------------------------

def _sample_ugw_tree(dist, radius, rng, state_cap=2_000_000):
    """Edges / depth / true degrees of a depth-``radius`` UGW tree sample.

    The root draws its degree from the distribution; every other vertex draws
    its offspring count from the size-biased law.  Depth-``radius`` vertices
    still draw offspring (for their true degree) but the children are not
    materialized.
    """
    edges = []
    depth = [0]
    true_deg = []
    if radius == 0:
        true_deg.append(dist.sample_degree(rng))
        return edges, 1, depth, true_deg
    k0 = dist.sample_degree(rng)
    true_deg.append(k0)
    frontier = []
    for _ in range(k0):
        child = len(depth)
        depth.append(1)
        true_deg.append(None)
        edges.append((0, child))
        frontier.append(child)
    for r in range(1, radius + 1):
        nxt = []
        for v in frontier:
            c = dist.sample_offspring(rng)
            true_deg[v] = c + 1
            if r < radius:
                for _ in range(c):
                    child = len(depth)
                    if child >= state_cap:
                        raise ResourceLimitError("UGW sample exceeded the state cap")
                    depth.append(r + 1)
                    true_deg.append(None)
                    edges.append((v, child))
                    nxt.append(child)
        frontier = nxt
    return edges, len(depth), depth, true_deg


def ugw_ball(dist, radius, seed):
    """Depth-``radius`` ball of the unimodular Galton-Watson tree."""
    if radius < 0:
        raise InputError("radius must be non-negative")
    rng = np.random.default_rng(seed)
    edges, n, _, _ = _sample_ugw_tree(dist, radius, rng)
    graph = build_multigraph(edges, n, max_degree=None)
    return RootedBall(graph, 0, radius, tuple(range(n)))


def ugw_walk_source(dist, radius, seed):
    """UGW sample as an exact-truncation walk source (true boundary degrees)."""
    if radius < 1:
        raise InputError("walk source needs radius >= 1")
    rng = np.random.default_rng(seed)
    edges, n, _, true_deg = _sample_ugw_tree(dist, radius, rng)
    neighbors = [[] for _ in range(n)]
    for u, v in edges:
        neighbors[u].append(v)
        neighbors[v].append(u)
    return WalkSource(neighbors=neighbors, true_degrees=true_deg, root=0,
                      radius=radius, origin=f"ugw(radius={radius})")


# ---------------------------------------------------------------------------
# pendant-path decorations
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DecorationLabeling:
    """Total vertex labeling into [k]; label l attaches a pendant path of
    l - 1 extra vertices."""

    labels: tuple
    k: int = 6

    def __post_init__(self):
        for v, l in enumerate(self.labels):
            if l < 1:
                raise InputError(f"label {l} at vertex {v} must be >= 1")
            if l > self.k:
                raise InputError(f"label {l} at vertex {v} exceeds k = {self.k}")

    @classmethod
    def random(cls, n, seed, k=6):
        rng = np.random.default_rng(seed)
        return cls(tuple(int(x) for x in rng.integers(1, k + 1, size=n)), k)


@dataclass(frozen=True)
class Decoration:
    """A graph with a pendant path attached to every vertex.

    ``back_map`` sends each decorated vertex to the core vertex it grew from;
    ``paths[v]`` lists the extra vertices of v's path, in order moving away
    from v.
    """

    graph: MultiGraph
    back_map: tuple
    paths: tuple
    labeling: DecorationLabeling


def decorate_with_paths(graph, labeling):
    """Attach to each vertex v a pendant path with label(v) - 1 edges."""
    if len(labeling.labels) != graph.vertex_count:
        raise InputError("labeling length must match the vertex count")
    m = graph.vertex_count
    edges = list(graph.edges())
    back_map = list(range(m))
    paths = []
    next_vertex = m
    for v in range(m):
        extra = labeling.labels[v] - 1
        path = []
        prev = v
        for _ in range(extra):
            edges.append((prev, next_vertex))
            back_map.append(v)
            path.append(next_vertex)
            prev = next_vertex
            next_vertex += 1
        paths.append(tuple(path))
    dec = build_multigraph(edges, next_vertex, max_degree=None)
    assert dec.vertex_count == sum(labeling.labels)
    return Decoration(dec, tuple(back_map), tuple(paths), labeling)


def decorated_cheeger_constant(decoration):
    """Exact Cheeger constant of a decorated graph, exploiting its structure.

    A ratio minimizer can be taken connected, so it is either a segment of
    one pendant path, or a connected core subset together with a prefix of
    each member's path.  Core subsets are enumerated directly; the prefix
    lengths are optimized by a small DP over (added volume -> min added
    boundary).  Exact rationals throughout.
    """
    core = decoration.graph  # decorated graph; core vertices are 0..m-1
    m = len(decoration.paths)
    deg_dec = core.degrees()
    total_vol = sum(deg_dec)
    best = None
    best_subset = None

    def consider(ratio, subset):
        nonlocal best, best_subset
        if best is None or ratio < best:
            best = ratio
            best_subset = subset

    # (a) segments inside a single pendant path
    for v in range(m):
        path = decoration.paths[v]
        mp = len(path)
        for i in range(1, mp + 1):
            for j in range(i, mp + 1):
                vol = 2 * (j - i + 1) - (1 if j == mp else 0)
                if 2 * vol > total_vol:
                    continue
                boundary = 1 + (1 if j < mp else 0)
                consider(Fraction(boundary, vol),
                         frozenset(path[i - 1:j]))

    # (b) connected core subsets with per-member path prefixes
    base_edges = [(u, w) for u, w in core.edges() if u < m and w < m]
    adj_core = [[] for _ in range(m)]
    for u, w in base_edges:
        adj_core[u].append(w)
        adj_core[w].append(u)

    for mask in range(1, 1 << m):
        members = [v for v in range(m) if (mask >> v) & 1]
        # connectivity of the core part in the core graph
        seen = {members[0]}
        stack = [members[0]]
        while stack:
            x = stack.pop()
            for y in adj_core[x]:
                if (mask >> y) & 1 and y not in seen:
                    seen.add(y)
                    stack.append(y)
        if len(seen) != len(members):
            continue
        b0 = sum(1 for u, w in base_edges if ((mask >> u) & 1) != ((mask >> w) & 1))
        w0 = sum(deg_dec[v] for v in members)
        # DP over members: added volume -> (min added boundary, backpointers)
        dp = {0: 0}
        back = []
        for v in members:
            mp = len(decoration.paths[v])
            if mp == 0:
                options = [(0, 0, 0)]
            else:
                options = [(2 * j, 1, j) for j in range(mp)]
                options.append((2 * mp - 1, 0, mp))
            ndp = {}
            nback = {}
            for w_acc, b_acc in dp.items():
                for dw, db, j in options:
                    key = w_acc + dw
                    val = b_acc + db
                    if key not in ndp or val < ndp[key]:
                        ndp[key] = val
                        nback[key] = (w_acc, j)
            dp = ndp
            back.append(nback)
        for w_add, b_add in dp.items():
            vol = w0 + w_add
            if 2 * vol > total_vol:
                continue
            ratio = Fraction(b0 + b_add, vol)
            if best is None or ratio < best:
                # reconstruct prefix choices
                subset = set(members)
                key = w_add
                for idx in range(len(members) - 1, -1, -1):
                    prev, j = back[idx][key]
                    subset.update(decoration.paths[members[idx]][:j])
                    key = prev
                consider(ratio, frozenset(subset))

    if best is None:
        raise InputError("graph too small for a volume-feasible cut")
    cut = cut_of_subset(core, best_subset)
    assert Fraction(cut.boundary_size, cut.volume) == best
    return best, cut


# ---------------------------------------------------------------------------
# small random connected graphs (test corpora, experiments)
# ---------------------------------------------------------------------------

def random_connected_multigraph(n, extra_edges, seed, max_degree=7,
                                allow_loops=True):
    """Random spanning tree plus extra edges, degrees capped; connected."""
    if n < 1:
        raise InputError("need n >= 1")
    rng = np.random.default_rng(seed)
    edges = []
    deg = [0] * n
    for v in range(1, n):
        candidates = [u for u in range(v) if deg[u] < max_degree]
        u = int(rng.choice(candidates))
        edges.append((u, v))
        deg[u] += 1
        deg[v] += 1
    for _ in range(extra_edges):
        u = int(rng.integers(n))
        v = int(rng.integers(n))
        if u == v:
            if allow_loops and deg[u] + 2 <= max_degree:
                edges.append((u, u))
                deg[u] += 2
        elif deg[u] < max_degree and deg[v] < max_degree:
            edges.append((u, v))
            deg[u] += 1
            deg[v] += 1
    g = build_multigraph(edges, n, max_degree=None)
    assert is_connected(g)
    return g
