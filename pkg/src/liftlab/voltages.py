"""Free-group words, voltage assignments on oriented edges, derived lifts,
and lazy balls of the infinite cover they present.

A voltage assignment maps each half-edge to a reduced word so that reversed
half-edges carry inverse words.  Evaluating voltages in permutations of [n]
yields an n-fold lift; walking the voltage-derived graph from a base vertex
with exact reduced words yields balls of the infinite cover.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from collections import deque

import numpy as np

from .errors import InputError, ResourceLimitError
from .graph_core import (
    MultiGraph,
    RootedBall,
    bfs_distances,
    build_multigraph,
    is_connected,
)

DEFAULT_STATE_CAP = 5_000_000


def _reduce(letters):
    out = []
    for l in letters:
        if out and out[-1] == -l:
            out.pop()
        else:
            out.append(l)
    return tuple(out)


@dataclass(frozen=True)
class Word:
    """Freely reduced word over generators 1..rank; letter -i is the inverse of i."""

    letters: tuple
    rank: int

    def __post_init__(self):
        for l in self.letters:
            if l == 0 or abs(l) > self.rank:
                raise InputError(f"letter {l} out of range for rank {self.rank}")
        for a, b in zip(self.letters, self.letters[1:]):
            if a == -b:
                raise InputError(f"word {self.letters} is not freely reduced")

    @classmethod
    def identity(cls, rank):
        return cls((), rank)

    @classmethod
    def generator(cls, i, rank):
        return cls((i,), rank)

    @classmethod
    def reduced(cls, letters, rank):
        return cls(_reduce(letters), rank)

    def inverse(self):
        return Word(tuple(-l for l in reversed(self.letters)), self.rank)

    def __len__(self):
        return len(self.letters)

    def is_identity(self):
        return not self.letters


def word_multiply(a, b):
    """Freely reduced concatenation; ranks must agree."""
    if a.rank != b.rank:
        raise InputError(f"rank mismatch: {a.rank} vs {b.rank}")
    return Word(_reduce(a.letters + b.letters), a.rank)


def evaluate_word(w, perms):
    """Image of the word under generator i -> perms[i-1], applied to [n].

    Compose in letter order: the first letter acts last, so
    eval(ab) = eval(a) ∘ eval(b).  The empty word maps to the identity.
    """
    if len(perms) != w.rank:
        raise InputError(f"need {w.rank} permutations, got {len(perms)}")
    if w.rank == 0:
        raise InputError("evaluate_word needs rank >= 1 to size its permutations")
    perms = [np.asarray(p) for p in perms]
    n = perms[0].shape[0]
    if not w.letters:
        return np.arange(n)
    out = np.arange(n)
    for l in w.letters:
        p = perms[abs(l) - 1]
        if l < 0:
            pinv = np.empty_like(p)
            pinv[p] = np.arange(n)
            p = pinv
        out = out[p]
    return out


def evaluate_word_unreduced(letters, rank, perms):
    """Oracle twin of evaluate_word that skips free reduction."""
    perms = [np.asarray(p) for p in perms]
    n = perms[0].shape[0]
    out = np.arange(n)
    for l in letters:
        p = perms[abs(l) - 1]
        if l < 0:
            pinv = np.empty_like(p)
            pinv[p] = np.arange(n)
            p = pinv
        out = out[p]
    return out


@dataclass(frozen=True)
class VoltageAssignment:
    """Inverse-compatible map half-edge -> Word over a base multigraph."""

    base: MultiGraph
    rank: int
    volt: tuple

    def __post_init__(self):
        if len(self.volt) != self.base.half_edge_count:
            raise InputError("need one word per half-edge")
        for h, w in enumerate(self.volt):
            if w.rank != self.rank:
                raise InputError("voltage word rank mismatch")
            if self.volt[self.base.inv[h]].letters != w.inverse().letters:
                raise InputError(
                    f"voltages on half-edge {h} and its reverse are not inverse")

    def to_json(self):
        # Edges are identified by endpoints, so copies of a parallel pair are
        # matched positionally on load; when any copy carries a nontrivial
        # word, every copy of that pair gets an explicit entry.
        groups = {}
        for h in range(self.base.half_edge_count):
            if h < self.base.inv[h]:
                u, v = self.base.half_tail[h], self.base.half_head[h]
                groups.setdefault((min(u, v), max(u, v)), []).append(h)
        entries = []
        for h in range(self.base.half_edge_count):
            if h >= self.base.inv[h]:
                continue
            u, v = self.base.half_tail[h], self.base.half_head[h]
            group = groups[(min(u, v), max(u, v))]
            if all(self.volt[g].is_identity() for g in group):
                continue
            entries.append({
                "edge": [u, v],
                "word": list(self.volt[h].letters),
            })
        return json.dumps({"rank": self.rank, "voltages": entries})


def trivial_voltage(base, rank=0):
    e = Word.identity(rank)
    return VoltageAssignment(base, rank, tuple(e for _ in range(base.half_edge_count)))


def voltage_from_edge_words(base, rank, edge_words):
    """Build a VoltageAssignment from words indexed by canonical half-edge.

    ``edge_words`` maps a canonical half-edge index (the smaller index of the
    pair) to a Word; omitted edges get the identity.
    """
    volt = [None] * base.half_edge_count
    for h in range(base.half_edge_count):
        hc = min(h, base.inv[h])
        w = edge_words.get(hc, Word.identity(rank))
        volt[h] = w if h == hc else w.inverse()
    return VoltageAssignment(base, rank, tuple(volt))


def voltage_from_json(base, text):
    """Load the JSON schema {"rank": d, "voltages": [{"edge": [u, v], "word": [...]}]}.

    Entries are matched to base edges with those endpoints in order of
    occurrence, so parallel edges take successive entries.
    """
    try:
        data = json.loads(text)
        rank = data["rank"]
        entries = data.get("voltages", [])
    except (json.JSONDecodeError, KeyError, TypeError) as exc:
        raise InputError(f"malformed voltage JSON: {exc}") from exc
    pool = {}
    for h in range(base.half_edge_count):
        if h < base.inv[h]:
            u, v = base.half_tail[h], base.half_head[h]
            pool.setdefault((min(u, v), max(u, v)), deque()).append(h)
    edge_words = {}
    for entry in entries:
        u, v = entry["edge"]
        key = (min(u, v), max(u, v))
        if key not in pool or not pool[key]:
            raise InputError(f"voltage entry for missing edge {entry['edge']}")
        h = pool[key].popleft()
        letters = tuple(entry["word"])
        # entry is stated for orientation u -> v; flip if the canonical
        # half-edge runs the other way
        w = Word.reduced(letters, rank)
        if (base.half_tail[h], base.half_head[h]) != (u, v):
            w = w.inverse()
        edge_words[h] = w
    return voltage_from_edge_words(base, rank, edge_words)


def spanning_tree_voltage(graph):
    """Identity on a BFS spanning tree; the j-th non-tree edge carries s_{j+1}.

    With these voltages the derived cover is the universal cover: the induced
    homomorphism is injective on the fundamental group.  Non-tree edges are
    numbered by ascending canonical half-edge index.
    """
    if not is_connected(graph):
        raise InputError("spanning_tree_voltage requires a connected graph")
    n = graph.vertex_count
    tree_pairs = set()
    visited = [False] * n
    visited[0] = True
    queue = deque([0])
    out = graph.out_half_edges()
    while queue:
        v = queue.popleft()
        for h in out[v]:
            w = graph.half_head[h]
            if not visited[w]:
                visited[w] = True
                tree_pairs.add(min(h, graph.inv[h]))
                queue.append(w)
    rank = graph.edge_count - n + 1
    edge_words = {}
    j = 0
    for h in range(graph.half_edge_count):
        if h < graph.inv[h] and h not in tree_pairs:
            j += 1
            edge_words[h] = Word.generator(j, rank)
    assert j == rank
    return voltage_from_edge_words(graph, rank, edge_words)


@dataclass(frozen=True)
class LiftSample:
    """An n-fold lift together with its base data and covering map."""

    base: MultiGraph
    voltage: VoltageAssignment
    n_sheets: int
    perms: tuple
    lift: MultiGraph
    covering: tuple

    def fiber(self, base_vertex):
        n = self.n_sheets
        return range(base_vertex * n, base_vertex * n + n)


def derived_lift(base, voltage, perms, n_sheets=None):
    """Deterministic lift: one lift edge per base edge per sheet.

    Vertex (u, i) becomes index u * n + i.  The lift edge over base edge
    (u, v) with voltage word w in sheet i joins (u, i) to (v, eval(w)(i)).
    Rank-0 voltages need an explicit ``n_sheets``.
    """
    if voltage.base is not base and voltage.base != base:
        raise InputError("voltage assignment is for a different base graph")
    if len(perms) != voltage.rank:
        raise InputError(f"need {voltage.rank} permutations, got {len(perms)}")
    perms = tuple(np.asarray(p) for p in perms)
    if perms:
        n = perms[0].shape[0]
        if n_sheets is not None and n_sheets != n:
            raise InputError("n_sheets disagrees with the permutation size")
    elif n_sheets is not None:
        n = n_sheets
    else:
        raise InputError("rank-0 voltage needs an explicit n_sheets")
    if n < 1:
        raise InputError("need at least one sheet")
    for p in perms:
        if p.shape[0] != n or sorted(p.tolist()) != list(range(n)):
            raise InputError("each permutation must be a bijection of [n]")
    identity = np.arange(n)
    edges = []
    for h in range(base.half_edge_count):
        if h > base.inv[h]:
            continue
        u, v = base.half_tail[h], base.half_head[h]
        pi = evaluate_word(voltage.volt[h], perms) if voltage.volt[h].letters \
            else identity
        for i in range(n):
            edges.append((u * n + i, v * n + int(pi[i])))
    lift = build_multigraph(edges, base.vertex_count * n, max_degree=None)
    covering = tuple(u for u in range(base.vertex_count) for _ in range(n))
    return LiftSample(base, voltage, n, perms, lift, covering)


# ---------------------------------------------------------------------------
# infinite covers
# ---------------------------------------------------------------------------

def _letter_digit(l):
    # letters ±1..±d -> digits 1..2d; 0 stays the empty-word sentinel
    return 2 * l - 1 if l > 0 else -2 * l


class InfiniteCover:
    """Lazy handle on the voltage-derived cover, rooted over ``base_vertex``.

    States are pairs (base vertex, reduced word); the root is (base_vertex,
    identity).  Balls are materialized on demand, breadth first, with words
    encoded as integers for speed.
    """

    def __init__(self, base, voltage, base_vertex=0, state_cap=DEFAULT_STATE_CAP):
        if not is_connected(base):
            raise InputError("cover of a disconnected base is not supported")
        if not (0 <= base_vertex < base.vertex_count):
            raise InputError(f"base vertex {base_vertex} out of range")
        self.base = base
        self.voltage = voltage
        self.base_vertex = base_vertex
        self.state_cap = state_cap
        self._word_base = 2 * voltage.rank + 1

    def _half_edge_tables(self):
        base = self.base
        volt = self.voltage.volt
        tails = base.half_tail
        heads = base.half_head
        out = base.out_half_edges()
        wb = self._word_base
        # voltage words as digit tuples for fast appending
        volt_digits = [tuple(_letter_digit(l) for l in volt[h].letters)
                       for h in range(base.half_edge_count)]
        return tails, heads, out, volt_digits, wb

    def explore(self, radius):
        """BFS the cover ball of the given radius.

        Returns (state_keys, base_of, dist, neighbors) where neighbors lists,
        per state, the state indices reached along the base half-edges at its
        base vertex (only targets inside the ball).
        """
        _, heads, out, volt_digits, wb = self._half_edge_tables()
        m = self.base.vertex_count

        def apply_volt(word_int, digits):
            w = word_int
            for dg in digits:
                last = w % wb
                inv_dg = dg + 1 if dg % 2 else dg - 1
                if last == inv_dg:
                    w //= wb
                else:
                    w = w * wb + dg
            return w

        root_key = 0 * m + self.base_vertex
        index = {root_key: 0}
        keys = [root_key]
        dist = [0]
        frontier = [0]
        for depth in range(radius):
            nxt = []
            for sid in frontier:
                key = keys[sid]
                v, w = key % m, key // m
                for h in out[v]:
                    nw = apply_volt(w, volt_digits[h])
                    nkey = nw * m + heads[h]
                    if nkey not in index:
                        if len(keys) >= self.state_cap:
                            raise ResourceLimitError(
                                f"cover ball exceeded the state cap "
                                f"{self.state_cap} at radius {depth + 1}")
                        index[nkey] = len(keys)
                        keys.append(nkey)
                        dist.append(depth + 1)
                        nxt.append(index[nkey])
            frontier = nxt
        neighbors = []
        for sid in range(len(keys)):
            key = keys[sid]
            v, w = key % m, key // m
            nbs = []
            for h in out[v]:
                nw = apply_volt(w, volt_digits[h])
                t = index.get(nw * m + heads[h])
                if t is not None:
                    nbs.append(t)
            neighbors.append(nbs)
        base_of = [k % m for k in keys]
        return keys, base_of, dist, neighbors

    def ball(self, radius):
        """Radius-R ball as a RootedBall; vertex_map is the covering projection."""
        keys, base_of, dist, _ = self.explore(radius)
        _, heads, out, volt_digits, wb = self._half_edge_tables()
        m = self.base.vertex_count
        index = {k: i for i, k in enumerate(keys)}

        def apply_volt(word_int, digits):
            w = word_int
            for dg in digits:
                last = w % wb
                inv_dg = dg + 1 if dg % 2 else dg - 1
                if last == inv_dg:
                    w //= wb
                else:
                    w = w * wb + dg
            return w

        edges = []
        for sid, key in enumerate(keys):
            v, w = key % m, key // m
            for h in out[v]:
                nw = apply_volt(w, volt_digits[h])
                t = index.get(nw * m + heads[h])
                if t is None:
                    continue
                # add each cover edge once: compare (state, half-edge) with
                # the reversed pair
                if (sid, h) <= (t, self.base.inv[h]):
                    edges.append((sid, t))
        graph = build_multigraph(edges, len(keys), max_degree=None)
        return RootedBall(graph, 0, radius, tuple(base_of))

    def walk_arrays(self, radius):
        """Adjacency plus true cover degrees, for exact walk DP.

        True degree of a state is the degree of its base vertex, regardless of
        truncation.
        """
        _, base_of, dist, neighbors = self.explore(radius)
        base_degs = self.base.degrees()
        true_deg = [base_degs[b] for b in base_of]
        return WalkSource(
            neighbors=neighbors,
            true_degrees=true_deg,
            root=0,
            radius=radius,
            origin=f"cover(base={self.base.vertex_count}v, rank={self.voltage.rank}, "
                   f"root_over={self.base_vertex})",
        )


@dataclass
class WalkSource:
    """A rooted neighborhood with true degrees, valid for walks up to its radius.

    ``neighbors[v]`` lists the materialized neighbors of v (with multiplicity);
    ``true_degrees[v]`` is the degree of v in the underlying infinite graph,
    which can exceed len(neighbors[v]) on the boundary shell.
    """

    neighbors: list
    true_degrees: list
    root: int
    radius: int
    origin: str


def cover_ball(base, voltage, base_vertex, radius, state_cap=DEFAULT_STATE_CAP):
    """Radius-R ball of the voltage cover around a lift of ``base_vertex``."""
    return InfiniteCover(base, voltage, base_vertex, state_cap).ball(radius)


def universal_cover_ball(base, base_vertex, radius, state_cap=DEFAULT_STATE_CAP):
    """Ball of the universal cover via non-backtracking half-edge walks.

    Vertices are non-backtracking walks from ``base_vertex`` of length at most
    R; each non-empty walk is joined to its one-step truncation.  Must agree
    with cover_ball under spanning-tree voltages.
    """
    if not is_connected(base):
        raise InputError("universal cover of a disconnected base is not supported")
    if not (0 <= base_vertex < base.vertex_count):
        raise InputError(f"base vertex {base_vertex} out of range")
    out = base.out_half_edges()
    heads = base.half_head
    inv = base.inv
    # state: (endpoint, last half-edge or -1); identified by walk id
    endpoints = [base_vertex]
    last = [-1]
    frontier = [0]
    edges = []
    for depth in range(radius):
        nxt = []
        for sid in frontier:
            v = endpoints[sid]
            for h in out[v]:
                if last[sid] >= 0 and h == inv[last[sid]]:
                    continue
                if len(endpoints) >= state_cap:
                    raise ResourceLimitError(
                        f"universal cover ball exceeded the state cap {state_cap}")
                t = len(endpoints)
                endpoints.append(heads[h])
                last.append(h)
                edges.append((sid, t))
                nxt.append(t)
        frontier = nxt
    graph = build_multigraph(edges, len(endpoints), max_degree=None)
    return RootedBall(graph, 0, radius, tuple(endpoints))
