"""Half-edge multigraphs, rooted balls, rooted isomorphism, and exact Cheeger constants.

A multigraph is stored as a list of half-edges with an involution pairing each
half-edge with its reverse.  Loops and parallel edges are allowed; a loop
contributes two half-edges at the same vertex and therefore adds 2 to the
degree.
"""

from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations

from .errors import InputError, ResourceLimitError

DEFAULT_MAX_DEGREE = 8

CHEEGER_VERTEX_CAP = 16

# Guard against pathological symmetry in the generic canonical-labeling search.
_CANON_NODE_CAP = 500_000


@dataclass(frozen=True)
class MultiGraph:
    """Immutable half-edge multigraph.

    half-edge ``h`` runs from ``half_tail[h]`` to ``half_head[h]``;
    ``inv[h]`` is the reversed half-edge.
    """

    vertex_count: int
    half_tail: tuple
    half_head: tuple
    inv: tuple
    _cache: dict = field(default_factory=dict, compare=False, repr=False)

    @property
    def half_edge_count(self):
        return len(self.half_tail)

    @property
    def edge_count(self):
        return len(self.half_tail) // 2

    def degree(self, v):
        return self.degrees()[v]

    def degrees(self):
        degs = self._cache.get("degrees")
        if degs is None:
            acc = [0] * self.vertex_count
            for t in self.half_tail:
                acc[t] += 1
            degs = self._cache["degrees"] = tuple(acc)
        return degs

    def out_half_edges(self):
        """Per-vertex tuple of half-edge indices with that tail, ascending."""
        out = self._cache.get("out")
        if out is None:
            acc = [[] for _ in range(self.vertex_count)]
            for h, t in enumerate(self.half_tail):
                acc[t].append(h)
            out = self._cache["out"] = tuple(tuple(o) for o in acc)
        return out

    def edges(self):
        """Unordered edge list, one pair per half-edge orbit, in half-edge order."""
        seen = [False] * self.half_edge_count
        result = []
        for h in range(self.half_edge_count):
            if not seen[h]:
                seen[h] = True
                seen[self.inv[h]] = True
                result.append((self.half_tail[h], self.half_head[h]))
        return result

    def to_json(self):
        return json.dumps({"vertices": self.vertex_count,
                           "edges": [[u, v] for u, v in self.edges()]})

    def to_dot(self, name="G"):
        lines = [f"graph {name} {{"]
        for v in range(self.vertex_count):
            lines.append(f"  {v};")
        for u, v in self.edges():
            lines.append(f"  {u} -- {v};")
        lines.append("}")
        return "\n".join(lines) + "\n"


def build_multigraph(edge_list, vertex_count, max_degree=DEFAULT_MAX_DEGREE):
    """Build a MultiGraph from unordered vertex pairs (loops as (u, u)).

    Rejects out-of-range vertex indices and degrees above ``max_degree``.
    """
    if vertex_count < 0:
        raise InputError("vertex_count must be non-negative")
    tails, heads = [], []
    degs = [0] * vertex_count
    for e in edge_list:
        u, v = e
        for x in (u, v):
            if not (0 <= x < vertex_count):
                raise InputError(f"vertex index {x} out of range [0, {vertex_count})")
        tails.extend((u, v))
        heads.extend((v, u))
        degs[u] += 1
        degs[v] += 1
    if max_degree is not None:
        for v, d in enumerate(degs):
            if d > max_degree:
                raise InputError(
                    f"degree {d} at vertex {v} exceeds the bound {max_degree}")
    inv = []
    for i in range(0, len(tails), 2):
        inv.extend((i + 1, i))
    return MultiGraph(vertex_count, tuple(tails), tuple(heads), tuple(inv))


def from_json(text):
    try:
        data = json.loads(text)
        vertices = data["vertices"]
        edges = [tuple(e) for e in data["edges"]]
    except (json.JSONDecodeError, KeyError, TypeError) as exc:
        raise InputError(f"malformed graph JSON: {exc}") from exc
    return build_multigraph(edges, vertices)


def from_dot(text):
    """Parse the DOT subset produced by :meth:`MultiGraph.to_dot`."""
    edges = []
    vertices = set()
    for line in text.splitlines():
        line = line.strip().rstrip(";")
        if not line or line.startswith("graph") or line == "}":
            continue
        if "--" in line:
            parts = [p.strip() for p in line.split("--")]
            if len(parts) != 2:
                raise InputError(f"cannot parse DOT edge line: {line!r}")
            u, v = int(parts[0]), int(parts[1])
            edges.append((u, v))
            vertices.update((u, v))
        else:
            vertices.add(int(line))
    n = max(vertices) + 1 if vertices else 0
    return build_multigraph(edges, n)


def count_loops(g):
    return sum(1 for u, v in g.edges() if u == v)


def count_parallel_edges(g):
    """Number of edges in excess of one per unordered non-loop vertex pair."""
    seen = {}
    extra = 0
    for u, v in g.edges():
        if u == v:
            continue
        key = (min(u, v), max(u, v))
        if key in seen:
            extra += 1
        else:
            seen[key] = 1
    return extra


def bfs_distances(g, source):
    dist = [-1] * g.vertex_count
    dist[source] = 0
    queue = deque([source])
    out = g.out_half_edges()
    while queue:
        v = queue.popleft()
        for h in out[v]:
            w = g.half_head[h]
            if dist[w] < 0:
                dist[w] = dist[v] + 1
                queue.append(w)
    return dist


def is_connected(g):
    if g.vertex_count == 0:
        return True
    return all(d >= 0 for d in bfs_distances(g, 0))


def connected_components(g):
    comp = [-1] * g.vertex_count
    out = g.out_half_edges()
    c = 0
    for s in range(g.vertex_count):
        if comp[s] >= 0:
            continue
        comp[s] = c
        queue = deque([s])
        while queue:
            v = queue.popleft()
            for h in out[v]:
                w = g.half_head[h]
                if comp[w] < 0:
                    comp[w] = c
                    queue.append(w)
        c += 1
    return c, comp


@dataclass(frozen=True)
class RootedBall:
    """A rooted graph of bounded radius with a lazily computed canonical code.

    ``vertex_map`` records, per ball vertex, the vertex it came from: the
    original vertex index for balls of finite graphs, the base-graph vertex
    (covering projection) for balls of infinite covers.
    """

    graph: MultiGraph
    root: int
    radius: int
    vertex_map: tuple
    _code_box: list = field(default_factory=list, compare=False, repr=False)

    @property
    def canonical_code(self):
        if not self._code_box:
            self._code_box.append(canonical_code_rooted(self.graph, self.root))
        return self._code_box[0]


def ball(g, v, r):
    """Induced subgraph on vertices within distance ``r`` of ``v``, rooted at ``v``.

    Vertices are relabeled in BFS order with ties broken by ascending original
    index; edges keep their original relative order.
    """
    if not (0 <= v < g.vertex_count):
        raise InputError(f"vertex {v} out of range")
    if r < 0:
        raise InputError("radius must be non-negative")
    dist = [-1] * g.vertex_count
    dist[v] = 0
    order = [v]
    frontier = [v]
    out = g.out_half_edges()
    for depth in range(r):
        nxt = []
        for u in frontier:
            for h in out[u]:
                w = g.half_head[h]
                if dist[w] < 0:
                    dist[w] = depth + 1
                    nxt.append(w)
        nxt = sorted(set(nxt))
        order.extend(nxt)
        frontier = nxt
    newindex = {u: i for i, u in enumerate(order)}
    edges = []
    for u, w in g.edges():
        if u in newindex and w in newindex:
            edges.append((newindex[u], newindex[w]))
    sub = build_multigraph(edges, len(order), max_degree=None)
    return RootedBall(sub, newindex[v], r, tuple(order))


def rooted_isomorphic(a, b):
    """True iff a root-preserving isomorphism exists, via canonical codes."""
    return a.canonical_code == b.canonical_code


# ---------------------------------------------------------------------------
# canonical labeling
# ---------------------------------------------------------------------------

def _is_simple_tree(g):
    if g.edge_count != g.vertex_count - 1:
        return False
    seen = set()
    for u, v in g.edges():
        if u == v:
            return False
        key = (min(u, v), max(u, v))
        if key in seen:
            return False
        seen.add(key)
    ncomp, _ = connected_components(g)
    return ncomp == 1


def _ahu_code(g, root):
    """Canonical code of a rooted tree: sorted recursive bracket encoding."""
    out = g.out_half_edges()
    # iterative post-order to avoid recursion limits on deep paths
    code = {}
    stack = [(root, -1, False)]
    while stack:
        v, parent, expanded = stack.pop()
        if expanded:
            # a tree has exactly one edge to the parent; drop one occurrence
            child_codes = []
            skipped_parent = False
            for h in out[v]:
                w = g.half_head[h]
                if w == parent and not skipped_parent:
                    skipped_parent = True
                    continue
                child_codes.append(code[w])
            child_codes.sort()
            code[v] = b"(" + b"".join(child_codes) + b")"
        else:
            stack.append((v, parent, True))
            skipped_parent = False
            for h in out[v]:
                w = g.half_head[h]
                if w == parent and not skipped_parent:
                    skipped_parent = True
                    continue
                stack.append((w, v, False))
    return b"T" + code[root]


def _refine(g, colors):
    """Iterated neighborhood color refinement; returns stable integer colors."""
    n = g.vertex_count
    out = g.out_half_edges()
    while True:
        sig = []
        for v in range(n):
            nb = sorted(colors[g.half_head[h]] for h in out[v])
            sig.append((colors[v], tuple(nb)))
        ranking = {s: i for i, s in enumerate(sorted(set(sig)))}
        new = [ranking[s] for s in sig]
        if new == colors:
            return colors
        colors = new


def _adjacency_code(g, position):
    """Byte encoding of the graph under labeling vertex -> position."""
    pairs = []
    for u, v in g.edges():
        a, b = position[u], position[v]
        if a > b:
            a, b = b, a
        pairs.append((a, b))
    pairs.sort()
    body = b"".join(a.to_bytes(4, "big") + b.to_bytes(4, "big") for a, b in pairs)
    return g.vertex_count.to_bytes(4, "big") + body


def canonical_code_rooted(g, root):
    """Canonical byte code of the rooted graph (g, root).

    Equal codes iff rooted-isomorphic.  Trees use the linear-time bracket
    encoding; general graphs use color refinement with backtracking
    individualization, taking the lexicographically minimal adjacency code.
    """
    if g.vertex_count == 0:
        raise InputError("empty graph has no rooted code")
    if _is_simple_tree(g):
        return _ahu_code(g, root)

    dist = bfs_distances(g, root)
    if any(d < 0 for d in dist):
        raise InputError("rooted code requires a connected graph")
    degs = g.degrees()
    init = sorted(set(zip(dist, degs)))
    rank = {p: i for i, p in enumerate(init)}
    colors = [rank[(dist[v], degs[v])] for v in range(g.vertex_count)]
    # force the root into its own color class
    colors = [c + 1 for c in colors]
    colors[root] = 0

    best = [None]
    nodes = [0]

    def search(colors):
        nodes[0] += 1
        if nodes[0] > _CANON_NODE_CAP:
            raise ResourceLimitError(
                "canonical labeling search exceeded the node cap; "
                "graph is too symmetric for the generic path")
        colors = _refine(g, colors)
        cells = {}
        for v, c in enumerate(colors):
            cells.setdefault(c, []).append(v)
        target = None
        for c in sorted(cells):
            if len(cells[c]) > 1:
                target = cells[c]
                break
        if target is None:
            position = [0] * g.vertex_count
            for v, c in enumerate(colors):
                position[v] = c
            code = _adjacency_code(g, position)
            if best[0] is None or code < best[0]:
                best[0] = code
            return
        for v in target:
            child = [2 * c + 2 for c in colors]
            child[v] = 2 * colors[v] + 1
            search(child)

    search(colors)
    return b"G" + best[0]


def brute_force_rooted_isomorphic(ga, ra, gb, rb):
    """Independent oracle: backtracking search for a root-preserving isomorphism."""
    if ga.vertex_count != gb.vertex_count or ga.edge_count != gb.edge_count:
        return False
    na = ga.vertex_count

    def multi_adj(g):
        adj = [dict() for _ in range(g.vertex_count)]
        for h in range(g.half_edge_count):
            t, he = g.half_tail[h], g.half_head[h]
            adj[t][he] = adj[t].get(he, 0) + 1
        return adj

    adja, adjb = multi_adj(ga), multi_adj(gb)
    if sorted(ga.degrees()) != sorted(gb.degrees()):
        return False
    mapping = {ra: rb}
    used = {rb}

    def extend(order_idx, order):
        if order_idx == len(order):
            return True
        v = order[order_idx]
        for w in range(na):
            if w in used:
                continue
            if ga.degrees()[v] != gb.degrees()[w]:
                continue
            ok = True
            for u, mult in adja[v].items():
                if u in mapping and adjb[w].get(mapping[u], 0) != mult:
                    ok = False
                    break
            if ok and adja[v].get(v, 0) != adjb[w].get(w, 0):
                ok = False
            if ok:
                mapping[v] = w
                used.add(w)
                if extend(order_idx + 1, order):
                    return True
                del mapping[v]
                used.discard(w)
        return False

    order = [v for v in range(na) if v != ra]
    # BFS order from the root keeps partial maps constrained
    dist = bfs_distances(ga, ra)
    order.sort(key=lambda v: (dist[v], v))
    return extend(0, order)


# ---------------------------------------------------------------------------
# Cheeger constant
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Cut:
    subset: frozenset
    boundary_size: int
    volume: int


def cut_of_subset(g, subset):
    subset = frozenset(subset)
    boundary = 0
    for h in range(g.half_edge_count):
        if g.half_tail[h] in subset and g.half_head[h] not in subset:
            boundary += 1
    degs = g.degrees()
    vol = sum(degs[v] for v in subset)
    return Cut(subset, boundary, vol)


def cheeger_constant(g, vertex_cap=CHEEGER_VERTEX_CAP):
    """Exact Cheeger constant h(G) = min_{0 < vol(S) <= vol(V)/2} |∂S| / vol(S).

    Volume is the degree sum over S; the boundary counts half-edges leaving S.
    Brute-force subset enumeration; exact rational result plus an argmin cut.
    """
    n = g.vertex_count
    if n > vertex_cap:
        raise ResourceLimitError(
            f"cheeger_constant is exact brute force and is capped at "
            f"{vertex_cap} vertices (got {n}); approximate variants are out of scope")
    if not is_connected(g):
        raise InputError("cheeger_constant requires a connected graph")
    if n < 2:
        raise InputError("cheeger_constant needs at least 2 vertices")
    degs = g.degrees()
    total = sum(degs)
    tails = g.half_tail
    heads = g.half_head
    best = None
    best_cut = None
    for mask in range(1, 1 << n):
        vol = 0
        m = mask
        while m:
            vol += degs[(m & -m).bit_length() - 1]
            m &= m - 1
        if 2 * vol > total:
            continue
        boundary = 0
        for h in range(len(tails)):
            if (mask >> tails[h]) & 1 and not (mask >> heads[h]) & 1:
                boundary += 1
        ratio = Fraction(boundary, vol)
        if best is None or ratio < best:
            best = ratio
            best_cut = mask
    subset = frozenset(v for v in range(n) if (best_cut >> v) & 1)
    return best, cut_of_subset(g, subset)


def naive_cheeger_oracle(g):
    """Independent enumeration (itertools subsets, edge-list boundary count)."""
    n = g.vertex_count
    degs = g.degrees()
    total = sum(degs)
    best = None
    for k in range(1, n + 1):
        for combo in combinations(range(n), k):
            s = set(combo)
            vol = sum(degs[v] for v in s)
            if 2 * vol > total:
                continue
            boundary = 0
            for u, v in g.edges():
                if (u in s) != (v in s):
                    boundary += 1
            ratio = Fraction(boundary, vol)
            if best is None or ratio < best:
                best = ratio
    return best
