"""Rooted-type statistics: the root-moving Markov chain on isomorphism types,
its degree-biased stationary measure, and the structured spectrum.

For a finite graph the types are exact whole-graph rooted isomorphism
classes.  For an infinite voltage cover, types are radius-r ball codes
computed inside a materialized sample ball; exactness of that approximation
is reported through a stabilization diagnostic, never assumed.  Fibers of a
voltage cover are deck-transitive, so r-ball types are constant on fibers
and the stationary measure can be read off the base graph's degrees.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import InputError, ResourceLimitError, SolverError
from .graph_core import (
    ball,
    bfs_distances,
    canonical_code_rooted,
    is_connected,
)
from .spectral import SpectrumMultiset
from .voltages import InfiniteCover

FINITE_VERTEX_CAP = 200
REVERSIBILITY_TOLERANCE = 1e-9


@dataclass(frozen=True)
class SkeletonChain:
    """Finite-state root-moving chain over rooted types.

    transition and stationary are exact Fractions; ``radius`` is None for
    exact finite types, the ball radius for cover types; ``stabilized`` is
    None when the r+1 diagnostic was not computable.
    """

    state_codes: tuple
    representatives: tuple
    state_sizes: tuple
    transition: tuple
    stationary: tuple
    radius: object
    stabilized: object

    @property
    def state_count(self):
        return len(self.state_codes)

    def transition_matrix(self):
        return np.array([[float(p) for p in row] for row in self.transition])

    def stationary_vector(self):
        return np.array([float(p) for p in self.stationary])

    def to_json(self):
        return json.dumps({
            "states": [{"code": code.hex(), "size": size}
                       for code, size in zip(self.state_codes, self.state_sizes)],
            "transition": [[str(p) for p in row] for row in self.transition],
            "stationary": [str(p) for p in self.stationary],
            "radius": self.radius,
            "stabilized": self.stabilized,
            "stationary_residual": stationary_check(self),
            "reversibility_residual": reversibility_residual(self),
        })


def _assemble_chain(codes_in_order, degs, neighbor_codes, weights,
                    representatives, radius, stabilized):
    """Shared construction: aggregate exact transition counts per type."""
    codes = list(dict.fromkeys(codes_in_order))
    index = {c: i for i, c in enumerate(codes)}
    k = len(codes)
    num = [[0] * k for _ in range(k)]
    den = [0] * k
    for code, deg, nbs in zip(codes_in_order, degs, neighbor_codes):
        s = index[code]
        den[s] += deg
        for nc in nbs:
            if nc not in index:
                raise InputError(
                    "a neighbor's type is unseen among interior vertices; "
                    "increase the sample radius")
            num[s][index[nc]] += 1
    transition = tuple(
        tuple(Fraction(num[s][t], den[s]) for t in range(k)) for s in range(k))
    total_w = sum(weights.values())
    stationary = [Fraction(0)] * k
    sizes = [0] * k
    for code, w in weights.items():
        stationary[index[code]] += Fraction(w, total_w)
        sizes[index[code]] += 1
    reps = tuple(representatives[c] for c in codes)
    return SkeletonChain(tuple(codes), reps, tuple(sizes), transition,
                         tuple(stationary), radius, stabilized)


def skeleton_exact_finite(graph, vertex_cap=FINITE_VERTEX_CAP):
    """Skeleton chain of a finite connected graph with exact rooted types."""
    n = graph.vertex_count
    if n > vertex_cap:
        raise ResourceLimitError(
            f"exact finite skeleton capped at {vertex_cap} vertices (got {n})")
    if not is_connected(graph):
        raise InputError("skeleton needs a connected graph")
    codes = [canonical_code_rooted(graph, v) for v in range(n)]
    degs = graph.degrees()
    out = graph.out_half_edges()
    neighbor_codes = [[codes[graph.half_head[h]] for h in out[v]]
                      for v in range(n)]
    weights = {}
    representatives = {}
    for v in range(n):
        weights[codes[v]] = weights.get(codes[v], 0) + degs[v]
        if codes[v] not in representatives:
            representatives[codes[v]] = ball(graph, v, n)
    return _assemble_chain(codes, degs, neighbor_codes,
                           weights, representatives, None, None)


def skeleton_for_cover(base, voltage, type_radius, sample_radius,
                       base_vertex=0, state_cap=None):
    """Skeleton chain of the voltage cover using radius-r ball types.

    Types and transitions are read off vertices of a materialized
    radius-``sample_radius`` ball whose neighbors' r-balls are fully visible.
    The stationary measure is the degree-biased measure over fibers of the
    base (types are constant on fibers).  The stabilization diagnostic
    re-derives the state count at r+1 when the sample is deep enough.
    """
    r = type_radius
    if r < 0:
        raise InputError("type radius must be non-negative")
    if sample_radius < r + 1:
        raise InputError("need sample_radius >= type_radius + 1")
    kwargs = {} if state_cap is None else {"state_cap": state_cap}
    cover = InfiniteCover(base, voltage, base_vertex, **kwargs)
    sample = cover.ball(sample_radius)
    g = sample.graph
    dist = bfs_distances(g, sample.root)
    interior = [v for v in range(g.vertex_count) if dist[v] <= sample_radius - r - 1]
    if not interior:
        raise InputError("sample radius leaves no interior vertices")
    visible = [v for v in range(g.vertex_count) if dist[v] <= sample_radius - r]
    code_of = {}
    ball_of = {}
    for v in visible:
        b = ball(g, v, r)
        code_of[v] = b.canonical_code
        ball_of[v] = b
    degs = g.degrees()
    out = g.out_half_edges()
    codes_in_order = [code_of[v] for v in interior]
    interior_degs = [degs[v] for v in interior]
    neighbor_codes = [[code_of[g.half_head[h]] for h in out[v]]
                      for v in interior]
    # stationary weights from the base: one representative lift per fiber
    base_degs = base.degrees()
    fiber_rep = {}
    for v in interior:
        h = sample.vertex_map[v]
        if h not in fiber_rep:
            fiber_rep[h] = v
    missing = [h for h in range(base.vertex_count) if h not in fiber_rep]
    if missing:
        raise InputError(
            f"no interior lift of base vertices {missing}; increase sample_radius")
    weights = {}
    for h, v in fiber_rep.items():
        weights[code_of[v]] = weights.get(code_of[v], 0) + base_degs[h]
    representatives = {}
    for v in interior:
        representatives.setdefault(code_of[v], ball_of[v])
    stabilized = None
    if sample_radius >= r + 2:
        inner = [v for v in range(g.vertex_count)
                 if dist[v] <= sample_radius - r - 2]
        if inner:
            count_r = len({code_of[v] for v in inner})
            count_r1 = len({ball(g, v, r + 1).canonical_code for v in inner})
            stabilized = (count_r == count_r1)
    return _assemble_chain(codes_in_order, interior_degs,
                           neighbor_codes, weights, representatives,
                           r, stabilized)


def stationary_check(chain):
    """L1 residual of nu* P = nu*, exact arithmetic then floated."""
    k = chain.state_count
    residual = Fraction(0)
    for t in range(k):
        acc = sum((chain.stationary[s] * chain.transition[s][t]
                   for s in range(k)), Fraction(0))
        residual += abs(acc - chain.stationary[t])
    return float(residual)


def reversibility_residual(chain):
    """max_st |nu*_s P[s][t] - nu*_t P[t][s]| as a float."""
    k = chain.state_count
    worst = Fraction(0)
    for s in range(k):
        for t in range(k):
            flow = chain.stationary[s] * chain.transition[s][t]
            back = chain.stationary[t] * chain.transition[t][s]
            worst = max(worst, abs(flow - back))
    return float(worst)


def structured_spectrum(chain, tolerance=REVERSIBILITY_TOLERANCE):
    """Eigenvalues of the chain symmetrized by its stationary weights.

    Raises SolverError when the chain is not reversible within tolerance,
    which signals that the type radius is too small.
    """
    res = reversibility_residual(chain)
    if res > tolerance:
        raise SolverError(
            f"skeleton chain is not reversible (residual {res:.3e}); "
            "the type radius is too small", residual=res)
    pi = chain.stationary_vector()
    if np.any(pi <= 0):
        # states with zero stationary mass cannot be symmetrized; they do not
        # occur for the constructors in this module
        raise SolverError("stationary measure has zero entries")
    p = chain.transition_matrix()
    half = np.sqrt(pi)
    k = (half[:, None] * p) / half[None, :]
    vals = np.linalg.eigvalsh((k + k.T) / 2)
    vals = np.clip(vals, -1.0, 1.0)
    return SpectrumMultiset(tuple(float(v) for v in vals), 1e-9, "full")
