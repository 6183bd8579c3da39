"""Degree-biased Markov operator spectra.

The Markov operator M averages a function over the half-edges leaving each
vertex.  It is self-adjoint in the degree-weighted inner product, and shares
its spectrum with the symmetric matrix S = D^{-1/2} A D^{-1/2}, which is what
we actually diagonalize.  New eigenvalues of a lift are obtained by deflating
the pullback subspace (spanned by fiber indicators) rather than by multiset
subtraction, so eigenvalue collisions cannot contaminate the result.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg
import scipy.sparse as sp

from .errors import InputError, ResourceLimitError, SolverError

DENSE_VERTEX_CAP = 4000
DENSE_TOLERANCE = 1e-9
ITERATIVE_TOLERANCE = 1e-6


@dataclass(frozen=True)
class SpectrumMultiset:
    """Sorted real eigenvalue multiset of a Markov operator.

    kind is "full" (complete multiset), "extremes" (largest-magnitude
    eigenvalues only), or "interval" (values = [lo, hi], a set surrogate).
    """

    values: tuple
    tolerance: float
    kind: str = "full"

    def __post_init__(self):
        if self.kind not in ("full", "extremes", "interval"):
            raise InputError(f"unknown spectrum kind {self.kind!r}")
        vals = self.values
        if any(b < a for a, b in zip(vals, vals[1:])):
            raise InputError("spectrum values must be sorted ascending")
        if vals and (vals[0] < -1 - self.tolerance or vals[-1] > 1 + self.tolerance):
            raise InputError("Markov spectra live in [-1, 1]")

    def __len__(self):
        return len(self.values)

    def max_abs(self):
        return max(abs(v) for v in self.values) if self.values else 0.0

    def is_submultiset_of(self, other, tol=None):
        """Greedy sorted matching of self.values into other.values."""
        tol = self.tolerance if tol is None else tol
        i = 0
        for v in self.values:
            while i < len(other.values) and other.values[i] < v - tol:
                i += 1
            if i >= len(other.values) or abs(other.values[i] - v) > tol:
                return False
            i += 1
        return True

    def multiset_union(self, other):
        return SpectrumMultiset(tuple(sorted(self.values + other.values)),
                                max(self.tolerance, other.tolerance), "full")

    def to_json(self):
        return json.dumps({"values": list(self.values),
                           "tolerance": self.tolerance,
                           "kind": self.kind})


def spectrum_from_json(text):
    data = json.loads(text)
    return SpectrumMultiset(tuple(data["values"]), data["tolerance"], data["kind"])


def interval_spectrum(lo, hi, tolerance=0.0):
    return SpectrumMultiset((lo, hi), tolerance, "interval")


@dataclass(frozen=True)
class OperatorHandle:
    """Symmetrized Markov operator S = D^{-1/2} A D^{-1/2} of a multigraph."""

    graph: object
    matrix: sp.csr_matrix
    degrees: np.ndarray

    @classmethod
    def build(cls, graph):
        degs = np.array(graph.degrees(), dtype=float)
        if graph.vertex_count == 0:
            raise InputError("empty graph has no Markov operator")
        if np.any(degs == 0):
            raise InputError("graph has a zero-degree vertex")
        rows = np.fromiter(graph.half_tail, dtype=np.int64,
                           count=graph.half_edge_count)
        cols = np.fromiter(graph.half_head, dtype=np.int64,
                           count=graph.half_edge_count)
        data = np.ones(graph.half_edge_count)
        a = sp.csr_matrix((data, (rows, cols)),
                          shape=(graph.vertex_count, graph.vertex_count))
        dinv = sp.diags(1.0 / np.sqrt(degs))
        return cls(graph, (dinv @ a @ dinv).tocsr(), degs)

    def scaled_constants(self):
        """The vector D^{1/2} 1, the top eigenvector on a connected graph."""
        b = np.sqrt(self.degrees)
        return b / np.linalg.norm(b)


def markov_spectrum_dense(graph, vertex_cap=DENSE_VERTEX_CAP):
    """Full eigenvalue multiset of the Markov operator, dense path."""
    if graph.vertex_count > vertex_cap:
        raise ResourceLimitError(
            f"dense spectrum capped at {vertex_cap} vertices "
            f"(got {graph.vertex_count})")
    op = OperatorHandle.build(graph)
    vals = np.linalg.eigvalsh(op.matrix.toarray())
    vals = np.clip(vals, -1.0, 1.0)
    return SpectrumMultiset(tuple(float(v) for v in vals), DENSE_TOLERANCE, "full")


def _orthonormalize(basis):
    q, r = np.linalg.qr(basis)
    keep = np.abs(np.diag(r)) > 1e-12
    return q[:, keep]


def extreme_eigenvalues(graph_or_op, k, orthogonal_to=None, seed=0,
                        tol=ITERATIVE_TOLERANCE, max_iterations=None):
    """k largest-magnitude eigenvalues of the symmetrized operator, deflated.

    Lanczos with full reorthogonalization; the projection onto the
    complement of ``orthogonal_to`` is applied inside every matrix-vector
    product.  Deterministic for a fixed seed.  Raises SolverError with the
    residual norm if the Ritz values fail to converge within the iteration
    cap (default 10 * sqrt(n) + 30).
    """
    op = graph_or_op if isinstance(graph_or_op, OperatorHandle) \
        else OperatorHandle.build(graph_or_op)
    s = op.matrix
    n = s.shape[0]
    basis = None
    if orthogonal_to is not None:
        basis = _orthonormalize(np.atleast_2d(np.asarray(orthogonal_to, dtype=float))
                                .reshape(n, -1))

    def project(x):
        if basis is None:
            return x
        return x - basis @ (basis.T @ x)

    free_dim = n - (0 if basis is None else basis.shape[1])
    k_eff = min(k, free_dim)
    if k_eff == 0:
        return []
    if max_iterations is None:
        max_iterations = int(10 * math.sqrt(n)) + 30
    max_iterations = min(max_iterations, free_dim)

    rng = np.random.default_rng(seed)
    q = project(rng.standard_normal(n))
    norm = np.linalg.norm(q)
    if norm < 1e-12:
        raise SolverError("start vector vanished under deflation", residual=norm)
    q /= norm
    qmat = np.zeros((n, max_iterations))
    qmat[:, 0] = q
    alphas, betas = [], []
    last_residual = None
    for j in range(max_iterations):
        w = project(s @ qmat[:, j])
        a = float(qmat[:, j] @ w)
        alphas.append(a)
        w -= a * qmat[:, j]
        if j > 0:
            w -= betas[-1] * qmat[:, j - 1]
        # full reorthogonalization against all Lanczos vectors (and the basis)
        w -= qmat[:, :j + 1] @ (qmat[:, :j + 1].T @ w)
        w = project(w)
        bnorm = float(np.linalg.norm(w))
        tmat = np.diag(alphas)
        if betas:
            tmat += np.diag(betas, 1) + np.diag(betas, -1)
        evals, evecs = np.linalg.eigh(tmat)
        order = np.argsort(-np.abs(evals))
        if j + 1 >= k_eff:
            residuals = np.abs(bnorm * evecs[-1, order[:k_eff]])
            last_residual = float(residuals.max())
            if last_residual < tol or bnorm < 1e-13:
                return [float(evals[i]) for i in order[:k_eff]]
        elif bnorm < 1e-13:
            # Krylov space exhausted before k vectors: spectrum of the
            # reachable invariant subspace is exact
            return [float(evals[i]) for i in order]
        if j + 1 < max_iterations:
            betas.append(bnorm)
            qmat[:, j + 1] = w / bnorm
    raise SolverError(
        f"Lanczos did not converge in {max_iterations} iterations",
        residual=last_residual)


def pullback(base_fn, sample):
    """Embed a base-vertex function into the lift: (p* f)(u, i) = f(u).

    Intertwines the two Markov operators exactly.
    """
    base_fn = np.asarray(base_fn, dtype=float)
    if base_fn.shape[0] != sample.base.vertex_count:
        raise InputError("function length must match the base vertex count")
    return np.repeat(base_fn, sample.n_sheets)


def fiber_basis(sample):
    """Fiber indicators orthonormalized in the symmetrized coordinates.

    Column u is D^{1/2} 1_{fiber(u)} normalized; fibers are disjoint so the
    columns are exactly orthogonal.
    """
    lift = sample.lift
    degs = np.array(lift.degrees(), dtype=float)
    m = sample.base.vertex_count
    basis = np.zeros((lift.vertex_count, m))
    for u in range(m):
        idx = list(sample.fiber(u))
        col = np.zeros(lift.vertex_count)
        col[idx] = np.sqrt(degs[idx])
        basis[:, u] = col / np.linalg.norm(col)
    return basis


def new_spectrum(sample, mode="dense", k=2, seed=0, vertex_cap=DENSE_VERTEX_CAP,
                 tol=ITERATIVE_TOLERANCE):
    """Spectrum of the lift operator restricted to the complement of the pullback.

    Dense mode returns the full multiset (dimension |V(base)| * (n-1));
    extremes mode returns the k largest-magnitude new eigenvalues via the
    deflated iterative solver.
    """
    basis = fiber_basis(sample)
    op = OperatorHandle.build(sample.lift)
    if mode == "extremes":
        vals = extreme_eigenvalues(op, k, orthogonal_to=basis, seed=seed, tol=tol)
        return SpectrumMultiset(tuple(sorted(float(np.clip(v, -1, 1)) for v in vals)),
                                tol, "extremes")
    if mode != "dense":
        raise InputError(f"unknown mode {mode!r}")
    nv = sample.lift.vertex_count
    if nv > vertex_cap:
        raise ResourceLimitError(
            f"dense new-spectrum capped at {vertex_cap} vertices (got {nv})")
    comp = scipy.linalg.null_space(basis.T)
    restricted = comp.T @ (op.matrix @ comp)
    vals = np.linalg.eigvalsh((restricted + restricted.T) / 2)
    vals = np.clip(vals, -1.0, 1.0)
    return SpectrumMultiset(tuple(float(v) for v in vals), DENSE_TOLERANCE, "full")


def tree_rho(d):
    """Spectral radius of the d-regular tree: 2 sqrt(d-1) / d."""
    if d < 2:
        raise InputError("tree_rho needs degree d >= 2")
    return 2.0 * math.sqrt(d - 1) / d


# ---------------------------------------------------------------------------
# compact subsets of the real line and Hausdorff distance
# ---------------------------------------------------------------------------

def _normalize_intervals(parts):
    ivs = sorted((float(lo), float(hi)) for lo, hi in parts)
    merged = []
    for lo, hi in ivs:
        if hi < lo:
            raise InputError(f"interval [{lo}, {hi}] is empty")
        if merged and lo <= merged[-1][1]:
            merged[-1] = (merged[-1][0], max(merged[-1][1], hi))
        else:
            merged.append((lo, hi))
    return tuple(merged)


@dataclass(frozen=True)
class RealCompactSet:
    """Finite union of closed intervals (points are degenerate intervals)."""

    intervals: tuple

    @classmethod
    def from_points(cls, points):
        pts = list(points)
        if not pts:
            raise InputError("empty set has no Hausdorff distance")
        return cls(_normalize_intervals((p, p) for p in pts))

    @classmethod
    def from_intervals(cls, parts):
        parts = list(parts)
        if not parts:
            raise InputError("empty set has no Hausdorff distance")
        return cls(_normalize_intervals(parts))

    def distance_to(self, x):
        best = math.inf
        for lo, hi in self.intervals:
            if x < lo:
                best = min(best, lo - x)
            elif x > hi:
                best = min(best, x - hi)
            else:
                return 0.0
        return best

    def endpoints(self):
        return [e for iv in self.intervals for e in iv]


def _as_compact_set(obj):
    if isinstance(obj, RealCompactSet):
        return obj
    if isinstance(obj, SpectrumMultiset):
        if obj.kind == "interval":
            return RealCompactSet.from_intervals([tuple(obj.values)])
        return RealCompactSet.from_points(obj.values)
    seq = list(obj)
    if seq and isinstance(seq[0], (tuple, list)):
        return RealCompactSet.from_intervals(seq)
    return RealCompactSet.from_points(seq)


def _directed_hausdorff(a, b):
    """sup_{x in a} dist(x, b), exact for interval unions.

    The supremum over each interval of a piecewise-linear distance function is
    attained at interval endpoints of A or at midpoints of gaps of B.
    """
    candidates = list(a.endpoints())
    for i in range(1, len(b.intervals)):
        gap_mid = (b.intervals[i - 1][1] + b.intervals[i][0]) / 2.0
        for lo, hi in a.intervals:
            if lo <= gap_mid <= hi:
                candidates.append(gap_mid)
    return max(b.distance_to(x) for x in candidates)


def hausdorff_distance(a, b):
    """Two-sided Hausdorff distance between compact subsets of the reals.

    Inputs may be SpectrumMultisets, point iterables, interval-pair
    iterables, or RealCompactSets.
    """
    sa, sb = _as_compact_set(a), _as_compact_set(b)
    return max(_directed_hausdorff(sa, sb), _directed_hausdorff(sb, sa))
