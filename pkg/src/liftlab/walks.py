"""Exact return probabilities, Monte-Carlo walkers, and spectral-radius estimators.

Return probabilities are computed by forward dynamic programming in integer
arithmetic over a common denominator L^t (L = lcm of degrees), which keeps
the values exact rationals.  For infinite covers the DP runs on a radius-N
ball with true degrees attached: a length-2n walk that returns to the root
never leaves the radius-n ball, so the truncation is exact, and return
probabilities are recovered from the half-time distribution through
reversibility:  p_{2k}(o,o) = deg(o) * sum_u q_k(u)^2 / deg(u).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import InputError, LiftLabError
from .graph_core import MultiGraph, RootedBall
from .voltages import InfiniteCover, WalkSource

# beyond this the exact DP switches to floats
MAX_DENOMINATOR_BITS = 1024


@dataclass(frozen=True)
class ReturnSeries:
    """Even-time return probabilities p_2, p_4, ..., p_{2N} from one origin."""

    origin: str
    values: tuple
    exact: bool

    @property
    def max_time(self):
        return 2 * len(self.values)

    def p(self, two_n):
        if two_n % 2 or not (2 <= two_n <= self.max_time):
            raise InputError(f"p_{two_n} not in the series (even times up to "
                             f"{self.max_time})")
        return self.values[two_n // 2 - 1]

    @property
    def estimates(self):
        return tuple(float(p) ** (1.0 / (2 * (i + 1)))
                     for i, p in enumerate(self.values))

    def to_json(self):
        payload = {
            "origin": self.origin,
            "exact": self.exact,
            "values_float": [float(p) for p in self.values],
            "estimates": list(self.estimates),
        }
        if self.exact:
            payload["values_exact"] = [str(Fraction(p)) for p in self.values]
        return json.dumps(payload)

    def to_csv(self):
        lines = ["two_n,p,estimate"]
        for i, (p, e) in enumerate(zip(self.values, self.estimates)):
            lines.append(f"{2 * (i + 1)},{float(p)!r},{e!r}")
        return "\n".join(lines) + "\n"


def _finite_walk_source(graph, root):
    out = graph.out_half_edges()
    neighbors = [[graph.half_head[h] for h in out[v]]
                 for v in range(graph.vertex_count)]
    return WalkSource(neighbors=neighbors,
                      true_degrees=list(graph.degrees()),
                      root=root, radius=-1,
                      origin=f"graph({graph.vertex_count}v)")


def _resolve_source(source, n_half_steps, root=None):
    """Returns (WalkSource, truncated) for the supported input kinds."""
    if isinstance(source, WalkSource):
        truncated = source.radius >= 0
        if truncated and source.radius < n_half_steps:
            raise InputError(
                f"walk source of radius {source.radius} cannot support "
                f"2N = {2 * n_half_steps} exactly; need radius >= {n_half_steps}")
        return source, truncated
    if isinstance(source, InfiniteCover):
        return source.walk_arrays(n_half_steps), True
    if isinstance(source, RootedBall):
        src = _finite_walk_source(source.graph, source.root)
        return src, False
    if isinstance(source, MultiGraph):
        if root is None:
            raise InputError("a root vertex is required for graph input")
        if not (0 <= root < source.vertex_count):
            raise InputError(f"root {root} out of range")
        return _finite_walk_source(source, root), False
    raise InputError(f"unsupported walk source {type(source).__name__}")


def return_probabilities_exact(source, n_half_steps, root=None):
    """Return probabilities p_{2n}(o, o) for 2n = 2, 4, ..., 2 * n_half_steps.

    ``source`` is a MultiGraph (finite semantics; pass ``root``), a
    RootedBall of a finite graph, an InfiniteCover (a radius-N ball is
    materialized, truncation exact), or a prebuilt WalkSource.
    Exact rationals unless the common denominator would exceed 2^1024.
    """
    if n_half_steps < 1:
        raise InputError("need n_half_steps >= 1")
    src, truncated = _resolve_source(source, n_half_steps, root)
    degs = src.true_degrees
    if any(d == 0 for d in degs):
        raise InputError("walk is undefined at a zero-degree vertex")
    lcm = math.lcm(*degs)
    depth = n_half_steps if truncated else 2 * n_half_steps
    exact = depth * lcm.bit_length() <= MAX_DENOMINATOR_BITS
    if exact:
        values = _dp_exact(src, n_half_steps, lcm, truncated)
    else:
        values = _dp_float(src, n_half_steps, truncated)
    return ReturnSeries(origin=src.origin, values=tuple(values), exact=exact)


def _dp_exact(src, n_half, lcm, truncated):
    neighbors = src.neighbors
    degs = src.true_degrees
    root = src.root
    nstates = len(neighbors)
    mult = [lcm // d for d in degs]
    counts = [0] * nstates
    counts[root] = 1
    values = []
    if truncated:
        deg_o = degs[root]
        for t in range(1, n_half + 1):
            nxt = [0] * nstates
            for v in range(nstates):
                c = counts[v]
                if c:
                    cm = c * mult[v]
                    for u in neighbors[v]:
                        nxt[u] += cm
            counts = nxt
            # p_{2t} = deg(o) * sum_u (counts_u / L^t)^2 / deg(u)
            acc = 0
            for v in range(nstates):
                c = counts[v]
                if c:
                    acc += c * c * mult[v]
            values.append(Fraction(deg_o * acc, lcm ** (2 * t + 1)))
    else:
        for t in range(1, 2 * n_half + 1):
            nxt = [0] * nstates
            for v in range(nstates):
                c = counts[v]
                if c:
                    cm = c * mult[v]
                    for u in neighbors[v]:
                        nxt[u] += cm
            counts = nxt
            if t % 2 == 0:
                values.append(Fraction(counts[root], lcm ** t))
    return values


def _dp_float(src, n_half, truncated):
    neighbors = src.neighbors
    degs = np.array(src.true_degrees, dtype=float)
    root = src.root
    nstates = len(neighbors)
    flat_targets = np.fromiter((u for nb in neighbors for u in nb), dtype=np.int64)
    flat_sources = np.fromiter((v for v, nb in enumerate(neighbors) for _ in nb),
                               dtype=np.int64)
    q = np.zeros(nstates)
    q[root] = 1.0
    values = []
    if truncated:
        deg_o = degs[root]
        for t in range(1, n_half + 1):
            share = q / degs
            nxt = np.zeros(nstates)
            np.add.at(nxt, flat_targets, share[flat_sources])
            q = nxt
            values.append(float(deg_o * np.sum(q * q / degs)))
    else:
        for t in range(1, 2 * n_half + 1):
            share = q / degs
            nxt = np.zeros(nstates)
            np.add.at(nxt, flat_targets, share[flat_sources])
            q = nxt
            if t % 2 == 0:
                values.append(float(q[root]))
    return values


@dataclass(frozen=True)
class QuenchedEstimate:
    """Point estimate p_{2N}^{1/2N} plus convergence diagnostics.

    The point estimate is a true lower bound on the spectral radius.  The
    ratio sequence sqrt(p_{2n} / p_{2n-2}) and the Richardson-style
    extrapolation are diagnostics only and are never used in acceptance
    checks.
    """

    point: float
    sequence: tuple
    ratio_sequence: tuple
    richardson: float | None

    def to_json(self):
        return json.dumps({
            "point": self.point,
            "sequence": list(self.sequence),
            "ratio_sequence": list(self.ratio_sequence),
            "richardson_diagnostic": self.richardson,
        })


def quenched_rho_estimate(series):
    """Quenched spectral-radius estimate from an even-time return series."""
    if len(series.values) < 2:
        raise InputError("need the series at least up to 2N = 4")
    seq = series.estimates
    ratios = tuple(
        math.sqrt(float(series.values[i]) / float(series.values[i - 1]))
        for i in range(1, len(series.values)))
    n_max = len(series.values)
    richardson = None
    if n_max % 2 == 0 and n_max >= 4:
        richardson = 2 * seq[n_max - 1] - seq[n_max // 2 - 1]
    return QuenchedEstimate(point=seq[-1], sequence=seq,
                            ratio_sequence=ratios, richardson=richardson)


@dataclass(frozen=True)
class AnnealedEstimate:
    """Root of the ensemble-mean return probability, with per-trial data."""

    point: float
    band: tuple
    mean_values: tuple
    per_trial_quenched: tuple
    per_trial_final_p: tuple
    trials: int
    exact_mean: bool

    @property
    def max_quenched(self):
        return max(self.per_trial_quenched)


def annealed_rho_estimate(sampler, n_half_steps, trials, seed):
    """Monte-Carlo annealed estimate: (mean over samples of p_{2n})^{1/2n}.

    ``sampler(trial_seed)`` must yield a walk source valid up to depth
    2 * n_half_steps (cover handles, walk sources, rooted balls, or
    (graph, root) pairs).  Per-trial seeds are seed XOR trial index.  The
    per-trial quenched estimates are kept so the essential-supremum
    comparison max_i quenched_i vs annealed can be reported.
    """
    if trials < 1:
        raise InputError("need at least one trial")
    all_series = []
    for trial in range(trials):
        trial_seed = seed ^ trial
        try:
            source = sampler(trial_seed)
        except LiftLabError:
            raise
        except Exception as exc:
            raise InputError(f"sampler failed at trial {trial}: {exc}") from exc
        if isinstance(source, tuple):
            graph, root = source
            series = return_probabilities_exact(graph, n_half_steps, root=root)
        else:
            series = return_probabilities_exact(source, n_half_steps)
        all_series.append(series)
    exact_mean = all(s.exact for s in all_series)
    length = len(all_series[0].values)
    if any(len(s.values) != length for s in all_series):
        raise InputError("sampler produced series of differing lengths")
    if exact_mean:
        mean_values = tuple(
            sum(s.values[i] for s in all_series) / Fraction(trials)
            for i in range(length))
    else:
        mean_values = tuple(
            sum(float(s.values[i]) for s in all_series) / trials
            for i in range(length))
    point = float(mean_values[-1]) ** (1.0 / (2 * length))
    finals = [float(s.values[-1]) for s in all_series]
    se = float(np.std(finals, ddof=1) / math.sqrt(trials)) if trials > 1 else 0.0
    lo = max(float(mean_values[-1]) - 1.96 * se, 0.0)
    hi = float(mean_values[-1]) + 1.96 * se
    band = (lo ** (1.0 / (2 * length)) if lo > 0 else 0.0,
            hi ** (1.0 / (2 * length)))
    per_quenched = tuple(s.estimates[-1] for s in all_series)
    return AnnealedEstimate(point=point, band=band, mean_values=mean_values,
                            per_trial_quenched=per_quenched,
                            per_trial_final_p=tuple(finals),
                            trials=trials, exact_mean=exact_mean)


@dataclass(frozen=True)
class SupermultiplicativityResult:
    holds: bool
    witness: tuple | None  # first violating (n, l) if any


def supermultiplicativity_check(series):
    """Verify p_{2nl} >= p_{2n}^l for all n, l with 2nl <= 2N (exact mode only)."""
    if not series.exact:
        raise InputError("supermultiplicativity check needs exact rationals")
    n_max = len(series.values)
    for n in range(1, n_max + 1):
        p_2n = series.values[n - 1]
        power = p_2n
        l = 1
        while n * (l + 1) <= n_max:
            l += 1
            power = power * p_2n
            if series.values[n * l - 1] < power:
                return SupermultiplicativityResult(False, (n, l))
    return SupermultiplicativityResult(True, None)


@dataclass(frozen=True)
class MCWalkResult:
    """Empirical return frequencies of independent walkers from one origin."""

    frequencies: tuple  # index k-1 -> fraction of walkers at the origin at step k
    walkers: int

    def frequency(self, k):
        return self.frequencies[k - 1]

    def standard_error(self, k):
        p = self.frequencies[k - 1]
        return math.sqrt(max(p * (1 - p), 1e-300) / self.walkers)


def mc_walk(graph, origin, steps, walkers, seed):
    """Unbiased Monte-Carlo estimates of p_k(o, o) for k = 1..steps."""
    if not (0 <= origin < graph.vertex_count):
        raise InputError(f"origin {origin} out of range")
    degs = np.array(graph.degrees(), dtype=np.int64)
    if np.any(degs == 0):
        raise InputError("walk is undefined at a zero-degree vertex")
    out = graph.out_half_edges()
    indptr = np.zeros(graph.vertex_count + 1, dtype=np.int64)
    np.cumsum(degs, out=indptr[1:])
    targets = np.fromiter((graph.half_head[h] for v in range(graph.vertex_count)
                           for h in out[v]), dtype=np.int64)
    rng = np.random.default_rng(seed)
    pos = np.full(walkers, origin, dtype=np.int64)
    freqs = []
    for _ in range(steps):
        offs = (rng.random(walkers) * degs[pos]).astype(np.int64)
        pos = targets[indptr[pos] + offs]
        freqs.append(float(np.mean(pos == origin)))
    return MCWalkResult(frequencies=tuple(freqs), walkers=walkers)
