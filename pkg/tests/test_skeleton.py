"""Skeleton chains: exact finite types, cover types, stationarity, spectra."""

from fractions import Fraction

import numpy as np
import pytest

from liftlab.errors import InputError, ResourceLimitError, SolverError
from liftlab.graph_core import build_multigraph
from liftlab.skeleton import (
    SkeletonChain,
    reversibility_residual,
    skeleton_exact_finite,
    skeleton_for_cover,
    stationary_check,
    structured_spectrum,
)
from liftlab.spectral import markov_spectrum_dense
from liftlab.random_models import random_connected_multigraph
from liftlab.voltages import spanning_tree_voltage


def cycle(n):
    return build_multigraph([(i, (i + 1) % n) for i in range(n)], n)


def path(n):
    return build_multigraph([(i, i + 1) for i in range(n - 1)], n)


def bouquet(loops):
    return build_multigraph([(0, 0)] * loops, 1)


def loop_path():
    """Two vertices: a loop at vertex 0 plus the edge (0, 1)."""
    return build_multigraph([(0, 0), (0, 1)], 2)


class TestExactFinite:
    def test_vertex_transitive_collapses(self):
        chain = skeleton_exact_finite(cycle(4))
        assert chain.state_count == 1
        assert chain.transition == ((Fraction(1),),)
        assert chain.stationary == (Fraction(1),)

    def test_path3(self):
        chain = skeleton_exact_finite(path(3))
        assert chain.state_count == 2
        p = chain.transition_matrix()
        assert np.allclose(p, [[0.0, 1.0], [1.0, 0.0]])
        assert sorted(chain.stationary) == [Fraction(1, 2), Fraction(1, 2)]

    def test_star_k13(self):
        star = build_multigraph([(0, 1), (0, 2), (0, 3)], 4)
        chain = skeleton_exact_finite(star)
        assert chain.state_count == 2
        center = chain.state_sizes.index(1)
        assert chain.stationary[center] == Fraction(1, 2)

    def test_stationarity_exact(self):
        graphs = [cycle(4), path(3), cycle(7), loop_path(),
                  build_multigraph([(0, 1), (0, 2), (0, 3)], 4)]
        for s in range(10):
            graphs.append(random_connected_multigraph(2 + s, extra_edges=s % 3,
                                                      seed=s))
        for g in graphs:
            chain = skeleton_exact_finite(g)
            assert stationary_check(chain) == 0.0

    def test_row_stochastic(self):
        g = random_connected_multigraph(9, extra_edges=2, seed=4)
        chain = skeleton_exact_finite(g)
        for row in chain.transition:
            assert sum(row, Fraction(0)) == 1

    def test_size_cap(self):
        with pytest.raises(ResourceLimitError):
            skeleton_exact_finite(cycle(10), vertex_cap=5)

    def test_disconnected_rejected(self):
        with pytest.raises(InputError):
            skeleton_exact_finite(build_multigraph([(0, 1)], 3))


class TestStructuredSpectrum:
    def test_single_state(self):
        chain = skeleton_exact_finite(cycle(5))
        assert structured_spectrum(chain).values == (1.0,)

    def test_path3_spectrum(self):
        chain = skeleton_exact_finite(path(3))
        spec = structured_spectrum(chain)
        assert np.allclose(spec.values, [-1.0, 1.0], atol=1e-12)

    def test_vertex_transitive_corpus(self):
        for g in [cycle(4), cycle(9), bouquet(2),
                  build_multigraph([(0, 1), (0, 1), (0, 1)], 2)]:
            chain = skeleton_exact_finite(g)
            if chain.state_count == 1:
                assert structured_spectrum(chain).values == (1.0,)

    def test_non_reversible_chain_rejected(self):
        # hand-built 3-state chain that is stationary but not reversible
        third = Fraction(1, 3)
        p = (
            (Fraction(0), Fraction(2, 3), third),
            (third, Fraction(0), Fraction(2, 3)),
            (Fraction(2, 3), third, Fraction(0)),
        )
        chain = SkeletonChain(
            state_codes=(b"a", b"b", b"c"),
            representatives=(None, None, None),
            state_sizes=(1, 1, 1),
            transition=p,
            stationary=(third, third, third),
            radius=0,
            stabilized=None,
        )
        assert stationary_check(chain) == 0.0
        assert reversibility_residual(chain) > 0
        with pytest.raises(SolverError):
            structured_spectrum(chain)


class TestCoverSkeleton:
    def test_bouquet_single_state(self):
        base = bouquet(2)
        phi = spanning_tree_voltage(base)
        for r in (0, 1, 2):
            chain = skeleton_for_cover(base, phi, r, r + 2)
            assert chain.state_count == 1
            assert chain.stationary == (Fraction(1),)
            assert structured_spectrum(chain).values == (1.0,)

    def test_loop_path_two_fibers(self):
        base = loop_path()
        phi = spanning_tree_voltage(base)
        chain = skeleton_for_cover(base, phi, 2, 5)
        assert chain.state_count == 2
        assert stationary_check(chain) <= 1e-9
        # fibers equal type classes: structured spectrum is sigma(M_H)
        spec = structured_spectrum(chain)
        dense = markov_spectrum_dense(base)
        assert np.allclose(spec.values, dense.values, atol=1e-9)

    def test_stationary_weights_from_base(self):
        base = loop_path()
        phi = spanning_tree_voltage(base)
        chain = skeleton_for_cover(base, phi, 1, 4)
        assert sorted(chain.stationary) == [Fraction(1, 4), Fraction(3, 4)]

    def test_stabilization_flag(self):
        base = loop_path()
        phi = spanning_tree_voltage(base)
        for r in (1, 2, 3, 4):
            chain = skeleton_for_cover(base, phi, r, r + 3)
            assert chain.stabilized is True

    def test_coarsening_monotone(self):
        base = build_multigraph([(0, 0), (0, 1), (1, 2)], 3)
        phi = spanning_tree_voltage(base)
        counts = [skeleton_for_cover(base, phi, r, r + 3).state_count
                  for r in (0, 1, 2, 3)]
        assert all(b >= a for a, b in zip(counts, counts[1:]))

    def test_line_cover_of_cycle(self):
        base = cycle(4)
        phi = spanning_tree_voltage(base)
        chain = skeleton_for_cover(base, phi, 2, 5)
        # the line is vertex transitive: one state
        assert chain.state_count == 1
        assert structured_spectrum(chain).values == (1.0,)

    def test_radius_validation(self):
        base = bouquet(2)
        phi = spanning_tree_voltage(base)
        with pytest.raises(InputError):
            skeleton_for_cover(base, phi, 2, 2)

    def test_json(self):
        base = loop_path()
        phi = spanning_tree_voltage(base)
        chain = skeleton_for_cover(base, phi, 1, 4)
        import json
        data = json.loads(chain.to_json())
        assert data["radius"] == 1
        assert len(data["states"]) == 2
        assert data["stationary_residual"] <= 1e-9
