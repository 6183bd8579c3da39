"""Words, voltage assignments, derived lifts, and cover balls."""

import random

import numpy as np
import pytest

from liftlab.errors import InputError, ResourceLimitError
from liftlab.graph_core import (
    ball,
    build_multigraph,
    connected_components,
    is_connected,
    rooted_isomorphic,
)
from liftlab.voltages import (
    InfiniteCover,
    Word,
    cover_ball,
    derived_lift,
    evaluate_word,
    evaluate_word_unreduced,
    spanning_tree_voltage,
    trivial_voltage,
    universal_cover_ball,
    voltage_from_edge_words,
    voltage_from_json,
    word_multiply,
)


def bouquet(loops):
    return build_multigraph([(0, 0)] * loops, 1)


def cycle(n):
    return build_multigraph([(i, (i + 1) % n) for i in range(n)], n)


def k2():
    return build_multigraph([(0, 1)], 2)


def random_word(rng, rank, max_len):
    letters = []
    for _ in range(rng.randrange(max_len + 1)):
        l = rng.choice([i for i in range(-rank, rank + 1) if i != 0])
        letters.append(l)
    return Word.reduced(tuple(letters), rank)


class TestWord:
    def test_inverse_cancellation(self):
        a = Word((1,), 2)
        assert word_multiply(a, a.inverse()).letters == ()

    def test_one_cancellation(self):
        a = Word((1, 2), 2)
        b = Word((-2, 1), 2)
        assert word_multiply(a, b).letters == (1, 1)

    def test_unreduced_rejected(self):
        with pytest.raises(InputError):
            Word((1, -1), 1)

    def test_rank_mismatch(self):
        with pytest.raises(InputError):
            word_multiply(Word((1,), 1), Word((1,), 2))

    def test_associativity_random(self):
        rng = random.Random(7)
        for _ in range(200):
            a = random_word(rng, 3, 12)
            b = random_word(rng, 3, 12)
            c = random_word(rng, 3, 12)
            assert word_multiply(word_multiply(a, b), c) == \
                word_multiply(a, word_multiply(b, c))


class TestEvaluate:
    def test_empty_word_identity(self):
        rng = np.random.default_rng(0)
        perms = [rng.permutation(6), rng.permutation(6)]
        assert np.array_equal(evaluate_word(Word((), 2), perms), np.arange(6))

    def test_single_generator(self):
        rng = np.random.default_rng(1)
        p, q = rng.permutation(5), rng.permutation(5)
        assert np.array_equal(evaluate_word(Word((1,), 2), [p, q]), p)

    def test_reduction_matches_unreduced_oracle(self):
        rng = np.random.default_rng(2)
        p, q = rng.permutation(8), rng.permutation(8)
        reduced = evaluate_word(Word.reduced((1, -1, 2), 2), [p, q])
        oracle = evaluate_word_unreduced((1, -1, 2), 2, [p, q])
        assert np.array_equal(reduced, oracle)
        assert np.array_equal(reduced, q)

    def test_homomorphism_random(self):
        rng = random.Random(9)
        nprng = np.random.default_rng(9)
        perms = [nprng.permutation(7) for _ in range(3)]
        for _ in range(100):
            a = random_word(rng, 3, 10)
            b = random_word(rng, 3, 10)
            ab = word_multiply(a, b)
            ea = evaluate_word(a, perms) if a.letters else np.arange(7)
            eb = evaluate_word(b, perms) if b.letters else np.arange(7)
            eab = evaluate_word(ab, perms) if ab.letters else np.arange(7)
            assert np.array_equal(eab, ea[eb])


class TestSpanningTreeVoltage:
    def test_tree_rank0(self):
        tree = build_multigraph([(0, 1), (1, 2), (1, 3)], 4)
        phi = spanning_tree_voltage(tree)
        assert phi.rank == 0
        assert all(w.is_identity() for w in phi.volt)

    def test_bouquet2(self):
        phi = spanning_tree_voltage(bouquet(2))
        assert phi.rank == 2
        canon = [phi.volt[h] for h in range(4) if h < phi.base.inv[h]]
        assert sorted(w.letters for w in canon) == [(1,), (2,)]

    def test_c4_rank1(self):
        phi = spanning_tree_voltage(cycle(4))
        assert phi.rank == 1
        nontrivial = [w for w in phi.volt if not w.is_identity()]
        assert len(nontrivial) == 2  # one edge pair

    def test_involution_compatibility(self):
        rng = random.Random(3)
        checked = 0
        while checked < 10:
            n = rng.randrange(2, 7)
            edges = [(i, (i + 1) % n) for i in range(n)]
            deg = [2] * n
            for _ in range(2):
                u, v = rng.randrange(n), rng.randrange(n)
                if deg[u] < 7 and deg[v] < 7:
                    edges.append((u, v))
                    deg[u] += 1
                    deg[v] += 1
            g = build_multigraph(edges, n)
            if not is_connected(g):
                continue
            phi = spanning_tree_voltage(g)
            for h in range(g.half_edge_count):
                assert phi.volt[g.inv[h]] == phi.volt[h].inverse()
            checked += 1

    def test_disconnected_rejected(self):
        g = build_multigraph([(0, 1)], 3)
        with pytest.raises(InputError):
            spanning_tree_voltage(g)


class TestDerivedLift:
    def test_trivial_voltage_splits_sheets(self):
        sample = derived_lift(k2(), trivial_voltage(k2()), [], n_sheets=3)
        ncomp, _ = connected_components(sample.lift)
        assert sample.lift.vertex_count == 6
        assert ncomp == 3
        assert sample.lift.degrees() == (1,) * 6

    def test_loop_with_cycle_permutation_gives_cycle(self):
        base = bouquet(1)
        phi = voltage_from_edge_words(base, 1, {0: Word((1,), 1)})
        n = 5
        cyc = np.roll(np.arange(n), -1)
        sample = derived_lift(base, phi, [cyc])
        lift = sample.lift
        assert lift.vertex_count == 5
        assert lift.degrees() == (2,) * 5
        ncomp, _ = connected_components(lift)
        assert ncomp == 1
        assert rooted_isomorphic(ball(lift, 0, 5), ball(cycle(5), 0, 5))

    def test_degree_preservation_random(self):
        rng = random.Random(4)
        nprng = np.random.default_rng(4)
        for _ in range(10):
            base = build_multigraph([(0, 0), (0, 1), (1, 2), (2, 0)], 3)
            phi = spanning_tree_voltage(base)
            n = rng.randrange(1, 9)
            perms = [nprng.permutation(n) for _ in range(phi.rank)]
            sample = derived_lift(base, phi, perms)
            for v in range(sample.lift.vertex_count):
                assert sample.lift.degrees()[v] == base.degrees()[sample.covering[v]]

    def test_covering_is_local_bijection(self):
        base = build_multigraph([(0, 1), (1, 2), (2, 0), (0, 0)], 3)
        phi = spanning_tree_voltage(base)
        nprng = np.random.default_rng(8)
        sample = derived_lift(base, phi, [nprng.permutation(6) for _ in range(phi.rank)])
        lift, cov = sample.lift, sample.covering
        base_out = base.out_half_edges()
        lift_out = lift.out_half_edges()
        for v in range(lift.vertex_count):
            got = sorted((cov[lift.half_head[h]]) for h in lift_out[v])
            want = sorted(base.half_head[h] for h in base_out[cov[v]])
            assert got == want

    def test_sheet_count_validation(self):
        with pytest.raises(InputError):
            derived_lift(k2(), trivial_voltage(k2()), [])


class TestCoverBall:
    def test_rank0_tree_cover_is_tree_itself(self):
        tree = build_multigraph([(0, 1), (1, 2)], 3)
        b = cover_ball(tree, trivial_voltage(tree), 0, 4)
        assert rooted_isomorphic(b, ball(tree, 0, 4))

    def test_bouquet2_t4_ball_counts(self):
        phi = spanning_tree_voltage(bouquet(2))
        b = cover_ball(bouquet(2), phi, 0, 2)
        assert b.graph.vertex_count == 17  # 1 + 4 + 12
        assert b.graph.degrees()[b.root] == 4

    def test_c4_cover_is_line(self):
        phi = spanning_tree_voltage(cycle(4))
        b = cover_ball(cycle(4), phi, 0, 3)
        assert b.graph.vertex_count == 7
        degs = sorted(b.graph.degrees())
        assert degs == [1, 1, 2, 2, 2, 2, 2]

    def test_projection_recorded(self):
        phi = spanning_tree_voltage(cycle(4))
        b = cover_ball(cycle(4), phi, 1, 2)
        assert b.vertex_map[b.root] == 1
        assert set(b.vertex_map) <= {0, 1, 2, 3}

    def test_matches_universal_cover_on_corpus(self):
        rng = random.Random(12)
        corpus = [cycle(3), cycle(4), bouquet(1), bouquet(2), k2(),
                  build_multigraph([(0, 1), (0, 1)], 2),
                  build_multigraph([(0, 0), (0, 1)], 2),
                  build_multigraph([(0, 1), (1, 2), (2, 0), (2, 3)], 4)]
        for _ in range(6):
            n = rng.randrange(2, 8)
            edges = [(i, (i + 1) % n) for i in range(n)]
            edges += [(rng.randrange(n), rng.randrange(n)) for _ in range(2)]
            g = build_multigraph(edges, n)
            if is_connected(g):
                corpus.append(g)
        for g in corpus:
            phi = spanning_tree_voltage(g)
            for radius in (0, 1, 2, 3):
                a = cover_ball(g, phi, 0, radius)
                b = universal_cover_ball(g, 0, radius)
                assert rooted_isomorphic(a, b), (g.edges(), radius)

    def test_state_cap(self):
        phi = spanning_tree_voltage(bouquet(2))
        with pytest.raises(ResourceLimitError):
            cover_ball(bouquet(2), phi, 0, 12, state_cap=1000)


class TestUniversalCoverBall:
    def test_bouquet_d_gives_t2d(self):
        b = universal_cover_ball(bouquet(2), 0, 3)
        # T_4 ball of radius 3: 1 + 4 + 12 + 36
        assert b.graph.vertex_count == 53
        assert b.graph.degrees()[b.root] == 4

    def test_tree_is_own_cover(self):
        tree = build_multigraph([(0, 1), (0, 2), (2, 3)], 4)
        b = universal_cover_ball(tree, 0, 5)
        assert rooted_isomorphic(b, ball(tree, 0, 5))

    def test_triangle_cover_is_line(self):
        b = universal_cover_ball(cycle(3), 0, 2)
        assert b.graph.vertex_count == 5
        assert sorted(b.graph.degrees()) == [1, 1, 2, 2, 2]


class TestWalkArrays:
    def test_true_degrees_on_boundary(self):
        cov = InfiniteCover(bouquet(2), spanning_tree_voltage(bouquet(2)), 0)
        src = cov.walk_arrays(2)
        assert len(src.neighbors) == 17
        assert all(d == 4 for d in src.true_degrees)
        # boundary states have fewer materialized neighbors than true degree
        assert any(len(nb) < 4 for nb in src.neighbors)
        # root sees all four
        assert len(src.neighbors[src.root]) == 4


class TestVoltageJson:
    def test_round_trip(self):
        g = build_multigraph([(0, 1), (0, 1), (1, 1)], 2)
        phi = spanning_tree_voltage(g)
        text = phi.to_json()
        again = voltage_from_json(g, text)
        assert again.volt == phi.volt
        assert again.to_json() == text

    def test_omitted_edges_trivial(self):
        g = cycle(3)
        again = voltage_from_json(g, '{"rank": 1, "voltages": []}')
        assert all(w.is_identity() for w in again.volt)

    def test_missing_edge_rejected(self):
        g = cycle(3)
        with pytest.raises(InputError):
            voltage_from_json(g, '{"rank": 1, "voltages": [{"edge": [0, 5], "word": [1]}]}')
