import random
from fractions import Fraction

import pytest

from outerspace.candidates import (KIND_8, KIND_DOUBLE_DEGEN, KIND_O,
                                   candidate_elements, candidate_shapes,
                                   shape_vector)
from outerspace.freeprod import EllipticElement, conjugacy_key, enumerate_cyclic_words
from outerspace.fixtures import (Z2, fib_auto, fib_rose, fib_system, fib_theta,
                                 lolli_point, lolli_system, zzz_tripod, zzz_system)
from outerspace.lipschitz import brute_force_stretch, stretch
from outerspace.marked_graph import DecoratedPath, build_marked_graph
from outerspace.freeprod import FreeFactorSystem


def edge_graph():
    """Single edge joining two Z/2 vertices (only doubly degenerate barbells)."""
    fs = FreeFactorSystem([Z2, Z2], 0)
    return fs, build_marked_graph(
        fs, labels=[1, 2], edge_ends=[(0, 1)], lengths=[Fraction(1, 2)], basepoint=0,
        letters=[],
        groups=[(DecoratedPath(0, (0,), ()), 1, (0, 1)),
                (DecoratedPath(0, (0, 0), (1,)), 2, (0, 1))],
        omega={}, name="edge")


def classes(words):
    return {conjugacy_key(g, up_to_inversion=True) for g in words}


class TestShapes:
    def test_rose_shapes(self, fib):
        shapes = candidate_shapes(fib["rose"])
        kinds = sorted(s.kind for s in shapes)
        assert kinds.count(KIND_O) == 2
        assert kinds.count(KIND_8) == 2
        fs = fib["fs"]
        a, b = fs.letter(1), fs.letter(2)
        assert classes(candidate_elements(fib["rose"])) == \
            classes([a, b, a * b, a * b.inverse()])

    def test_theta_candidates_are_the_three_loops(self, fib):
        cands = candidate_elements(fib["theta"])
        assert len(cands) == 3
        assert all(s.kind == KIND_O for s in candidate_shapes(fib["theta"]))

    def test_lolli_shapes(self, lolli):
        fs, Xn = lolli["fs"], lolli["Xn"]
        a, g1 = fs.letter(1), fs.vertex(1, 1)
        assert classes(candidate_elements(Xn)) == classes([a, a * g1])
        kinds = {s.kind for s in candidate_shapes(Xn)}
        assert KIND_O in kinds and "DEGEN_BARBELL" in kinds

    def test_edge_graph_only_double_degen(self):
        fs, X = edge_graph()
        shapes = candidate_shapes(X)
        assert {s.kind for s in shapes} == {KIND_DOUBLE_DEGEN}
        (g,) = candidate_elements(X)
        # l(g1 g2) = 2 d(Fix g1, Fix g2): twice the edge length
        assert X.translation_length(g) == 2 * X.lengths[0]

    def test_tripod_barbells(self, zzz):
        T = zzz["tripod"]
        cands = candidate_elements(T)
        assert len(cands) == 3  # one per pair of factors
        for g in cands:
            # l(g_i g_j) = 2 d(Fix g_i, Fix g_j) = 2 * (1/3 + 1/3)
            assert T.translation_length(g) == Fraction(4, 3)


class TestShapeVectors:
    def test_rose_ab(self, fib):
        fs = fib["fs"]
        assert shape_vector(fib["rose"], fs.letter(1) * fs.letter(2)) == (1, 1)

    def test_twisted_word_same_vector(self, fib):
        fs, phi = fib["fs"], fib["phi"]
        assert shape_vector(fib["rose"], phi.apply(fs.letter(2))) == (1, 1)

    def test_lolli_decorated(self, lolli):
        fs, Xn = lolli["fs"], lolli["Xn"]
        assert shape_vector(Xn, fs.vertex(1, 1) * fs.letter(1)) == (2, 1)

    def test_elliptic_raises(self, lolli):
        with pytest.raises(EllipticElement):
            shape_vector(lolli["Xn"], lolli["fs"].vertex(1, 1))

    def test_linearity_random_metrics(self, fib):
        rng = random.Random(7)
        R = fib["rose"]
        cands = candidate_elements(R)
        vecs = {g: shape_vector(R, g) for g in cands}
        for _ in range(50):
            Y = R.with_lengths([Fraction(rng.randrange(1, 40), rng.randrange(1, 40))
                                for _ in range(2)])
            for g in cands:
                assert Y.translation_length(g) == \
                    sum(v * L for v, L in zip(vecs[g], Y.lengths))


class TestCompleteness:
    def test_rose_thorough(self, fib):
        rng = random.Random(8)
        R = fib["rose"]
        for _ in range(5):
            X = R.with_lengths([Fraction(rng.randrange(1, 20), rng.randrange(1, 20))
                                for _ in range(2)])
            Y = R.with_lengths([Fraction(rng.randrange(1, 20), rng.randrange(1, 20))
                                for _ in range(2)])
            got = stretch(X, Y)
            brute, wit = brute_force_stretch(X, Y, 8)
            assert got == brute
            assert Y.translation_length(wit) == got * X.translation_length(wit)

    def test_lolli_thorough(self, lolli):
        rng = random.Random(9)
        Xn = lolli["Xn"]
        for _ in range(5):
            X = Xn.with_lengths([Fraction(rng.randrange(1, 20), rng.randrange(1, 20))
                                 for _ in range(2)])
            Y = Xn.with_lengths([Fraction(rng.randrange(1, 20), rng.randrange(1, 20))
                                 for _ in range(2)])
            assert stretch(X, Y) == brute_force_stretch(X, Y, 8)[0]

    def test_candidates_metric_independent(self, fib):
        R = fib["rose"]
        X = R.with_lengths([Fraction(1, 5), Fraction(4, 5)])
        assert classes(candidate_elements(R)) == classes(candidate_elements(X))
