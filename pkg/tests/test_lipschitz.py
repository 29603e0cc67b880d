import random
from fractions import Fraction

import pytest

from outerspace.freeprod import enumerate_cyclic_words, identity_automorphism
from outerspace.lipschitz import (CertifiedValue, brute_force_displacement,
                                  displacement, displacement_witness, is_thick,
                                  min_displacement_on_simplex, points_equal,
                                  stretch, sym_distance, systole)

GOLDEN_LO = Fraction(16180339887498948, 10**16)
GOLDEN_HI = Fraction(16180339887498950, 10**16)


def rand_metric(X, rng):
    return X.with_lengths([Fraction(rng.randrange(1, 30), rng.randrange(1, 30))
                           for _ in X.lengths])


class TestCertifiedValue:
    def test_basic(self):
        iv = CertifiedValue(Fraction(1), Fraction(2))
        assert iv.contains(Fraction(3, 2)) and iv.width() == 1
        assert iv.intersects(CertifiedValue(Fraction(2), Fraction(3)))
        assert iv.separated_from(CertifiedValue(Fraction(5, 2), Fraction(3)))
        with pytest.raises(ValueError):
            CertifiedValue(Fraction(2), Fraction(1))

    def test_arithmetic(self):
        iv = CertifiedValue(Fraction(1), Fraction(2))
        assert (iv * iv).hi == 4 and iv.pow(3).lo == 1
        assert iv.scale(-1).lo == -2


class TestStretch:
    def test_self_is_one(self, fib):
        assert stretch(fib["rose"], fib["rose"]) == 1

    def test_scaling_multiplicative(self, fib):
        R = fib["rose"]
        assert stretch(R, R.rescale(Fraction(7, 3))) == Fraction(7, 3)

    def test_lolli_paper_value(self, lolli):
        assert stretch(lolli["Xn"], lolli["X"]) == 3

    def test_triangle_inequality(self, fib):
        rng = random.Random(10)
        pts = [fib["rose"], fib["theta"]]
        for _ in range(100):
            X, Q, Y = (rand_metric(rng.choice(pts), rng) for _ in range(3))
            assert stretch(X, Y) <= stretch(X, Q) * stretch(Q, Y)

    def test_covolume_one_at_least_one(self, fib):
        rng = random.Random(11)
        for _ in range(30):
            X = rand_metric(fib["rose"], rng).normalized()
            Y = rand_metric(fib["rose"], rng).normalized()
            s = stretch(X, Y)
            assert s >= 1
            if s == 1 and stretch(Y, X) == 1:
                assert points_equal(X, Y) is not None

    def test_equivariance(self, fib):
        rng = random.Random(12)
        phi = fib["phi"]
        for _ in range(20):
            X = rand_metric(fib["rose"], rng)
            Y = rand_metric(fib["theta"], rng)
            assert stretch(X, Y) == stretch(X.twist(phi), Y.twist(phi))


class TestSymDistance:
    def test_self(self, fib):
        assert sym_distance(fib["rose"], fib["rose"]) == 1

    def test_homothety_invisible(self, fib):
        R = fib["rose"]
        assert sym_distance(R, R.rescale(5)) == 1

    def test_cross_checked_against_brute_force(self, fib, fib_tt):
        X = fib["rose"]
        Y = fib_tt.point
        d = sym_distance(X, Y)
        from outerspace.lipschitz import brute_force_stretch
        b1, _ = brute_force_stretch(X, Y, 12)
        b2, _ = brute_force_stretch(Y, X, 12)
        assert d == b1 * b2


class TestDisplacement:
    def test_identity_everywhere_one(self, fib):
        rng = random.Random(13)
        ident = identity_automorphism(fib["fs"])
        for _ in range(10):
            X = rand_metric(fib["rose"], rng)
            assert displacement(X, ident) == 1

    def test_fib_unit_rose(self, fib):
        val, wit = displacement_witness(fib["rose"], fib["phi"])
        assert val == 2
        # witnessed by the class of b: l(ab)/l(b) = 2
        assert fib["rose"].translation_length(fib["phi"].apply(wit)) == \
            2 * fib["rose"].translation_length(wit)

    def test_golden_rose_displacement_encloses_golden(self, fib, fib_tt):
        lam = displacement(fib_tt.point, fib["phi"])
        assert GOLDEN_LO < lam < GOLDEN_HI + Fraction(1, 10**9)

    def test_brute_force_agreement(self, fib):
        assert displacement(fib["rose"], fib["phi"]) == \
            brute_force_displacement(fib["rose"], fib["phi"], 10)[0]


class TestMinSimplex:
    def test_identity_whole_simplex(self, fib):
        res = min_displacement_on_simplex(fib["rose"], identity_automorphism(fib["fs"]))
        assert res.value.contains(1) and res.interior

    def test_fib_rose_golden(self, fib):
        res = min_displacement_on_simplex(fib["rose"], fib["phi"], tol=Fraction(1, 10**10))
        assert res.value.lo < GOLDEN_HI and res.value.hi > GOLDEN_LO
        assert res.value.width() <= Fraction(1, 10**10)
        assert res.interior
        x, y = res.lengths
        assert abs(x - Fraction(3819660113, 10**10)) < Fraction(1, 10**6)
        assert abs(y - Fraction(6180339887, 10**10)) < Fraction(1, 10**6)

    def test_theta_not_below_golden(self, fib):
        res = min_displacement_on_simplex(fib["theta"], fib["phi"])
        assert res.value.hi > GOLDEN_LO

    def test_certificates(self, fib):
        from outerspace.lipschitz import _feasible_at
        from outerspace.candidates import candidate_elements, shape_vector
        phi = fib["phi"]
        R = fib["rose"]
        res = min_displacement_on_simplex(R, phi)
        vectors = []
        for g in candidate_elements(R):
            vectors.append((tuple(map(Fraction, shape_vector(R, g))),
                            tuple(map(Fraction, shape_vector(R, phi.apply(g))))))
        assert _feasible_at(vectors, res.value.lo, 2) is None      # infeasible below
        assert _feasible_at(vectors, res.value.hi, 2) is not None  # feasible above

    def test_tight_set_nonempty(self, fib):
        res = min_displacement_on_simplex(fib["rose"], fib["phi"])
        assert res.tight


class TestThickness:
    def test_unit_rose(self, fib):
        X = fib["rose"]  # covolume 1, shortest loop 1/2
        assert is_thick(X, Fraction(2, 5))
        assert not is_thick(X, Fraction(1, 2))

    def test_short_edge_breaks_thickness(self, fib):
        X = fib["rose"].with_lengths([Fraction(1, 1000), Fraction(999, 1000)])
        assert not is_thick(X, Fraction(1, 10))

    def test_lolli_paper_value(self, lolli):
        # l(a)/vol = (1/3)/(2/3) = 1/2 > 0.49
        assert is_thick(lolli["Xn"], Fraction(49, 100))
        assert systole(lolli["Xn"]) == Fraction(1, 3)

    def test_candidate_systole_vs_brute_force(self, fib, lolli):
        for X in (fib["rose"], fib["theta"], lolli["Xn"]):
            sys_c = systole(X)
            words = enumerate_cyclic_words(X.fs, 8)
            sys_b = min(X.translation_length(g) for g in words
                        if X.translation_length(g) > 0)
            assert sys_c == sys_b
