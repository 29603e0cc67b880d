from fractions import Fraction

import pytest

from outerspace.freeprod import identity_automorphism
from outerspace.fixtures import swap_auto
from outerspace.lipschitz import (displacement, min_displacement_on_simplex,
                                  points_equal, sym_distance)
from outerspace.minset import (CapExceeded, HypothesisViolation, NotInAtlas,
                               distance_to_inverse_minset, explore, lambda_min,
                               locate, simplicial_path, spectrum)

GOLDEN = Fraction(16180339887498948482, 10**19)


@pytest.fixture(scope="module")
def atlas(fib):
    return explore(fib["phi"], fib["rose"], cap_simplices=500)


@pytest.fixture(scope="module")
def atlas_inv(fib):
    return explore(fib["phi"].inverse(), fib["rose"], cap_simplices=500)


class TestLambdaMin:
    def test_identity(self, fib):
        lam = lambda_min(identity_automorphism(fib["fs"]), fib["rose"])
        assert lam.lo == lam.hi == 1

    def test_fib(self, fib):
        lam = lambda_min(fib["phi"], fib["rose"])
        assert lam.lo < GOLDEN < lam.hi and lam.width() <= Fraction(1, 10**9)

    def test_fib_inverse(self, fib):
        lam = lambda_min(fib["phi"].inverse(), fib["rose"])
        assert lam.lo < GOLDEN < lam.hi


class TestExplore:
    def test_identity_refused(self, fib):
        with pytest.raises(HypothesisViolation):
            explore(identity_automorphism(fib["fs"]), fib["rose"])

    def test_swap_refused(self, fib):
        with pytest.raises(HypothesisViolation):
            explore(swap_auto(fib["fs"]), fib["rose"])

    def test_terminates_with_finite_domain(self, atlas):
        assert atlas.complete
        assert 0 < len(atlas.fundamental_domain) < 10**4

    def test_frontier_property(self, atlas):
        lam = atlas.lam
        for e in atlas.entries.values():
            if e.status == "rejected":
                assert e.lam.lo > lam.hi  # certified strictly above the minimum
            else:
                assert e.lam.lo <= lam.hi  # meets lambda(phi)

    def test_identifications_within_power_cap(self, atlas):
        for key, rep, k in atlas.identifications:
            assert 0 < abs(k) <= 4
            assert atlas.entries[rep].orbit_rep is None

    def test_identification_witnesses(self, fib, atlas):
        phi = fib["phi"]
        for key, rep, k in atlas.identifications:
            X = atlas.entries[key].point
            R = atlas.entries[rep].point
            assert points_equal(X, R.twist(phi.power(k))) is not None

    def test_inverse_atlas_same_orbit_count(self, atlas, atlas_inv):
        assert len(atlas.fundamental_domain) == len(atlas_inv.fundamental_domain)

    def test_cap_exceeded_partial(self, fib):
        with pytest.raises(CapExceeded) as exc:
            explore(fib["phi"], fib["rose"], cap_simplices=2)
        assert len(exc.value.atlas.entries) == 2

    def test_interior_simplices_contain_min_points(self, fib, atlas):
        phi = fib["phi"]
        for e in atlas.interior_entries():
            lam = displacement(e.point.with_lengths(e.minimizer), phi)
            assert lam <= atlas.lam.hi + Fraction(1, 10**9)


class TestSpectrum:
    def test_fib_spectrum(self, fib, atlas):
        vals = spectrum(fib["phi"], Fraction(22, 10), atlas)
        assert vals, "spectrum must be non-empty"
        assert vals[0].intersects(atlas.lam)
        for a, b in zip(vals, vals[1:]):
            assert a.separated_from(b)

    def test_empty_below_lambda(self, fib, atlas):
        vals = spectrum(fib["phi"], atlas.lam.lo - Fraction(1, 100), atlas)
        assert vals == []


class TestSimplicialPath:
    def test_trivial(self, atlas):
        X = atlas.train_track.point
        assert len(simplicial_path(atlas, X, X)) == 1

    def test_rose_to_theta(self, atlas):
        X = atlas.train_track.point
        theta = next(e for e in atlas.interior_entries() if e.point.sk.num_edges == 3)
        path = simplicial_path(atlas, X, theta.point)
        assert len(path) >= 2

    def test_not_in_atlas(self, fib, atlas, lolli):
        with pytest.raises(NotInAtlas):
            locate(atlas, fib["rose"].with_lengths([Fraction(1, 100),
                                                    Fraction(99, 100)]))


class TestInverseDistance:
    def test_symmetric_fixture_distance_one(self, fib):
        Y, D, _ = distance_to_inverse_minset(fib["rose"], swap_auto(fib["fs"]))
        assert D == 1

    def test_golden_rose(self, fib, fib_tt):
        Y, D, _ = distance_to_inverse_minset(fib_tt.point, fib["phi"])
        # lands on the inverse's golden rose; D = golden^2, finite and exact
        assert Fraction(26, 10) < D < Fraction(262, 100)

    def test_from_every_representative(self, fib, atlas):
        ds = []
        for key in atlas.fundamental_domain:
            e = atlas.entries[key]
            X = e.point.with_lengths(e.minimizer)
            Y, D, _ = distance_to_inverse_minset(X, fib["phi"])
            ds.append(D)
        assert max(ds) < 10
