import random
from fractions import Fraction

import pytest

from outerspace.freeprod import FPAutomorphism, identity_automorphism
from outerspace.fixtures import fib_rose, fib_system, swap_auto
from outerspace.lipschitz import displacement
from outerspace.marked_graph import DecoratedPath
from outerspace.traintrack import (FEWER_ILLEGAL, INCONCLUSIVE, LONG_LEGAL,
                                   PPNP_SPLITTING, GraphMap, NotExpanding,
                                   ReducibleDetected, ReducibleMatrix,
                                   TrainTrackFailure, ZeroMatrix, bcc_bound,
                                   bcc_measured, build_map, critical_constant,
                                   cylinder_decomposition, detect_ppnp,
                                   find_train_track, grow_check, is_irreducible,
                                   is_primitive, is_train_track, lip_power,
                                   mat_mul, pf_enclosure, random_decorated_path,
                                   ratio_legal_check, transition_matrix,
                                   transition_matrix_power, trichotomy,
                                   verify_nielsen)

GOLDEN = Fraction(16180339887498948482, 10**19)


def illegal_image_auto(fs):
    """a -> a b^-1, b -> a: its rose representative sends an edge across the
    illegal turn, so it is not train track (constructed violation fixture)."""
    a, b = fs.letter(1), fs.letter(2)
    return FPAutomorphism(fs, [a * b.inverse(), a],
                          [], [b, a.inverse() * b], [])


class TestBuildMap:
    def test_identity(self, fib):
        f = build_map(fib["rose"], identity_automorphism(fib["fs"]))
        assert f.stretches() == (1, 1)
        assert f.edge_images[1].edges == (1,) and f.edge_images[2].edges == (2,)

    def test_fib_images(self, fib):
        f = build_map(fib["rose"], fib["phi"])
        assert f.edge_images[1].edges == (2,)
        assert f.edge_images[2].edges == (1, 2)

    def test_fib_inverse_images(self, fib):
        f = build_map(fib["rose"], fib["phi"].inverse())
        assert f.edge_images[1].edges == (2, -1)
        assert f.edge_images[2].edges == (1,)

    def test_represents_automorphism(self, fib):
        f = build_map(fib["rose"], fib["phi"])
        assert f.inner_witness is not None  # verified on construction


class TestTensionGraph:
    def test_identity_all_edges(self, fib):
        f = build_map(fib["rose"], identity_automorphism(fib["fs"]))
        assert f.tension_graph() == (1, 2)

    def test_fib_unit_rose(self, fib):
        f = build_map(fib["rose"], fib["phi"])
        assert f.stretches() == (1, 2)
        assert f.tension_graph() == (2,) and f.lip() == 2

    def test_golden_rose_nearly_uniform(self, fib_tt):
        s = fib_tt.map.stretches()
        assert abs(s[0] - s[1]) < Fraction(1, 10**8)


class TestGates:
    def test_identity_discrete(self, fib):
        f = build_map(fib["rose"], identity_automorphism(fib["fs"]))
        one, inf = f.gate_structures()
        assert len({inf[g] for g in inf}) == 4  # all four germs separate

    def test_fib_illegal_turn(self, fib_tt):
        f = fib_tt.map
        # the unique illegal turn is {a-bar, b-bar}
        assert not f.turn_is_legal((-1, 0), (-2, 0))
        assert f.turn_is_legal((1, 0), (2, 0))
        assert f.turn_is_legal((1, 0), (-2, 0))

    def test_collapsed_edge_germ_joins_surviving_gate(self, fibz2):
        # the segment collapses under the natural map; its germs pick up the
        # gate of the surviving image direction through iteration
        f = build_map(fibz2["zlolli"], fibz2["phi"])
        assert not f.edge_images[1].edges  # collapsed
        one, inf = f.gate_structures()
        assert inf  # structure still computed


class TestIsTrainTrack:
    def test_golden_rose(self, fib_tt):
        ok, witness = is_train_track(fib_tt.map)
        assert ok and witness is None

    def test_identity(self, fib):
        f = build_map(fib["rose"], identity_automorphism(fib["fs"]))
        assert is_train_track(f)[0]

    def test_constructed_violation(self, fib):
        psi = illegal_image_auto(fib["fs"])
        f = build_map(fib["rose"], psi)
        ok, witness = is_train_track(f)
        assert not ok
        assert witness[0] == "illegal-image-turn"


class TestTransitionMatrices:
    def test_fib(self, fib):
        f = build_map(fib["rose"], fib["phi"])
        M = transition_matrix(f)
        assert M == ((0, 1), (1, 1))
        assert is_irreducible(M) and is_primitive(M)
        pf, vec = pf_enclosure(M, tol=Fraction(1, 10**9))
        assert pf.contains(GOLDEN) or (pf.lo < GOLDEN < pf.hi)
        assert vec[0].lo < Fraction(382, 1000) < vec[0].hi or \
            vec[0].lo < Fraction(3819660113, 10**10) < vec[0].hi

    def test_identity_not_primitive(self, fib):
        f = build_map(fib["rose"], identity_automorphism(fib["fs"]))
        M = transition_matrix(f)
        assert M == ((1, 0), (0, 1))
        assert not is_irreducible(M) and not is_primitive(M)
        pf, _ = pf_enclosure(M)
        assert pf.lo == pf.hi == 1

    def test_imprimitive_blocks(self, imprim):
        f = build_map(imprim["rose4"], imprim["auto"])
        M = transition_matrix(f)
        assert is_irreducible(M) and not is_primitive(M)

    def test_zero_matrix(self):
        with pytest.raises(ZeroMatrix):
            pf_enclosure(((0,),))

    def test_pf_bounds_monotone(self):
        M = ((0, 1), (1, 1))
        n = len(M)
        x = [Fraction(1)] * n
        prev_lo, prev_hi = None, None
        for _ in range(15):
            Mx = [sum(M[i][j] * x[j] for j in range(n)) for i in range(n)]
            lo = min(Mx[i] / x[i] for i in range(n))
            hi = max(Mx[i] / x[i] for i in range(n))
            if prev_lo is not None:
                assert lo >= prev_lo and hi <= prev_hi
            prev_lo, prev_hi = lo, hi
            s = sum(Mx[i] + x[i] for i in range(n))
            x = [(Mx[i] + x[i]) / s for i in range(n)]


class TestFindTrainTrack:
    def test_fib_three_steps(self, fib, fib_tt):
        assert fib_tt.steps <= 3
        assert is_train_track(fib_tt.map)[0]
        lam = displacement(fib_tt.point, fib["phi"])
        assert fib_tt.pf.lo - Fraction(1, 10**9) <= lam <= fib_tt.pf.hi + Fraction(1, 10**9)

    def test_identity_immediate(self, fib):
        tt = find_train_track(fib["rose"], identity_automorphism(fib["fs"]))
        assert tt.pf.lo == tt.pf.hi == 1 and tt.steps == 1

    def test_fib_inverse_also_golden(self, fib_tt_inv):
        assert fib_tt_inv.pf.lo < GOLDEN < fib_tt_inv.pf.hi

    def test_from_theta_start(self, fib):
        tt = find_train_track(fib["theta"], fib["phi"], budget=40)
        assert tt.pf.lo < GOLDEN < tt.pf.hi

    def test_fibz2_collapses_inessential_forest(self, fibz2):
        tt = find_train_track(fibz2["zlolli"], fibz2["phi"], budget=30)
        assert tt.point.sk.num_edges == 2
        assert tt.pf.lo < GOLDEN < tt.pf.hi


class TestBCC:
    def test_isometric_swap_zero(self, fib):
        f = build_map(fib["rose"], swap_auto(fib["fs"]))
        assert bcc_measured(f, samples=100) == 0

    def test_measured_below_bound(self, fib_tt, fib_tt_inv, imprim):
        from outerspace.traintrack import find_train_track as ftt
        maps = [fib_tt.map, fib_tt_inv.map]
        maps.append(ftt(imprim["rose4"], imprim["auto"]).map)
        for f in maps:
            assert bcc_measured(f, samples=100) <= bcc_bound(f)

    def test_golden_rose_bound_is_lip_minus_one(self, fib_tt):
        f = fib_tt.map
        assert bcc_bound(f) == f.lip() * f.domain.volume() - f.domain.volume()

    def test_critical_constant_two(self, fib_tt):
        # cc = 2 (lam - 1) / (lam - 1) = 2 at co-volume one
        assert critical_constant(fib_tt.map) == 2

    def test_cc_requires_expansion(self, fib):
        f = build_map(fib["rose"], swap_auto(fib["fs"]))
        with pytest.raises(NotExpanding):
            critical_constant(f)

    def test_cc_powers_dominated(self, fib, fib_tt):
        cc1 = critical_constant(fib_tt.map)
        for n in (2, 3, 4):
            fn = build_map(fib_tt.point, fib["phi"].power(n))
            assert critical_constant(fn) <= cc1 + Fraction(1, 10**6)


class TestIteratePaths:
    def test_legal_growth_rate(self, fib_tt):
        f = fib_tt.map
        lo, hi = min(f.stretches()), max(f.stretches())
        p = DecoratedPath(0, (0, 0), (1,))
        for n in range(1, 5):
            q = f.iterate_path(p, n)
            assert f.is_legal(q)
            L = f.path_length(q) / f.domain.lengths[0]
            assert lo ** n <= L <= hi ** n

    def test_illegal_turn_path_iterates(self, fib_tt):
        f = fib_tt.map
        # a . b-bar crosses {a-bar, b-bar}? the turn of (1, -2) is {-1, -2}: illegal
        p = DecoratedPath(0, (0, 0, 0), (1, -2))
        assert f.count_illegal_turns(p) == 1
        lengths = [f.path_length(f.iterate_path(p, n)) for n in range(5)]
        assert all(x > 0 for x in lengths)

    def test_grow_lemma_sweep(self, fib_tt):
        rng = random.Random(14)
        for _ in range(50):
            p = random_decorated_path(fib_tt.point, rng, rng.randrange(4, 14))
            assert grow_check(fib_tt.map, p, rng.randrange(1, 7))

    def test_lip_powers_multiplicative(self, fib_tt):
        f = fib_tt.map
        for n in range(1, 7):
            lp = lip_power(f, n)
            assert fib_tt.pf.pow(n).lo - Fraction(1, 10**6) <= lp \
                <= fib_tt.pf.pow(n).hi + Fraction(1, 10**6)

    def test_matrix_multiplicativity(self, fib_tt):
        M = transition_matrix(fib_tt.map)
        assert transition_matrix_power(fib_tt.map, 2) == mat_mul(M, M)
        assert transition_matrix_power(fib_tt.map, 3) == mat_mul(mat_mul(M, M), M)


class TestNielsenPaths:
    def test_identity_fixed_edge(self, fib):
        f = build_map(fib["rose"], identity_automorphism(fib["fs"]))
        cert = detect_ppnp(f, DecoratedPath(0, (0, 0), (1,)), 3)
        assert cert is not None and cert.kind() == "Np"
        assert cert.n == 1 and cert.m == 0 and cert.translator.is_identity()
        assert verify_nielsen(f, cert)

    def test_swap_period_two(self, fib):
        f = build_map(fib["rose"], swap_auto(fib["fs"]))
        cert = detect_ppnp(f, DecoratedPath(0, (0, 0), (1,)), 4)
        assert cert is not None and cert.n == 2 and cert.m == 0
        assert verify_nielsen(f, cert)

    def test_fib_vertex_path_scan(self, fib_tt):
        # the classical golden INP has edge-interior endpoints; no 2-edge
        # vertex path is pre-periodic (recorded against hand analysis)
        f = fib_tt.map
        found = []
        for e1 in (1, -1, 2, -2):
            for e2 in (1, -1, 2, -2):
                if e2 == -e1:
                    continue
                c = detect_ppnp(f, DecoratedPath(0, (0, 0, 0), (e1, e2)), 6)
                if c is not None:
                    found.append(c)
        assert found == []

    def test_commutator_loop_periodicity(self, fib, fib_tt):
        # phi([a,b]) = [a,b]^-1: the axis is an f-periodic line (ppNp chain)
        fs = fib["fs"]
        a, b = fs.letter(1), fs.letter(2)
        comm = a * b * a.inverse() * b.inverse()
        assert fib["phi"].apply(comm) == comm.inverse()


class TestTrichotomy:
    def test_requires_expanding_train_track(self, fib):
        f = build_map(fib["rose"], swap_auto(fib["fs"]))
        from outerspace.traintrack import NotTrainTrack
        with pytest.raises(NotTrainTrack):
            trichotomy(f, DecoratedPath(0, (0, 0), (1,)))

    def test_legal_loop_long_legal(self, fib, fib_tt):
        fs = fib["fs"]
        L = fib_tt.point.loop_of(fs.letter(1) * fs.letter(2))
        r = trichotomy(fib_tt.map, L)
        assert r.outcome == LONG_LEGAL

    def test_commutator_splits(self, fib, fib_tt):
        fs = fib["fs"]
        a, b = fs.letter(1), fs.letter(2)
        L = fib_tt.point.loop_of(a * b * a.inverse() * b.inverse())
        r = trichotomy(fib_tt.map, L)
        assert r.outcome == PPNP_SPLITTING

    def test_constants_reported(self, fib_tt):
        from outerspace.traintrack import trichotomy_constants
        c = trichotomy_constants(fib_tt.map)
        assert c.M0 > 1 and c.m == (c.M0 ** 2 + c.M0) ** 2
        assert c.M == 5 * c.N ** 2 + c.N
        assert c.Qm_capped  # the true m is astronomically large


class TestCylinders:
    def test_fib_single_block(self, fib_tt):
        c = cylinder_decomposition(fib_tt.map)
        assert c.period == 1 and len(c.blocks) == 1

    def test_imprim_two_blocks(self, imprim):
        tt = find_train_track(imprim["rose4"], imprim["auto"], budget=20)
        c = cylinder_decomposition(tt.map)
        assert c.period == 2 and len(c.blocks) == 2
        assert sorted(c.block_permutation) == [0, 1] and c.block_permutation[0] != 0
        assert c.power_positive == 2
        for block_wits in c.witnesses:
            for edges, word in block_wits:
                from outerspace.freeprod import is_hyperbolic
                assert is_hyperbolic(word)

    def test_reducible_rejected(self, fib):
        f = build_map(fib["rose"], identity_automorphism(fib["fs"]))
        with pytest.raises(ReducibleMatrix):
            cylinder_decomposition(f)


class TestRatioLegal:
    def test_vacuous_at_n_zero(self, fib, fib_tt_inv):
        fs = fib["fs"]
        r = ratio_legal_check(fib_tt_inv.map, fib["rose"], fib["phi"],
                              fs.letter(2), 0, Fraction(3, 2))
        assert not r["antecedent"] and r["holds"]

    def test_fib_b_n8(self, fib, fib_tt_inv):
        fs = fib["fs"]
        r = ratio_legal_check(fib_tt_inv.map, fib_tt_inv.point, fib["phi"].inverse(),
                              fs.letter(2), 8, Fraction(3, 2))
        assert r["holds"]

    def test_sweep(self, fib, fib_tt_inv):
        fs = fib["fs"]
        rng = random.Random(15)
        from outerspace.freeprod import enumerate_cyclic_words
        pool = enumerate_cyclic_words(fs, 5)
        for _ in range(50):
            g = rng.choice(pool)
            n = rng.randrange(0, 11)
            r = ratio_legal_check(fib_tt_inv.map, fib_tt_inv.point,
                                  fib["phi"].inverse(), g, n, Fraction(3, 2))
            assert r["holds"]
