"""The bundled property suite: every module's spec invariants as named checks,
runnable from the CLI (`check-invariants`) and from the test-suite."""

from __future__ import annotations

import random
from fractions import Fraction

from . import fixtures as FX
from .candidates import candidate_elements, shape_vector
from .freeprod import enumerate_cyclic_words, is_hyperbolic, normalize
from .lipschitz import (brute_force_stretch, displacement, is_thick,
                        min_displacement_on_simplex, points_equal, stretch,
                        sym_distance)
from .limits import LimitLengthFunction
from .marked_graph import MarkedGraph
from .traintrack import (bcc_bound, bcc_measured, build_map, critical_constant,
                         find_train_track, grow_check, is_train_track, lip_power,
                         mat_mul, pf_enclosure, transition_matrix,
                         transition_matrix_power)


def random_word(fs, rng: random.Random, syllables: int = 6):
    pool = enumerate_cyclic_words(fs, 1)
    parts = [rng.choice(pool) for _ in range(rng.randrange(1, syllables + 1))]
    out = fs.identity()
    for p in parts:
        out = out * p
    return out


def random_metric(X: MarkedGraph, rng: random.Random) -> MarkedGraph:
    lengths = [Fraction(rng.randrange(1, 30), rng.randrange(1, 30)) for _ in X.lengths]
    return X.with_lengths(lengths)


def _fib():
    fs = FX.fib_system()
    return fs, FX.fib_auto(fs), FX.fib_rose(fs=fs)


def check_normalize_algebra(trials: int = 1000):
    fs = FX.lolli_system()
    rng = random.Random(1)
    for _ in range(trials):
        u, v = random_word(fs, rng), random_word(fs, rng)
        uv = u * v
        if normalize(fs, uv.syllables) != uv:
            return False, "normalize not idempotent"
        if uv != normalize(fs, u.syllables + v.syllables):
            return False, "normalize not multiplicative"
    return True, f"{trials} random pairs"


def check_hyperbolic_conjugation(trials: int = 200):
    fs = FX.lolli_system()
    rng = random.Random(2)
    for _ in range(trials):
        g, w = random_word(fs, rng), random_word(fs, rng)
        if is_hyperbolic(g) != is_hyperbolic(w * g * w.inverse()):
            return False, f"conjugation changed type of {g!r}"
    return True, f"{trials} random conjugates"


def check_automorphism_multiplicative(trials: int = 200):
    fs, phi, _ = _fib()
    rng = random.Random(3)
    for _ in range(trials):
        u, v = random_word(fs, rng), random_word(fs, rng)
        if phi.apply(u * v) != phi.apply(u) * phi.apply(v):
            return False, "phi(uv) != phi(u)phi(v)"
    return True, f"{trials} random products"


def check_compose_inverse_identity(trials: int = 100):
    fs, phi, _ = _fib()
    comp = phi.compose(phi.inverse())
    rng = random.Random(4)
    for _ in range(trials):
        u = random_word(fs, rng)
        if comp.apply(u) != u:
            return False, "phi o phi^-1 is not the identity"
    return True, f"{trials} random words"


def check_collapse_lengths(trials: int = 100):
    fs = FX.fib_system()
    T = FX.fib_theta(fs=fs)
    rng = random.Random(5)
    for F in ([1], [2], [3]):
        C = T.collapse_forest(F)
        for _ in range(trials // 3):
            g = random_word(fs, rng)
            vec = None
            try:
                vec = shape_vector(T, g)
            except Exception:
                continue
            zeroed = sum(vec[i] * (Fraction(0) if i + 1 in F else T.lengths[i])
                         for i in range(3))
            if C.translation_length(g) != zeroed:
                return False, f"length mismatch after collapse for {g!r}"
    return True, "theta collapses, exact lengths with zeros"


def check_blowup_roundtrip():
    fs = FX.lolli_system()
    X = FX.circle_point(fs=fs)
    count = 0
    for B in X.blow_ups(0):
        C = B.collapse_forest([B.symbolic_edge])
        if points_equal(C, X) is None:
            return False, "blow-up round trip failed"
        count += 1
    R = FX.fib_rose()
    for B in R.blow_ups(0):
        if points_equal(B.collapse_forest([B.symbolic_edge]), R) is None:
            return False, "rose blow-up round trip failed"
        count += 1
    return True, f"{count} expansions round-tripped"


def check_scaling(trials: int = 50):
    fs, _, R = _fib()
    rng = random.Random(6)
    c = Fraction(3, 7)
    Rc = R.rescale(c)
    for _ in range(trials):
        g = random_word(fs, rng)
        if Rc.translation_length(g) != c * R.translation_length(g):
            return False, "lengths do not scale"
    if Rc.volume() != c * R.volume():
        return False, "volume does not scale"
    return True, f"{trials} random classes"


def check_candidate_linearity(metrics: int = 50):
    fs, phi, R = _fib()
    rng = random.Random(7)
    cands = candidate_elements(R)
    vecs = {g: shape_vector(R, g) for g in cands}
    for _ in range(metrics):
        Y = random_metric(R, rng)
        for g in cands:
            expect = sum(v * L for v, L in zip(vecs[g], Y.lengths))
            if Y.translation_length(g) != expect:
                return False, "candidate length is not linear in the metric"
    return True, f"{metrics} random metrics"


def check_triangle_inequality(trials: int = 100):
    fs, _, R = _fib()
    T = FX.fib_theta(fs=fs)
    rng = random.Random(8)
    pts = [R, T]
    for _ in range(trials):
        X = random_metric(rng.choice(pts), rng)
        Q = random_metric(rng.choice(pts), rng)
        Y = random_metric(rng.choice(pts), rng)
        if stretch(X, Y) > stretch(X, Q) * stretch(Q, Y):
            return False, "triangle inequality failed"
    return True, f"{trials} random triples"


def check_covolume_one_separation(trials: int = 30):
    fs, phi, R = _fib()
    rng = random.Random(9)
    for _ in range(trials):
        X = random_metric(R, rng).normalized()
        Y = random_metric(R, rng).normalized()
        s = stretch(X, Y)
        if s < 1:
            return False, "Lambda < 1 on covolume-1 points"
        if (s == 1 and stretch(Y, X) == 1) != (points_equal(X, Y) is not None):
            return False, "Lambda = 1 inconsistent with equality"
    return True, f"{trials} random covolume-1 pairs"


def check_equivariance(trials: int = 20):
    fs, phi, R = _fib()
    T = FX.fib_theta(fs=fs)
    rng = random.Random(10)
    for _ in range(trials):
        X = random_metric(R, rng)
        Y = random_metric(T, rng)
        if stretch(X, Y) != stretch(X.twist(phi), Y.twist(phi)):
            return False, "the action is not by Lambda-isometries"
    return True, f"{trials} twisted pairs"


def check_min_simplex_certificates():
    fs, phi, R = _fib()
    res = min_displacement_on_simplex(R, phi, tol=Fraction(1, 10**9))
    golden = Fraction(1618033988749894848, 10**18)
    if not (res.value.lo < golden < res.value.hi):
        return False, "rose enclosure misses the golden ratio"
    lam = displacement(R.with_lengths(res.lengths), phi)
    if lam > res.value.hi:
        return False, "witness metric exceeds the upper bound"
    return True, f"enclosure width {float(res.value.width()):.2e}"


def check_lip_powers(n: int = 6):
    fs, phi, R = _fib()
    tt = find_train_track(R, phi)
    lam = tt.pf
    for k in range(1, n + 1):
        lp = lip_power(tt.map, k)
        lo, hi = lam.pow(k).lo, lam.pow(k).hi
        slack = Fraction(1, 10**6)
        if not (lo - slack <= lp <= hi + slack):
            return False, f"Lip(f^{k}) escapes lambda^{k}"
    return True, f"n <= {n} on the golden rose"


def check_bcc_and_cc():
    fs, phi, R = _fib()
    tt = find_train_track(R, phi)
    f = tt.map
    if bcc_measured(f, samples=100) > bcc_bound(f):
        return False, "measured BCC exceeds the bound"
    fsw = build_map(R, FX.swap_auto(fs))
    if bcc_measured(fsw, samples=100) != 0:
        return False, "isometric swap has positive measured BCC"
    cc1 = critical_constant(f)
    for k in (2, 3, 4):
        fk = build_map(tt.point, phi.power(k))
        if critical_constant(fk) > cc1 + Fraction(1, 10**6):
            return False, f"cc(f^{k}) > cc(f)"
    return True, "bcc/cc inequalities on FIB"


def check_grow_lemma(trials: int = 50):
    fs, phi, R = _fib()
    tt = find_train_track(R, phi)
    rng = random.Random(11)
    from .traintrack import random_decorated_path
    applied = 0
    for _ in range(trials):
        p = random_decorated_path(tt.point, rng, rng.randrange(4, 14))
        n = rng.randrange(1, 7)
        if not grow_check(tt.map, p, n):
            return False, "growth inequality failed"
        applied += 1
    return True, f"{applied} seeded paths"


def check_matrix_multiplicativity():
    fs, phi, R = _fib()
    tt = find_train_track(R, phi)
    M = transition_matrix(tt.map)
    if transition_matrix_power(tt.map, 2) != mat_mul(M, M):
        return False, "M_{f^2} != M_f^2 on FIB"
    F = FX.bundled_fixture("IMPRIM")
    tt2 = find_train_track(F["points"]["rose4"], F["autos"]["imprim"])
    M2 = transition_matrix(tt2.map)
    if transition_matrix_power(tt2.map, 2) != mat_mul(M2, M2):
        return False, "M_{f^2} != M_f^2 on IMPRIM"
    return True, "train-track matrices multiply"


def check_limit_scale_equivariance():
    fs, phi, R = _fib()
    tt = find_train_track(R, phi)
    llf = LimitLengthFunction.from_train_track(tt, phi)
    c = Fraction(5, 3)
    Xc = tt.point.rescale(c)
    f2 = build_map(Xc, phi)
    from .limits import LimitLengthFunction as LLF
    llf2 = LLF(point=Xc, map=f2, phi=phi, lam=llf.lam)
    a = fs.letter(1)
    i1 = llf.length(a, Fraction(1, 10**7)).scale(c)
    i2 = llf2.length(a, Fraction(1, 10**7))
    if not i1.intersects(i2):
        return False, "limit lengths do not scale with the point"
    return True, "rescaled point, intersecting intervals"


def check_atlas_phi_invariance():
    fs, phi, R = _fib()
    from .minset import explore
    atlas = explore(phi, R, cap_simplices=50)
    e = atlas.entries[atlas.fundamental_domain[0]]
    v1 = min_displacement_on_simplex(e.point, phi, tol=Fraction(1, 10**9)).value
    v2 = min_displacement_on_simplex(e.point.twist(phi), phi, tol=Fraction(1, 10**9)).value
    if not v1.intersects(v2):
        return False, "displacement is not phi-invariant on simplices"
    return True, "representative simplex and its twist agree"


ALL_CHECKS = [
    ("normalize-algebra", check_normalize_algebra),
    ("hyperbolic-conjugation-invariant", check_hyperbolic_conjugation),
    ("automorphism-multiplicative", check_automorphism_multiplicative),
    ("compose-inverse-identity", check_compose_inverse_identity),
    ("collapse-lengths-exact", check_collapse_lengths),
    ("blowup-roundtrip", check_blowup_roundtrip),
    ("length-scaling", check_scaling),
    ("candidate-linearity", check_candidate_linearity),
    ("triangle-inequality", check_triangle_inequality),
    ("covolume-one-separation", check_covolume_one_separation),
    ("action-by-isometries", check_equivariance),
    ("min-simplex-certified", check_min_simplex_certificates),
    ("lip-powers", check_lip_powers),
    ("bcc-cc-inequalities", check_bcc_and_cc),
    ("growth-lemma", check_grow_lemma),
    ("matrix-multiplicativity", check_matrix_multiplicativity),
    ("limit-scale-equivariance", check_limit_scale_equivariance),
    ("atlas-phi-invariance", check_atlas_phi_invariance),
]


def run_all():
    results = []
    for name, fn in ALL_CHECKS:
        try:
            ok, detail = fn()
        except Exception as exc:  # a crash is a failure, not an abort
            ok, detail = False, f"exception: {exc}"
        results.append({"name": name, "pass": bool(ok), "detail": str(detail)})
    return results
