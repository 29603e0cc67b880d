"""Stretch factors, displacement, thickness, point equality, and exact
minimization of the displacement over a simplex by LP-feasibility bisection."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

from .candidates import candidate_elements, shape_vector
from .freeprod import FPAutomorphism, FreeProductWord, inner_conjugator
from .marked_graph import MarkedGraph
from .rational_lp import feasible_point, solve_lp, OPTIMAL


@dataclass(frozen=True)
class CertifiedValue:
    """Exact rational enclosure [lo, hi] of a (possibly irrational) value."""

    lo: Fraction
    hi: Fraction

    def __post_init__(self):
        if self.lo > self.hi:
            raise ValueError("empty interval")

    @staticmethod
    def exact(x) -> "CertifiedValue":
        x = Fraction(x)
        return CertifiedValue(x, x)

    def width(self) -> Fraction:
        return self.hi - self.lo

    def midpoint(self) -> Fraction:
        return (self.lo + self.hi) / 2

    def contains(self, x) -> bool:
        return self.lo <= Fraction(x) <= self.hi

    def intersects(self, other: "CertifiedValue") -> bool:
        return self.lo <= other.hi and other.lo <= self.hi

    def separated_from(self, other: "CertifiedValue") -> bool:
        return not self.intersects(other)

    def scale(self, c) -> "CertifiedValue":
        c = Fraction(c)
        if c >= 0:
            return CertifiedValue(self.lo * c, self.hi * c)
        return CertifiedValue(self.hi * c, self.lo * c)

    def __mul__(self, other: "CertifiedValue") -> "CertifiedValue":
        vals = [self.lo * other.lo, self.lo * other.hi, self.hi * other.lo,
                self.hi * other.hi]
        return CertifiedValue(min(vals), max(vals))

    def pow(self, n: int) -> "CertifiedValue":
        out = CertifiedValue.exact(1)
        for _ in range(n):
            out = out * self
        return out

    def hull(self, other: "CertifiedValue") -> "CertifiedValue":
        return CertifiedValue(min(self.lo, other.lo), max(self.hi, other.hi))

    def __repr__(self) -> str:
        return f"[{float(self.lo):.12g}, {float(self.hi):.12g}]"


# ---------------------------------------------------------------------------
# stretch factors
# ---------------------------------------------------------------------------

def stretch(X: MarkedGraph, Y: MarkedGraph) -> Fraction:
    """Lambda(X, Y) = max over candidates of X of length-ratio, exact."""
    best = None
    for g in candidate_elements(X):
        r = Y.translation_length(g) / X.translation_length(g)
        if best is None or r > best:
            best = r
    if best is None:
        raise ValueError("no candidates (degenerate simplex)")
    return best


def stretch_witness(X: MarkedGraph, Y: MarkedGraph):
    best, wit = None, None
    for g in candidate_elements(X):
        r = Y.translation_length(g) / X.translation_length(g)
        if best is None or r > best:
            best, wit = r, g
    return best, wit


def sym_distance(X: MarkedGraph, Y: MarkedGraph) -> Fraction:
    """D(X, Y) = Lambda(X,Y) Lambda(Y,X); scale invariant, 1 iff same point up
    to homothety."""
    return stretch(X, Y) * stretch(Y, X)


def displacement(X: MarkedGraph, phi: FPAutomorphism) -> Fraction:
    """lambda_phi(X) = Lambda(X, X.phi) = max over candidates of
    l_X(phi g) / l_X(g)."""
    best = None
    for g in candidate_elements(X):
        r = X.translation_length(phi.apply(g)) / X.translation_length(g)
        if best is None or r > best:
            best = r
    return best


def displacement_witness(X: MarkedGraph, phi: FPAutomorphism):
    best, wit = None, None
    for g in candidate_elements(X):
        r = X.translation_length(phi.apply(g)) / X.translation_length(g)
        if best is None or r > best:
            best, wit = r, g
    return best, wit


def is_thick(X: MarkedGraph, eps) -> bool:
    """Thick iff every candidate loop (hence the systole) has l/vol > eps."""
    eps = Fraction(eps)
    vol = X.volume()
    return all(X.translation_length(g) / vol > eps for g in candidate_elements(X))


def systole(X: MarkedGraph) -> Fraction:
    return min(X.translation_length(g) for g in candidate_elements(X))


# ---------------------------------------------------------------------------
# point equality
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PointEquality:
    scale: Fraction             # other = scale * self metrically
    conjugator: Optional[FreeProductWord]  # inner witness when extractable


def points_equal(X: MarkedGraph, Y: MarkedGraph) -> Optional[PointEquality]:
    """Equality in outer space, decided exactly: after volume normalization the
    two candidate stretch factors are both 1 iff the points coincide
    (translation length functions separate points, and candidates realise the
    sup).  Returns a witness or None."""
    if X.fs is not Y.fs:
        return None
    sx, sy = X.volume(), Y.volume()
    Xn, Yn = X.rescale(1 / sx), Y.rescale(1 / sy)
    if stretch(Xn, Yn) != 1 or stretch(Yn, Xn) != 1:
        return None
    conj = None
    if X.sk is Y.sk or (X.sk.labels == Y.sk.labels and X.sk.edge_ends == Y.sk.edge_ends):
        conj = inner_conjugator(X.fs, change_of_marking(X, Y))
    return PointEquality(scale=sy / sx, conjugator=conj)


def change_of_marking(X: MarkedGraph, Y: MarkedGraph) -> dict:
    """For structurally identical skeletons: the endomorphism images
    g |-> eval_Y(marking_X(g)), usable for the inner-conjugator witness."""
    fs = X.fs
    images = {}
    for j in range(1, fs.free_rank + 1):
        images[fs.letter(j)] = Y.value(X.letters[j - 1])
    for i in range(1, fs.num_groups + 1):
        p, lab, iso = X.groups[i - 1]
        v = X.sk.end(p)
        for m in fs.group_elements(i, nontrivial=True):
            loop = X.sk.concat(p, X.sk.trivial_path(v, iso[m]), X.sk.reverse(p))
            images[fs.vertex(i, m)] = Y.value(loop)
    return images


# ---------------------------------------------------------------------------
# exact minimization of displacement over a simplex
# ---------------------------------------------------------------------------

@dataclass
class MinSimplexResult:
    value: CertifiedValue
    lengths: tuple              # a feasible metric within `tol` of the optimum
    tight: tuple                # candidates attaining >= value.lo at `lengths`
    interior: bool              # whether the returned metric is interior


class EmptySimplex(ValueError):
    pass


def _feasible_at(vectors, t: Fraction, nvars: int, interior: bool = False):
    """Feasibility of {l >= 0, sum l = 1, (w - t u) . l <= 0 per candidate};
    with interior=True, maximize the minimum coordinate instead."""
    A_ub = []
    b_ub = []
    for u, w in vectors:
        A_ub.append([w[i] - t * u[i] for i in range(nvars)])
        b_ub.append(Fraction(0))
    A_eq = [[Fraction(1)] * nvars]
    b_eq = [Fraction(1)]
    if not interior:
        x = feasible_point(A_ub, b_ub, A_eq, b_eq, nvars)
        return x
    # variables (l, s): maximize s subject to s - l_i <= 0
    A2 = [row + [Fraction(0)] for row in A_ub]
    b2 = list(b_ub)
    for i in range(nvars):
        r = [Fraction(0)] * (nvars + 1)
        r[i] = Fraction(-1)
        r[nvars] = Fraction(1)
        A2.append(r)
        b2.append(Fraction(0))
    Aeq2 = [[Fraction(1)] * nvars + [Fraction(0)]]
    c = [Fraction(0)] * nvars + [Fraction(1)]
    status, x, val = solve_lp(c, A2, b2, Aeq2, b_eq)
    if status != OPTIMAL:
        return None, None
    return x[:nvars], val


def min_displacement_on_simplex(X: MarkedGraph, phi: FPAutomorphism,
                                tol=Fraction(1, 10**12)) -> MinSimplexResult:
    """Certified enclosure of lambda_phi(Delta(X)) with a witness metric.

    Every candidate g contributes the linear constraint
    (shape_vector(phi g) - t shape_vector(g)) . lengths <= 0; feasibility in t
    is monotone, so exact-LP bisection encloses the infimum.
    """
    tol = Fraction(tol)
    cands = candidate_elements(X)
    if not cands:
        raise EmptySimplex("simplex carries no candidates")
    nv = X.sk.num_edges
    vectors = []
    for g in cands:
        u = shape_vector(X, g)
        w = shape_vector(X, phi.apply(g))
        vectors.append((tuple(Fraction(x) for x in u), tuple(Fraction(x) for x in w)))
    center = X.center()
    hi = displacement(center, phi)
    witness = tuple(center.lengths)
    lo = Fraction(0)
    assert _feasible_at(vectors, lo, nv) is None, "t=0 must be infeasible"
    while hi - lo > tol:
        mid = (lo + hi) / 2
        x = _feasible_at(vectors, mid, nv)
        if x is None:
            lo = mid
        else:
            hi = mid
            witness = tuple(x)
    pt, smin = _feasible_at(vectors, hi, nv, interior=True)
    interior = False
    if pt is not None and smin is not None and smin > 0:
        witness = tuple(pt)
        interior = True
    tight = []
    for g, (u, w) in zip(cands, vectors):
        num = sum(wi * li for wi, li in zip(w, witness))
        den = sum(ui * li for ui, li in zip(u, witness))
        if den > 0 and num >= lo * den:
            tight.append(g)
    return MinSimplexResult(value=CertifiedValue(lo, hi), lengths=witness,
                            tight=tuple(tight), interior=interior)


# ---------------------------------------------------------------------------
# brute-force oracles (test harness; exponents capped at +-1, see ledger)
# ---------------------------------------------------------------------------

def brute_force_stretch(X: MarkedGraph, Y: MarkedGraph, max_syllables: int):
    """sup of l_Y/l_X over all enumerated cyclically reduced words; returns
    (value, witness)."""
    from .freeprod import enumerate_cyclic_words
    best, wit = None, None
    for g in enumerate_cyclic_words(X.fs, max_syllables):
        lx = X.translation_length(g)
        if lx == 0:
            continue
        r = Y.translation_length(g) / lx
        if best is None or r > best:
            best, wit = r, g
    return best, wit


def brute_force_displacement(X: MarkedGraph, phi: FPAutomorphism, max_syllables: int):
    from .freeprod import enumerate_cyclic_words
    best, wit = None, None
    for g in enumerate_cyclic_words(X.fs, max_syllables):
        lx = X.translation_length(g)
        if lx == 0:
            continue
        r = X.translation_length(phi.apply(g)) / lx
        if best is None or r > best:
            best, wit = r, g
    return best, wit
