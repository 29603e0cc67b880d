"""Attracting and repelling tree length functions with certified error.

From a train-track point X for phi with growth lambda > 1, the attracting
tree's translation length of g is the limit of l_X(phi^n g)/lambda^n.  The
telescoping estimate of the stable map gives the two-sided certificate

    a_n - n_g vol(X) / lambda^n  <=  l_inf(g)  <=  a_n,

where n_g is the number of edges of g's reduced loop in X.  Intervals shrink
geometrically and all arithmetic is exact on the pessimal endpoints.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

from .candidates import candidate_elements
from .freeprod import FPAutomorphism, FreeProductWord, conjugacy_key, enumerate_cyclic_words
from .lipschitz import CertifiedValue
from .marked_graph import MarkedGraph
from .traintrack import GraphMap, NotExpanding, TrainTrack, bcc_bound, find_train_track, pf_enclosure


@dataclass
class LimitLengthFunction:
    """Certified-interval length function of the attracting tree of phi at X."""

    point: MarkedGraph
    map: GraphMap
    phi: FPAutomorphism
    lam: CertifiedValue
    max_loop_edges: int = 200000
    _cache: dict = field(default_factory=dict)

    @staticmethod
    def from_train_track(tt: TrainTrack, phi: FPAutomorphism,
                         lam_tol=Fraction(1, 10**30)) -> "LimitLengthFunction":
        lam, _ = pf_enclosure(tt.matrix, tol=lam_tol)
        if lam.lo <= 1:
            raise NotExpanding("attracting tree needs lambda > 1")
        return LimitLengthFunction(point=tt.point, map=tt.map, phi=phi, lam=lam)

    def length(self, g: FreeProductWord, tol=Fraction(1, 10**6),
               check_rate=None, sign_threshold=None) -> CertifiedValue:
        """Certified enclosure of the attracting-tree translation length of g.

        check_rate, when given, receives (n, a_n interval, error bound) per
        refinement step so callers can assert the contraction rate.  With
        sign_threshold set, refinement stops as soon as the lower bound is
        positive or the upper bound drops below the threshold (enough to
        classify the class for the discreteness dichotomy)."""
        tol = Fraction(tol)
        key = (conjugacy_key(g), tol, sign_threshold)
        if key in self._cache:
            return self._cache[key]
        X = self.point
        from .freeprod import EllipticElement
        try:
            loop = X.loop_of(g)
        except EllipticElement:
            iv = CertifiedValue.exact(0)  # elliptic classes have zero length
            self._cache[key] = iv
            return iv
        n_g = loop.edge_count()
        B = X.volume()  # BCC bound of the stable map X -> X_inf
        lam_lo, lam_hi = self.lam.lo, self.lam.hi
        pow_lo, pow_hi = Fraction(1), Fraction(1)
        best: Optional[CertifiedValue] = None
        prev_an = None
        n = 0
        vec = None  # edge-count vector, once the loop iterate is fully legal
        from .traintrack import transition_matrix
        M = transition_matrix(self.map)
        E = X.sk.num_edges
        while True:
            if vec is None:
                ell = X.loop_length(loop)
            else:
                ell = sum(vec[i] * X.lengths[i] for i in range(E))
            an = CertifiedValue(ell / pow_hi, ell / pow_lo) if n else CertifiedValue.exact(ell)
            bound = n_g * B / pow_lo
            iv = CertifiedValue(max(Fraction(0), an.lo - bound), an.hi)
            best = iv if best is None else CertifiedValue(max(best.lo, iv.lo),
                                                          min(best.hi, iv.hi))
            if check_rate is not None:
                check_rate(n, an, bound, prev_an)
            prev_an = an
            if best.width() <= tol:
                break
            if sign_threshold is not None and (best.lo > 0 or best.hi < sign_threshold):
                break
            if vec is None and self.map.count_illegal_turns(loop) == 0:
                # legal loops never cancel: lengths evolve by the transition matrix
                vec = [0] * E
                for _, e in loop.steps:
                    vec[abs(e) - 1] += 1
            if vec is not None:
                vec = [sum(vec[i] * M[i][j] for i in range(E)) for j in range(E)]
            else:
                if len(loop.steps) > self.max_loop_edges:
                    break  # return the certified (wider) interval we have
                loop = self.map.map_loop(loop)
            n += 1
            pow_lo *= lam_lo
            pow_hi *= lam_hi
        self._cache[key] = best
        return best


def attracting_length(llf: LimitLengthFunction, g: FreeProductWord,
                      tol=Fraction(1, 10**6)) -> CertifiedValue:
    return llf.length(g, tol)


def stretch_to_limit(Y: MarkedGraph, llf: LimitLengthFunction,
                     tol=Fraction(1, 10**6)) -> CertifiedValue:
    """Lambda(Y, X_inf) as an interval: max over candidates of Y of the ratio
    of the certified limit length to the Y-length."""
    best = None
    for g in candidate_elements(Y):
        iv = llf.length(g, tol)
        ly = Y.translation_length(g)
        r = iv.scale(Fraction(1) / ly)
        best = r if best is None else CertifiedValue(max(best.lo, r.lo), max(best.hi, r.hi))
    return best


@dataclass
class HomothetyReport:
    factor: CertifiedValue
    checked: int
    passed: int
    failures: list


def homothety_check(llf_x: LimitLengthFunction, llf_y: LimitLengthFunction,
                    sample, tol=Fraction(1, 10**6)) -> HomothetyReport:
    """The attracting tree from X equals Lambda(Y, X_inf) times the one from Y:
    verify interval membership on every sampled class."""
    factor = stretch_to_limit(llf_y.point, llf_x, tol)
    failures = []
    passed = 0
    for g in sample:
        ix = llf_x.length(g, tol)
        iy = llf_y.length(g, tol)
        scaled = factor * iy
        if ix.intersects(scaled):
            passed += 1
        else:
            failures.append((g, ix, iy, scaled))
    return HomothetyReport(factor=factor, checked=len(sample), passed=passed,
                           failures=failures)


def twist_invariance_gap(llf: LimitLengthFunction, g: FreeProductWord,
                         tol=Fraction(1, 10**6)) -> bool:
    """l_inf(phi g) = lambda l_inf(g), within the combined interval widths."""
    a = llf.length(llf.phi.apply(g), tol)
    b = llf.length(g, tol)
    return a.intersects(llf.lam * b)


@dataclass
class DiscretenessReport:
    epsilon: Optional[Fraction]
    zero_classes: int
    positive_classes: int
    violations: list
    cap: int
    zero_max_upper: Fraction = Fraction(0)  # separation margin of the zero branch

    def to_dict(self):
        return {"epsilon_empirical": None if self.epsilon is None else float(self.epsilon),
                "zero_classes": self.zero_classes,
                "positive_classes": self.positive_classes,
                "zero_branch_max_upper": float(self.zero_max_upper),
                "violations": len(self.violations),
                "length_cap": self.cap}


def discreteness_scan(phi: FPAutomorphism, llf_pos: LimitLengthFunction,
                      llf_neg: LimitLengthFunction, length_cap: int = 8,
                      tol=Fraction(1, 10**4)) -> DiscretenessReport:
    """Over all classes up to the syllable cap: either both limit lengths
    contain zero, or the max of the lower bounds is positive; the minimum of
    those positive bounds is the empirical discreteness constant."""
    fs = llf_pos.point.fs
    eps = None
    zero = positive = 0
    zero_max_upper = Fraction(0)
    violations = []
    for g in enumerate_cyclic_words(fs, length_cap):
        ip = llf_pos.length(g, tol, sign_threshold=tol)
        im = llf_neg.length(g, tol, sign_threshold=tol)
        both_zero = ip.lo == 0 and im.lo == 0
        max_lower = max(ip.lo, im.lo)
        if max_lower > 0:
            positive += 1
            eps = max_lower if eps is None else min(eps, max_lower)
        elif both_zero:
            zero += 1
            zero_max_upper = max(zero_max_upper, min(ip.hi, im.hi))
        else:
            violations.append((g, ip, im))
    return DiscretenessReport(epsilon=eps, zero_classes=zero,
                              positive_classes=positive, violations=violations,
                              cap=length_cap, zero_max_upper=zero_max_upper)
