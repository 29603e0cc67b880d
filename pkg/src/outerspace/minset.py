"""Exploration of the simplicial structure of the minimally displaced set:
worklist BFS over collapses and blow-ups, orbit identification under the
cyclic group of the automorphism, fundamental domain extraction, displacement
spectrum, and the distance to the inverse's Min-set."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

from .freeprod import FPAutomorphism
from .lipschitz import (CertifiedValue, min_displacement_on_simplex, points_equal,
                        stretch, sym_distance)
from .marked_graph import MarkedGraph, MarkedGraphError
from .traintrack import (TrainTrack, find_train_track, pf_enclosure,
                         ReducibleDetected, TrainTrackFailure)


class HypothesisViolation(ValueError):
    """The theorem hypothesis lambda(phi) > 1 fails (no exponential growth)."""


class NotInAtlas(KeyError):
    pass


class CapExceeded(RuntimeError):
    def __init__(self, atlas, message="exploration cap exceeded"):
        super().__init__(message)
        self.atlas = atlas


@dataclass
class SimplexEntry:
    key: str
    point: MarkedGraph          # canonical representative (uniform metric)
    lam: CertifiedValue         # lambda_phi of the simplex
    status: str                 # "interior" | "rejected"
    orbit_rep: Optional[str]    # key of the orbit representative
    power: int                  # k with this simplex == rep . phi^k
    minimizer: Optional[tuple] = None
    tight: tuple = ()


@dataclass
class MinSetAtlas:
    lam: CertifiedValue                    # lambda(phi)
    entries: dict = field(default_factory=dict)
    adjacency: list = field(default_factory=list)   # (key_from, key_to, kind)
    identifications: list = field(default_factory=list)  # (key, rep_key, power)
    fundamental_domain: list = field(default_factory=list)
    complete: bool = False
    train_track: Optional[TrainTrack] = None

    def interior_entries(self):
        return [e for e in self.entries.values() if e.status == "interior"]

    def rejected_entries(self):
        return [e for e in self.entries.values() if e.status == "rejected"]

    def to_dict(self) -> dict:
        from .serialize import interval_to_json
        return {
            "lambda": interval_to_json(self.lam),
            "complete": self.complete,
            "fundamental_domain": sorted(self.fundamental_domain),
            "simplices": {
                k: {"status": e.status,
                    "lambda_simplex": interval_to_json(e.lam),
                    "orbit_rep": e.orbit_rep, "power": e.power,
                    "edges": e.point.sk.num_edges,
                    "vertices": e.point.sk.num_vertices}
                for k, e in sorted(self.entries.items())
            },
            "adjacency": sorted((a[:60], b[:60], kind) for a, b, kind in self.adjacency),
            "identifications": sorted((k[:60], r[:60], p) for k, r, p in self.identifications),
        }


def lambda_min(phi: FPAutomorphism, X0: MarkedGraph, tol=Fraction(1, 10**9)) -> CertifiedValue:
    """lambda(phi) as the PF enclosure of a train-track representative."""
    tt = find_train_track(X0, phi, tol=tol)
    value, _ = pf_enclosure(tt.matrix, tol=tol)
    return value


def _forest_subsets(X: MarkedGraph):
    """Candidate collapse forests: non-empty edge subsets with no cycle and at
    most one non-free vertex per component."""
    import itertools
    sk = X.sk
    out = []
    edges = list(range(1, sk.num_edges + 1))
    for r in range(1, sk.num_edges):
        for combo in itertools.combinations(edges, r):
            par = list(range(sk.num_vertices))

            def find(a):
                while par[a] != a:
                    par[a] = par[par[a]]
                    a = par[a]
                return a

            ok = True
            for e in combo:
                u, v = sk.edge_ends[e - 1]
                ru, rv = find(u), find(v)
                if ru == rv:
                    ok = False
                    break
                par[ru] = rv
            if not ok:
                continue
            seen = {}
            for v in range(sk.num_vertices):
                if sk.labels[v] is not None:
                    r0 = find(v)
                    if r0 in seen:
                        ok = False
                        break
                    seen[r0] = v
            if ok:
                out.append(combo)
    return out


def neighbors(X: MarkedGraph):
    """All one-step simplicial neighbors: finitary-forest collapses and
    one-edge blow-ups, tagged by move kind."""
    out = []
    for F in _forest_subsets(X):
        try:
            out.append((X.collapse_forest(F), "collapse"))
        except MarkedGraphError:
            continue
    for v in range(X.sk.num_vertices):
        for B in X.blow_ups(v):
            out.append((B, "blow-up"))
    return out


def explore(phi: FPAutomorphism, X0: MarkedGraph, cap_simplices: int = 10000,
            cap_power: int = 4, tol=Fraction(1, 10**12),
            refine=Fraction(1, 10**30)) -> MinSetAtlas:
    """Worklist BFS of the Min-set's simplices modulo <phi>.

    Every admitted simplex has a displacement enclosure meeting lambda(phi);
    every frontier simplex is either identified with an explored one via some
    phi^k (|k| <= cap_power) or certified to have strictly larger displacement.
    """
    tol = Fraction(tol)
    refine = Fraction(refine)
    tt = find_train_track(X0, phi)
    lam, _ = pf_enclosure(tt.matrix, tol=refine)
    if lam.lo <= 1:
        raise HypothesisViolation(
            "explorer requires lambda(phi) > 1 (co-compactness hypothesis)")
    atlas = MinSetAtlas(lam=lam, train_track=tt)
    powers = {k: phi.power(k) for k in range(-cap_power, cap_power + 1) if k != 0}
    start = tt.point.center()
    worklist = [(start, None, None)]
    while worklist:
        X, from_key, kind = worklist.pop(0)
        key = X.simplex_key()
        if key in atlas.entries:
            if from_key is not None:
                atlas.adjacency.append((from_key, key, kind))
            continue
        if len(atlas.entries) >= cap_simplices:
            raise CapExceeded(atlas)
        res = min_displacement_on_simplex(X, phi, tol=tol)
        value = res.value
        if value.lo > lam.hi:
            atlas.entries[key] = SimplexEntry(key, X, value, "rejected", None, 0)
            if from_key is not None:
                atlas.adjacency.append((from_key, key, kind))
            continue
        if not value.intersects(lam):
            # ambiguous gap; refine before deciding
            res = min_displacement_on_simplex(X, phi, tol=refine)
            value = res.value
            if value.lo > lam.hi:
                atlas.entries[key] = SimplexEntry(key, X, value, "rejected", None, 0)
                if from_key is not None:
                    atlas.adjacency.append((from_key, key, kind))
                continue
        rep_key, power = None, 0
        for k in sorted(powers, key=abs):
            matched = False
            for e in atlas.interior_entries():
                if e.orbit_rep is not None:
                    continue
                if points_equal(X, e.point.twist(powers[k])) is not None:
                    rep_key, power = e.key, k
                    matched = True
                    break
            if matched:
                break
        entry = SimplexEntry(key, X, value, "interior", rep_key, power,
                             minimizer=res.lengths, tight=res.tight)
        atlas.entries[key] = entry
        if from_key is not None:
            atlas.adjacency.append((from_key, key, kind))
        if rep_key is not None:
            atlas.identifications.append((key, rep_key, power))
            continue
        for N, nkind in neighbors(X):
            worklist.append((N.center(), key, nkind))
    atlas.fundamental_domain = [e.key for e in atlas.interior_entries()
                                if e.orbit_rep is None]
    atlas.complete = True
    return atlas


def spectrum(phi: FPAutomorphism, C, atlas: MinSetAtlas,
             sep=Fraction(1, 10**12), refine=Fraction(1, 10**30)) -> list:
    """Distinct simplex-displacement values <= C over the atlas, as pairwise
    separated enclosures (discreteness witness at desk scale)."""
    C = Fraction(C)
    values = []
    for e in atlas.entries.values():
        if e.lam.lo <= C:
            values.append((e.lam, e.point))
    values.sort(key=lambda t: t[0].lo)
    refined = []
    for iv, pt in values:
        if iv.width() > sep:
            iv = min_displacement_on_simplex(pt, phi, tol=refine).value
        refined.append(iv)
    refined.sort(key=lambda iv: iv.lo)
    out = []
    for iv in refined:
        if iv.lo > C:
            continue
        if out and out[-1].intersects(iv):
            out[-1] = out[-1].hull(iv)  # same value after refinement
        else:
            out.append(iv)
    return out


def locate(atlas: MinSetAtlas, X: MarkedGraph) -> str:
    cx = X.center()
    for key, e in atlas.entries.items():
        if points_equal(cx, e.point) is not None:
            return key
    raise NotInAtlas("point's simplex is not in the atlas")


def simplicial_path(atlas: MinSetAtlas, X: MarkedGraph, Y: MarkedGraph) -> list:
    """BFS path through atlas adjacency between the simplices of X and Y;
    returns the simplex keys along the way (simplicial length = len - 1)."""
    kx, ky = locate(atlas, X), locate(atlas, Y)
    if kx == ky:
        return [kx]
    adj = {}
    for a, b, _ in atlas.adjacency:
        adj.setdefault(a, set()).add(b)
        adj.setdefault(b, set()).add(a)
    prev = {kx: None}
    queue = [kx]
    while queue:
        u = queue.pop(0)
        if u == ky:
            break
        for w in sorted(adj.get(u, ())):
            if w not in prev:
                prev[w] = u
                queue.append(w)
    if ky not in prev:
        raise NotInAtlas("no path inside the explored atlas")
    path = [ky]
    while prev[path[-1]] is not None:
        path.append(prev[path[-1]])
    return list(reversed(path))


def distance_to_inverse_minset(X: MarkedGraph, phi: FPAutomorphism,
                               budget: int = 60):
    """Run the train-track search for phi^-1 from X; report the landing point
    and the symmetrized distance."""
    tt = find_train_track(X, phi.inverse(), budget=budget)
    Y = tt.point
    D = sym_distance(X, Y)
    return Y, D, tt
