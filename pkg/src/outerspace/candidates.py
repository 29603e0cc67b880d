"""Candidate loops of a simplex: the finite family of conjugacy classes on
which every stretch factor out of the simplex is realised.

Underlying shapes are the five embedded types -- simple loop, figure eight,
barbell, simply degenerate barbell (loop + arc into a non-free vertex) and
doubly degenerate barbell (arc joining two non-free vertices).  On top of each
shape, every assignment of vertex-group decorations along the walk gives a
candidate element; the degenerate ends must carry non-trivial elements.  The
list depends only on the simplex, not on the metric.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction

from .freeprod import EllipticElement, FreeProductWord, conjugacy_key, is_hyperbolic
from .marked_graph import DecoratedPath, MarkedGraph

KIND_O = "O"
KIND_8 = "FIGURE8"
KIND_BARBELL = "BARBELL"
KIND_DEGEN = "DEGEN_BARBELL"
KIND_DOUBLE_DEGEN = "DOUBLE_DEGEN_BARBELL"


@dataclass(frozen=True)
class CandidateShape:
    kind: str
    walk: tuple          # signed edges of the closed walk
    transition_vector: tuple
    elements: tuple      # realizing group words


def _cycle_key(cycle: tuple, sk) -> tuple:
    def norm(c):
        return min(tuple(c[i:] + c[:i]) for i in range(len(c)))
    rev = tuple(-e for e in reversed(cycle))
    return min(norm(cycle), norm(rev))


def simple_cycles(sk) -> list:
    """Embedded cycles as signed edge tuples, one per rotation/reversal class."""
    out = {}
    for start in range(sk.num_vertices):
        stack = [((), start, frozenset())]
        while stack:
            path, v, visited = stack.pop()
            for e in sk.germs(v):
                if path and abs(e) == abs(path[-1]) and e == -path[-1]:
                    continue
                if any(abs(e) == abs(f) for f in path):
                    continue
                w = sk.term(e)
                if w == start and path is not None:
                    cyc = path + (e,)
                    out[_cycle_key(cyc, sk)] = cyc
                    continue
                if w in visited or w == start or w < start:
                    continue
                stack.append((path + (e,), w, visited | {v}))
    return sorted(out.values())


def simple_arcs(sk, u: int, w: int, avoid: frozenset) -> list:
    """Embedded arcs u -> w with internal vertices outside `avoid` and distinct."""
    if u == w:
        return []
    arcs = []
    stack = [((), u, frozenset({u}))]
    while stack:
        path, v, visited = stack.pop()
        for e in sk.germs(v):
            t = sk.term(e)
            if t == w:
                arcs.append(path + (e,))
                continue
            if t in visited or t in avoid or t == u:
                continue
            stack.append((path + (e,), t, visited | {t}))
    return sorted(arcs)


def _walk_vertices(sk, walk: tuple) -> list:
    return [sk.init(e) for e in walk]


def _rotate_to(cycle: tuple, sk, v: int) -> tuple:
    for i, e in enumerate(cycle):
        if sk.init(e) == v:
            return cycle[i:] + cycle[:i]
    raise ValueError("vertex not on cycle")


def _shape_walks(X: MarkedGraph):
    """All underlying closed walks, each tagged with kind and forced decorations:
    (kind, edges, {position: forced-nontrivial-vertex}).  Positions index the
    cyclic vertex slots of the walk (before edge i)."""
    sk = X.sk
    cycles = simple_cycles(sk)
    nonfree = [v for v in range(sk.num_vertices) if sk.labels[v] is not None]
    walks = []
    for c in cycles:
        walks.append((KIND_O, c, {}))
    for c1, c2 in itertools.combinations(cycles, 2):
        v1 = set(_walk_vertices(sk, c1))
        v2 = set(_walk_vertices(sk, c2))
        e1 = {abs(e) for e in c1}
        e2 = {abs(e) for e in c2}
        if e1 & e2:
            continue
        shared = v1 & v2
        if len(shared) == 1:
            v = shared.pop()
            a = _rotate_to(c1, sk, v)
            b = _rotate_to(c2, sk, v)
            walks.append((KIND_8, a + b, {}))
            walks.append((KIND_8, a + tuple(-e for e in reversed(b)), {}))
        elif not shared:
            for p in sorted(v1):
                for q in sorted(v2):
                    for arc in simple_arcs(sk, p, q, frozenset((v1 | v2) - {p, q})):
                        if any(abs(e) in e1 | e2 for e in arc):
                            continue
                        a = _rotate_to(c1, sk, p)
                        b = _rotate_to(c2, sk, q)
                        rarc = tuple(-e for e in reversed(arc))
                        walks.append((KIND_BARBELL, a + arc + b + rarc, {}))
                        walks.append((KIND_BARBELL,
                                      a + arc + tuple(-e for e in reversed(b)) + rarc, {}))
    for c in cycles:
        cv = set(_walk_vertices(sk, c))
        for p in sorted(cv):
            for q in nonfree:
                if q in cv:
                    continue
                for arc in simple_arcs(sk, p, q, frozenset(cv - {p})):
                    if any(abs(e) in {abs(x) for x in c} for e in arc):
                        continue
                    a = _rotate_to(c, sk, p)
                    rarc = tuple(-e for e in reversed(arc))
                    walk = a + arc + rarc
                    walks.append((KIND_DEGEN, walk, {len(a) + len(arc): q}))
    for p, q in itertools.combinations(nonfree, 2):
        for arc in simple_arcs(sk, p, q, frozenset()):
            rarc = tuple(-e for e in reversed(arc))
            walks.append((KIND_DOUBLE_DEGEN, arc + rarc, {0: p, len(arc): q}))
    return walks


def _decorated_words(X: MarkedGraph, walk: tuple, forced: dict) -> list:
    """All candidate words over one walk: decorations range over the vertex
    group at each non-free slot, non-trivial at the forced slots."""
    sk, fs = X.sk, X.fs
    verts = _walk_vertices(sk, walk)
    n = len(walk)
    options = []
    for i in range(n):
        j = sk.labels[verts[i]]
        if j is None:
            options.append((0,))
        elif i in forced:
            options.append(tuple(fs.group_elements(j, nontrivial=True)))
        else:
            options.append(tuple(fs.group_elements(j)))
    start = verts[0]
    access = X.treepath(X.basepoint, start)
    back = X.sk.reverse(access)
    words = []
    for decs in itertools.product(*options):
        loop = DecoratedPath(start, tuple(decs) + (0,), walk)
        based = sk.concat(access, loop, back)
        words.append(X.value(based))
    return words


def candidate_shapes(X: MarkedGraph) -> list:
    """CandidateShape records for the simplex of X (metric-independent)."""
    out = []
    seen = set()
    for kind, walk, forced in _shape_walks(X):
        elems = []
        for w in _decorated_words(X, walk, forced):
            key = conjugacy_key(w, up_to_inversion=True)
            if key in seen:
                continue
            seen.add(key)
            elems.append(w)
        if not elems:
            continue
        vec = [0] * X.sk.num_edges
        for e in walk:
            vec[abs(e) - 1] += 1
        out.append(CandidateShape(kind, walk, tuple(vec), tuple(sorted(elems, key=lambda g: g.sort_key()))))
    return out


def candidate_elements(X: MarkedGraph) -> list:
    """The finite candidate list of the simplex, deduplicated up to conjugacy
    and inversion, in a deterministic order."""
    if X._candidates_cache is None:
        elems = [g for s in candidate_shapes(X) for g in s.elements]
        X._candidates_cache = sorted(elems, key=lambda g: g.sort_key())
    return list(X._candidates_cache)


def shape_vector(X: MarkedGraph, g: FreeProductWord) -> tuple:
    """Edge-orbit occurrence counts of the reduced loop of g; the translation
    length is exactly this vector dotted with any metric on the simplex."""
    loop = X.loop_of(g)  # raises EllipticElement when g is elliptic
    vec = [0] * X.sk.num_edges
    for _, e in loop.steps:
        vec[abs(e) - 1] += 1
    return tuple(vec)
