"""Marked metric graphs of groups: points of the relative outer space of a
free factor system.

A point is a finite connected graph whose non-free vertices carry the finite
vertex groups (one vertex per group), with positive rational edge lengths and
a marking: an identification of the ambient free product with the fundamental
group, stored as a decorated loop per free letter and a connecting path plus
table isomorphism per vertex group.  Every point also carries the data of the
inverse identification (a spanning tree, a group word per non-tree edge and a
conjugated embedding per non-free vertex), which is verified on construction:
evaluating the marking loop of every generator must return that generator.

Translation lengths, volume and the simplicial moves (collapse of a finitary
forest, one-edge blow-ups, marking twist by an automorphism, subdivide+fold)
all live here.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterable, Optional, Sequence

from .freeprod import (EllipticElement, FPAutomorphism, FreeFactorSystem,
                       FreeLetter, FreeProductWord, VertexElement,
                       inner_conjugator, is_hyperbolic, cyclic_reduce)


class MarkedGraphError(ValueError):
    pass


class FaceAtInfinity(MarkedGraphError):
    """Collapsing the forest would merge two non-free vertices."""


class NonPositiveScale(ValueError):
    pass


@dataclass(frozen=True)
class DecoratedPath:
    """Edge path with vertex-group decorations.

    decorations[i] sits at the i-th vertex of the path (0 at free vertices);
    there are len(edges)+1 of them.  Edges are signed ids: +e traverses edge e
    forwards, -e backwards.
    """

    start: int
    decorations: tuple
    edges: tuple

    def __post_init__(self):
        if len(self.decorations) != len(self.edges) + 1:
            raise MarkedGraphError("path needs one decoration per vertex position")

    def is_trivial(self) -> bool:
        return not self.edges and self.decorations[0] == 0


@dataclass(frozen=True)
class DecoratedLoop:
    """Cyclically reduced loop: steps (decoration-before-edge, edge), cyclic."""

    steps: tuple

    def edge_count(self) -> int:
        return len(self.steps)

    def canonical(self) -> tuple:
        n = len(self.steps)
        if n == 0:
            return ()
        return min(tuple(self.steps[i:] + self.steps[:i]) for i in range(n))


class Skeleton:
    """Graph combinatorics plus vertex labels; no metric, no marking."""

    def __init__(self, fs: FreeFactorSystem, labels: Sequence[Optional[int]],
                 edge_ends: Sequence[tuple]):
        self.fs = fs
        self.labels = tuple(labels)
        self.edge_ends = tuple((int(u), int(v)) for u, v in edge_ends)
        self.num_vertices = len(self.labels)
        self.num_edges = len(self.edge_ends)
        for u, v in self.edge_ends:
            if not (0 <= u < self.num_vertices and 0 <= v < self.num_vertices):
                raise MarkedGraphError("edge endpoint out of range")

    # -- incidence -----------------------------------------------------------
    def init(self, e: int) -> int:
        return self.edge_ends[e - 1][0] if e > 0 else self.edge_ends[-e - 1][1]

    def term(self, e: int) -> int:
        return self.init(-e)

    def label(self, v: int) -> Optional[int]:
        return self.labels[v]

    def valence(self, v: int) -> int:
        return sum(1 for e in self.germs(v))

    def germs(self, v: int) -> list:
        out = []
        for e in range(1, self.num_edges + 1):
            if self.init(e) == v:
                out.append(e)
            if self.init(-e) == v:
                out.append(-e)
        return out

    def free_rank(self) -> int:
        return self.num_edges - (self.num_vertices - 1)

    def is_connected(self) -> bool:
        if self.num_vertices == 0:
            return False
        seen = {0}
        stack = [0]
        while stack:
            v = stack.pop()
            for e in self.germs(v):
                w = self.term(e)
                if w not in seen:
                    seen.add(w)
                    stack.append(w)
        return len(seen) == self.num_vertices

    # -- decoration arithmetic -------------------------------------------------
    def dec_mul(self, v: int, a: int, b: int) -> int:
        if a == 0:
            return b
        if b == 0:
            return a
        j = self.labels[v]
        if j is None:
            raise MarkedGraphError(f"non-trivial decoration at free vertex {v}")
        return self.fs.group_mul(j, a, b)

    def dec_inv(self, v: int, a: int) -> int:
        if a == 0:
            return 0
        j = self.labels[v]
        return self.fs.group_inv(j, a)

    # -- path algebra ------------------------------------------------------------
    def check_path(self, p: DecoratedPath) -> None:
        cur = p.start
        for i, e in enumerate(p.edges):
            if self.init(e) != cur:
                raise MarkedGraphError("path edges do not chain")
            cur = self.term(e)
        verts = self.path_vertices(p)
        for v, d in zip(verts, p.decorations):
            if d != 0:
                j = self.labels[v]
                if j is None or not (0 < d < self.fs.group_order(j)):
                    raise MarkedGraphError("decoration invalid at its vertex")

    def path_vertices(self, p: DecoratedPath) -> list:
        verts = [p.start]
        for e in p.edges:
            verts.append(self.term(e))
        return verts

    def end(self, p: DecoratedPath) -> int:
        return self.path_vertices(p)[-1]

    def trivial_path(self, v: int, dec: int = 0) -> DecoratedPath:
        return DecoratedPath(v, (dec,), ())

    def reverse(self, p: DecoratedPath) -> DecoratedPath:
        verts = self.path_vertices(p)
        decs = tuple(self.dec_inv(v, d) for v, d in zip(reversed(verts),
                                                        reversed(p.decorations)))
        return DecoratedPath(verts[-1], decs, tuple(-e for e in reversed(p.edges)))

    def concat(self, *paths: DecoratedPath) -> DecoratedPath:
        if not paths:
            raise MarkedGraphError("empty concat")
        decs: list = [0]
        edges: list = []
        cur_end = paths[0].start
        for q in paths:
            if q.start != cur_end:
                raise MarkedGraphError("concat endpoints differ")
            decs[-1] = self.dec_mul(q.start, decs[-1], q.decorations[0])
            decs.extend(q.decorations[1:])
            edges.extend(q.edges)
            cur_end = self.term(q.edges[-1]) if q.edges else q.start
        return DecoratedPath(paths[0].start, tuple(decs), tuple(edges))

    def reduce_path(self, p: DecoratedPath) -> DecoratedPath:
        """Cancel (e, trivial decoration, -e) backtracks until none remain."""
        decs = [p.decorations[0]]
        edges: list = []
        for e, d in zip(p.edges, p.decorations[1:]):
            if edges and edges[-1] == -e and decs[-1] == 0:
                # backtrack (-e, trivial, e): both neighbours sit at term(e)
                edges.pop()
                decs.pop()
                decs[-1] = self.dec_mul(self.term(e), decs[-1], d)
            else:
                edges.append(e)
                decs.append(d)
        return DecoratedPath(p.start, tuple(decs), tuple(edges))

    def cyclic_loop(self, p: DecoratedPath):
        """Cyclically reduced loop class of a based loop.

        Returns (DecoratedLoop, residual) where residual is the leftover
        decoration for edge-free (elliptic) classes, else 0.
        """
        if self.end(p) != p.start:
            raise MarkedGraphError("not a based loop")
        p = self.reduce_path(p)
        edges = p.edges
        decs = p.decorations
        base = p.start
        i, j = 0, len(edges)  # active window: edges[i:j], decorations decs[i:j+1]
        while j - i >= 2 and edges[j - 1] == -edges[i] \
                and self.dec_mul(base, decs[j], decs[i]) == 0:
            base = self.term(edges[i])
            i += 1
            j -= 1
        if i >= j:
            return DecoratedLoop(()), decs[i]
        wrap = self.dec_mul(base, decs[j], decs[i])
        steps = [(wrap, edges[i])] + [(decs[k], edges[k]) for k in range(i + 1, j)]
        return DecoratedLoop(tuple(steps)), 0


def _check_iso(fs: FreeFactorSystem, src: int, dst: int, iso: Sequence[int]) -> None:
    n = fs.group_order(src)
    if fs.group_order(dst) != n or sorted(iso) != list(range(n)) or iso[0] != 0:
        raise MarkedGraphError("marking group map is not a bijection fixing 1")
    for a in range(n):
        for b in range(n):
            if iso[fs.group_mul(src, a, b)] != fs.group_mul(dst, iso[a], iso[b]):
                raise MarkedGraphError("marking group map is not a homomorphism")


class MarkedGraph:
    """A point of the relative outer space.  Immutable after construction."""

    def __init__(self, skeleton: Skeleton, lengths: Sequence[Fraction], basepoint: int,
                 letters: Sequence[DecoratedPath],
                 groups: Sequence[tuple],
                 tree_edges: Iterable[int],
                 omega: dict,
                 kappa: dict,
                 name: str = "",
                 relaxed: bool = False):
        self.sk = skeleton
        self.fs = skeleton.fs
        self.lengths = tuple(Fraction(x) for x in lengths)
        self.basepoint = int(basepoint)
        self.letters = tuple(skeleton.reduce_path(p) for p in letters)
        self.groups = tuple((skeleton.reduce_path(p), int(lab), tuple(iso))
                            for p, lab, iso in groups)
        self.tree_edges = frozenset(int(e) for e in tree_edges)
        self.omega = {int(e): w for e, w in omega.items()}
        self.kappa = {int(j): (u, int(i), tuple(iso)) for j, (u, i, iso) in kappa.items()}
        self.name = name
        self.relaxed = relaxed  # mid-surgery graphs may have low-valence free vertices
        self.symbolic_edge = None
        self._candidates_cache = None
        self._validate()

    # ------------------------------------------------------------------ validation
    def _validate(self) -> None:
        sk, fs = self.sk, self.fs
        if not sk.is_connected():
            raise MarkedGraphError("graph not connected")
        if len(self.lengths) != sk.num_edges or any(x <= 0 for x in self.lengths):
            raise MarkedGraphError("edge lengths must be positive")
        used = [j for j in sk.labels if j is not None]
        if sorted(used) != list(range(1, fs.num_groups + 1)):
            raise MarkedGraphError("each vertex group label must be used exactly once")
        if not self.relaxed:
            for v in range(sk.num_vertices):
                if sk.labels[v] is None and sk.valence(v) < 3:
                    raise MarkedGraphError(f"free vertex {v} has valence < 3")
        if sk.free_rank() != fs.free_rank:
            raise MarkedGraphError("graph free rank does not match the free factor system")
        if len(self.letters) != fs.free_rank or len(self.groups) != fs.num_groups:
            raise MarkedGraphError("marking must cover every generator")
        # spanning tree data
        if len(self.tree_edges) != sk.num_vertices - 1:
            raise MarkedGraphError("tree edge count wrong")
        for e in range(1, sk.num_edges + 1):
            if (e in self.tree_edges) == (e in self.omega):
                raise MarkedGraphError("omega must cover exactly the non-tree edges")
        self._root = self._compute_root_paths()
        for j in self.kappa:
            u, i, iso = self.kappa[j]
            _check_iso(fs, j, i, iso)
        if sorted(self.kappa) != sorted(used):
            raise MarkedGraphError("kappa must cover every vertex group label")
        # marking structure
        for p in self.letters:
            sk.check_path(p)
            if p.start != self.basepoint or sk.end(p) != self.basepoint:
                raise MarkedGraphError("letter marking must be a based loop")
        for p, lab, iso in self.groups:
            sk.check_path(p)
            if p.start != self.basepoint or sk.labels[sk.end(p)] != lab:
                raise MarkedGraphError("group marking path must reach its labelled vertex")
        for i, (p, lab, iso) in enumerate(self.groups, start=1):
            _check_iso(fs, i, lab, iso)
        self._verify_marking()

    def _compute_root_paths(self):
        sk = self.sk
        root: dict = {self.basepoint: ()}
        frontier = [self.basepoint]
        adj = {v: [] for v in range(sk.num_vertices)}
        for e in self.tree_edges:
            u, v = sk.edge_ends[e - 1]
            adj[u].append((e, v))
            adj[v].append((-e, u))
        while frontier:
            new = []
            for v in frontier:
                for e, w in adj[v]:
                    if w not in root:
                        root[w] = root[v] + (e,)
                        new.append(w)
            frontier = new
        if len(root) != sk.num_vertices:
            raise MarkedGraphError("tree edges do not span the graph")
        return root

    def _verify_marking(self) -> None:
        fs = self.fs
        for j in range(1, fs.free_rank + 1):
            if self.value(self.letters[j - 1]) != fs.letter(j):
                raise MarkedGraphError(f"marking of letter a{j} fails the inverse check")
        for i in range(1, fs.num_groups + 1):
            p, lab, iso = self.groups[i - 1]
            v = self.sk.end(p)
            for m in fs.group_elements(i, nontrivial=True):
                loop = self.sk.concat(p, self.sk.trivial_path(v, iso[m]), self.sk.reverse(p))
                if self.value(loop) != fs.vertex(i, m):
                    raise MarkedGraphError(
                        f"marking of vertex group {i} fails the inverse check")

    # ------------------------------------------------------------------ eval side
    def treepath(self, u: int, v: int) -> DecoratedPath:
        ru, rv = self._root[u], self._root[v]
        k = 0
        while k < len(ru) and k < len(rv) and ru[k] == rv[k]:
            k += 1
        edges = tuple(-e for e in reversed(ru[k:])) + rv[k:]
        return DecoratedPath(u, (0,) * (len(edges) + 1), edges)

    def value(self, path: DecoratedPath) -> FreeProductWord:
        """Group value of a path relative to the spanning tree; on based loops
        this is the inverse marking."""
        fs, sk = self.fs, self.sk
        out = fs.identity()
        verts = sk.path_vertices(path)
        for i, d in enumerate(path.decorations):
            if d != 0:
                j = sk.labels[verts[i]]
                u, tgt, iso = self.kappa[j]
                out = out * u * fs.vertex(tgt, iso[d]) * u.inverse()
            if i < len(path.edges):
                e = path.edges[i]
                a = abs(e)
                if a not in self.tree_edges:
                    w = self.omega[a]
                    out = out * (w if e > 0 else w.inverse())
        return out

    def eval_loop(self, path: DecoratedPath) -> FreeProductWord:
        if path.start != self.basepoint or self.sk.end(path) != self.basepoint:
            raise MarkedGraphError("eval_loop needs a based loop")
        return self.value(path)

    # ------------------------------------------------------------------ marking side
    def based_path_of_word(self, word: FreeProductWord) -> DecoratedPath:
        sk = self.sk
        parts = [sk.trivial_path(self.basepoint)]
        for s in word.syllables:
            if isinstance(s, FreeLetter):
                loop = self.letters[s.index - 1]
                piece = loop if s.power > 0 else sk.reverse(loop)
                for _ in range(abs(s.power)):
                    parts.append(piece)
            else:
                p, lab, iso = self.groups[s.group - 1]
                v = sk.end(p)
                parts.append(sk.concat(p, sk.trivial_path(v, iso[s.element]), sk.reverse(p)))
        return sk.reduce_path(sk.concat(*parts))

    def loop_of(self, word: FreeProductWord) -> DecoratedLoop:
        """Reduced cyclic loop representing the conjugacy class of a hyperbolic word."""
        loop, residual = self.sk.cyclic_loop(self.based_path_of_word(word))
        if loop.edge_count() == 0:
            raise EllipticElement(f"{word!r} is elliptic in this graph")
        return loop

    def loop_length(self, loop: DecoratedLoop) -> Fraction:
        return sum((self.lengths[abs(e) - 1] for _, e in loop.steps), Fraction(0))

    def translation_length(self, word: FreeProductWord) -> Fraction:
        loop, _ = self.sk.cyclic_loop(self.based_path_of_word(word))
        return self.loop_length(loop)

    # ------------------------------------------------------------------ metric ops
    def volume(self) -> Fraction:
        return sum(self.lengths, Fraction(0))

    def with_lengths(self, lengths: Sequence[Fraction]) -> "MarkedGraph":
        return MarkedGraph(self.sk, lengths, self.basepoint, self.letters, self.groups,
                           self.tree_edges, self.omega, self.kappa, name=self.name,
                           relaxed=self.relaxed)

    def rescale(self, c) -> "MarkedGraph":
        c = Fraction(c)
        if c <= 0:
            raise NonPositiveScale("scale factor must be positive")
        return self.with_lengths([c * x for x in self.lengths])

    def normalized(self) -> "MarkedGraph":
        return self.rescale(Fraction(1) / self.volume())

    def center(self) -> "MarkedGraph":
        """Same simplex, all edges equal length, co-volume 1 (canonical per simplex)."""
        n = self.sk.num_edges
        return self.with_lengths([Fraction(1, n)] * n)

    def shortest_edge(self) -> Fraction:
        return min(self.lengths)

    # ------------------------------------------------------------------ marking twist
    def twist(self, phi: FPAutomorphism) -> "MarkedGraph":
        """The point X.phi: same graph and metric, marking precomposed with phi."""
        fs, sk = self.fs, self.sk
        letters = [self.based_path_of_word(phi.apply(fs.letter(j)))
                   for j in range(1, fs.free_rank + 1)]
        groups = []
        for i in range(1, fs.num_groups + 1):
            gi = phi.group_images[i - 1]
            p_t, lab_t, iso_t = self.groups[gi.target - 1]
            path = sk.reduce_path(sk.concat(self.based_path_of_word(gi.conj), p_t))
            iso = tuple(iso_t[gi.iso[m]] for m in range(fs.group_order(i)))
            groups.append((path, lab_t, iso))
        omega = {e: phi.apply_inverse(w) for e, w in self.omega.items()}
        kappa = {}
        for j, (u, tgt, iso) in self.kappa.items():
            gj = phi.inverse_group_images[tgt - 1]
            kappa[j] = (phi.apply_inverse(u) * gj.conj, gj.target,
                        tuple(gj.iso[iso[m]] for m in range(len(iso))))
        return MarkedGraph(sk, self.lengths, self.basepoint, letters, groups,
                           self.tree_edges, omega, kappa,
                           name=f"{self.name}.phi" if self.name else "")

    # ------------------------------------------------------------------ equality
    def points_equal(self, other: "MarkedGraph"):
        from .lipschitz import points_equal
        return points_equal(self, other)

    # ------------------------------------------------------------------ surgeries
    def collapse_forest(self, forest: Iterable[int]) -> "MarkedGraph":
        return _collapse_forest(self, sorted(set(int(e) for e in forest)))

    def blow_ups(self, v: int) -> list:
        return _blow_ups(self, v)

    # ------------------------------------------------------------------ serialization
    def to_dict(self) -> dict:
        from .serialize import point_to_dict
        return point_to_dict(self)

    def simplex_key(self) -> str:
        import json
        return json.dumps(self.center().to_dict(), sort_keys=True)

    def __repr__(self) -> str:
        tag = self.name or f"{self.sk.num_vertices}v{self.sk.num_edges}e"
        return f"MarkedGraph({tag}, vol={self.volume()})"


# ---------------------------------------------------------------------------
# construction helpers
# ---------------------------------------------------------------------------

def build_marked_graph(fs: FreeFactorSystem, labels, edge_ends, lengths, basepoint,
                       letters, groups, omega, kappa=None, name="") -> MarkedGraph:
    """Assemble a point.  `omega` maps each non-tree edge to its group word; the
    spanning tree is the complement.  `kappa` defaults to the identity embedding
    when labels and abstract groups coincide and group paths are tree paths."""
    sk = Skeleton(fs, labels, edge_ends)
    tree = [e for e in range(1, sk.num_edges + 1) if e not in omega]
    if kappa is None:
        kappa = {}
        for i in range(1, fs.num_groups + 1):
            p, lab, iso = groups[i - 1]
            inv = [0] * len(iso)
            for m, im in enumerate(iso):
                inv[im] = m
            kappa[lab] = (fs.identity(), i, tuple(inv))
    return MarkedGraph(sk, lengths, basepoint, letters, groups, tree, omega, kappa, name=name)


def derive_eval_data(new_sk: Skeleton, basepoint: int,
                     lift: Callable[[DecoratedPath], DecoratedPath],
                     old: MarkedGraph):
    """Compute spanning tree / omega / kappa for a surgered graph from a lift map
    sending new paths to old paths with the same group value."""
    fs = new_sk.fs
    # BFS spanning tree
    parent: dict = {basepoint: ()}
    frontier = [basepoint]
    tree: set = set()
    adj = {v: [] for v in range(new_sk.num_vertices)}
    for e in range(1, new_sk.num_edges + 1):
        u, v = new_sk.edge_ends[e - 1]
        adj[u].append((e, v))
        adj[v].append((-e, u))
    while frontier:
        nxt = []
        for v in frontier:
            for e, w in sorted(adj[v]):
                if w not in parent:
                    parent[w] = parent[v] + (e,)
                    tree.add(abs(e))
                    nxt.append(w)
        frontier = nxt
    if len(parent) != new_sk.num_vertices:
        raise MarkedGraphError("surgered graph is not connected")

    def rootpath(v: int) -> DecoratedPath:
        edges = parent[v]
        return DecoratedPath(basepoint, (0,) * (len(edges) + 1), edges)

    def treewalk(u: int, v: int) -> DecoratedPath:
        ru, rv = parent[u], parent[v]
        k = 0
        while k < len(ru) and k < len(rv) and ru[k] == rv[k]:
            k += 1
        edges = tuple(-e for e in reversed(ru[k:])) + rv[k:]
        return DecoratedPath(u, (0,) * (len(edges) + 1), edges)

    def old_value(p: DecoratedPath) -> FreeProductWord:
        return old.value(old.sk.reduce_path(lift(p)))

    omega = {}
    for e in range(1, new_sk.num_edges + 1):
        if abs(e) in tree:
            continue
        u, v = new_sk.edge_ends[e - 1]
        loop = new_sk.concat(rootpath(u),
                             DecoratedPath(u, (0, 0), (e,)),
                             new_sk.reverse(rootpath(v)))
        omega[e] = old_value(loop)
    kappa = {}
    for x in range(new_sk.num_vertices):
        j = new_sk.labels[x]
        if j is None:
            continue
        p = rootpath(x)
        conj = None
        target = None
        sigma = [0] * fs.group_order(j)
        for m in fs.group_elements(j, nontrivial=True):
            loop = new_sk.concat(p, new_sk.trivial_path(x, m), new_sk.reverse(p))
            w = old_value(loop)
            c, core = cyclic_reduce(w)
            if core.syllable_length() != 1 or not isinstance(core.syllables[0], VertexElement):
                raise MarkedGraphError("lifted vertex decoration is not elliptic")
            s = core.syllables[0]
            if target is None:
                target, conj = s.group, c
            elif target != s.group or conj != c:
                raise MarkedGraphError("inconsistent vertex-group lift")
            sigma[m] = s.element
        kappa[j] = (conj, target, tuple(sigma))
    return tree, omega, kappa


# ---------------------------------------------------------------------------
# collapse
# ---------------------------------------------------------------------------

def _collapse_forest(X: MarkedGraph, forest: list) -> MarkedGraph:
    sk, fs = X.sk, X.fs
    for e in forest:
        if not (1 <= e <= sk.num_edges):
            raise MarkedGraphError("forest edge id out of range")
    # union-find; detect cycles
    par = list(range(sk.num_vertices))

    def find(a):
        while par[a] != a:
            par[a] = par[par[a]]
            a = par[a]
        return a

    for e in forest:
        u, v = sk.edge_ends[e - 1]
        ru, rv = find(u), find(v)
        if ru == rv:
            raise MarkedGraphError("forest contains a loop of the graph")
        par[ru] = rv
    comp_of = [find(v) for v in range(sk.num_vertices)]
    comps = sorted(set(comp_of))
    new_id = {c: i for i, c in enumerate(comps)}
    # labels: at most one non-free vertex per component
    new_labels: list = [None] * len(comps)
    labelled_vertex: dict = {}
    for v in range(sk.num_vertices):
        j = sk.labels[v]
        if j is not None:
            c = new_id[comp_of[v]]
            if new_labels[c] is not None:
                raise FaceAtInfinity(
                    "collapsing would merge two non-free vertices (face at infinity)")
            new_labels[c] = j
            labelled_vertex[c] = v
    forest_set = set(forest)
    keep = [e for e in range(1, sk.num_edges + 1) if e not in forest_set]
    edge_map = {e: i + 1 for i, e in enumerate(keep)}
    new_ends = [(new_id[comp_of[sk.edge_ends[e - 1][0]]],
                 new_id[comp_of[sk.edge_ends[e - 1][1]]]) for e in keep]
    new_sk = Skeleton(fs, new_labels, new_ends)
    new_lengths = [X.lengths[e - 1] for e in keep]
    new_bp = new_id[comp_of[X.basepoint]]

    def push(p: DecoratedPath) -> DecoratedPath:
        verts = sk.path_vertices(p)
        decs = [p.decorations[0]]
        edges: list = []
        cur_new = new_id[comp_of[verts[0]]]
        for i, e in enumerate(p.edges):
            d_next = p.decorations[i + 1]
            if abs(e) in forest_set:
                w = sk.term(e)
                decs[-1] = new_sk.dec_mul(new_id[comp_of[w]], decs[-1], d_next)
            else:
                ne = edge_map[abs(e)] * (1 if e > 0 else -1)
                edges.append(ne)
                decs.append(d_next)
        return new_sk.reduce_path(DecoratedPath(new_bp if p.start == X.basepoint
                                                else new_id[comp_of[p.start]],
                                                tuple(decs), tuple(edges)))

    letters = [push(p) for p in X.letters]
    groups = [(push(p), lab, iso) for p, lab, iso in X.groups]

    # lift map: reinsert forest geodesics
    anchor = {}
    for c in comps:
        anchor[new_id[c]] = c
    anchor[new_bp] = X.basepoint
    fadj = {v: [] for v in range(sk.num_vertices)}
    for e in forest:
        u, v = sk.edge_ends[e - 1]
        fadj[u].append((e, v))
        fadj[v].append((-e, u))
    fparent: dict = {}
    for c in comps:
        root = anchor[new_id[c]]
        fparent[root] = ()
        stack = [root]
        while stack:
            v = stack.pop()
            for e, w in fadj[v]:
                if w not in fparent:
                    fparent[w] = fparent[v] + (e,)
                    stack.append(w)

    def fwalk(u: int, v: int) -> tuple:
        ru, rv = fparent[u], fparent[v]
        k = 0
        while k < len(ru) and k < len(rv) and ru[k] == rv[k]:
            k += 1
        return tuple(-e for e in reversed(ru[k:])) + rv[k:]

    inv_edge = {v: k for k, v in edge_map.items()}

    def lift(p: DecoratedPath) -> DecoratedPath:
        cur = anchor[p.start]
        decs = [0]
        edges: list = []

        def extend(es):
            for e in es:
                edges.append(e)
                decs.append(0)

        for i in range(len(p.decorations)):
            d = p.decorations[i]
            if d != 0:
                nv = new_sk.path_vertices(p)[i]
                x = labelled_vertex[nv]
                extend(fwalk(cur, x))
                decs[-1] = sk.dec_mul(x, decs[-1], d)
                cur = x
            if i < len(p.edges):
                e = p.edges[i]
                oe = inv_edge[abs(e)] * (1 if e > 0 else -1)
                extend(fwalk(cur, sk.init(oe)))
                edges.append(oe)
                decs.append(0)
                cur = sk.term(oe)
        end_new = new_sk.end(p)
        extend(fwalk(cur, anchor[end_new]))
        return DecoratedPath(anchor[p.start], tuple(decs), tuple(edges))

    tree, omega, kappa = derive_eval_data(new_sk, new_bp, lift, X)
    return MarkedGraph(new_sk, new_lengths, new_bp, letters, groups, tree, omega, kappa,
                       name=f"{X.name}/collapse" if X.name else "")


# ---------------------------------------------------------------------------
# blow-ups
# ---------------------------------------------------------------------------

def _blow_ups(X: MarkedGraph, v: int) -> list:
    sk, fs = X.sk, X.fs
    germs = sk.germs(v)
    label = sk.labels[v]
    out = []
    if label is None:
        if sk.valence(v) < 4:
            return []
        first = germs[0]
        rest = germs[1:]
        n = len(rest)
        for mask in range(1 << n):
            keep = [first] + [rest[i] for i in range(n) if mask >> i & 1]
            move = [rest[i] for i in range(n) if not mask >> i & 1]
            if len(keep) >= 2 and len(move) >= 2:
                out.append(_one_blow_up(X, v, move, {g: 0 for g in move}))
    else:
        n = len(germs)
        order = fs.group_order(label)
        for mask in range(1 << n):
            move = [germs[i] for i in range(n) if mask >> i & 1]
            if len(move) < 2:
                continue
            # germ assignments, first one normalized to the identity
            import itertools
            for cs in itertools.product(range(order), repeat=len(move) - 1):
                assign = {move[0]: 0}
                for g, c in zip(move[1:], cs):
                    assign[g] = c
                out.append(_one_blow_up(X, v, move, assign))
    return out


def _one_blow_up(X: MarkedGraph, v: int, moved: list, assign: dict) -> MarkedGraph:
    """One-edge expansion at v: germs in `moved` reattach to a new free vertex w
    across a new edge eps, with vertex-group elements `assign` recording the
    orbit choice of each moved germ."""
    sk, fs = X.sk, X.fs
    w = sk.num_vertices
    new_labels = list(sk.labels) + [None]
    moved_set = set(moved)
    new_ends = []
    for e in range(1, sk.num_edges + 1):
        u0, v0 = sk.edge_ends[e - 1]
        if e in moved_set and u0 == v:
            u0 = w
        if -e in moved_set and v0 == v:
            v0 = w
        new_ends.append((u0, v0))
    eps = sk.num_edges + 1
    new_ends.append((v, w))
    new_sk = Skeleton(fs, new_labels, new_ends)
    new_lengths = list(X.lengths) + [Fraction(1, 100)]  # nominal; the simplex is what matters

    def transport(p: DecoratedPath) -> DecoratedPath:
        # exit via a moved germ: decoration picks up the orbit element, cross eps;
        # arrive via a moved germ: cross eps back, decoration picks up its inverse
        decs: list = []
        edges: list = []
        cur = p.decorations[0]
        for i, e in enumerate(p.edges):
            if sk.init(e) == v and e in moved_set:
                decs.append(sk.dec_mul(v, cur, assign[e]))
                edges.append(eps)
                cur = 0
            decs.append(cur)
            edges.append(e)
            nxt = p.decorations[i + 1]
            if sk.term(e) == v and (-e) in moved_set:
                decs.append(0)
                edges.append(-eps)
                cur = sk.dec_mul(v, sk.dec_inv(v, assign[-e]), nxt)
            else:
                cur = nxt
        decs.append(cur)
        return new_sk.reduce_path(DecoratedPath(p.start, tuple(decs), tuple(edges)))

    letters = [transport(p) for p in X.letters]
    groups = [(transport(p), lab, iso) for p, lab, iso in X.groups]

    def gamma(germ) -> int:
        # orbit weight of a germ at the new free vertex; the eps-end is neutral
        if germ is None or abs(germ) == eps:
            return 0
        return assign[germ]

    def lift(p: DecoratedPath) -> DecoratedPath:
        # inverse of `transport`: drop eps, and replace the (trivial) decoration
        # at each w-passage by gamma(in) * gamma(out)^-1 at v
        verts = new_sk.path_vertices(p)
        decs = [p.decorations[0] if verts[0] != w else 0]
        edges: list = []
        for i in range(len(p.decorations)):
            if i > 0:
                d = p.decorations[i]
                if verts[i] == w:
                    g_in = -p.edges[i - 1]
                    g_out = p.edges[i] if i < len(p.edges) else None
                    d = sk.dec_mul(v, gamma(g_in), sk.dec_inv(v, gamma(g_out)))
                decs[-1] = sk.dec_mul(v if verts[i] == w else verts[i], decs[-1], d)
            if i < len(p.edges):
                e = p.edges[i]
                if abs(e) != eps:
                    edges.append(e)
                    decs.append(0)
        start = p.start if p.start != w else v
        return DecoratedPath(start, tuple(decs), tuple(edges))

    tree, omega, kappa = derive_eval_data(new_sk, X.basepoint, lift, X)
    g = MarkedGraph(new_sk, new_lengths, X.basepoint, letters, groups, tree, omega, kappa,
                    name=f"{X.name}+blow" if X.name else "")
    g.symbolic_edge = eps  # serialized as length "eps"
    return g


# ---------------------------------------------------------------------------
# fold machinery: subdivide / full-edge fold / smooth / rebase, each a verified
# point-preserving surgery; find_train_track composes them
# ---------------------------------------------------------------------------

def _remark(X: MarkedGraph, sk: Skeleton, lengths, basepoint, letters, groups, lift,
            name: str, relaxed: bool) -> MarkedGraph:
    tree, omega, kappa = derive_eval_data(sk, basepoint, lift, X)
    return MarkedGraph(sk, lengths, basepoint, letters, groups, tree, omega, kappa,
                       name=name, relaxed=relaxed)


def subdivide_edge(X: MarkedGraph, a: int, t: Fraction) -> MarkedGraph:
    """Split edge a at distance t from its initial vertex (new free vertex of
    valence 2; the result is only a legal point after further surgery)."""
    sk, fs = X.sk, X.fs
    a = abs(a)
    t = Fraction(t)
    if not (0 < t < X.lengths[a - 1]):
        raise MarkedGraphError("subdivision point must be interior")
    u0, w0 = sk.edge_ends[a - 1]
    m = sk.num_vertices
    q = sk.num_edges + 1
    new_ends = list(sk.edge_ends)
    new_ends[a - 1] = (u0, m)
    new_ends.append((m, w0))
    new_sk = Skeleton(fs, list(sk.labels) + [None], new_ends)
    new_lengths = list(X.lengths)
    new_lengths[a - 1] = t
    new_lengths.append(X.lengths[a - 1] - t)

    def transport(p: DecoratedPath) -> DecoratedPath:
        decs = [p.decorations[0]]
        edges: list = []
        for e, d in zip(p.edges, p.decorations[1:]):
            if e == a:
                edges.extend([a, q])
                decs.extend([0, d])
            elif e == -a:
                edges.extend([-q, -a])
                decs.extend([0, d])
            else:
                edges.append(e)
                decs.append(d)
        return DecoratedPath(p.start, tuple(decs), tuple(edges))

    letters = [transport(p) for p in X.letters]
    groups = [(transport(p), lab, iso) for p, lab, iso in X.groups]

    def lift(p: DecoratedPath) -> DecoratedPath:
        p = new_sk.reduce_path(p)
        decs = [p.decorations[0]]
        edges: list = []
        i = 0
        while i < len(p.edges):
            e = p.edges[i]
            d = p.decorations[i + 1]
            if e == a:
                # must continue with q (reduced paths cannot turn at m)
                if i + 1 >= len(p.edges) or p.edges[i + 1] != q:
                    raise MarkedGraphError("subdivided path ends mid-edge")
                edges.append(a)
                decs.append(p.decorations[i + 2])
                i += 2
            elif e == -q:
                if i + 1 >= len(p.edges) or p.edges[i + 1] != -a:
                    raise MarkedGraphError("subdivided path ends mid-edge")
                edges.append(-a)
                decs.append(p.decorations[i + 2])
                i += 2
            elif abs(e) in (a, q):
                raise MarkedGraphError("subdivided path ends mid-edge")
            else:
                edges.append(e)
                decs.append(d)
                i += 1
        return DecoratedPath(p.start, tuple(decs), tuple(edges))

    return _remark(X, new_sk, new_lengths, X.basepoint, letters, groups, lift,
                   name=f"{X.name}|sub", relaxed=True)


def fold_full_edges(X: MarkedGraph, e1: int, c1: int, e2: int, c2: int) -> MarkedGraph:
    """Fold the whole of e2 onto the whole of e1 (same initial vertex v; the
    germs carry vertex-group elements c1, c2).  Neither edge may be a loop and
    the two far endpoints may carry at most one vertex group between them."""
    sk, fs = X.sk, X.fs
    v = sk.init(e1)
    if sk.init(e2) != v:
        raise MarkedGraphError("fold germs must share their vertex")
    if abs(e1) == abs(e2):
        raise MarkedGraphError("folding an edge onto its own orbit would create "
                               "an edge stabilizer")
    t1, t2 = sk.term(e1), sk.term(e2)
    if t1 == v or t2 == v:
        raise MarkedGraphError("full fold of a loop edge is not supported; subdivide first")
    mu = sk.dec_mul(v, sk.dec_inv(v, c2), c1)
    merge = t1 != t2
    if merge and sk.labels[t1] is not None and sk.labels[t2] is not None:
        raise MarkedGraphError("fold would merge two non-free vertices")
    label_home = t2 if (merge and sk.labels[t2] is not None) else t1

    # new vertex ids: drop t2 when merging
    vmap = {}
    nxt = 0
    for x in range(sk.num_vertices):
        if merge and x == t2:
            continue
        vmap[x] = nxt
        nxt += 1
    if merge:
        vmap[t2] = vmap[t1]
    new_labels = [None] * nxt
    for x in range(sk.num_vertices):
        if sk.labels[x] is not None:
            new_labels[vmap[x]] = sk.labels[x]
    a2 = abs(e2)
    keep = [e for e in range(1, sk.num_edges + 1) if e != a2]
    emap = {e: i + 1 for i, e in enumerate(keep)}
    new_ends = [(vmap[sk.edge_ends[e - 1][0]], vmap[sk.edge_ends[e - 1][1]]) for e in keep]
    new_sk = Skeleton(fs, new_labels, new_ends)
    new_lengths = [X.lengths[e - 1] for e in keep]

    def sgn(e):
        return 1 if e > 0 else -1

    def transport(p: DecoratedPath) -> DecoratedPath:
        decs = [p.decorations[0]]
        edges: list = []
        pre = 0  # pending left-multiplier for the next decoration, at v
        for e, d in zip(p.edges, p.decorations[1:]):
            d_eff = d
            if e == e2:
                decs[-1] = sk.dec_mul(v, decs[-1], mu)
                ne = e1
            elif e == -e2:
                ne = -e1
                d_eff = sk.dec_mul(v, sk.dec_inv(v, mu), d)
            else:
                ne = e
            edges.append(emap[abs(ne)] * sgn(ne))
            decs.append(d_eff)
        return new_sk.reduce_path(DecoratedPath(vmap[p.start], tuple(decs), tuple(edges)))

    letters = [transport(p) for p in X.letters]
    groups = [(transport(p), lab, iso) for p, lab, iso in X.groups]

    inv_emap = {i: e for e, i in emap.items()}
    inv_mu = sk.dec_inv(v, mu)

    def fiber(nv: int) -> list:
        return [x for x in range(sk.num_vertices) if vmap[x] == nv]

    def lift(p: DecoratedPath) -> DecoratedPath:
        decs: list = [0]
        edges: list = []
        fib0 = fiber(p.start)
        cur = X.basepoint if X.basepoint in fib0 else fib0[0]
        start_old = cur

        def route(target: int):
            # only the folded pair {t1, t2} ever needs a connector;
            # the connector t1 -> v -> t2 folds to a trivial path
            nonlocal cur
            if cur == target:
                return
            if {cur, target} != {t1, t2}:
                raise MarkedGraphError("fold lift lost its position")
            if cur == t1:
                edges.extend([-e1, e2])
                decs.extend([inv_mu, 0])
            else:
                edges.extend([-e2, e1])
                decs.extend([mu, 0])
            cur = target

        verts = new_sk.path_vertices(p)
        for i in range(len(p.decorations)):
            d = p.decorations[i]
            if d != 0:
                cands = [x for x in fiber(verts[i]) if sk.labels[x] is not None]
                route(cands[0])
                decs[-1] = sk.dec_mul(cands[0], decs[-1], d)
            if i < len(p.edges):
                oe = inv_emap[abs(p.edges[i])] * sgn(p.edges[i])
                route(sk.init(oe))
                edges.append(oe)
                decs.append(0)
                cur = sk.term(oe)
        if verts[-1] == p.start:
            route(start_old)
        return DecoratedPath(start_old, tuple(decs), tuple(edges))

    return _remark(X, new_sk, new_lengths, vmap[X.basepoint], letters, groups, lift,
                   name=f"{X.name}|fold", relaxed=True)


def smooth_vertex(X: MarkedGraph, x: int) -> MarkedGraph:
    """Remove a free valence-2 vertex, concatenating its two edges."""
    sk, fs = X.sk, X.fs
    if sk.labels[x] is not None or sk.valence(x) != 2 or x == X.basepoint:
        raise MarkedGraphError("can only smooth a free valence-2 non-basepoint vertex")
    g1, g2 = sk.germs(x)
    if abs(g1) == abs(g2):
        raise MarkedGraphError("cannot smooth a loop vertex")
    # merged edge M runs term(g1) -> x -> term(g2), replacing (-g1, g2)
    A, B = sk.term(g1), sk.term(g2)
    vmap = {}
    nxt = 0
    for u in range(sk.num_vertices):
        if u == x:
            continue
        vmap[u] = nxt
        nxt += 1
    keep = [e for e in range(1, sk.num_edges + 1) if e not in (abs(g1), abs(g2))]
    emap = {e: i + 1 for i, e in enumerate(keep)}
    M = len(keep) + 1
    new_ends = [(vmap[sk.edge_ends[e - 1][0]], vmap[sk.edge_ends[e - 1][1]]) for e in keep]
    new_ends.append((vmap[A], vmap[B]))
    new_labels = [sk.labels[u] for u in range(sk.num_vertices) if u != x]
    new_sk = Skeleton(fs, new_labels, new_ends)
    new_lengths = [X.lengths[e - 1] for e in keep]
    new_lengths.append(X.lengths[abs(g1) - 1] + X.lengths[abs(g2) - 1])

    def sgn(e):
        return 1 if e > 0 else -1

    def transport(p: DecoratedPath) -> DecoratedPath:
        p = sk.reduce_path(p)
        decs = [p.decorations[0]]
        edges: list = []
        i = 0
        while i < len(p.edges):
            e = p.edges[i]
            if e == -g1:
                if i + 1 >= len(p.edges) or p.edges[i + 1] != g2:
                    raise MarkedGraphError("path ends at the smoothed vertex")
                edges.append(M)
                decs.append(p.decorations[i + 2])
                i += 2
            elif e == -g2:
                if i + 1 >= len(p.edges) or p.edges[i + 1] != g1:
                    raise MarkedGraphError("path ends at the smoothed vertex")
                edges.append(-M)
                decs.append(p.decorations[i + 2])
                i += 2
            elif abs(e) in (abs(g1), abs(g2)):
                raise MarkedGraphError("path ends at the smoothed vertex")
            else:
                edges.append(emap[abs(e)] * sgn(e))
                decs.append(p.decorations[i + 1])
                i += 1
        return DecoratedPath(vmap[p.start], tuple(decs), tuple(edges))

    letters = [transport(p) for p in X.letters]
    groups = [(transport(p), lab, iso) for p, lab, iso in X.groups]
    inv_vmap = {i: u for u, i in vmap.items()}
    inv_emap = {i: e for e, i in emap.items()}

    def lift(p: DecoratedPath) -> DecoratedPath:
        decs = [p.decorations[0]]
        edges: list = []
        for e, d in zip(p.edges, p.decorations[1:]):
            if abs(e) == M:
                if e > 0:
                    edges.extend([-g1, g2])
                else:
                    edges.extend([-g2, g1])
                decs.extend([0, d])
            else:
                oe = inv_emap[abs(e)] * sgn(e)
                edges.append(oe)
                decs.append(d)
        return DecoratedPath(inv_vmap[p.start], tuple(decs), tuple(edges))

    return _remark(X, new_sk, new_lengths, vmap[X.basepoint], letters, groups, lift,
                   name=f"{X.name}|smooth", relaxed=True)


def rebase(X: MarkedGraph, new_bp: int) -> MarkedGraph:
    """Move the basepoint along a tree path (the point is unchanged)."""
    if new_bp == X.basepoint:
        return X
    sk = X.sk
    P = X.treepath(new_bp, X.basepoint)
    Pb = sk.reverse(P)
    letters = [sk.reduce_path(sk.concat(P, L, Pb)) for L in X.letters]
    groups = [(sk.reduce_path(sk.concat(P, p)), lab, iso) for p, lab, iso in X.groups]
    return MarkedGraph(sk, X.lengths, new_bp, letters, groups, X.tree_edges,
                       X.omega, X.kappa, name=X.name, relaxed=X.relaxed)


def tidy(X: MarkedGraph) -> MarkedGraph:
    """Restore point validity after folds: drop dangling free vertices, smooth
    free valence-2 vertices (moving the basepoint off them first)."""
    changed = True
    while changed:
        changed = False
        sk = X.sk
        # dangling free valence-1 vertices: their edge cannot occur in reduced loops
        for x in range(sk.num_vertices):
            if sk.labels[x] is None and sk.valence(x) == 1:
                if x == X.basepoint:
                    X = rebase(X, X.sk.term(sk.germs(x)[0]))
                X = _drop_dangling(X, x)
                changed = True
                break
        if changed:
            continue
        for x in range(sk.num_vertices):
            if sk.labels[x] is None and sk.valence(x) == 2:
                germs = sk.germs(x)
                if abs(germs[0]) == abs(germs[1]):
                    continue
                if x == X.basepoint:
                    others = [u for u in range(sk.num_vertices) if u != x]
                    X = rebase(X, others[0])
                X = smooth_vertex(X, x)
                changed = True
                break
    if X.relaxed:
        X = MarkedGraph(X.sk, X.lengths, X.basepoint, X.letters, X.groups,
                        X.tree_edges, X.omega, X.kappa, name=X.name, relaxed=False)
    return X


def _drop_dangling(X: MarkedGraph, x: int) -> MarkedGraph:
    sk, fs = X.sk, X.fs
    g = sk.germs(x)[0]
    a = abs(g)
    vmap = {}
    nxt = 0
    for u in range(sk.num_vertices):
        if u == x:
            continue
        vmap[u] = nxt
        nxt += 1
    keep = [e for e in range(1, sk.num_edges + 1) if e != a]
    emap = {e: i + 1 for i, e in enumerate(keep)}
    new_ends = [(vmap[sk.edge_ends[e - 1][0]], vmap[sk.edge_ends[e - 1][1]]) for e in keep]
    new_labels = [sk.labels[u] for u in range(sk.num_vertices) if u != x]
    new_sk = Skeleton(fs, new_labels, new_ends)

    def sgn(e):
        return 1 if e > 0 else -1

    def transport(p: DecoratedPath) -> DecoratedPath:
        p = sk.reduce_path(p)
        if any(abs(e) == a for e in p.edges):
            raise MarkedGraphError("reduced marking crosses a dangling edge")
        return DecoratedPath(vmap[p.start],
                             p.decorations,
                             tuple(emap[abs(e)] * sgn(e) for e in p.edges))

    letters = [transport(p) for p in X.letters]
    groups = [(transport(p), lab, iso) for p, lab, iso in X.groups]
    inv_vmap = {i: u for u, i in vmap.items()}
    inv_emap = {i: e for e, i in emap.items()}

    def lift(p: DecoratedPath) -> DecoratedPath:
        return DecoratedPath(inv_vmap[p.start], p.decorations,
                             tuple(inv_emap[abs(e)] * sgn(e) for e in p.edges))

    return _remark(X, new_sk, [X.lengths[e - 1] for e in keep], vmap[X.basepoint],
                   letters, groups, lift, name=X.name, relaxed=True)


def fold_turn(X: MarkedGraph, germ1: tuple, germ2: tuple,
              s1: Fraction, s2: Fraction) -> MarkedGraph:
    """Fold initial segments of lengths s1 and s2 of the two germs (signed edge,
    vertex-group element) at a common vertex; subdivides as needed and tidies
    the result back into a legal point."""
    (e1, c1), (e2, c2) = germ1, germ2
    sk = X.sk
    v = sk.init(e1)
    s1, s2 = Fraction(s1), Fraction(s2)
    # loops must be strictly subdivided so the full fold never touches a loop
    if sk.term(e1) == v:
        s1 = min(s1, X.lengths[abs(e1) - 1] * Fraction(1, 2))
    if sk.term(e2) == v:
        s2 = min(s2, X.lengths[abs(e2) - 1] * Fraction(1, 2))
    # a full-full fold of parallel edges would kill rank; fold strictly less
    if sk.term(e1) == sk.term(e2) and s1 >= X.lengths[abs(e1) - 1] \
            and s2 >= X.lengths[abs(e2) - 1]:
        s1 = X.lengths[abs(e1) - 1] * Fraction(1, 2)
        s2 = X.lengths[abs(e2) - 1] * Fraction(1, 2)
    work = X
    f1, f2 = e1, e2
    if s1 < work.lengths[abs(e1) - 1]:
        if e1 < 0:
            # subdividing measures from the initial vertex of the positive edge
            work = subdivide_edge(work, -e1, work.lengths[abs(e1) - 1] - s1)
            f1 = -(work.sk.num_edges)
        else:
            work = subdivide_edge(work, e1, s1)
            f1 = e1
    if s2 < work.lengths[abs(e2) - 1]:
        if e2 < 0:
            work = subdivide_edge(work, -e2, work.lengths[abs(e2) - 1] - s2)
            f2 = -(work.sk.num_edges)
        else:
            work = subdivide_edge(work, e2, s2)
            f2 = e2
    work = fold_full_edges(work, f1, c1, f2, c2)
    return tidy(work)
