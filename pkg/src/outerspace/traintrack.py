"""Graph maps representing automorphisms: gates and legality, train-track
verification and search, transition matrices with certified Perron-Frobenius
enclosures, bounded-cancellation and critical constants, Nielsen paths,
path-iteration dynamics, and cylinder decompositions."""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

from .freeprod import FPAutomorphism, FreeProductWord, inner_conjugator
from .lipschitz import (CertifiedValue, displacement, min_displacement_on_simplex,
                        stretch)
from .marked_graph import (DecoratedLoop, DecoratedPath, MarkedGraph,
                           MarkedGraphError, fold_turn)


class NotExpanding(ValueError):
    pass


class NotTrainTrack(ValueError):
    pass


class ZeroMatrix(ValueError):
    pass


class ReducibleMatrix(ValueError):
    pass


class ReducibleDetected(RuntimeError):
    """A representative exhibits an invariant subforest carrying a hyperbolic
    axis, certifying that the automorphism is reducible."""

    def __init__(self, edges, message="invariant subgraph with hyperbolic content"):
        super().__init__(message)
        self.edges = tuple(edges)


class TrainTrackFailure(RuntimeError):
    """find_train_track exhausted its budget."""


# ---------------------------------------------------------------------------
# graph maps
# ---------------------------------------------------------------------------

class GraphMap:
    """Straight equivariant map between points, linear on edges.

    For a topological representative the codomain is the domain graph itself
    and the map realises the automorphism after twisting the codomain marking.
    """

    def __init__(self, domain: MarkedGraph, codomain: MarkedGraph, phi: FPAutomorphism,
                 vertex_images: Sequence[int], vertex_maps: dict,
                 edge_images: dict, basepoint_path: DecoratedPath):
        self.domain = domain
        self.codomain = codomain
        self.phi = phi
        self.vertex_images = tuple(vertex_images)
        self.vertex_maps = dict(vertex_maps)
        self.edge_images = {int(e): codomain.sk.reduce_path(p)
                            for e, p in edge_images.items()}
        self.basepoint_path = basepoint_path
        self._gates = None
        self.inner_witness = self._verify()

    # -- basic data ---------------------------------------------------------------
    def edge_image(self, e: int) -> DecoratedPath:
        p = self.edge_images[abs(e)]
        return p if e > 0 else self.codomain.sk.reverse(p)

    def edge_stretch(self, e: int) -> Fraction:
        img = self.edge_images[abs(e)]
        length = sum((self.codomain.lengths[abs(x) - 1] for x in img.edges), Fraction(0))
        return length / self.domain.lengths[abs(e) - 1]

    def stretches(self) -> tuple:
        return tuple(self.edge_stretch(e) for e in range(1, self.domain.sk.num_edges + 1))

    def lip(self) -> Fraction:
        return max(self.stretches())

    def tension_graph(self) -> tuple:
        s = self.stretches()
        m = max(s)
        return tuple(e + 1 for e, v in enumerate(s) if v == m)

    def path_length(self, p: DecoratedPath) -> Fraction:
        return sum((self.codomain.lengths[abs(x) - 1] for x in p.edges), Fraction(0))

    # -- applying the map ------------------------------------------------------------
    def map_path(self, p: DecoratedPath) -> DecoratedPath:
        sk = self.codomain.sk
        dom = self.domain.sk
        verts = dom.path_vertices(p)
        parts = []
        for i, d in enumerate(p.decorations):
            v = verts[i]
            fv = self.vertex_images[v]
            md = self.vertex_maps[v][d] if d else 0
            parts.append(sk.trivial_path(fv, md))
            if i < len(p.edges):
                parts.append(self.edge_image(p.edges[i]))
        return sk.reduce_path(sk.concat(*parts))

    def map_loop(self, loop: DecoratedLoop) -> DecoratedLoop:
        dom = self.domain.sk
        if not loop.steps:
            raise ValueError("empty loop")
        v = dom.init(loop.steps[0][1])
        decs = tuple(d for d, _ in loop.steps) + (0,)
        edges = tuple(e for _, e in loop.steps)
        based = DecoratedPath(v, decs, edges)
        image = self.map_path(based)
        out, _ = self.codomain.sk.cyclic_loop(image)
        return out

    def iterate_path(self, p: DecoratedPath, n: int) -> DecoratedPath:
        for _ in range(n):
            p = self.map_path(p)
        return p

    # -- verification ------------------------------------------------------------------
    def _verify(self) -> FreeProductWord:
        """The induced map on markings must equal phi up to one inner conjugator."""
        X, Y, fs = self.domain, self.codomain, self.domain.fs
        sk = Y.sk
        P0 = self.basepoint_path
        P0b = sk.reverse(P0)
        images = {}
        for j in range(1, fs.free_rank + 1):
            loop = sk.reduce_path(sk.concat(P0, self.map_path(X.letters[j - 1]), P0b))
            images[fs.letter(j)] = Y.value(loop)
        for i in range(1, fs.num_groups + 1):
            p, lab, iso = X.groups[i - 1]
            v = X.sk.end(p)
            for m in fs.group_elements(i, nontrivial=True):
                lp = X.sk.concat(p, X.sk.trivial_path(v, iso[m]), X.sk.reverse(p))
                loop = sk.reduce_path(sk.concat(P0, self.map_path(lp), P0b))
                images[fs.vertex(i, m)] = Y.value(loop)
        target = {g: self.phi.apply(g) for g in images}
        diff = {g: images[g] for g in images}
        # images must equal w * phi(g) * w^-1 for a single w
        twisted = {g: self.phi.apply_inverse(img) for g, img in images.items()}
        w = inner_conjugator(fs, twisted)
        if w is None:
            raise MarkedGraphError("graph map does not represent the automorphism")
        return self.phi.apply(w)

    # -- germs and gates ------------------------------------------------------------------
    def germ_set(self, v: int) -> list:
        sk, fs = self.domain.sk, self.domain.fs
        j = sk.labels[v]
        germs = []
        for e in sk.germs(v):
            if j is None:
                germs.append((e, 0))
            else:
                for d in fs.group_elements(j):
                    germs.append((e, d))
        return germs

    def germ_path(self, germ: tuple) -> DecoratedPath:
        e, d = germ
        v = self.domain.sk.init(e)
        return DecoratedPath(v, (d, 0), (e,))

    def germ_image(self, germ: tuple, k: int = 1) -> Optional[tuple]:
        """Leading germ of f^k applied to the germ's edge; None when collapsed."""
        p = self.germ_path(germ)
        for _ in range(k):
            p = self.map_path(p)
        if not p.edges:
            return None
        return (p.edges[0], p.decorations[0])

    def gate_structures(self):
        """(sim_f, sim_inf): per-vertex partitions of germs, as dicts
        germ -> representative germ."""
        if self._gates is not None:
            return self._gates
        sk = self.domain.sk
        one: dict = {}
        inf: dict = {}
        depth = 0
        for v in range(sk.num_vertices):
            germs = self.germ_set(v)
            depth = max(depth, len(germs))
        for v in range(sk.num_vertices):
            germs = self.germ_set(v)
            # level-1 partition
            img1 = {}
            for g in germs:
                img1.setdefault(self.germ_image(g, 1), []).append(g)
            for key, block in img1.items():
                if key is None:
                    for g in block:
                        one[g] = g
                else:
                    for g in block:
                        one[g] = block[0]
            # stable partition: union whenever images at some level coincide
            parent = {g: g for g in germs}

            def find(x):
                while parent[x] != x:
                    parent[x] = parent[parent[x]]
                    x = parent[x]
                return x

            paths = {g: self.germ_path(g) for g in germs}
            for _ in range(depth + 1):
                level_img = {}
                for g in germs:
                    paths[g] = self.map_path(paths[g])
                    if paths[g].edges:
                        key = (paths[g].edges[0], paths[g].decorations[0])
                        level_img.setdefault(key, []).append(g)
                for block in level_img.values():
                    r = find(block[0])
                    for g in block[1:]:
                        parent[find(g)] = r
            for g in germs:
                inf[g] = find(g)
        self._gates = (one, inf)
        return self._gates

    def same_gate(self, g1: tuple, g2: tuple, stable: bool = True) -> bool:
        one, inf = self.gate_structures()
        gates = inf if stable else one
        return gates[g1] == gates[g2]

    def turn_is_legal(self, g1: tuple, g2: tuple, stable: bool = True) -> bool:
        if g1 == g2:
            return False
        return not self.same_gate(g1, g2, stable)

    # -- path legality ------------------------------------------------------------------
    def path_turns(self, p: DecoratedPath) -> list:
        """Turns crossed by a path: ((-E_i, 0), (E_{i+1}, d_i)) at interior vertices."""
        turns = []
        for i in range(len(p.edges) - 1):
            turns.append(((-p.edges[i], 0), (p.edges[i + 1], p.decorations[i + 1])))
        return turns

    def loop_turns(self, loop: DecoratedLoop) -> list:
        turns = []
        n = len(loop.steps)
        for i in range(n):
            d, e = loop.steps[(i + 1) % n]
            turns.append(((-loop.steps[i][1], 0), (e, d)))
        return turns

    def count_illegal_turns(self, obj) -> int:
        turns = self.loop_turns(obj) if isinstance(obj, DecoratedLoop) else self.path_turns(obj)
        return sum(0 if self.turn_is_legal(*t) else 1 for t in turns)

    def is_legal(self, obj) -> bool:
        return self.count_illegal_turns(obj) == 0

    def max_legal_subpath(self, obj) -> Fraction:
        """Length of the longest legal subpath (cyclically, for loops; the whole
        loop when every turn is legal)."""
        lengths_of = self.domain.lengths
        if isinstance(obj, DecoratedLoop):
            steps = obj.steps
            n = len(steps)
            turns = self.loop_turns(obj)
            if all(self.turn_is_legal(*t) for t in turns):
                return sum((lengths_of[abs(e) - 1] for _, e in steps), Fraction(0))
            # break at illegal turns: runs of consecutive edges
            runs = []
            cur = [steps[0][1]]
            order = []
            for i in range(n):
                if self.turn_is_legal(*turns[i]):
                    order.append(True)
                else:
                    order.append(False)
            # start from an illegal turn
            start = order.index(False) + 1
            cur_len = Fraction(0)
            best = Fraction(0)
            for k in range(n):
                i = (start + k) % n
                cur_len += lengths_of[abs(steps[i][1]) - 1]
                best = max(best, cur_len)
                if not order[i]:
                    cur_len = Fraction(0)
            return best
        p = obj
        best = Fraction(0)
        cur = Fraction(0)
        for i, e in enumerate(p.edges):
            cur += lengths_of[abs(e) - 1]
            best = max(best, cur)
            if i < len(p.edges) - 1:
                t = ((-e, 0), (p.edges[i + 1], p.decorations[i + 1]))
                if not self.turn_is_legal(*t):
                    cur = Fraction(0)
        return best


def is_train_track(f: GraphMap):
    """Both train-track conditions against the stable gate structure; returns
    (ok, violation) with the offending edge/turn as witness."""
    sk = f.domain.sk
    for e in range(1, sk.num_edges + 1):
        if not f.edge_images[e].edges:
            return False, ("collapsed-edge", e)
    for e in range(1, sk.num_edges + 1):
        img = f.edge_images[e]
        for t in f.path_turns(img):
            if not f.turn_is_legal(*t):
                return False, ("illegal-image-turn", e, t)
    for v in range(sk.num_vertices):
        germs = f.germ_set(v)
        for g1, g2 in itertools.combinations(germs, 2):
            if f.same_gate(g1, g2):
                continue
            i1, i2 = f.germ_image(g1, 1), f.germ_image(g2, 1)
            if i1 is None or i2 is None:
                continue
            if i1 == i2 or f.same_gate(i1, i2):
                return False, ("gate-collision", v, (g1, g2))
    return True, None


# ---------------------------------------------------------------------------
# building representatives
# ---------------------------------------------------------------------------

def build_map(X: MarkedGraph, phi: FPAutomorphism, codomain: Optional[MarkedGraph] = None
              ) -> GraphMap:
    """Topological representative of phi at X: push edges through the marking,
    apply phi, pull back through the inverse marking, and straighten."""
    Y = codomain if codomain is not None else X
    fs = X.fs
    skX, skY = X.sk, Y.sk
    label_vertex_Y = {skY.labels[v]: v for v in range(skY.num_vertices)
                      if skY.labels[v] is not None}
    vertex_images = []
    vertex_maps = {}
    access_images = {}
    for v in range(skX.num_vertices):
        j = skX.labels[v]
        if j is None:
            vertex_images.append(Y.basepoint)
            vertex_maps[v] = (0,)
            access_images[v] = skY.trivial_path(Y.basepoint)
            continue
        uX, i, sigmaX = X.kappa[j]
        gi = phi.group_images[i - 1]
        t = gi.target
        uY = None
        jprime = None
        for lab, (u, tgt, sigma) in Y.kappa.items():
            if tgt == t:
                uY, jprime, sigmaY = u, lab, sigma
                break
        fv = label_vertex_Y[jprime]
        vertex_images.append(fv)
        # mu: table(j) -> table(jprime) with sigmaY(mu(d)) = iso_phi(sigmaX(d))
        inv_sigmaY = [0] * len(sigmaY)
        for d, im in enumerate(sigmaY):
            inv_sigmaY[im] = d
        vertex_maps[v] = tuple(inv_sigmaY[gi.iso[sigmaX[d]]] for d in range(len(sigmaX)))
        word = phi.apply(uX) * gi.conj * uY.inverse()
        B = skY.reduce_path(skY.concat(Y.based_path_of_word(word),
                                       Y.treepath(Y.basepoint, fv)))
        access_images[v] = B
    edge_images = {}
    for e in range(1, skX.num_edges + 1):
        u, x = skX.edge_ends[e - 1]
        ve = X.omega.get(e, fs.identity())
        mid = Y.based_path_of_word(phi.apply(ve))
        img = skY.reduce_path(skY.concat(skY.reverse(access_images[u]), mid,
                                         access_images[x]))
        edge_images[e] = img
    return GraphMap(X, Y, phi, vertex_images, vertex_maps, edge_images,
                    basepoint_path=access_images[X.basepoint])


def transfer_map(X: MarkedGraph, Y: MarkedGraph, phi: Optional[FPAutomorphism] = None
                 ) -> GraphMap:
    """An O-map X -> Y realizing phi (default: the identity change of marking)."""
    from .freeprod import identity_automorphism
    return build_map(X, phi or identity_automorphism(X.fs), codomain=Y)


# ---------------------------------------------------------------------------
# transition matrices and Perron-Frobenius enclosures
# ---------------------------------------------------------------------------

def transition_matrix(f: GraphMap) -> tuple:
    n = f.domain.sk.num_edges
    M = []
    for e in range(1, n + 1):
        row = [0] * n
        for x in f.edge_images[e].edges:
            row[abs(x) - 1] += 1
        M.append(tuple(row))
    return tuple(M)


def transition_matrix_power(f: GraphMap, k: int) -> tuple:
    """Crossing counts of [f^k(e)] (equals M^k exactly when no cancellation)."""
    n = f.domain.sk.num_edges
    M = []
    for e in range(1, n + 1):
        p = f.iterate_path(DecoratedPath(f.domain.sk.init(e), (0, 0), (e,)), k)
        row = [0] * n
        for x in p.edges:
            row[abs(x) - 1] += 1
        M.append(tuple(row))
    return tuple(M)


def mat_mul(A, B):
    n = len(A)
    return tuple(tuple(sum(A[i][k] * B[k][j] for k in range(n)) for j in range(n))
                 for i in range(n))


def is_irreducible(M) -> bool:
    n = len(M)
    if n == 1:
        return M[0][0] >= 0  # a single orbit is trivially irreducible
    reach = [[M[i][j] > 0 for j in range(n)] for i in range(n)]
    for k in range(n):
        for i in range(n):
            for j in range(n):
                reach[i][j] = reach[i][j] or (reach[i][k] and reach[k][j])
    return all(reach[i][j] for i in range(n) for j in range(n) if i != j) and \
        all(any(reach[i][j] for j in range(n)) for i in range(n))


def is_primitive(M) -> bool:
    n = len(M)
    if all(x == 0 for row in M for x in row):
        return False
    bound = (n - 1) ** 2 + 1
    B = M
    for _ in range(bound):
        if all(x > 0 for row in B for x in row):
            return True
        B = mat_mul(B, M)
    return all(x > 0 for row in B for x in row)


def pf_enclosure(M, tol=Fraction(1, 10**9), max_iter=100000):
    """Certified Collatz-Wielandt enclosure of the PF eigenvalue, plus an
    eigenvector enclosure (hull of the last two normalized iterates, widened by
    the value gap; the value bounds are the certified part).

    min_i (Mx)_i/x_i <= lambda <= max_i (Mx)_i/x_i holds for every positive x
    and any non-negative M; iterating with M+I contracts the gap whenever M is
    irreducible.  The bounds narrow monotonically."""
    n = len(M)
    if all(x == 0 for row in M for x in row):
        raise ZeroMatrix("zero transition matrix")
    tol = Fraction(tol)
    x = [Fraction(1)] * n
    lo, hi = None, None
    prev_y = None
    y = [Fraction(1, n)] * n
    for _ in range(max_iter):
        Mx = [sum(M[i][j] * x[j] for j in range(n)) for i in range(n)]
        ratios = [Mx[i] / x[i] for i in range(n)]
        cur_lo, cur_hi = min(ratios), max(ratios)
        lo = cur_lo if lo is None else max(lo, cur_lo)
        hi = cur_hi if hi is None else min(hi, cur_hi)
        if hi - lo <= tol:
            break
        nxt = [Mx[i] + x[i] for i in range(n)]
        t2 = sum(nxt)
        prev_y = y
        x = [v / t2 for v in nxt]
        y = x
    gap = hi - lo
    pj = prev_y or y
    eigvec = tuple(CertifiedValue(max(Fraction(0), min(a, b) - gap), max(a, b) + gap)
                   for a, b in zip(pj, y))
    return CertifiedValue(lo, hi), eigvec


# ---------------------------------------------------------------------------
# BCC, critical constant, growth
# ---------------------------------------------------------------------------

def bcc_bound(f: GraphMap) -> Fraction:
    """BCC(f) <= Lip(f) vol(domain) - vol(codomain) for codomain in the space."""
    return f.lip() * f.domain.volume() - f.codomain.volume()


def random_decorated_path(X: MarkedGraph, rng: random.Random, length: int) -> DecoratedPath:
    sk, fs = X.sk, X.fs
    v = rng.randrange(sk.num_vertices)
    decs = []
    edges = []
    j = sk.labels[v]
    decs.append(rng.randrange(fs.group_order(j)) if j is not None else 0)
    cur = v
    for _ in range(length):
        opts = sk.germs(cur)
        if edges:
            allowed = [e for e in opts if not (e == -edges[-1] and decs[-1] == 0)]
        else:
            allowed = opts
        if not allowed:
            break
        e = rng.choice(allowed)
        edges.append(e)
        cur = sk.term(e)
        j = sk.labels[cur]
        decs.append(rng.randrange(fs.group_order(j)) if j is not None else 0)
    return sk.reduce_path(DecoratedPath(v, tuple(decs), tuple(edges)))


def bcc_measured(f: GraphMap, samples: int = 100, seed: int = 7,
                 length: int = 12) -> Fraction:
    """Max midpoint deviation over sampled split paths; a lower bound for BCC."""
    rng = random.Random(seed)
    sk = f.domain.sk
    best = Fraction(0)
    for _ in range(samples):
        p = random_decorated_path(f.domain, rng, rng.randrange(2, length))
        if len(p.edges) < 2:
            continue
        whole = f.path_length(f.map_path(p))
        for i in range(1, len(p.edges)):
            left = DecoratedPath(p.start, p.decorations[:i + 1], p.edges[:i])
            verts = sk.path_vertices(p)
            right = DecoratedPath(verts[i], p.decorations[i:], p.edges[i:])
            l1 = f.path_length(f.map_path(left))
            l2 = f.path_length(f.map_path(right))
            dev = (l1 + l2 - whole) / 2
            best = max(best, dev)
    return best


def critical_constant(f: GraphMap) -> Fraction:
    """cc(f) = 2 BCC(f) / (Lip(f) - 1), with the certified BCC upper bound."""
    lip = f.lip()
    if lip <= 1:
        raise NotExpanding("critical constant needs Lip(f) > 1")
    return 2 * bcc_bound(f) / (lip - 1)


def grow_check(f: GraphMap, p: DecoratedPath, n: int) -> bool:
    """Legal subpath longer than cc+1 forces len [f^n p] > Lip^n."""
    C = critical_constant(f) + 1
    if f.max_legal_subpath(p) <= C:
        return True  # antecedent fails; nothing to check
    q = f.iterate_path(p, n)
    return f.path_length(q) > f.lip() ** n


# ---------------------------------------------------------------------------
# Nielsen paths
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class NielsenCertificate:
    path: DecoratedPath
    n: int
    m: int
    translator: FreeProductWord

    def kind(self) -> str:
        if self.m == 0:
            return "Np" if self.n == 1 else "pNp"
        return "ppNp"


def _path_data(p: DecoratedPath) -> tuple:
    # endpoint decorations are frame choices, not intrinsic to the path
    return (p.edges, p.decorations[1:-1] if len(p.decorations) > 2 else ())


def detect_ppnp(f: GraphMap, p: DecoratedPath, N: int) -> Optional[NielsenCertificate]:
    """Search [f^{n+m}(p)] = g [f^m(p)] with n, m <= N; the translator is read
    off the tracked basepoint-anchors of the iterates."""
    X = f.domain
    sk = X.sk
    p = sk.reduce_path(p)
    anchors = []
    paths = []
    A = X.treepath(X.basepoint, p.start)
    P = p
    for k in range(2 * N + 1):
        # absorb the leading decoration into the anchor so frames line up
        if P.decorations[0] != 0:
            A = sk.reduce_path(sk.concat(A, sk.trivial_path(P.start, P.decorations[0])))
            P = DecoratedPath(P.start, (0,) + P.decorations[1:], P.edges)
        anchors.append(A)
        paths.append(P)
        if k == 2 * N:
            break
        A = sk.reduce_path(sk.concat(f.basepoint_path, f.map_path(A)))
        P = f.map_path(P)
    for m in range(N + 1):
        for n in range(1, N + 1):
            if not paths[m].edges or not paths[m + n].edges:
                continue
            if _path_data(paths[m + n]) == _path_data(paths[m]):
                g = X.value(anchors[m + n]) * X.value(anchors[m]).inverse()
                return NielsenCertificate(path=p, n=n, m=m, translator=g)
    return None


def verify_nielsen(f: GraphMap, cert: NielsenCertificate) -> bool:
    X = f.domain
    sk = X.sk
    P = sk.reduce_path(cert.path)
    A = X.treepath(X.basepoint, P.start)
    seq = []
    for k in range(cert.m + cert.n + 1):
        if P.decorations[0] != 0:
            A = sk.reduce_path(sk.concat(A, sk.trivial_path(P.start, P.decorations[0])))
            P = DecoratedPath(P.start, (0,) + P.decorations[1:], P.edges)
        seq.append((A, P))
        A = sk.reduce_path(sk.concat(f.basepoint_path, f.map_path(A)))
        P = f.map_path(P)
    Am, Pm = seq[cert.m]
    An, Pn = seq[cert.m + cert.n]
    if _path_data(Pm) != _path_data(Pn):
        return False
    g = X.value(An) * X.value(Am).inverse()
    return g == cert.translator


# ---------------------------------------------------------------------------
# the uniform trichotomy
# ---------------------------------------------------------------------------

FEWER_ILLEGAL = "FEWER_ILLEGAL"
LONG_LEGAL = "LONG_LEGAL"
PPNP_SPLITTING = "PPNP_SPLITTING"
INCONCLUSIVE = "INCONCLUSIVE"


@dataclass
class TrichotomyConstants:
    pieces: int          # M0 - 1 distinct pieces (unoriented)
    M0: int
    m: int
    Qm: int              # computed over iterates up to the cap only
    Qm_capped: bool
    N0: int
    N: int
    M: int


def _piece_data(p: DecoratedPath) -> tuple:
    d = _path_data(p)
    rev = (tuple(-e for e in reversed(p.edges)),
           tuple(reversed(d[1])) if d[1] else ())
    return min(d, rev)


def trichotomy_constants(f: GraphMap, qcap: int = 12) -> TrichotomyConstants:
    sk = f.domain.sk
    pieces = set()
    base_paths = []
    for e in range(1, sk.num_edges + 1):
        base_paths.append(f.edge_images[e])
    for v in range(sk.num_vertices):
        if sk.labels[v] is not None:
            continue
        germs = [(e, 0) for e in sk.germs(v)]
        for g1, g2 in itertools.combinations(germs, 2):
            if f.turn_is_legal(g1, g2):
                pth = DecoratedPath(sk.term(g1[0]), (0, 0, 0), (-g1[0], g2[0]))
                base_paths.append(f.map_path(pth))
    for p in base_paths:
        n = len(p.edges)
        for i in range(n):
            for j in range(i + 1, n + 1):
                sub = DecoratedPath(sk.path_vertices(p)[i],
                                    p.decorations[i:j + 1], p.edges[i:j])
                pieces.add(_piece_data(sub))
    M0 = len(pieces) + 1
    m = (M0 ** 2 + M0) ** 2
    # Q_m over iterates up to the cap (the true m is astronomically large)
    turns = set()
    kmax = min(m, qcap)
    iterates = [DecoratedPath(sk.init(e), (0, 0), (e,)) for e in range(1, sk.num_edges + 1)]
    for _ in range(kmax):
        iterates = [f.map_path(p) for p in iterates]
        for p in iterates:
            verts = sk.path_vertices(p)
            for i in range(1, len(p.edges)):
                if sk.labels[verts[i]] is not None:
                    turns.add(((-p.edges[i - 1], 0), (p.edges[i], p.decorations[i])))
    Qm = len(turns)
    N0 = m * (Qm + 2) ** 2 + 1
    N = m * N0
    return TrichotomyConstants(pieces=M0 - 1, M0=M0, m=m, Qm=Qm, Qm_capped=(kmax < m),
                               N0=N0, N=N, M=5 * N * N + N)


@dataclass
class TrichotomyResult:
    outcome: str
    step: int
    data: dict
    constants: TrichotomyConstants


def trichotomy(f: GraphMap, L, cap: int = 40, nielsen_cap: int = 8) -> TrichotomyResult:
    """Classify a loop or path under iteration: illegal turns drop, a long legal
    segment appears, or the object splits into pre-periodic Nielsen pieces.

    Because a train-track map never creates illegal turns, conditions observed
    at step k <= M remain valid at the paper's (astronomical) step M.
    """
    if f.lip() <= 1:
        raise NotTrainTrack("trichotomy requires an expanding train track map")
    ok, witness = is_train_track(f)
    if not ok:
        raise NotTrainTrack(f"not a train track map: {witness}")
    consts = trichotomy_constants(f)
    C = critical_constant(f) + 1
    base_illegal = f.count_illegal_turns(L)
    cur = L
    for k in range(1, cap + 1):
        cur = f.map_loop(cur) if isinstance(cur, DecoratedLoop) else f.map_path(cur)
        ill = f.count_illegal_turns(cur)
        if ill < base_illegal:
            return TrichotomyResult(FEWER_ILLEGAL, k, {"illegal": ill}, consts)
        if f.max_legal_subpath(cur) > C:
            return TrichotomyResult(LONG_LEGAL, k, {"legal_length": f.max_legal_subpath(cur)},
                                    consts)
        split = _try_ppnp_splitting(f, cur, nielsen_cap)
        if split is not None:
            return TrichotomyResult(PPNP_SPLITTING, k, {"pieces": split}, consts)
    return TrichotomyResult(INCONCLUSIVE, cap, {}, consts)


def _loop_key(loop: DecoratedLoop):
    return loop.canonical()


def _loop_reverse_key(f: GraphMap, loop: DecoratedLoop):
    sk = f.domain.sk
    v = sk.init(loop.steps[0][1])
    decs = tuple(d for d, _ in loop.steps) + (0,)
    based = DecoratedPath(v, decs, tuple(e for _, e in loop.steps))
    rev, _ = sk.cyclic_loop(sk.reverse(based))
    return rev.canonical()


def _try_ppnp_splitting(f: GraphMap, obj, N: int):
    """Certify pre-periodic Nielsen behaviour.

    For a periodic line: the axis splits into ppNp's exactly when it is an
    eventually f-periodic line, i.e. [f^{m+n}(L)] equals [f^m(L)] as an
    unoriented cyclic loop (the genuine Nielsen endpoints may be edge-interior,
    so the loop-level periodicity is the robust certificate).  For a finite
    path: a whole-path ppNp certificate."""
    if isinstance(obj, DecoratedLoop):
        keys = []
        cur = obj
        for k in range(2 * N + 1):
            keys.append((_loop_key(cur), _loop_reverse_key(f, cur)))
            cur = f.map_loop(cur)
        for m in range(N + 1):
            for n in range(1, N + 1):
                fwd, bwd = keys[m + n]
                if fwd == keys[m][0] or fwd == keys[m][1]:
                    return {"m": m, "n": n,
                            "reversed": fwd != keys[m][0]}
        return None
    cert = detect_ppnp(f, obj, N)
    if cert is None:
        return None
    return {"m": cert.m, "n": cert.n, "translator": cert.translator}


# ---------------------------------------------------------------------------
# Lip of iterates
# ---------------------------------------------------------------------------

def lip_power(f: GraphMap, n: int) -> Fraction:
    """Lip(f^n) computed from iterated edge images (exact on rational metrics)."""
    sk = f.domain.sk
    best = Fraction(0)
    for e in range(1, sk.num_edges + 1):
        p = f.iterate_path(DecoratedPath(sk.init(e), (0, 0), (e,)), n)
        best = max(best, f.path_length(p) / f.domain.lengths[e - 1])
    return best


# ---------------------------------------------------------------------------
# train-track search
# ---------------------------------------------------------------------------

@dataclass
class TrainTrack:
    point: MarkedGraph
    map: GraphMap
    pf: CertifiedValue
    eigvec: tuple
    matrix: tuple
    steps: int
    trail: tuple


def _invariant_sink_sets(M) -> list:
    """Minimal non-empty successor-closed edge-orbit sets (sink SCCs) of the
    transition digraph; each is f-invariant."""
    n = len(M)
    adj = [[j for j in range(n) if M[i][j] > 0] for i in range(n)]
    index = {}
    low = {}
    on = [False] * n
    stack = []
    sccs = []
    counter = [0]

    def strongconnect(v):
        work = [(v, 0)]
        while work:
            node, pi = work[-1]
            if pi == 0:
                index[node] = low[node] = counter[0]
                counter[0] += 1
                stack.append(node)
                on[node] = True
            recurse = False
            for i in range(pi, len(adj[node])):
                w = adj[node][i]
                if w not in index:
                    work[-1] = (node, i + 1)
                    work.append((w, 0))
                    recurse = True
                    break
                elif on[w]:
                    low[node] = min(low[node], index[w])
            if recurse:
                continue
            if low[node] == index[node]:
                comp = []
                while True:
                    w = stack.pop()
                    on[w] = False
                    comp.append(w)
                    if w == node:
                        break
                sccs.append(comp)
            work.pop()
            if work:
                parent = work[-1][0]
                low[parent] = min(low[parent], low[node])

    for v in range(n):
        if v not in index:
            strongconnect(v)
    comp_of = {}
    for ci, comp in enumerate(sccs):
        for v in comp:
            comp_of[v] = ci
    sinks = []
    for ci, comp in enumerate(sccs):
        if all(comp_of[w] == ci for v in comp for w in adj[v]):
            sinks.append(sorted(e + 1 for e in comp))
    return sinks


def _subgraph_hyperbolic_content(X: MarkedGraph, edges: list) -> bool:
    """Whether the subgraph spanned by `edges` contains a cycle or a component
    with two non-free vertices (i.e. the axis of a hyperbolic element)."""
    sk = X.sk
    par = list(range(sk.num_vertices))

    def find(a):
        while par[a] != a:
            par[a] = par[par[a]]
            a = par[a]
        return a

    for e in edges:
        u, v = sk.edge_ends[e - 1]
        ru, rv = find(u), find(v)
        if ru == rv:
            return True  # cycle
        par[ru] = rv
    nonfree = {}
    for v in range(sk.num_vertices):
        if sk.labels[v] is not None and any(v in sk.edge_ends[e - 1] for e in edges):
            r = find(v)
            if r in nonfree:
                return True
            nonfree[r] = v
    return False


def _fold_pair_from_witness(f: GraphMap, witness):
    """Resolve a train-track violation to two germs with equal one-step images
    (the foldable configuration), plus the length of the shared image prefix."""
    if witness[0] == "illegal-image-turn":
        g1, g2 = witness[2]
    elif witness[0] == "gate-collision":
        g1, g2 = witness[2][0], witness[2][1]
    else:
        return None
    # walk down until the one-step images coincide
    for _ in range(64):
        i1, i2 = f.germ_image(g1, 1), f.germ_image(g2, 1)
        if i1 is None or i2 is None:
            return None
        if i1 == i2:
            break
        g1, g2 = i1, i2
        if g1 == g2:
            return None
    else:
        return None
    if g1 == g2 or abs(g1[0]) == abs(g2[0]):
        return None
    p1 = f.map_path(f.germ_path(g1))
    p2 = f.map_path(f.germ_path(g2))
    sk = f.codomain.sk
    c = Fraction(0)
    k = 0
    while k < len(p1.edges) and k < len(p2.edges) and p1.edges[k] == p2.edges[k] \
            and p1.decorations[k] == p2.decorations[k]:
        c += f.codomain.lengths[abs(p1.edges[k]) - 1]
        k += 1
    if c == 0:
        return None
    s1 = min(c / f.edge_stretch(g1[0]), f.domain.lengths[abs(g1[0]) - 1])
    s2 = min(c / f.edge_stretch(g2[0]), f.domain.lengths[abs(g2[0]) - 1])
    return g1, g2, s1, s2


def find_train_track(X0: MarkedGraph, phi: FPAutomorphism, budget: int = 60,
                     tol=Fraction(1, 10**9)) -> TrainTrack:
    """Bounded heuristic: optimize the metric in the current simplex, collapse
    pretrivial / inessential invariant forests, fold one illegal turn at a
    time; succeed when the map is train track and the displacement meets the
    PF enclosure of its transition matrix.

    Raises ReducibleDetected when an invariant subgraph with a hyperbolic axis
    appears (certifying reducibility), TrainTrackFailure past the budget."""
    tol = Fraction(tol)
    X = X0
    trail = []
    for step in range(budget):
        res = min_displacement_on_simplex(X, phi, tol=min(tol, Fraction(1, 10**12)))
        if res.interior:
            X = X.with_lengths(res.lengths)
            trail.append(("optimize", X.simplex_key()[:40]))
        else:
            zeros = [i + 1 for i, L in enumerate(res.lengths) if L == 0]
            collapsed = False
            if zeros:
                try:
                    X = X.collapse_forest(zeros)
                    trail.append(("collapse-face", tuple(zeros)))
                    collapsed = True
                except MarkedGraphError:
                    pass
            if not collapsed:
                floor = min(L for L in res.lengths if L > 0) / 1000
                X = X.with_lengths([L if L > 0 else floor for L in res.lengths]).normalized()
                trail.append(("bump-face", None))
        f = build_map(X, phi)
        trivial = [e for e in range(1, X.sk.num_edges + 1) if not f.edge_images[e].edges]
        if trivial:
            try:
                X = X.collapse_forest(trivial)
                trail.append(("collapse-pretrivial", tuple(trivial)))
                continue
            except MarkedGraphError:
                raise TrainTrackFailure("pretrivial edges do not form a forest")
        ok, witness = is_train_track(f)
        M = transition_matrix(f)
        if ok:
            pf, vec = pf_enclosure(M, tol=tol / 4, max_iter=2000)
            lam = displacement(X, phi)
            if pf.width() <= tol and pf.lo - tol <= lam <= pf.hi + tol:
                return TrainTrack(point=X, map=f, pf=pf, eigvec=vec, matrix=M,
                                  steps=step + 1, trail=tuple(trail))
        if not is_irreducible(M):
            handled = False
            for S in _invariant_sink_sets(M):
                if len(S) == X.sk.num_edges:
                    continue
                if _subgraph_hyperbolic_content(X, S):
                    raise ReducibleDetected(S)
                try:
                    X = X.collapse_forest(S)
                    trail.append(("collapse-invariant", tuple(S)))
                    handled = True
                    break
                except MarkedGraphError:
                    continue
            if handled:
                continue
        if not ok:
            pair = _fold_pair_from_witness(f, witness)
            if pair is None:
                raise TrainTrackFailure(f"no foldable configuration for {witness}")
            g1, g2, s1, s2 = pair
            X = fold_turn(X, g1, g2, s1, s2)
            trail.append(("fold", (g1, g2)))
            continue
    raise TrainTrackFailure(f"budget {budget} exhausted; trail={trail[-5:]}")


# ---------------------------------------------------------------------------
# cylinders of imprimitive train tracks
# ---------------------------------------------------------------------------

@dataclass
class CylinderDecomposition:
    period: int
    blocks: tuple            # tuple of sorted edge tuples
    block_permutation: tuple  # image block index of each block under f
    power_positive: int       # s with M^s block-positive
    witnesses: tuple          # per block: tuple of (component edges, hyperbolic word)


def cylinder_decomposition(f: GraphMap) -> CylinderDecomposition:
    M = transition_matrix(f)
    if not is_irreducible(M):
        raise ReducibleMatrix("cylinder decomposition needs an irreducible matrix")
    n = len(M)
    # period of the strongly connected digraph via BFS layering
    import math
    level = {0: 0}
    queue = [0]
    adj = [[j for j in range(n) if M[i][j] > 0] for i in range(n)]
    while queue:
        u = queue.pop(0)
        for w in adj[u]:
            if w not in level:
                level[w] = level[u] + 1
                queue.append(w)
    p = 0
    for u in range(n):
        for w in adj[u]:
            p = math.gcd(p, level[u] + 1 - level[w])
    p = abs(p) or 1
    blocks = {}
    for e in range(n):
        blocks.setdefault(level[e] % p, []).append(e + 1)
    block_list = [tuple(sorted(blocks[b])) for b in sorted(blocks)]
    # f permutes the blocks backwards by one level
    block_of = {}
    for bi, bl in enumerate(block_list):
        for e in bl:
            block_of[e] = bi
    perm = []
    for bl in block_list:
        img_edges = {abs(x) for x in f.edge_images[bl[0]].edges}
        perm.append(block_of[next(iter(img_edges))])
    # power with positive diagonal blocks
    s = p
    B = M
    for _ in range(p - 1):
        B = mat_mul(B, M)
    P = B
    limit = p * ((n - 1) ** 2 + 2)
    while s <= limit:
        good = True
        for bl in block_list:
            for i in bl:
                for j in bl:
                    if P[i - 1][j - 1] == 0:
                        good = False
        if good:
            break
        P = mat_mul(P, B)
        s += p
    witnesses = []
    X = f.domain
    sk = X.sk
    for bl in block_list:
        comps = _subgraph_components(sk, bl)
        wit = []
        for comp_edges, comp_verts in comps:
            word = _hyperbolic_in_subgraph(X, comp_edges, comp_verts)
            wit.append((tuple(sorted(comp_edges)), word))
        witnesses.append(tuple(wit))
    return CylinderDecomposition(period=p, blocks=tuple(block_list),
                                 block_permutation=tuple(perm), power_positive=s,
                                 witnesses=tuple(witnesses))


def _subgraph_components(sk, edges):
    par = {}

    def find(a):
        par.setdefault(a, a)
        while par[a] != a:
            par[a] = par.setdefault(par[a], par[a])
            a = par[a]
        return a

    for e in edges:
        u, v = sk.edge_ends[e - 1]
        par[find(u)] = find(v)
    comps = {}
    for e in edges:
        r = find(sk.edge_ends[e - 1][0])
        comps.setdefault(r, ([], set()))
        comps[r][0].append(e)
        comps[r][1].update(sk.edge_ends[e - 1])
    return [(es, vs) for es, vs in comps.values()]


def _hyperbolic_in_subgraph(X: MarkedGraph, edges, verts):
    """A hyperbolic element whose axis lies in the given subgraph: a cycle loop
    when one exists, else a doubly-degenerate barbell between two of its
    non-free vertices."""
    sk = X.sk
    edges = sorted(edges)
    # spanning structure
    tree = []
    par = {}

    def find(a):
        par.setdefault(a, a)
        while par[a] != a:
            a0 = par[a]
            par[a] = par.setdefault(a0, a0)
            a = par[a]
        return a

    extra = None
    for e in edges:
        u, v = sk.edge_ends[e - 1]
        if find(u) == find(v):
            extra = e
            break
        par[find(u)] = find(v)
        tree.append(e)
    def subgraph_path(a, b):
        # BFS within tree edges
        prev = {a: None}
        q = [a]
        while q:
            u = q.pop(0)
            if u == b:
                break
            for e in tree:
                x, y = sk.edge_ends[e - 1]
                for s, t in ((x, y), (y, x)):
                    if s == u and t not in prev:
                        prev[t] = (u, e if s == x else -e)
                        q.append(t)
        out = []
        cur = b
        while prev[cur] is not None:
            u, e = prev[cur]
            out.append(e)
            cur = u
        return list(reversed(out))

    if extra is not None:
        u, v = sk.edge_ends[extra - 1]
        cyc = [extra] + [-e for e in reversed(subgraph_path(u, v))]
        start = u
        acc = X.treepath(X.basepoint, start)
        loop = DecoratedPath(start, (0,) * (len(cyc) + 1), tuple(cyc))
        based = sk.concat(acc, loop, sk.reverse(acc))
        return X.value(based)
    nonfree = [v for v in sorted(verts) if sk.labels[v] is not None]
    if len(nonfree) >= 2:
        pth = subgraph_path(nonfree[0], nonfree[1])
        a = 1  # any non-trivial element index works in a finite group
        b = 1
        acc = X.treepath(X.basepoint, nonfree[0])
        arc = DecoratedPath(nonfree[0], (a,) + (0,) * len(pth), tuple(pth))
        back = sk.reverse(DecoratedPath(nonfree[0], (0,) * (len(pth) + 1), tuple(pth)))
        mid = sk.concat(arc, sk.trivial_path(nonfree[1], b), back)
        based = sk.concat(acc, mid, sk.reverse(acc))
        return X.value(based)
    raise MarkedGraphError("cylinder without hyperbolic content")


# ---------------------------------------------------------------------------
# the ratio implication harness
# ---------------------------------------------------------------------------

def ratio_legal_check(f_Y: GraphMap, X: MarkedGraph, phi: FPAutomorphism,
                      g: FreeProductWord, n: int, C1) -> dict:
    """If l_X(phi^n g)/l_X(g) < 1/D' with D' = (C1/a_Y + 1) Lambda(X,Y) Lambda(Y,X),
    then the axis of g in Y has an f_Y-legal subpath of length >= C1."""
    C1 = Fraction(C1)
    Y = f_Y.domain
    a_Y = Y.shortest_edge()
    lam_xy = stretch(X, Y)
    lam_yx = stretch(Y, X)
    Dp = (C1 / a_Y + 1) * lam_xy * lam_yx
    lx = X.translation_length(g)
    ln = X.translation_length(phi.power(n).apply(g))
    antecedent = ln * Dp < lx
    loop = Y.loop_of(g)
    fully_legal = f_Y.count_illegal_turns(loop) == 0
    legal_len = f_Y.max_legal_subpath(loop)
    consequent = fully_legal or legal_len >= C1
    return {"antecedent": antecedent, "consequent": consequent,
            "holds": (not antecedent) or consequent,
            "Dprime": Dp, "legal_length": legal_len}
