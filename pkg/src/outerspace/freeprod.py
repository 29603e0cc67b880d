"""Exact arithmetic in a free product G = G_1 * ... * G_k * F_r.

Vertex groups are finite and given by multiplication tables; the free part is
generated by letters a_1 .. a_r.  Elements are kept in normal form: an
alternating sequence of syllables, where a syllable is either a power of one
free letter or a non-identity element of one vertex group, and adjacent
syllables never merge.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence


class IndexOutOfRange(ValueError):
    """A syllable refers to a vertex group, element or letter that does not exist."""


class UnverifiedInverse(ValueError):
    """The supplied inverse images do not invert the automorphism up to inner."""


class EllipticElement(ValueError):
    """Operation requires a hyperbolic element but got an elliptic one."""


@dataclass(frozen=True)
class FreeLetter:
    """Syllable a_index^power with power != 0."""

    index: int
    power: int


@dataclass(frozen=True)
class VertexElement:
    """Syllable: non-identity element `element` of vertex group `group`."""

    group: int
    element: int


Syllable = "FreeLetter | VertexElement"


def _check_table(table: Sequence[Sequence[int]]) -> None:
    n = len(table)
    if n == 0:
        raise ValueError("empty multiplication table")
    for row in table:
        if len(row) != n or any(not (0 <= x < n) for x in row):
            raise ValueError("multiplication table is not square over 0..n-1")
    # identity is element 0
    for a in range(n):
        if table[0][a] != a or table[a][0] != a:
            raise ValueError("element 0 is not an identity")
    # inverses exist
    for a in range(n):
        if not any(table[a][b] == 0 for b in range(n)):
            raise ValueError(f"element {a} has no inverse")
    # associativity, exhaustive (tables are small)
    for a in range(n):
        for b in range(n):
            for c in range(n):
                if table[table[a][b]][c] != table[a][table[b][c]]:
                    raise ValueError("multiplication table is not associative")


class FreeFactorSystem:
    """The ambient group data: k finite vertex groups plus free rank r.

    Tables use index 0 for the identity.  rank = k + r must be at least 2 so
    that the deformation space is non-trivial and hyperbolic elements exist.
    """

    def __init__(self, vertex_group_tables: Sequence[Sequence[Sequence[int]]],
                 free_rank: int, group_names: Optional[Sequence[str]] = None):
        self.tables = tuple(tuple(tuple(row) for row in t) for t in vertex_group_tables)
        self.free_rank = int(free_rank)
        for t in self.tables:
            _check_table(t)
        if self.free_rank < 0:
            raise ValueError("free rank must be non-negative")
        if len(self.tables) + self.free_rank < 2:
            raise ValueError("rank k + r must be at least 2")
        self.num_groups = len(self.tables)
        self.group_names = tuple(group_names) if group_names else tuple(
            f"G{i}" for i in range(1, self.num_groups + 1))
        self._inverses = tuple(
            tuple(next(b for b in range(len(t)) if t[a][b] == 0) for a in range(len(t)))
            for t in self.tables)

    # -- vertex group arithmetic -------------------------------------------------
    def group_order(self, i: int) -> int:
        return len(self.tables[i - 1])

    def group_mul(self, i: int, a: int, b: int) -> int:
        return self.tables[i - 1][a][b]

    def group_inv(self, i: int, a: int) -> int:
        return self._inverses[i - 1][a]

    def group_elements(self, i: int, nontrivial: bool = False) -> range:
        return range(1 if nontrivial else 0, self.group_order(i))

    # -- word constructors --------------------------------------------------------
    def identity(self) -> "FreeProductWord":
        return FreeProductWord(self, ())

    def letter(self, index: int, power: int = 1) -> "FreeProductWord":
        return self.word([FreeLetter(index, power)])

    def vertex(self, group: int, element: int) -> "FreeProductWord":
        return self.word([VertexElement(group, element)])

    def word(self, syllables: Iterable) -> "FreeProductWord":
        return normalize(self, syllables)

    def generators(self) -> list["FreeProductWord"]:
        """All standard generators: every non-trivial vertex element, every letter."""
        gens = [self.vertex(i, m) for i in range(1, self.num_groups + 1)
                for m in self.group_elements(i, nontrivial=True)]
        gens += [self.letter(j) for j in range(1, self.free_rank + 1)]
        return gens

    def rank(self) -> int:
        return self.num_groups + self.free_rank

    def __repr__(self) -> str:
        gs = " * ".join(self.group_names)
        free = f"F{self.free_rank}" if self.free_rank else ""
        return f"FreeFactorSystem({' * '.join(x for x in (gs, free) if x)})"


def _validate_syllable(fs: FreeFactorSystem, s) -> None:
    if isinstance(s, FreeLetter):
        if not (1 <= s.index <= fs.free_rank):
            raise IndexOutOfRange(f"free letter index {s.index} out of range")
    elif isinstance(s, VertexElement):
        if not (1 <= s.group <= fs.num_groups):
            raise IndexOutOfRange(f"vertex group index {s.group} out of range")
        if not (0 <= s.element < fs.group_order(s.group)):
            raise IndexOutOfRange(f"element {s.element} not in group {s.group}")
    else:
        raise TypeError(f"not a syllable: {s!r}")


def normalize(fs: FreeFactorSystem, raw: Iterable) -> "FreeProductWord":
    """Unique normal form: merge adjacent same-letter / same-group syllables,
    drop identities and zero powers.  Idempotent."""
    out: list = []
    for s in raw:
        _validate_syllable(fs, s)
        if isinstance(s, FreeLetter) and s.power == 0:
            continue
        if isinstance(s, VertexElement) and s.element == 0:
            continue
        while True:
            if not out:
                out.append(s)
                break
            top = out[-1]
            if isinstance(s, FreeLetter) and isinstance(top, FreeLetter) and top.index == s.index:
                p = top.power + s.power
                out.pop()
                if p != 0:
                    s = FreeLetter(s.index, p)
                    continue  # re-test against the new top
                break
            if (isinstance(s, VertexElement) and isinstance(top, VertexElement)
                    and top.group == s.group):
                m = fs.group_mul(s.group, top.element, s.element)
                out.pop()
                if m != 0:
                    s = VertexElement(s.group, m)
                    continue
                break
            out.append(s)
            break
    return FreeProductWord(fs, tuple(out))


class FreeProductWord:
    """Normal-form element of the free product. Immutable."""

    __slots__ = ("fs", "syllables", "_hash")

    def __init__(self, fs: FreeFactorSystem, syllables: tuple):
        self.fs = fs
        self.syllables = syllables
        self._hash = None

    # -- structure ---------------------------------------------------------------
    def is_identity(self) -> bool:
        return not self.syllables

    def syllable_length(self) -> int:
        return len(self.syllables)

    def letter_length(self) -> int:
        """Total letters: |power| per free syllable, 1 per vertex syllable."""
        return sum(abs(s.power) if isinstance(s, FreeLetter) else 1 for s in self.syllables)

    # -- arithmetic ----------------------------------------------------------------
    def __mul__(self, other: "FreeProductWord") -> "FreeProductWord":
        if other.fs is not self.fs:
            raise ValueError("words from different free factor systems")
        return normalize(self.fs, self.syllables + other.syllables)

    def inverse(self) -> "FreeProductWord":
        inv = []
        for s in reversed(self.syllables):
            if isinstance(s, FreeLetter):
                inv.append(FreeLetter(s.index, -s.power))
            else:
                inv.append(VertexElement(s.group, self.fs.group_inv(s.group, s.element)))
        return FreeProductWord(self.fs, tuple(inv))

    def __invert__(self) -> "FreeProductWord":
        return self.inverse()

    def __pow__(self, n: int) -> "FreeProductWord":
        if n < 0:
            return self.inverse() ** (-n)
        out = self.fs.identity()
        base = self
        while n:
            if n & 1:
                out = out * base
            base = base * base
            n >>= 1
        return out

    def conjugate_by(self, w: "FreeProductWord") -> "FreeProductWord":
        return w * self * w.inverse()

    # -- identity / ordering --------------------------------------------------------
    def __eq__(self, other) -> bool:
        return isinstance(other, FreeProductWord) and self.syllables == other.syllables \
            and self.fs is other.fs

    def __hash__(self):
        if self._hash is None:
            self._hash = hash(self.syllables)
        return self._hash

    def sort_key(self):
        return (self.syllable_length(), self.letter_length(), str(self))

    def __repr__(self) -> str:
        if not self.syllables:
            return "1"
        parts = []
        for s in self.syllables:
            if isinstance(s, FreeLetter):
                name = chr(ord("a") + s.index - 1) if s.index <= 26 else f"x{s.index}"
                parts.append(name if s.power == 1 else f"{name}^{s.power}")
            else:
                parts.append(f"g{s.group}.{s.element}" if s.element != 1 or
                             self.fs.group_order(s.group) > 2 else f"g{s.group}")
        return "*".join(parts)


def cyclic_reduce(g: FreeProductWord, full: bool = False) -> tuple[FreeProductWord, FreeProductWord]:
    """Split g = conjugator * core * conjugator^-1 with core cyclically reduced.

    By default the core stops when no conjugation shortens the letter length
    (so b.a.b stays put).  With full=True, same-sign letter wraps also rotate
    into a single syllable (the canonical cyclic normal form used for
    conjugacy tests)."""
    fs = g.fs
    conj = fs.identity()
    core = g
    while core.syllable_length() >= 2:
        first, last = core.syllables[0], core.syllables[-1]
        if isinstance(first, FreeLetter) and isinstance(last, FreeLetter) \
                and first.index == last.index:
            mergeable = full or (first.power > 0) != (last.power > 0)
        elif isinstance(first, VertexElement) and isinstance(last, VertexElement) \
                and first.group == last.group:
            mergeable = True
        else:
            mergeable = False
        if not mergeable:
            break
        # core = first . middle . last  ==>  conjugate by `first`:
        # core = first (middle . (last*first)) first^-1
        head = FreeProductWord(fs, (first,))
        middle = FreeProductWord(fs, core.syllables[1:-1])
        conj = conj * head
        core = normalize(fs, middle.syllables + (last, first))
    return conj, core


def is_cyclically_reduced(g: FreeProductWord) -> bool:
    return cyclic_reduce(g)[1] == g


def is_hyperbolic(g: FreeProductWord) -> bool:
    """Hyperbolic iff the cyclic core has >= 2 syllables or is a single free letter."""
    _, core = cyclic_reduce(g, full=True)
    if core.syllable_length() >= 2:
        return True
    if core.syllable_length() == 1:
        return isinstance(core.syllables[0], FreeLetter)
    return False


def cyclic_rotations(core: FreeProductWord) -> list[FreeProductWord]:
    syl = core.syllables
    return [FreeProductWord(core.fs, syl[i:] + syl[:i]) for i in range(len(syl))] or [core]


def syllable_key(s) -> tuple:
    if isinstance(s, FreeLetter):
        return (0, s.index, s.power)
    return (1, s.group, s.element)


def conjugacy_key(g: FreeProductWord, up_to_inversion: bool = False):
    """Canonical key of the conjugacy class of g (minimal rotation of the core;
    optionally also minimal over the inverse class)."""
    _, core = cyclic_reduce(g, full=True)
    def rot_key(w):
        return min(tuple(syllable_key(s) for s in r.syllables) for r in cyclic_rotations(w))
    k = rot_key(core)
    if up_to_inversion:
        k = min(k, rot_key(cyclic_reduce(core.inverse(), full=True)[1]))
    return k


def is_conjugate(g: FreeProductWord, h: FreeProductWord) -> Optional[FreeProductWord]:
    """Return w with g = w h w^-1, or None.

    Hyperbolic case: cores match up to syllable rotation.  Elliptic case:
    brute force inside the (finite) vertex group.  Mixed cases never meet.
    """
    fs = g.fs
    pg, cg = cyclic_reduce(g, full=True)
    ph, ch = cyclic_reduce(h, full=True)
    hyp_g, hyp_h = is_hyperbolic(g), is_hyperbolic(h)
    if hyp_g != hyp_h:
        return None
    if not hyp_g:
        # both elliptic
        if cg.is_identity() and ch.is_identity():
            return fs.identity()
        if cg.is_identity() or ch.is_identity():
            return None
        (sg,), (sh,) = cg.syllables, ch.syllables
        if not (isinstance(sg, VertexElement) and isinstance(sh, VertexElement)):
            return None  # single free letters are hyperbolic; unreachable
        if sg.group != sh.group:
            return None
        i = sg.group
        for c in fs.group_elements(i):
            if fs.group_mul(i, fs.group_mul(i, c, sh.element), fs.group_inv(i, c)) == sg.element:
                w = fs.vertex(i, c)
                return pg * w * ph.inverse()
        return None
    if cg.syllable_length() != ch.syllable_length():
        return None
    n = ch.syllable_length()
    for r in range(n):
        rotated = FreeProductWord(fs, ch.syllables[r:] + ch.syllables[:r])
        if rotated.syllables == cg.syllables:
            # cg = prefix * ch * prefix^-1 with prefix = first r syllables of ch
            prefix = FreeProductWord(fs, ch.syllables[:r])
            w = pg * prefix.inverse() * ph.inverse()
            # pg cg pg^-1 = g and cg = prefix^-1?? verify orientation directly
            if w * h * w.inverse() == g:
                return w
            w = pg * prefix * ph.inverse()
            if w * h * w.inverse() == g:
                return w
    return None


@dataclass(frozen=True)
class GroupImage:
    """phi on one vertex group: g |-> conj * iso(g) * conj^-1 into group `target`."""

    target: int
    iso: tuple  # iso[m] = image element index in the target table
    conj: FreeProductWord

    def check(self, fs: FreeFactorSystem, source: int) -> None:
        if not (1 <= self.target <= fs.num_groups):
            raise IndexOutOfRange("group image target out of range")
        n, nt = fs.group_order(source), fs.group_order(self.target)
        if n != nt or len(self.iso) != n or sorted(self.iso) != list(range(n)) \
                or self.iso[0] != 0:
            raise ValueError("group map is not a bijection fixing the identity")
        for a in range(n):
            for b in range(n):
                if self.iso[fs.group_mul(source, a, b)] != \
                        fs.group_mul(self.target, self.iso[a], self.iso[b]):
                    raise ValueError("group map is not a homomorphism")


class FPAutomorphism:
    """Automorphism of G preserving the set of vertex-group conjugacy classes.

    The inverse images are supplied by the caller and verified: the composite
    of forward and inverse must equal conjugation by a single element of G.
    """

    def __init__(self, fs: FreeFactorSystem, letter_images: Sequence[FreeProductWord],
                 group_images: Sequence[GroupImage],
                 inverse_letter_images: Sequence[FreeProductWord],
                 inverse_group_images: Sequence[GroupImage],
                 _skip_verify: bool = False):
        self.fs = fs
        self.letter_images = tuple(letter_images)
        self.group_images = tuple(group_images)
        self.inverse_letter_images = tuple(inverse_letter_images)
        self.inverse_group_images = tuple(inverse_group_images)
        if len(self.letter_images) != fs.free_rank or len(self.group_images) != fs.num_groups:
            raise ValueError("wrong number of generator images")
        for i, gi in enumerate(self.group_images, start=1):
            gi.check(fs, i)
        for i, gi in enumerate(self.inverse_group_images, start=1):
            gi.check(fs, i)
        targets = sorted(gi.target for gi in self.group_images)
        if targets != list(range(1, fs.num_groups + 1)):
            raise ValueError("vertex groups must be permuted up to conjugacy")
        if not _skip_verify:
            w = self._composite_inner_witness()
            if w is None:
                raise UnverifiedInverse("forward o inverse is not an inner automorphism")

    # -- application ----------------------------------------------------------------
    def _apply(self, word: FreeProductWord, letters, groups) -> FreeProductWord:
        fs = self.fs
        parts: list = []
        for s in word.syllables:
            if isinstance(s, FreeLetter):
                img = letters[s.index - 1] ** s.power
                parts.extend(img.syllables)
            else:
                gi = groups[s.group - 1]
                mid = VertexElement(gi.target, gi.iso[s.element])
                parts.extend(gi.conj.syllables)
                parts.append(mid)
                parts.extend(gi.conj.inverse().syllables)
        return normalize(fs, parts)

    def apply(self, word: FreeProductWord) -> FreeProductWord:
        return self._apply(word, self.letter_images, self.group_images)

    def __call__(self, word: FreeProductWord) -> FreeProductWord:
        return self.apply(word)

    def apply_inverse(self, word: FreeProductWord) -> FreeProductWord:
        return self._apply(word, self.inverse_letter_images, self.inverse_group_images)

    def inverse(self) -> "FPAutomorphism":
        return FPAutomorphism(self.fs, self.inverse_letter_images, self.inverse_group_images,
                              self.letter_images, self.group_images, _skip_verify=True)

    # -- composition -----------------------------------------------------------------
    def compose(self, other: "FPAutomorphism") -> "FPAutomorphism":
        """self o other (apply `other` first)."""
        fs = self.fs
        letters = tuple(self.apply(w) for w in other.letter_images)
        groups = []
        for i in range(1, fs.num_groups + 1):
            gi = other.group_images[i - 1]
            gj = self.group_images[gi.target - 1]
            iso = tuple(gj.iso[gi.iso[m]] for m in range(fs.group_order(i)))
            groups.append(GroupImage(gj.target, iso, self.apply(gi.conj) * gj.conj))
        inv_letters = tuple(other.apply_inverse(w) for w in self.inverse_letter_images)
        inv_groups = []
        for i in range(1, fs.num_groups + 1):
            gi = self.inverse_group_images[i - 1]
            gj = other.inverse_group_images[gi.target - 1]
            iso = tuple(gj.iso[gi.iso[m]] for m in range(fs.group_order(i)))
            inv_groups.append(GroupImage(gj.target, iso, other.apply_inverse(gi.conj) * gj.conj))
        return FPAutomorphism(fs, letters, groups, inv_letters, inv_groups, _skip_verify=True)

    def power(self, k: int) -> "FPAutomorphism":
        out = identity_automorphism(self.fs)
        base = self if k >= 0 else self.inverse()
        for _ in range(abs(k)):
            out = base.compose(out)
        return out

    # -- verification ------------------------------------------------------------------
    def _composite_inner_witness(self) -> Optional[FreeProductWord]:
        fs = self.fs
        images = {}
        for j in range(1, fs.free_rank + 1):
            images[fs.letter(j)] = self.apply(self.apply_inverse(fs.letter(j)))
        for i in range(1, fs.num_groups + 1):
            for m in fs.group_elements(i, nontrivial=True):
                g = fs.vertex(i, m)
                images[g] = self.apply(self.apply_inverse(g))
        return inner_conjugator(fs, images)

    def __repr__(self) -> str:
        ims = ", ".join(f"a{j+1}->{w!r}" for j, w in enumerate(self.letter_images))
        return f"FPAutomorphism({ims or 'vertex groups only'})"


def inner_conjugator(fs: FreeFactorSystem,
                     images: dict[FreeProductWord, FreeProductWord]) -> Optional[FreeProductWord]:
    """Given images psi(gen) for all standard generators, find w with
    psi(g) = w g w^-1 for every generator, or None.  Bounded search: candidate
    conjugators come from cyclic-reduction of one image, corrected by powers /
    vertex elements up to the maximum image length."""
    gens = list(images.keys())
    if not gens:
        return fs.identity()
    bound = max(w.syllable_length() for w in images.values()) + 1
    candidates: list[FreeProductWord] = []
    # seed candidates from the first free letter if any, else a vertex group
    seed = None
    for g in gens:
        s = g.syllables[0] if g.syllables else None
        if isinstance(s, FreeLetter):
            seed = g
            break
    if seed is not None:
        img = images[seed]
        p, core = cyclic_reduce(img)
        if core != seed:
            return None
        # w = p * seed^m  (centralizer of a letter is its own cyclic group)
        for m in range(-bound, bound + 1):
            candidates.append(p * seed ** m)
    else:
        # r = 0: use the first vertex group; w = p * v with v in that group
        seed = gens[0]
        s = seed.syllables[0]
        imgs = images[seed]
        p, core = cyclic_reduce(imgs)
        if core.syllable_length() != 1 or not isinstance(core.syllables[0], VertexElement) \
                or core.syllables[0].group != s.group:
            return None
        for v in fs.group_elements(s.group):
            candidates.append(p * fs.vertex(s.group, v))
    for w in candidates:
        wi = w.inverse()
        if all(images[g] == w * g * wi for g in gens):
            return w
    return None


def identity_automorphism(fs: FreeFactorSystem) -> FPAutomorphism:
    letters = [fs.letter(j) for j in range(1, fs.free_rank + 1)]
    groups = [GroupImage(i, tuple(range(fs.group_order(i))), fs.identity())
              for i in range(1, fs.num_groups + 1)]
    return FPAutomorphism(fs, letters, groups, list(letters), list(groups), _skip_verify=True)


def inner_automorphism(fs: FreeFactorSystem, w: FreeProductWord) -> FPAutomorphism:
    """Conjugation g |-> w g w^-1."""
    wi = w.inverse()
    letters = [w * fs.letter(j) * wi for j in range(1, fs.free_rank + 1)]
    groups = [GroupImage(i, tuple(range(fs.group_order(i))), w)
              for i in range(1, fs.num_groups + 1)]
    inv_letters = [wi * fs.letter(j) * w for j in range(1, fs.free_rank + 1)]
    inv_groups = [GroupImage(i, tuple(range(fs.group_order(i))), wi)
                  for i in range(1, fs.num_groups + 1)]
    return FPAutomorphism(fs, letters, groups, inv_letters, inv_groups, _skip_verify=True)


def enumerate_cyclic_words(fs: FreeFactorSystem, max_syllables: int,
                           up_to_inversion: bool = True) -> list[FreeProductWord]:
    """All cyclically reduced non-trivial words up to `max_syllables` syllables,
    free-letter exponents +-1, one representative per conjugacy class
    (up to rotation, and inversion when requested)."""
    alphabet: list = [FreeLetter(j, e) for j in range(1, fs.free_rank + 1) for e in (1, -1)]
    alphabet += [VertexElement(i, m) for i in range(1, fs.num_groups + 1)
                 for m in fs.group_elements(i, nontrivial=True)]

    def compatible(s, t) -> bool:
        # exponents are capped at +-1, so same-letter syllables never sit adjacent
        if isinstance(s, FreeLetter) and isinstance(t, FreeLetter):
            return s.index != t.index
        if isinstance(s, VertexElement) and isinstance(t, VertexElement):
            return s.group != t.group
        return True

    seen = set()
    out: list[FreeProductWord] = []
    frontier: list[tuple] = [(s,) for s in alphabet]
    for length in range(1, max_syllables + 1):
        next_frontier = []
        for seq in frontier:
            if len(seq) == 1 or compatible(seq[-1], seq[0]):
                w = FreeProductWord(fs, seq)
                if is_cyclically_reduced(w):
                    key = conjugacy_key(w, up_to_inversion=up_to_inversion)
                    if key not in seen:
                        seen.add(key)
                        out.append(w)
            if length < max_syllables:
                for s in alphabet:
                    if compatible(seq[-1], s):
                        next_frontier.append(seq + (s,))
        frontier = next_frontier
    return out
