"""Bundled fixtures: the free factor systems, points and automorphisms the
test-suite and the CLI examples run on.

FIB     F2 with the golden-mean automorphism a->b, b->ab.
LOLLI   Z/2 * Z, lollipop vs circle graphs (the classical discontinuity example).
ZZZ     Z/2 * Z/2 * Z/2 on a tripod; factor-permuting automorphisms.
FIBZ2   Z/2 * F2, golden-mean acting on the free part, fixing the factor.
IMPRIM  F4 automorphism with irreducible but imprimitive transition matrix.
"""

from __future__ import annotations

from fractions import Fraction

from .freeprod import (FPAutomorphism, FreeFactorSystem, GroupImage,
                       identity_automorphism)
from .marked_graph import DecoratedPath, MarkedGraph, build_marked_graph

Z2 = [[0, 1], [1, 0]]


# ---------------------------------------------------------------------------
# FIB: F2
# ---------------------------------------------------------------------------

def fib_system() -> FreeFactorSystem:
    return FreeFactorSystem([], 2)


def fib_rose(lengths=(Fraction(1, 2), Fraction(1, 2)), fs=None, name="rose") -> MarkedGraph:
    fs = fs or fib_system()
    a, b = fs.letter(1), fs.letter(2)
    return build_marked_graph(
        fs, labels=[None], edge_ends=[(0, 0), (0, 0)], lengths=lengths, basepoint=0,
        letters=[DecoratedPath(0, (0, 0), (1,)), DecoratedPath(0, (0, 0), (2,))],
        groups=[], omega={1: a, 2: b}, name=name)


def fib_theta(lengths=(Fraction(1, 3), Fraction(1, 3), Fraction(1, 3)), fs=None) -> MarkedGraph:
    """Theta graph: edges x, y, z from P to Q; a -> x.y^-1, b -> y.z^-1."""
    fs = fs or fib_system()
    a, b = fs.letter(1), fs.letter(2)
    return build_marked_graph(
        fs, labels=[None, None], edge_ends=[(0, 1), (0, 1), (0, 1)], lengths=lengths,
        basepoint=0,
        letters=[DecoratedPath(0, (0, 0, 0), (1, -2)), DecoratedPath(0, (0, 0, 0), (2, -3))],
        groups=[], omega={1: a, 3: b.inverse()}, name="theta")


def fib_auto(fs=None) -> FPAutomorphism:
    fs = fs or fib_system()
    a, b = fs.letter(1), fs.letter(2)
    return FPAutomorphism(fs, [b, a * b], [], [b * a.inverse(), a], [])


def swap_auto(fs=None) -> FPAutomorphism:
    fs = fs or fib_system()
    a, b = fs.letter(1), fs.letter(2)
    return FPAutomorphism(fs, [b, a], [], [b, a], [])


# ---------------------------------------------------------------------------
# LOLLI: Z/2 * Z
# ---------------------------------------------------------------------------

def lolli_system() -> FreeFactorSystem:
    return FreeFactorSystem([Z2], 1)


def lolli_point(seg=Fraction(1, 3), loop=Fraction(1, 3), fs=None) -> MarkedGraph:
    """Lollipop: segment s from the Z/2 vertex to a free vertex carrying the loop."""
    fs = fs or lolli_system()
    a = fs.letter(1)
    return build_marked_graph(
        fs, labels=[1, None], edge_ends=[(0, 1), (1, 1)], lengths=[seg, loop],
        basepoint=0,
        letters=[DecoratedPath(0, (0, 0, 0, 0), (1, 2, -1))],
        groups=[(DecoratedPath(0, (0,), ()), 1, (0, 1))],
        omega={2: a}, name="lolli")


def circle_point(length=Fraction(1), fs=None) -> MarkedGraph:
    """Circle through the Z/2 vertex (the collapse of the lollipop segment)."""
    fs = fs or lolli_system()
    a = fs.letter(1)
    return build_marked_graph(
        fs, labels=[1], edge_ends=[(0, 0)], lengths=[length], basepoint=0,
        letters=[DecoratedPath(0, (0, 0), (1,))],
        groups=[(DecoratedPath(0, (0,), ()), 1, (0, 1))],
        omega={1: a}, name="circle")


def lolli_twist(fs=None) -> FPAutomorphism:
    """a -> g1 a, identity on the factor; an involution."""
    fs = fs or lolli_system()
    g1a = fs.vertex(1, 1) * fs.letter(1)
    gi = GroupImage(1, (0, 1), fs.identity())
    return FPAutomorphism(fs, [g1a], [gi], [g1a], [gi])


# ---------------------------------------------------------------------------
# ZZZ: Z/2 * Z/2 * Z/2
# ---------------------------------------------------------------------------

def zzz_system() -> FreeFactorSystem:
    return FreeFactorSystem([Z2, Z2, Z2], 0)


def zzz_tripod(lengths=(Fraction(1, 3), Fraction(1, 3), Fraction(1, 3)), fs=None) -> MarkedGraph:
    fs = fs or zzz_system()
    return build_marked_graph(
        fs, labels=[None, 1, 2, 3], edge_ends=[(0, 1), (0, 2), (0, 3)], lengths=lengths,
        basepoint=0,
        letters=[],
        groups=[(DecoratedPath(0, (0, 0), (i,)), i, (0, 1)) for i in (1, 2, 3)],
        omega={}, name="tripod")


def zzz_rot(fs=None) -> FPAutomorphism:
    """Cyclic permutation of the three factors."""
    fs = fs or zzz_system()
    e = fs.identity()
    fwd = [GroupImage(2, (0, 1), e), GroupImage(3, (0, 1), e), GroupImage(1, (0, 1), e)]
    inv = [GroupImage(3, (0, 1), e), GroupImage(1, (0, 1), e), GroupImage(2, (0, 1), e)]
    return FPAutomorphism(fs, [], fwd, [], inv)


def zzz_twist(fs=None) -> FPAutomorphism:
    """g1->g2, g2->g3, g3->g2 g1 g2: a factor-permuting automorphism with growth."""
    fs = fs or zzz_system()
    e = fs.identity()
    fwd = [GroupImage(2, (0, 1), e), GroupImage(3, (0, 1), e),
           GroupImage(1, (0, 1), fs.vertex(2, 1))]
    inv = [GroupImage(3, (0, 1), fs.vertex(1, 1)), GroupImage(1, (0, 1), e),
           GroupImage(2, (0, 1), e)]
    return FPAutomorphism(fs, [], fwd, [], inv)


# ---------------------------------------------------------------------------
# FIBZ2: Z/2 * F2
# ---------------------------------------------------------------------------

def fibz2_system() -> FreeFactorSystem:
    return FreeFactorSystem([Z2], 2)


def fibz2_rose(lengths=(Fraction(1, 2), Fraction(1, 2)), fs=None) -> MarkedGraph:
    """Both loops at the Z/2 vertex."""
    fs = fs or fibz2_system()
    a, b = fs.letter(1), fs.letter(2)
    return build_marked_graph(
        fs, labels=[1], edge_ends=[(0, 0), (0, 0)], lengths=lengths, basepoint=0,
        letters=[DecoratedPath(0, (0, 0), (1,)), DecoratedPath(0, (0, 0), (2,))],
        groups=[(DecoratedPath(0, (0,), ()), 1, (0, 1))],
        omega={1: a, 2: b}, name="zrose")


def fibz2_lollirose(fs=None) -> MarkedGraph:
    """Segment from the Z/2 vertex to a free vertex carrying both loops."""
    fs = fs or fibz2_system()
    a, b = fs.letter(1), fs.letter(2)
    third = Fraction(1, 3)
    return build_marked_graph(
        fs, labels=[1, None], edge_ends=[(0, 1), (1, 1), (1, 1)],
        lengths=[third, third, third], basepoint=0,
        letters=[DecoratedPath(0, (0, 0, 0, 0), (1, 2, -1)),
                 DecoratedPath(0, (0, 0, 0, 0), (1, 3, -1))],
        groups=[(DecoratedPath(0, (0,), ()), 1, (0, 1))],
        omega={2: a, 3: b}, name="zlolli")


def fibz2_auto(fs=None) -> FPAutomorphism:
    fs = fs or fibz2_system()
    a, b = fs.letter(1), fs.letter(2)
    gi = GroupImage(1, (0, 1), fs.identity())
    return FPAutomorphism(fs, [b, a * b], [gi], [b * a.inverse(), a], [gi])


# ---------------------------------------------------------------------------
# IMPRIM: F4, irreducible imprimitive
# ---------------------------------------------------------------------------

def imprim_system() -> FreeFactorSystem:
    return FreeFactorSystem([], 4)


def imprim_rose(lengths=None, fs=None) -> MarkedGraph:
    fs = fs or imprim_system()
    lengths = lengths or [Fraction(1, 4)] * 4
    letters = [DecoratedPath(0, (0, 0), (j,)) for j in (1, 2, 3, 4)]
    return build_marked_graph(
        fs, labels=[None], edge_ends=[(0, 0)] * 4, lengths=lengths, basepoint=0,
        letters=letters, groups=[],
        omega={j: fs.letter(j) for j in (1, 2, 3, 4)}, name="rose4")


def imprim_auto(fs=None) -> FPAutomorphism:
    """a->c, b->dc, c->ab, d->b; squares to a Fibonacci-like map on each block."""
    fs = fs or imprim_system()
    a, b, c, d = (fs.letter(j) for j in (1, 2, 3, 4))
    fwd = [c, d * c, a * b, b]
    inv = [c * d.inverse(), d, a, b * a.inverse()]
    return FPAutomorphism(fs, fwd, [], inv, [])


# ---------------------------------------------------------------------------
# registry
# ---------------------------------------------------------------------------

def bundled_fixture(name: str) -> dict:
    """Assemble a named fixture: free factor system, points, automorphisms."""
    if name == "FIB":
        fs = fib_system()
        return {
            "system": fs,
            "points": {
                "rose-unit": fib_rose(fs=fs),
                "rose-ones": fib_rose(lengths=(Fraction(1), Fraction(1)), fs=fs, name="rose1"),
                "theta": fib_theta(fs=fs),
            },
            "autos": {
                "fib": fib_auto(fs),
                "swap": swap_auto(fs),
                "ident": identity_automorphism(fs),
            },
        }
    if name == "LOLLI":
        fs = lolli_system()
        return {
            "system": fs,
            "points": {"Xn": lolli_point(fs=fs), "X": circle_point(fs=fs)},
            "autos": {"twist": lolli_twist(fs), "ident": identity_automorphism(fs)},
        }
    if name == "ZZZ":
        fs = zzz_system()
        return {
            "system": fs,
            "points": {"tripod": zzz_tripod(fs=fs)},
            "autos": {"rot": zzz_rot(fs), "twist": zzz_twist(fs),
                      "ident": identity_automorphism(fs)},
        }
    if name == "FIBZ2":
        fs = fibz2_system()
        return {
            "system": fs,
            "points": {"zrose": fibz2_rose(fs=fs), "zlolli": fibz2_lollirose(fs=fs)},
            "autos": {"fib": fibz2_auto(fs), "ident": identity_automorphism(fs)},
        }
    if name == "IMPRIM":
        fs = imprim_system()
        return {
            "system": fs,
            "points": {"rose4": imprim_rose(fs=fs)},
            "autos": {"imprim": imprim_auto(fs), "ident": identity_automorphism(fs)},
        }
    raise KeyError(f"unknown fixture {name!r}")


BUNDLED = ("FIB", "LOLLI", "ZZZ", "FIBZ2", "IMPRIM")
