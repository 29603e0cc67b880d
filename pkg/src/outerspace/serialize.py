"""Canonical JSON-dict forms for all domain objects.

Rationals serialize as exact "p/q" strings; certified intervals as two-element
lists of decimal strings; the blow-up's symbolic new edge serializes its
length as "eps".
"""

from __future__ import annotations

from fractions import Fraction

from .freeprod import (FPAutomorphism, FreeFactorSystem, FreeLetter,
                       FreeProductWord, GroupImage, VertexElement)
from .marked_graph import DecoratedPath, MarkedGraph, build_marked_graph


def frac_to_str(x: Fraction) -> str:
    x = Fraction(x)
    return f"{x.numerator}/{x.denominator}"


def frac_from_str(s: str) -> Fraction:
    return Fraction(s)


def interval_to_json(iv) -> list:
    # decimal endpoints with enough digits to honour a 1e-12 default tolerance
    return [f"{float(iv.lo):.15g}", f"{float(iv.hi):.15g}"]


def word_to_list(w: FreeProductWord) -> list:
    out = []
    for s in w.syllables:
        if isinstance(s, FreeLetter):
            out.append(["a", s.index, s.power])
        else:
            out.append(["g", s.group, s.element])
    return out


def word_from_list(fs: FreeFactorSystem, data) -> FreeProductWord:
    syls = []
    for kind, i, m in data:
        if kind == "a":
            syls.append(FreeLetter(int(i), int(m)))
        elif kind == "g":
            syls.append(VertexElement(int(i), int(m)))
        else:
            raise ValueError(f"bad syllable tag {kind!r}")
    return fs.word(syls)


def path_to_dict(p: DecoratedPath) -> dict:
    return {"start": p.start, "decorations": list(p.decorations), "edges": list(p.edges)}


def path_from_dict(d) -> DecoratedPath:
    return DecoratedPath(int(d["start"]), tuple(int(x) for x in d["decorations"]),
                         tuple(int(x) for x in d["edges"]))


def system_to_dict(fs: FreeFactorSystem) -> dict:
    return {"vertex_groups": [[list(r) for r in t] for t in fs.tables],
            "free_rank": fs.free_rank}


def system_from_dict(d) -> FreeFactorSystem:
    return FreeFactorSystem(d["vertex_groups"], int(d["free_rank"]))


def point_to_dict(X: MarkedGraph) -> dict:
    lengths = []
    for e, L in enumerate(X.lengths, start=1):
        if getattr(X, "symbolic_edge", None) == e:
            lengths.append("eps")
        else:
            lengths.append(frac_to_str(L))
    return {
        "labels": [x if x is not None else None for x in X.sk.labels],
        "edges": [list(t) for t in X.sk.edge_ends],
        "lengths": lengths,
        "basepoint": X.basepoint,
        "letters": [path_to_dict(p) for p in X.letters],
        "groups": [{"path": path_to_dict(p), "label": lab, "iso": list(iso)}
                   for p, lab, iso in X.groups],
        "omega": {str(e): word_to_list(w) for e, w in sorted(X.omega.items())},
        "kappa": {str(j): {"conj": word_to_list(u), "target": i, "iso": list(iso)}
                  for j, (u, i, iso) in sorted(X.kappa.items())},
    }


def point_from_dict(fs: FreeFactorSystem, d, name="") -> MarkedGraph:
    lengths = [Fraction(1, 1000) if s == "eps" else frac_from_str(s) for s in d["lengths"]]
    omega = {int(e): word_from_list(fs, w) for e, w in d["omega"].items()}
    kappa = None
    if d.get("kappa"):
        kappa = {int(j): (word_from_list(fs, k["conj"]), int(k["target"]), tuple(k["iso"]))
                 for j, k in d["kappa"].items()}
    return build_marked_graph(
        fs, labels=[x if x is None else int(x) for x in d["labels"]],
        edge_ends=[tuple(t) for t in d["edges"]], lengths=lengths,
        basepoint=int(d["basepoint"]),
        letters=[path_from_dict(p) for p in d["letters"]],
        groups=[(path_from_dict(g["path"]), int(g["label"]), tuple(g["iso"]))
                for g in d["groups"]],
        omega=omega, kappa=kappa, name=name)


def auto_to_dict(phi: FPAutomorphism) -> dict:
    def side(letters, groups):
        return {"letters": [word_to_list(w) for w in letters],
                "groups": [{"target": gi.target, "iso": list(gi.iso),
                            "conj": word_to_list(gi.conj)} for gi in groups]}
    return {"forward": side(phi.letter_images, phi.group_images),
            "inverse": side(phi.inverse_letter_images, phi.inverse_group_images)}


def auto_from_dict(fs: FreeFactorSystem, d) -> FPAutomorphism:
    def side(s):
        letters = [word_from_list(fs, w) for w in s["letters"]]
        groups = [GroupImage(int(g["target"]), tuple(g["iso"]), word_from_list(fs, g["conj"]))
                  for g in s["groups"]]
        return letters, groups
    fl, fg = side(d["forward"])
    il, ig = side(d["inverse"])
    return FPAutomorphism(fs, fl, fg, il, ig)
