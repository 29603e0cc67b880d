"""Batch front end: fixture parsing, command dispatch, deterministic JSON
reports.

Exit codes: 0 success, 2 cap exceeded / partial result, 3 hypothesis
violation, 4 parse error.  Reports are canonical JSON (sorted keys), rationals
as "p/q" strings, certified intervals as two decimal strings, and every report
embeds the fixture hash and the tool version.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
from fractions import Fraction

from . import __version__
from .fixtures import BUNDLED, bundled_fixture
from .freeprod import FreeFactorSystem
from .limits import LimitLengthFunction, discreteness_scan
from .lipschitz import (displacement, min_displacement_on_simplex, stretch,
                        sym_distance)
from .minset import CapExceeded, HypothesisViolation, explore, spectrum
from .serialize import (auto_from_dict, auto_to_dict, frac_to_str, interval_to_json,
                        point_from_dict, point_to_dict, system_from_dict,
                        system_to_dict, word_from_list, word_to_list)
from .traintrack import (ReducibleDetected, TrainTrackFailure, find_train_track,
                         transition_matrix)

EXIT_OK = 0
EXIT_PARTIAL = 2
EXIT_HYPOTHESIS = 3
EXIT_PARSE = 4

COMMANDS = ("length", "stretch", "displacement", "min-simplex", "traintrack",
            "explore", "spectrum", "attract", "discreteness", "check-invariants")


class FixtureError(ValueError):
    pass


def fixture_to_dict(fix: dict) -> dict:
    return {
        "system": system_to_dict(fix["system"]),
        "points": {k: point_to_dict(v) for k, v in fix["points"].items()},
        "autos": {k: auto_to_dict(v) for k, v in fix["autos"].items()},
        "parameters": fix.get("parameters", {}),
    }


def fixture_from_dict(d: dict) -> dict:
    try:
        fs = system_from_dict(d["system"])
        points = {k: point_from_dict(fs, v, name=k) for k, v in d.get("points", {}).items()}
        autos = {k: auto_from_dict(fs, v) for k, v in d.get("autos", {}).items()}
    except Exception as exc:
        raise FixtureError(f"invalid fixture: {exc}") from exc
    return {"system": fs, "points": points, "autos": autos,
            "parameters": d.get("parameters", {})}


DEFAULT_PARAMETERS = {
    "FIB": {"auto": "fib", "point": "rose-unit", "point2": "theta"},
    "LOLLI": {"auto": "twist", "point": "Xn", "point2": "X"},
    "ZZZ": {"auto": "twist", "point": "tripod", "point2": "tripod"},
    "FIBZ2": {"auto": "fib", "point": "zrose", "point2": "zlolli"},
    "IMPRIM": {"auto": "imprim", "point": "rose4", "point2": "rose4"},
}


def load_fixture(spec: str) -> dict:
    if spec in BUNDLED:
        fix = bundled_fixture(spec)
        fix["parameters"] = dict(DEFAULT_PARAMETERS.get(spec, {}))
        return fix
    if spec == "-":
        raw = sys.stdin.read()
    else:
        with open(spec, "r", encoding="utf-8") as fh:
            raw = fh.read()
    try:
        data = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise FixtureError(f"fixture is not valid JSON: {exc}") from exc
    return fixture_from_dict(data)


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def fixture_hash(fix: dict) -> str:
    return hashlib.sha256(canonical_json(fixture_to_dict(fix)).encode()).hexdigest()


def _resolve(fix, kind, name, flag):
    table = fix[kind]
    name = name or fix.get("parameters", {}).get(flag)
    if name is None:
        if len(table) == 1:
            return next(iter(table.values()))
        raise FixtureError(f"--{flag} required (choices: {sorted(table)})")
    if name not in table:
        raise FixtureError(f"unknown {flag} {name!r} (choices: {sorted(table)})")
    return table[name]


def run(command: str, fix: dict, args) -> tuple:
    """Execute one command; returns (report dict, exit code)."""
    tol = Fraction(args.tol)
    result: dict = {}
    code = EXIT_OK
    if command == "length":
        X = _resolve(fix, "points", args.point, "point")
        word = word_from_list(fix["system"], json.loads(args.word))
        result["length"] = frac_to_str(X.translation_length(word))
    elif command == "stretch":
        X = _resolve(fix, "points", args.point, "point")
        Y = _resolve(fix, "points", args.point2, "point2")
        result["stretch"] = frac_to_str(stretch(X, Y))
        result["sym_distance"] = frac_to_str(sym_distance(X, Y))
    elif command == "displacement":
        X = _resolve(fix, "points", args.point, "point")
        phi = _resolve(fix, "autos", args.auto, "auto")
        result["displacement"] = frac_to_str(displacement(X, phi))
    elif command == "min-simplex":
        X = _resolve(fix, "points", args.point, "point")
        phi = _resolve(fix, "autos", args.auto, "auto")
        res = min_displacement_on_simplex(X, phi, tol=tol)
        result["value"] = interval_to_json(res.value)
        result["minimizer"] = [frac_to_str(x) for x in res.lengths]
        result["interior"] = res.interior
        result["tight"] = [word_to_list(g) for g in res.tight]
    elif command == "traintrack":
        X = _resolve(fix, "points", args.point, "point")
        phi = _resolve(fix, "autos", args.auto, "auto")
        try:
            tt = find_train_track(X, phi, budget=args.budget, tol=tol)
        except ReducibleDetected as exc:
            result["reducible"] = {"invariant_edges": list(exc.edges)}
            return _finish(command, fix, result, args), EXIT_HYPOTHESIS
        except TrainTrackFailure as exc:
            result["failure"] = str(exc)
            return _finish(command, fix, result, args), EXIT_PARTIAL
        result["lengths"] = [f"{float(x):.10f}" for x in tt.point.lengths]
        result["lengths_exact"] = [frac_to_str(x) for x in tt.point.lengths]
        result["lambda"] = interval_to_json(tt.pf)
        result["matrix"] = [list(r) for r in tt.matrix]
        result["steps"] = tt.steps
    elif command == "explore":
        X = _resolve(fix, "points", args.point, "point")
        phi = _resolve(fix, "autos", args.auto, "auto")
        try:
            atlas = explore(phi, X, cap_simplices=args.cap_simplices,
                            cap_power=args.cap_power, tol=tol)
            result["atlas"] = atlas.to_dict()
        except HypothesisViolation as exc:
            result["hypothesis_violation"] = str(exc)
            return _finish(command, fix, result, args), EXIT_HYPOTHESIS
        except CapExceeded as exc:
            result["atlas"] = exc.atlas.to_dict()
            result["cap_exceeded"] = True
            return _finish(command, fix, result, args), EXIT_PARTIAL
    elif command == "spectrum":
        X = _resolve(fix, "points", args.point, "point")
        phi = _resolve(fix, "autos", args.auto, "auto")
        try:
            atlas = explore(phi, X, cap_simplices=args.cap_simplices,
                            cap_power=args.cap_power, tol=tol)
        except HypothesisViolation as exc:
            result["hypothesis_violation"] = str(exc)
            return _finish(command, fix, result, args), EXIT_HYPOTHESIS
        except CapExceeded as exc:
            result["cap_exceeded"] = True
            return _finish(command, fix, result, args), EXIT_PARTIAL
        vals = spectrum(phi, Fraction(args.bound), atlas)
        result["spectrum"] = [interval_to_json(v) for v in vals]
    elif command == "attract":
        X = _resolve(fix, "points", args.point, "point")
        phi = _resolve(fix, "autos", args.auto, "auto")
        try:
            tt = find_train_track(X, phi, budget=args.budget)
            llf = LimitLengthFunction.from_train_track(tt, phi)
        except Exception as exc:
            result["hypothesis_violation"] = str(exc)
            return _finish(command, fix, result, args), EXIT_HYPOTHESIS
        words = json.loads(args.word) if args.word else \
            fix.get("parameters", {}).get("words", [])
        out = {}
        for wd in words:
            g = word_from_list(fix["system"], wd)
            out[canonical_json(wd)] = interval_to_json(llf.length(g, tol))
        result["attracting_lengths"] = out
        result["lambda"] = interval_to_json(llf.lam)
    elif command == "discreteness":
        X = _resolve(fix, "points", args.point, "point")
        phi = _resolve(fix, "autos", args.auto, "auto")
        try:
            ttp = find_train_track(X, phi, budget=args.budget)
            ttm = find_train_track(X, phi.inverse(), budget=args.budget)
            lp = LimitLengthFunction.from_train_track(ttp, phi)
            lm = LimitLengthFunction.from_train_track(ttm, phi.inverse())
        except Exception as exc:
            result["hypothesis_violation"] = str(exc)
            return _finish(command, fix, result, args), EXIT_HYPOTHESIS
        rep = discreteness_scan(phi, lp, lm, length_cap=args.length_cap,
                                tol=max(tol, Fraction(1, 10**6)))
        result["scan"] = rep.to_dict()
        if rep.violations:
            code = EXIT_PARTIAL
    elif command == "check-invariants":
        from .invariants import run_all
        results = run_all()
        result["checks"] = results
        if not all(r["pass"] for r in results):
            code = EXIT_PARTIAL
    else:
        raise FixtureError(f"unknown command {command!r}")
    return _finish(command, fix, result, args), code


def _finish(command, fix, result, args) -> dict:
    return {
        "command": command,
        "fixture_hash": fixture_hash(fix),
        "version": __version__,
        "result": result,
    }


def make_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="outerspace",
        description="stretch factors, train tracks and minimally displaced sets "
                    "for free product automorphisms")
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("fixture", nargs="?", default=None,
                    help="bundled fixture name, JSON path, or '-' for stdin")
    ap.add_argument("names", nargs="*", default=[],
                    help="positional point/auto names (command dependent)")
    ap.add_argument("--fixture", dest="fixture_flag", default=None)
    ap.add_argument("--point", default=None)
    ap.add_argument("--point2", default=None)
    ap.add_argument("--auto", default=None)
    ap.add_argument("--word", default=None, help="word as JSON syllable list")
    ap.add_argument("--out", default=None)
    ap.add_argument("--tol", default="1/1000000000000")
    ap.add_argument("--cap-simplices", type=int, default=10000)
    ap.add_argument("--cap-power", type=int, default=4)
    ap.add_argument("--length-cap", type=int, default=8)
    ap.add_argument("--budget", type=int, default=60)
    ap.add_argument("--bound", default="22/10", help="spectrum cutoff C")
    return ap


def main(argv=None) -> int:
    ap = make_parser()
    args = ap.parse_args(argv)
    spec = args.fixture_flag or args.fixture
    if spec is None and args.command != "check-invariants":
        print("error: a fixture is required", file=sys.stderr)
        return EXIT_PARSE
    # positional names fill point / point2-or-auto slots, matching the
    # `displacement FIB rose-unit` call shape
    if args.names:
        if args.command in ("stretch",):
            args.point = args.point or (args.names[0] if args.names else None)
            args.point2 = args.point2 or (args.names[1] if len(args.names) > 1 else None)
        else:
            args.point = args.point or (args.names[0] if args.names else None)
            if len(args.names) > 1:
                args.auto = args.auto or args.names[1]
    try:
        fix = load_fixture(spec) if spec else {"system": None, "points": {},
                                               "autos": {}, "parameters": {}}
        if args.command == "check-invariants" and spec is None:
            fix = load_fixture("FIB")
        report, code = run(args.command, fix, args)
    except (FixtureError, FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    text = json.dumps(report, sort_keys=True, indent=2) + "\n"
    if args.out:
        tmp = args.out + ".tmp"
        with open(tmp, "w", encoding="utf-8") as fh:
            fh.write(text)
        import os
        os.replace(tmp, args.out)
    else:
        sys.stdout.write(text)
    return code


if __name__ == "__main__":
    sys.exit(main())
