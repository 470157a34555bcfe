"""Command line entry point: ``phan suite|enumerate|homology|flipflop|cm-links``.

Work budgets default to the library values; set ``PHAN_BUDGET`` to override them.
"""

from __future__ import annotations

import argparse
import json
import sys

from .building import Building, Flip, characterize_R_theta, gpg_compare
from .field import field_of_order
from .form import Form
from .geometry import spec_from_json
from .harness import (REGISTRY, HarnessError, SuiteDescriptor, cm_links, emit, flip_residue, pipeline_enumerate,
                      run_suite)
from .simplicial import SimplicialComplex, reduced_homology
from .subspace import TooLarge


def _read_json(path: str) -> dict:
    with open(path) as fh:
        return json.load(fh)


def _write(text: str, path: str | None) -> None:
    if path:
        with open(path, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _dump(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2) + "\n"


def cmd_suite(args) -> int:
    grid = _read_json(args.grid) if args.grid else None
    report = run_suite(SuiteDescriptor(args.id, grid, args.seed, args.jobs, args.timing))
    _write(emit(report, args.format), args.out)
    return report["exit_code"]


def cmd_enumerate(args) -> int:
    specs = spec_from_json(_read_json(args.spec))
    _write(_dump(pipeline_enumerate(specs)), args.out)
    return 0


def cmd_homology(args) -> int:
    doc = _read_json(args.inp)
    K = SimplicialComplex.from_json(doc.get("complex", doc))
    h = reduced_homology(K, mode=args.mode, dim_cap=args.dim_cap)
    _write(_dump(h.to_json()), args.out)
    return 0


def cmd_flipflop(args) -> int:
    letter, rank = args.building[0].upper(), int(args.building[1:])
    field = field_of_order(args.field_order)
    b = Building(letter, rank, field)
    flip = Flip(b, Form.from_json(field, _read_json(args.form)))
    R = flip_residue(b, flip, "point" if args.point else "whole")
    out = {"building": b.descriptor(), "residue": [[list(r) for r in P.rows] for P in R.simplex],
           "characterization": characterize_R_theta(R, flip)}
    if args.compare_gpg:
        out["gpg"] = gpg_compare(R, flip)
    _write(_dump(out), args.out)
    bad = out["characterization"]["status"] != "verified" or out.get("gpg", {}).get("status", "verified") != "verified"
    return 1 if bad else 0


def cmd_cm_links(args) -> int:
    rep = cm_links(spec_from_json(_read_json(args.spec)))
    _write(_dump(rep), args.out)
    return 0 if rep["complex_ok"] and not rep["failures"] else 1


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="phan", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("suite", help="run a registered verification suite")
    s.add_argument("id", help="suite id; one of: " + ", ".join(sorted(REGISTRY)))
    s.add_argument("--grid", help="JSON file overriding the default parameter grid")
    s.add_argument("--jobs", type=int, default=1)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out")
    s.add_argument("--format", choices=["json", "csv"], default="json")
    s.add_argument("--timing", action="store_true", help="record wall-clock per case (breaks byte determinism)")
    s.set_defaults(func=cmd_suite)

    e = sub.add_parser("enumerate", help="enumerate a geometry and its order complex")
    e.add_argument("--spec", required=True)
    e.add_argument("--out")
    e.set_defaults(func=cmd_enumerate)

    h = sub.add_parser("homology", help="reduced homology of an enumerated complex")
    h.add_argument("--in", dest="inp", required=True)
    h.add_argument("--mode", choices=["exact", "modular"], default="exact")
    h.add_argument("--dim-cap", type=int)
    h.add_argument("--out")
    h.set_defaults(func=cmd_homology)

    f = sub.add_parser("flipflop", help="flip-flop system of a building flip")
    f.add_argument("--building", required=True, help="type and rank, e.g. A2, C2, B3")
    f.add_argument("--field-order", type=int, required=True)
    f.add_argument("--form", required=True, help="JSON Gram matrix of the flip form")
    f.add_argument("--point", action="store_true", help="use the star of a point with nontrivial Q")
    f.add_argument("--compare-gpg", action="store_true")
    f.add_argument("--out")
    f.set_defaults(func=cmd_flipflop)

    c = sub.add_parser("cm-links", help="homology of every link of a geometry")
    c.add_argument("--spec", required=True)
    c.add_argument("--out")
    c.set_defaults(func=cmd_cm_links)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (HarnessError, TooLarge, ValueError, OSError) as exc:
        print(f"phan: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
