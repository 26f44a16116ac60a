"""Batch command-line front end.

Subcommands cover quiver queries and surgery, field synthesis and
coordinate extraction, the cobordism evaluator, and the full
verification suite.  Exit codes: 0 success, 1 usage or I/O failure,
2 validation failure, 3 tolerance violation.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from . import __version__
from . import fields as F
from . import homotopy as H
from . import reduction as R
from . import sampling as S
from . import tqft as T
from . import verify as V
from .groups import GroupError, LogBranchError, group_by_name
from .numerics import Grid, GridError
from .quiver import Quiver, QuiverError, glue

_VALIDATION_ERRORS = (
    QuiverError,
    H.MoveError,
    GroupError,
    R.ShapeMismatchError,
    GridError,
    T.ArityMismatchError,
)
_TOLERANCE_ERRORS = (
    F.ResidualTooLargeError,
    F.NewtonDivergedError,
    R.MomentNotZeroError,
    R.DiagonalMomentError,
    LogBranchError,
)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        raise SystemExit(1)


def _load_json(path):
    try:
        with open(path) as fh:
            return json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise _IOFailure(f"cannot read {path}: {exc}") from exc


class _IOFailure(Exception):
    pass


def _emit(data, out_path=None):
    text = json.dumps(data, indent=2, sort_keys=True)
    if out_path:
        with open(out_path, "w") as fh:
            fh.write(text + "\n")
    else:
        print(text)


def _parse_tols(pairs):
    out = {}
    for pair in pairs or []:
        for item in pair.split(","):
            if not item:
                continue
            key, _, value = item.partition("=")
            if not _ or not key:
                raise _IOFailure(f"bad tolerance override {item!r}; use KEY=VAL")
            try:
                out[key] = float(value)
            except ValueError as exc:
                raise _IOFailure(f"bad tolerance value in {item!r}") from exc
    return out


def _want_color():
    return sys.stdout.isatty() and not os.environ.get("NO_COLOR")


# -- quiver ------------------------------------------------------------------


def cmd_quiver_validate(args):
    Quiver.from_dict(_load_json(args.file))
    print("ok")
    return 0


def cmd_quiver_invariants(args):
    q = Quiver.from_dict(_load_json(args.file))
    rows = [
        {"vertices": sorted(comp.vertices), "genus": g, "incoming": m, "outgoing": n}
        for comp, g, m, n in q.invariants()
    ]
    if args.json:
        _emit(rows)
    else:
        for row in rows:
            print(f"({row['genus']},{row['incoming']},{row['outgoing']})")
    return 0


def cmd_quiver_glue(args):
    q1 = Quiver.from_dict(_load_json(args.file1))
    q2 = Quiver.from_dict(_load_json(args.file2))
    if args.match:
        match = {}
        for item in args.match.split(","):
            a, _, b = item.partition("=")
            if not _:
                raise _IOFailure(f"bad match entry {item!r}; use OUT=IN")
            match[a] = b
    else:
        match = dict(zip(q1.boundary_out(), q2.boundary_in()))
    _emit(glue(q1, q2, match).to_dict(), args.output)
    return 0


def cmd_quiver_normalize(args):
    q = Quiver.from_dict(_load_json(args.file))
    rows = []
    for res in H.normalize(q):
        row = {
            "genus": res.form.genus,
            "incoming": res.form.n_in,
            "outgoing": res.form.n_out,
        }
        if args.trace:
            row["trace"] = [H.move_to_dict(mv) for mv in res.trace]
        rows.append(row)
    if args.json or args.trace:
        _emit(rows)
    else:
        for row in rows:
            print(f"({row['genus']},{row['incoming']},{row['outgoing']})")
    return 0


# -- moduli ------------------------------------------------------------------


def cmd_moduli_dim(args):
    q = Quiver.from_dict(_load_json(args.quiver))
    spec = group_by_name(args.group)
    print(2 * (len(q.edges) - len(q.interior())) * spec.dim)
    return 0


def cmd_moduli_synthesize(args):
    q = Quiver.from_dict(_load_json(args.quiver))
    spec = group_by_name(args.group)
    grid = Grid(args.grid)
    if args.point:
        point = R.CotangentPoint.from_dict(_load_json(args.point))
    else:
        point = S.random_moment_zero_point(q, spec, args.seed)
    field = F.synthesize_solution(q, point, grid)
    _emit(field.to_dict(), args.output)
    return 0


def cmd_moduli_phi(args):
    q = Quiver.from_dict(_load_json(args.quiver))
    field = F.EdgeField.from_dict(_load_json(args.field))
    tols = _parse_tols(args.tol)
    point = F.moduli_coordinates(q, field, residual_tol=tols.get("residual", 1e-4))
    _emit(point.to_dict(), args.output)
    return 0


def cmd_moduli_residuals(args):
    q = Quiver.from_dict(_load_json(args.quiver))
    field = F.EdgeField.from_dict(_load_json(args.field))
    tols = _parse_tols(args.tol)
    bound = tols.get("residual", 1e-6)
    lax = F.lax_residual(field)
    kir = F.kirchhoff_residual(q, field)
    report = {"flow": lax, "matching": kir, "tolerance": bound}
    _emit(report)
    worst = max(
        max(lax.values(), default=0.0), max(kir.values(), default=0.0)
    )
    if worst > bound:
        print(f"residual {worst:.3g} exceeds {bound:.3g}", file=sys.stderr)
        return 3
    return 0


# -- tqft --------------------------------------------------------------------


def cmd_tqft_eval(args):
    cls = T.evaluate(args.word)
    rows = [
        {"genus": g, "incoming": m, "outgoing": n}
        for g, m, n in cls.component_shapes()
    ]
    if args.json:
        _emit({"n_in": cls.n_in, "n_out": cls.n_out, "components": rows})
    else:
        shapes = " ".join(f"({g},{m},{n})" for g, m, n in cls.component_shapes())
        print(f"{cls.n_in} -> {cls.n_out}: {shapes}")
    return 0


def cmd_tqft_check_relations(args):
    spec = group_by_name(args.group)
    results = T.check_relations(spec)
    failures = [r.name for r in results if not (r.equal and r.dims_consistent)]
    for r in results:
        status = "ok" if (r.equal and r.dims_consistent) else "FAIL"
        print(f"{r.name:20s} {status}")
    return 0 if not failures else 3


def cmd_tqft_ham_dim(args):
    spec = group_by_name(args.group)
    g, m, n = args.genus, args.n_in, args.n_out
    if g == 0 and m + n == 1:
        print(0)
    else:
        print(2 * (g + m + n - 1) * spec.dim)
    return 0


# -- verify --------------------------------------------------------------------


def cmd_verify(args):
    cfg = V.RunConfig(
        group=args.group,
        grid_n=args.grid,
        seed=args.seed,
        tolerances=_parse_tols(args.tol),
    )
    results = V.run_all(cfg)
    if args.json:
        _emit(
            {
                "config": {"group": cfg.group, "grid": cfg.grid_n, "seed": cfg.seed},
                "criteria": [r.to_dict() for r in results],
                "passed": all(r.passed for r in results),
            }
        )
    else:
        print(V.format_report(results, color=_want_color()))
    return 0 if all(r.passed for r in results) else 3


# -- wiring --------------------------------------------------------------------


def _add_common(parser, grid=False, seed=False, group=False, tol=False):
    if group:
        parser.add_argument("--group", default="su2", choices=["u1", "su2", "so3"])
    if grid:
        parser.add_argument("--grid", type=int, default=400, metavar="N")
    if seed:
        parser.add_argument("--seed", type=int, default=0, metavar="S")
    if tol:
        parser.add_argument(
            "--tol", action="append", metavar="KEY=VAL",
            help="tolerance override; may repeat or comma-separate",
        )


def build_parser():
    parser = _Parser(prog="laxnet", description=__doc__)
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    pq = sub.add_parser("quiver", help="quiver queries and surgery")
    qsub = pq.add_subparsers(dest="sub", required=True, parser_class=_Parser)
    p = qsub.add_parser("validate")
    p.add_argument("file")
    p.set_defaults(fn=cmd_quiver_validate)
    p = qsub.add_parser("invariants")
    p.add_argument("file")
    p.add_argument("--json", action="store_true")
    p.set_defaults(fn=cmd_quiver_invariants)
    p = qsub.add_parser("glue")
    p.add_argument("file1")
    p.add_argument("file2")
    p.add_argument("--match", help="comma-separated OUT=IN vertex pairs")
    p.add_argument("-o", "--output")
    p.set_defaults(fn=cmd_quiver_glue)
    p = qsub.add_parser("normalize")
    p.add_argument("file")
    p.add_argument("--trace", action="store_true")
    p.add_argument("--json", action="store_true")
    p.set_defaults(fn=cmd_quiver_normalize)

    pm = sub.add_parser("moduli", help="field synthesis and coordinates")
    msub = pm.add_subparsers(dest="sub", required=True, parser_class=_Parser)
    p = msub.add_parser("dim")
    p.add_argument("quiver")
    _add_common(p, group=True)
    p.set_defaults(fn=cmd_moduli_dim)
    p = msub.add_parser("synthesize")
    p.add_argument("quiver")
    p.add_argument("--point", help="point JSON; omitted: random with --seed")
    p.add_argument("-o", "--output")
    _add_common(p, grid=True, seed=True, group=True)
    p.set_defaults(fn=cmd_moduli_synthesize)
    p = msub.add_parser("phi")
    p.add_argument("quiver")
    p.add_argument("field")
    p.add_argument("-o", "--output")
    _add_common(p, tol=True)
    p.set_defaults(fn=cmd_moduli_phi)
    p = msub.add_parser("residuals")
    p.add_argument("quiver")
    p.add_argument("field")
    _add_common(p, tol=True)
    p.set_defaults(fn=cmd_moduli_residuals)

    pt = sub.add_parser("tqft", help="cobordism words and relations")
    tsub = pt.add_subparsers(dest="sub", required=True, parser_class=_Parser)
    p = tsub.add_parser("eval")
    p.add_argument("word")
    p.add_argument("--json", action="store_true")
    p.set_defaults(fn=cmd_tqft_eval)
    p = tsub.add_parser("check-relations")
    _add_common(p, group=True)
    p.set_defaults(fn=cmd_tqft_check_relations)
    p = tsub.add_parser("ham-dim")
    p.add_argument("--genus", type=int, required=True)
    p.add_argument("--in", dest="n_in", type=int, required=True)
    p.add_argument("--out", dest="n_out", type=int, required=True)
    _add_common(p, group=True)
    p.set_defaults(fn=cmd_tqft_ham_dim)

    p = sub.add_parser("verify", help="run the full verification suite")
    p.add_argument("--json", action="store_true")
    _add_common(p, grid=True, seed=True, group=True, tol=True)
    p.set_defaults(fn=cmd_verify)
    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.fn(args)
    except _IOFailure as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except _TOLERANCE_ERRORS as exc:
        print(f"tolerance violation: {exc}", file=sys.stderr)
        return 3
    except _VALIDATION_ERRORS as exc:
        print(f"invalid input: {exc}", file=sys.stderr)
        return 2
    except F.FieldError as exc:
        print(f"invalid input: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
