"""Command-line frontend over the library.

Subcommands map one-to-one onto the library's capabilities: ``analyze``
runs the stratum census, dihedral angles, and every applicable volume
method on one polytope; ``sweep`` samples the deformation curves over a
time range; ``assemble`` builds a glued complex and reports its
cone-manifold data; ``commensurability`` computes the arithmetic
invariants; ``check-paper`` runs the built-in acceptance checks.

Reports are plain dictionaries rendered as JSON, CSV, or aligned text.
Identical flags produce byte-identical output, and JSON reports re-parse
to the in-memory dictionary.  Angles and other floats are printed with
12 significant digits in the text and CSV renderings; exact rationals
print as ``p/q``.  Times are accepted as decimals, ``sqrt(p/q)``, or the
named critical times ``t1``, ``t2``, ``tbar``.  The HYPERCOX_EPS
environment variable overrides the numeric tolerance band inside the
library.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import csv
import json
import math
import sys
from fractions import Fraction
from typing import Callable, Optional, Sequence, Union

from .acceptance import run_checks
from .arith import (
    INFINITE_PLACE,
    MultiQuad,
    commensurability_from_gram,
    commensurability_pipeline,
    gram_from_json,
)
from .assembly import assemble_from_json, assemble_pattern, complex_report
from .coxeter import (
    StrataComplex,
    build_diagram,
    enumerate_strata,
    finite_volume_check,
    gram_matrix,
)
from .family import (
    FamilyTime,
    angle_eta,
    angle_phi,
    angle_theta,
    ks_normals,
    quotient_normals,
)
from .lorentz import SpaceLikeVector
from .volume import (
    closed_form_volume,
    gauss_bonnet_volume,
    orbifold_euler_char,
    poincare_volume,
    stabilizer_orders,
)

Report = dict
Scalar = Union[int, float, MultiQuad]

BUILTIN_PATTERNS = ("W", "N", "M")
SWEEP_QUANTITIES = ("vol", "theta", "phi", "eta")


class FlagError(ValueError):
    """A flag combination the parser cannot reject statically."""


# ---------------------------------------------------------------------------
# formatting


def _fmt(value) -> str:
    """One value as text: floats at 12 significant digits, rationals p/q."""
    if isinstance(value, bool):
        return "yes" if value else "no"
    if isinstance(value, float):
        return f"{value:.12g}"
    return str(value)


def _json_rational(value):
    """A Fraction as a JSON-safe value: int when integral, else "p/q"."""
    if isinstance(value, Fraction):
        return int(value) if value.denominator == 1 else str(value)
    return value


def _emit_json(payload) -> None:
    print(json.dumps(payload, indent=2))


def _csv_writer():
    return csv.writer(sys.stdout, lineterminator="\n")


def _csv_cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return f"{value:.12g}"
    return str(value)


# ---------------------------------------------------------------------------
# shared parsing


def _scalar(raw) -> Scalar:
    if isinstance(raw, str):
        return MultiQuad.parse(raw)
    if isinstance(raw, (int, float)) and not isinstance(raw, bool):
        return raw
    raise ValueError(f"coordinates must be numbers or quadratic strings, got {raw!r}")


def _preset_normals(preset: str):
    """Resolve "P@<time>" or "Q@<time>" into named normals and the time."""
    tag, _, token = preset.partition("@")
    if tag not in ("P", "Q") or not token:
        raise FlagError(f"preset must look like P@<time> or Q@<time>, got {preset!r}")
    ft = FamilyTime.parse(token)
    normals = ks_normals(ft) if tag == "P" else quotient_normals(ft)
    return normals, ft


def _load_polytope(path: str) -> dict[str, SpaceLikeVector]:
    """A polytope file: a JSON list of {"name": ..., "normal": [5 entries]}."""
    with open(path, encoding="utf-8") as handle:
        data = json.load(handle)
    if not isinstance(data, list) or not data:
        raise ValueError("polytope file must be a non-empty JSON list of named normals")
    normals: dict[str, SpaceLikeVector] = {}
    for entry in data:
        if not isinstance(entry, dict) or set(entry) != {"name", "normal"}:
            raise ValueError(
                'each polytope entry must be {"name": ..., "normal": [...]}'
            )
        name, raw = entry["name"], entry["normal"]
        if not isinstance(name, str) or name in normals:
            raise ValueError(f"wall names must be unique strings, got {name!r}")
        if not isinstance(raw, list) or len(raw) != 5:
            raise ValueError(f"wall {name!r} needs exactly 5 coordinates")
        normals[name] = SpaceLikeVector(tuple(_scalar(x) for x in raw))
    return normals


def _load_json(path: str):
    with open(path, encoding="utf-8") as handle:
        return json.load(handle)


# ---------------------------------------------------------------------------
# analyze


def _angle_census(complex_: StrataComplex) -> list[dict]:
    """Distinct dihedral angles with face counts, merged within 1e-9."""
    out: list[dict] = []
    for angle in sorted(face.angle for face in complex_.faces):
        if out and abs(angle - out[-1]["angle"]) <= 1e-9:
            out[-1]["faces"] += 1
        else:
            out.append({"angle": angle, "faces": 1})
    return out


def _diagram_summary(normals) -> dict:
    diagram = build_diagram(gram_matrix(normals))
    edges = []
    kinds: dict[str, int] = {}
    for pair in sorted(diagram.labels, key=sorted):
        label = diagram.labels[pair]
        kinds[label.kind.value] = kinds.get(label.kind.value, 0) + 1
        edges.append(
            {"walls": sorted(pair), "kind": label.kind.value, "angle": label.angle}
        )
    return {
        "nodes": list(diagram.nodes),
        "edge_kinds": dict(sorted(kinds.items())),
        "edges": edges,
    }


def _analyze_report(args) -> Report:
    if args.preset is not None:
        normals, ft = _preset_normals(args.preset)
        subject = args.preset
        family = args.preset.startswith("P@")
    elif args.t is not None:
        ft = FamilyTime.parse(args.t)
        normals, subject, family = ks_normals(ft), f"P@{args.t}", True
    else:
        normals, ft, family = _load_polytope(args.polytope), None, False
        subject = args.polytope

    complex_ = enumerate_strata(normals, mode=args.mode)
    verdict = finite_volume_check(complex_)

    closed = closed_form_volume(float(ft.t)) if family else None
    poincare = gauss_bonnet = None
    chi = None
    if verdict.finite:
        poincare = poincare_volume(normals, complex_)
        try:
            orders = stabilizer_orders(normals, complex_)
        except ValueError:
            pass  # generic angles: no reflection group, no chi
        else:
            chi = orbifold_euler_char(complex_, orders)
            gauss_bonnet = gauss_bonnet_volume(chi)

    return {
        "subject": subject,
        "t": float(ft.t) if ft is not None else None,
        "regime": ft.regime.value if ft is not None else None,
        "f_vector": list(complex_.f_vector),
        "simple": complex_.is_simple,
        "finite_vertices": len(complex_.finite_vertices),
        "ideal_vertices": len(complex_.ideal_vertices),
        "finite_volume": verdict.finite,
        "finite_volume_witness": sorted(verdict.witness) if verdict.witness else None,
        "dihedral_angles": _angle_census(complex_),
        "diagram": _diagram_summary(normals),
        "volume": {
            "closed_form": closed,
            "poincare": poincare,
            "gauss_bonnet": gauss_bonnet,
        },
        "euler_characteristic": _json_rational(chi),
    }


def _print_analyze_text(report: Report) -> None:
    lines = [
        ("subject", report["subject"]),
        ("t", report["t"]),
        ("regime", report["regime"]),
        ("f-vector", "(" + ", ".join(str(n) for n in report["f_vector"]) + ")"),
        ("simple", report["simple"]),
        ("vertices", f"{report['finite_vertices']} finite, {report['ideal_vertices']} ideal"),
        ("finite volume", report["finite_volume"]),
    ]
    if report["finite_volume_witness"]:
        lines.append(("open edge", " ".join(report["finite_volume_witness"])))
    census = ", ".join(
        f"{_fmt(entry['angle'])} x{entry['faces']}"
        for entry in report["dihedral_angles"]
    )
    kinds = ", ".join(
        f"{kind} x{count}" for kind, count in report["diagram"]["edge_kinds"].items()
    )
    lines.append(("dihedral angles", census))
    lines.append(("diagram", f"{len(report['diagram']['nodes'])} nodes; {kinds}"))
    for method in ("closed_form", "poincare", "gauss_bonnet"):
        value = report["volume"][method]
        if value is not None:
            lines.append((f"volume {method.replace('_', '-')}", value))
    if report["euler_characteristic"] is not None:
        lines.append(("euler characteristic", report["euler_characteristic"]))
    for key, value in lines:
        if value is not None:
            print(f"{key}: {_fmt(value)}")


def _print_analyze_csv(report: Report) -> None:
    writer = _csv_writer()
    writer.writerow(["field", "value"])
    writer.writerow(["subject", report["subject"]])
    writer.writerow(["t", _csv_cell(report["t"])])
    writer.writerow(["regime", _csv_cell(report["regime"])])
    writer.writerow(["f_vector", ";".join(str(n) for n in report["f_vector"])])
    writer.writerow(["simple", _csv_cell(report["simple"])])
    writer.writerow(["finite_vertices", report["finite_vertices"]])
    writer.writerow(["ideal_vertices", report["ideal_vertices"]])
    writer.writerow(["finite_volume", _csv_cell(report["finite_volume"])])
    writer.writerow(
        ["dihedral_angles", ";".join(
            f"{_csv_cell(entry['angle'])}:{entry['faces']}"
            for entry in report["dihedral_angles"]
        )]
    )
    writer.writerow(
        ["diagram_edges", ";".join(
            f"{kind}:{count}"
            for kind, count in report["diagram"]["edge_kinds"].items()
        )]
    )
    for method in ("closed_form", "poincare", "gauss_bonnet"):
        writer.writerow([f"volume_{method}", _csv_cell(report["volume"][method])])
    writer.writerow(
        ["euler_characteristic", _csv_cell(report["euler_characteristic"])]
    )


def _cmd_analyze(args) -> int:
    report = _analyze_report(args)
    if args.format == "json":
        _emit_json(report)
    elif args.format == "csv":
        _print_analyze_csv(report)
    else:
        _print_analyze_text(report)
    return 0


# ---------------------------------------------------------------------------
# sweep


def _sweep_row(task: tuple[float, tuple[str, ...]]) -> Report:
    """One sample of the deformation curves; quantities outside their
    regime are reported as None."""
    t, quantities = task
    row: Report = {"t": t}
    for quantity in quantities:
        if quantity == "vol":
            value: Optional[float] = closed_form_volume(t)
        else:
            fn = {"theta": angle_theta, "phi": angle_phi, "eta": angle_eta}[quantity]
            try:
                value = fn(t)
            except ValueError:
                value = None
        row[quantity] = value
    return row


def _sweep_rows(args) -> tuple[list[Report], tuple[str, ...]]:
    start = float(FamilyTime.parse(args.start).t)
    stop = float(FamilyTime.parse(args.stop).t)
    if stop <= start:
        raise FlagError("--stop must exceed --start")
    if args.steps < 1:
        raise FlagError("--steps must be at least 1")
    if args.jobs < 1:
        raise FlagError("--jobs must be at least 1")

    quantities: list[str] = []
    for item in args.quantities.split(","):
        name = item.strip()
        if not name:
            continue
        if name not in SWEEP_QUANTITIES:
            choices = ", ".join(SWEEP_QUANTITIES)
            raise FlagError(f"unknown quantity {name!r}; choose from {choices}")
        if name not in quantities:
            quantities.append(name)
    if not quantities:
        raise FlagError("--quantities must name at least one quantity")

    ts = [start + (stop - start) * i / args.steps for i in range(args.steps + 1)]
    tasks = [(t, tuple(quantities)) for t in ts]
    if args.jobs > 1:
        with concurrent.futures.ProcessPoolExecutor(max_workers=args.jobs) as pool:
            rows = list(pool.map(_sweep_row, tasks))
    else:
        rows = [_sweep_row(task) for task in tasks]
    return rows, tuple(quantities)


def _cmd_sweep(args) -> int:
    rows, quantities = _sweep_rows(args)
    columns = ("t",) + quantities
    if args.format == "json":
        _emit_json(rows)
    elif args.format == "csv":
        writer = _csv_writer()
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_csv_cell(row[c]) for c in columns])
    else:
        widths = {c: max(len(c), 14) for c in columns}
        print("  ".join(c.ljust(widths[c]) for c in columns).rstrip())
        for row in rows:
            cells = [
                ("n/a" if row[c] is None else _fmt(row[c])).ljust(widths[c])
                for c in columns
            ]
            print("  ".join(cells).rstrip())
    return 0


# ---------------------------------------------------------------------------
# assemble


def _assemble_report(args) -> Report:
    if args.pattern in BUILTIN_PATTERNS:
        if args.t is None:
            raise FlagError("--t is required with the built-in patterns")
        ft = FamilyTime.parse(args.t)
        complex_ = assemble_pattern(args.pattern, ft)
        subject: str = f"{args.pattern}@{args.t}"
        t_value: Optional[float] = float(ft.t)
    else:
        if args.t is not None:
            raise FlagError(
                "--t applies only to the built-in patterns; the file names its own base"
            )
        with open(args.pattern, encoding="utf-8") as handle:
            complex_ = assemble_from_json(handle.read())
        subject, t_value = args.pattern, None
    report: Report = {"subject": subject, "t": t_value}
    report.update(complex_report(complex_))
    return report


def _census(records: Sequence) -> list[tuple]:
    """Collapse repeated records into (record, count) pairs, first-seen order."""
    order: list = []
    counts: dict = {}
    for record in records:
        if record not in counts:
            order.append(record)
        counts[record] = counts.get(record, 0) + 1
    return [(record, counts[record]) for record in order]


def _print_assemble_text(report: Report) -> None:
    print(f"subject: {report['subject']}")
    if report["t"] is not None:
        print(f"t: {_fmt(report['t'])}")
    print(f"copies: {len(report['copies'])} x {report['walls_per_copy']} walls")
    cycles = report["face_cycles"]
    singular = cycles["singular"]
    print(
        f"face cycles: {cycles['count']} "
        f"({cycles['smooth']} smooth, {len(singular)} singular)"
    )
    for line, count in _census(
        [
            f"length {c['length']} angle {_fmt(c['total_angle'])}"
            for c in singular
        ]
    ):
        print(f"  {line} x{count}")
    print(f"surfaces: {len(report['surfaces'])}")
    for line, count in _census(
        [
            "chi {chi}, cones {cones}, area {area}, transverse {transverse}, "
            "{orientable}{boundary}".format(
                chi=s["euler_characteristic"],
                cones=" ".join(_fmt(c) for c in s["cone_points"]) or "none",
                area=_fmt(s["area"]),
                transverse=_fmt(s["transverse_angle"]),
                orientable="orientable" if s["orientable"] else "non-orientable",
                boundary=", boundary" if s["has_boundary"] else "",
            )
            for s in report["surfaces"]
        ]
    ):
        print(f"  {line} x{count}")
    print(f"cusps: {len(report['cusps'])}")
    for line, count in _census(
        [
            f"length {c['length']} sign {c['monodromy_sign']:+d}"
            for c in report["cusps"]
        ]
    ):
        print(f"  {line} x{count}")
    print(f"euler characteristic: {report['euler_characteristic']}")


def _print_assemble_csv(report: Report) -> None:
    writer = _csv_writer()
    writer.writerow(
        [
            "record",
            "count",
            "length",
            "euler_characteristic",
            "angle",
            "area",
            "transverse_angle",
            "cone_points",
            "orientable",
            "has_boundary",
            "monodromy_sign",
        ]
    )
    singular = report["face_cycles"]["singular"]
    for (length, angle), count in _census(
        [(c["length"], _csv_cell(c["total_angle"])) for c in singular]
    ):
        writer.writerow(["cycle", count, length, "", angle, "", "", "", "", "", ""])
    for fields, count in _census(
        [
            (
                s["euler_characteristic"],
                _csv_cell(s["area"]),
                _csv_cell(s["transverse_angle"]),
                ";".join(_csv_cell(c) for c in s["cone_points"]),
                _csv_cell(s["orientable"]),
                _csv_cell(s["has_boundary"]),
            )
            for s in report["surfaces"]
        ]
    ):
        chi, area, transverse, cones, orientable, boundary = fields
        writer.writerow(
            ["surface", count, "", chi, "", area, transverse, cones, orientable, boundary, ""]
        )
    for (length, sign), count in _census(
        [(c["length"], c["monodromy_sign"]) for c in report["cusps"]]
    ):
        writer.writerow(["cusp", count, length, "", "", "", "", "", "", "", sign])


def _cmd_assemble(args) -> int:
    report = _assemble_report(args)
    if args.format == "json":
        _emit_json(report)
    elif args.format == "csv":
        _print_assemble_csv(report)
    else:
        _print_assemble_text(report)
    return 0


# ---------------------------------------------------------------------------
# commensurability


def _load_basis_vectors(path: str) -> list[tuple[Scalar, ...]]:
    data = _load_json(path)
    if not isinstance(data, list):
        raise ValueError("basis file must be a JSON list of coordinate vectors")
    return [tuple(_scalar(x) for x in row) for row in data]


def _load_basis_coefficients(path: str) -> list[dict[int, Scalar]]:
    data = _load_json(path)
    if not isinstance(data, list):
        raise ValueError("basis file must be a JSON list of index-to-entry maps")
    return [
        {int(index): _scalar(value) for index, value in row.items()} for row in data
    ]


def _commensurability_report(args) -> Report:
    if args.preset is not None:
        normals, _ = _preset_normals(args.preset)
        vectors = [vector.coords for _, vector in sorted(normals.items())]
        basis = _load_basis_vectors(args.basis) if args.basis else None
        result = commensurability_pipeline(vectors, basis=basis)
        subject = args.preset
    else:
        with open(args.gram, encoding="utf-8") as handle:
            gram = gram_from_json(handle.read())
        coefficients = _load_basis_coefficients(args.basis) if args.basis else None
        result = commensurability_from_gram(gram, basis_coefficients=coefficients)
        subject = args.gram
    invariant = result.invariant
    return {
        "subject": subject,
        "diagonal": [_json_rational(entry) for entry in result.diagonal],
        "hasse": _places(invariant.hasse),
        "witt": _places(invariant.witt),
        "determinant_class": _json_rational(invariant.determinant_class),
        "signature": list(invariant.signature),
    }


def _places(ramification) -> list:
    return ["inf" if place == INFINITE_PLACE else place for place in ramification]


def _print_commensurability_text(report: Report) -> None:
    print(f"subject: {report['subject']}")
    print("diagonal: (" + ", ".join(str(d) for d in report["diagonal"]) + ")")
    print("hasse: {" + ", ".join(str(p) for p in report["hasse"]) + "}")
    print("witt: {" + ", ".join(str(p) for p in report["witt"]) + "}")
    print(f"determinant class: {report['determinant_class']}")
    print("signature: (" + ", ".join(str(s) for s in report["signature"]) + ")")


def _cmd_commensurability(args) -> int:
    report = _commensurability_report(args)
    if args.format == "json":
        _emit_json(report)
    elif args.format == "csv":
        writer = _csv_writer()
        writer.writerow(["field", "value"])
        writer.writerow(["subject", report["subject"]])
        writer.writerow(["diagonal", ";".join(str(d) for d in report["diagonal"])])
        writer.writerow(["hasse", ";".join(str(p) for p in report["hasse"])])
        writer.writerow(["witt", ";".join(str(p) for p in report["witt"])])
        writer.writerow(["determinant_class", report["determinant_class"]])
        writer.writerow(["signature", ";".join(str(s) for s in report["signature"])])
    else:
        _print_commensurability_text(report)
    return 0


# ---------------------------------------------------------------------------
# check-paper


def _cmd_check_paper(args) -> int:
    results = run_checks(args.section)
    if not results:
        raise FlagError(f"no check matches section {args.section!r}")
    if args.format == "json":
        _emit_json(
            [
                {"name": r.name, "passed": r.passed, "detail": r.detail}
                for r in results
            ]
        )
    elif args.format == "csv":
        writer = _csv_writer()
        writer.writerow(["name", "passed", "detail"])
        for r in results:
            writer.writerow([r.name, _csv_cell(r.passed), r.detail])
    else:
        for r in results:
            print(f"{'PASS' if r.passed else 'FAIL'} {r.name}: {r.detail}")
    return 0 if all(r.passed for r in results) else 3


# ---------------------------------------------------------------------------
# entry point


def _add_format(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--format", choices=("json", "csv", "text"), default="text",
        help="output rendering (default: text)",
    )


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hypercox",
        description="Hyperbolic 4-polytopes: strata, volumes, gluings, arithmetic.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    analyze = sub.add_parser(
        "analyze",
        help="stratum census, angles, volumes, and Euler characteristic",
    )
    which = analyze.add_mutually_exclusive_group(required=True)
    which.add_argument("--preset", help="family preset such as P@t1 or Q@sqrt(1/3)")
    which.add_argument("--t", help="time for the 24-wall family polytope")
    which.add_argument(
        "--polytope", help="JSON file: list of {\"name\": ..., \"normal\": [...]}"
    )
    analyze.add_argument(
        "--mode", choices=("diagram", "geometric", "both"), default="diagram",
        help="stratum backend (default: diagram)",
    )
    _add_format(analyze)

    sweep = sub.add_parser("sweep", help="sample deformation curves over a time range")
    sweep.add_argument("--start", required=True, help="first time of the range")
    sweep.add_argument("--stop", required=True, help="last time of the range")
    sweep.add_argument(
        "--steps", type=int, default=100, help="equal sub-intervals (default: 100)"
    )
    sweep.add_argument(
        "--quantities", default="vol,theta,phi",
        help="comma list from vol, theta, phi, eta (default: vol,theta,phi)",
    )
    sweep.add_argument(
        "--jobs", type=int, default=1, help="parallel workers (default: 1)"
    )
    _add_format(sweep)

    assemble = sub.add_parser(
        "assemble", help="glue copies of the polytope and report the complex"
    )
    assemble.add_argument(
        "--pattern", required=True,
        help="W, N, M, or a JSON assembly file",
    )
    assemble.add_argument("--t", help="time, required for the built-in patterns")
    _add_format(assemble)

    comm = sub.add_parser(
        "commensurability", help="diagonal form and ramification invariants"
    )
    source = comm.add_mutually_exclusive_group(required=True)
    source.add_argument("--preset", help="family preset such as Q@t1")
    source.add_argument(
        "--gram", help="JSON Gram matrix of unit normals (entries p/q or p/q*sqrt(d))"
    )
    comm.add_argument(
        "--basis",
        help="optional JSON basis: coordinate vectors for --preset, "
        "index-to-coefficient maps for --gram",
    )
    _add_format(comm)

    check = sub.add_parser("check-paper", help="run the built-in acceptance checks")
    check.add_argument(
        "--section", default="", help="only run checks whose name contains this text"
    )
    _add_format(check)
    return parser


_DISPATCH: dict[str, Callable] = {
    "analyze": _cmd_analyze,
    "sweep": _cmd_sweep,
    "assemble": _cmd_assemble,
    "commensurability": _cmd_commensurability,
    "check-paper": _cmd_check_paper,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as stop:
        return stop.code if isinstance(stop.code, int) else 2
    try:
        return _DISPATCH[args.command](args)
    except FlagError as error:
        print(f"error: {error}", file=sys.stderr)
        return 2
    except (ValueError, KeyError, OSError) as error:
        print(f"error: {error}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
