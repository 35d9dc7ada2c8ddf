#!/usr/bin/env python
"""
conekit - symplectic cone checks and fiber sums on intersection lattices.

Usage:
    python conekit.py catalog-list
    python conekit.py catalog-show --model T4
    python conekit.py lattice-sig --model K3
    python conekit.py cone-check --model T4 --class "f+G" --relative f
    python conekit.py sum-build --spec specs/t4t4.json
    python conekit.py sum-split --spec specs/t4t4.json --class "2F+G" --rho 2/1
    python conekit.py verify t2 --samples 1000 --seed 7 [--csv report.csv]

Standard output carries exactly one JSON document, --help included. Exit
codes: 0 member or success, 1 non-member or failed verification, 2 usage or
validation error.
"""

import argparse
import json
import logging
import sys
from pathlib import Path

import catalog
import verify_suites
from errors import ConeKitError, SchemaError, UsageError
from fibersum import FiberSumSpec, build_sum, check_good, split_class, sum_cone_contains
from lattice import as_fraction, format_class, fraction_to_json, parse_class, signature, square, sylvester_signature
from manifold_cones import (
    SplitWitness,
    conjecture_cone_contains,
    half_cone_contains,
    positive_cone_contains,
    relative_cone_contains,
    symplectic_cone_contains,
    table_cone_contains,
)

logger = logging.getLogger("conekit")

EXIT_OK, EXIT_NEGATIVE, EXIT_ERROR = 0, 1, 2

PREDICATES = ("positive", "symplectic", "relative", "conjecture", "half", "table", "sum")


class HelpRequested(Exception):
    def __init__(self, text):
        super().__init__(text)
        self.text = text


class JsonArgumentParser(argparse.ArgumentParser):
    """argparse that raises instead of printing usage or help and exiting"""

    def error(self, message):
        raise UsageError(message)

    def print_help(self, file=None):
        raise HelpRequested(self.format_help())


def build_parser():
    parser = JsonArgumentParser(prog="conekit", description="Symplectic cone membership and fiber sums.")
    parser.add_argument("--catalog-dir", help=f"directory of <name>.json model overrides (env {catalog.CATALOG_ENV})")
    parser.add_argument("-v", "--verbose", action="count", default=0, help="log INFO (-v) or DEBUG (-vv) to stderr")
    verbs = parser.add_subparsers(dest="verb", required=True, parser_class=JsonArgumentParser)

    verbs.add_parser("catalog-list", help="list catalog models")

    show = verbs.add_parser("catalog-show", help="print a model with its provenance notes")
    show.add_argument("--model", required=True)

    sig = verbs.add_parser("lattice-sig", help="signature of a model's intersection form")
    sig.add_argument("--model", required=True)

    check = verbs.add_parser("cone-check", help="cone membership of a class")
    target = check.add_mutually_exclusive_group(required=True)
    target.add_argument("--model", help="catalog name or model JSON path")
    target.add_argument("--spec", help="fiber-sum spec JSON; the class lives on the built sum")
    check.add_argument("--class", dest="class_expr", required=True)
    check.add_argument("--relative", help="V (relative predicate) or beta (half predicate)")
    check.add_argument("--predicate", choices=PREDICATES)

    build = verbs.add_parser("sum-build", help="glue two models along V")
    build.add_argument("--spec", required=True)

    split = verbs.add_parser("sum-split", help="split a class of a good sum into summand classes")
    split.add_argument("--spec", required=True)
    split.add_argument("--class", dest="class_expr", required=True)
    split.add_argument("--rho", help="volume given to X; defaults to half of square(alpha)")

    verify = verbs.add_parser("verify", help="run a seeded verification suite")
    verify.add_argument("suite", choices=sorted(verify_suites.SUITES))
    verify.add_argument("--samples", type=int, default=1000)
    verify.add_argument("--seed", type=int, default=0)
    verify.add_argument("--csv", help="also write the per-check table to this CSV file")
    return parser


def configure_logging(verbosity):
    level = logging.WARNING
    if verbosity == 1:
        level = logging.INFO
    elif verbosity > 1:
        level = logging.DEBUG
    logging.basicConfig(
        stream=sys.stderr,
        level=level,
        format="%(asctime)s %(name)s:%(levelname)s: %(message)s",
        force=True,
    )


def load_spec(path, catalog_dir=None):
    """Read a fiber-sum spec file; model paths resolve relative to the file"""
    path = Path(path)
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise SchemaError(f"cannot read spec file {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise SchemaError(f"spec file {path} is not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise SchemaError("spec must be a JSON object")
    for key in ("x", "y", "v_in_x", "v_in_y"):
        if key not in data:
            raise SchemaError(f"spec is missing {key!r}")

    def model(ref):
        if isinstance(ref, str) and ref.endswith(".json") and not Path(ref).is_absolute():
            ref = str(path.parent / ref)
        return catalog.resolve_model(ref, catalog_dir)

    x, y = model(data["x"]), model(data["y"])
    options = {}
    for key, kind in (("v_genus", int), ("rim_rank", int), ("tau_rank", int), ("h1_injects_into_y", bool)):
        if key in data:
            value = data[key]
            if not isinstance(value, kind) or (kind is int and isinstance(value, bool)):
                raise SchemaError(f"spec field {key!r} must be {kind.__name__}")
            options[key] = value
    spec = FiberSumSpec(
        x_model=x,
        y_model=y,
        v_in_x=catalog.read_class(x.lattice, data["v_in_x"], "v_in_x"),
        v_in_y=catalog.read_class(y.lattice, data["v_in_y"], "v_in_y"),
        **options,
    )
    return spec, data.get("name")


def _entry(ref, catalog_dir):
    if ref.endswith(".json") or Path(ref).is_file():
        return catalog.CatalogEntry(catalog.load_model_file(ref), f"model file {ref}")
    return catalog.get_entry(ref, catalog_dir)


def cmd_catalog_list(args):
    return EXIT_OK, {"models": catalog.list_models(args.catalog_dir)}


def cmd_catalog_show(args):
    entry = _entry(args.model, args.catalog_dir)
    return EXIT_OK, {"model": catalog.serialize_model(entry.model), "provenance_notes": entry.provenance_notes}


def cmd_lattice_sig(args):
    model = catalog.resolve_model(args.model, args.catalog_dir)
    sig = signature(model.lattice)
    return EXIT_OK, {
        "model": model.name,
        "rank": model.lattice.rank,
        "signature": sig.to_json(),
        "index": sig.index,
        "sylvester_index": sylvester_signature(model.lattice),
    }


def _check_on_model(model, alpha, predicate, relative):
    lattice = model.lattice
    if predicate == "positive":
        return positive_cone_contains(model, alpha)
    if predicate == "symplectic":
        return symplectic_cone_contains(model, alpha)
    if predicate == "conjecture":
        return conjecture_cone_contains(model, alpha)
    if predicate == "table":
        return table_cone_contains(model, alpha)
    if predicate == "half":
        beta = lattice.zero() if relative is None else parse_class(lattice, relative)
        return half_cone_contains(model, beta, alpha)
    if relative is None:
        raise UsageError("--predicate relative needs --relative V")
    return relative_cone_contains(model, parse_class(lattice, relative), alpha)


def cmd_cone_check(args):
    predicate = args.predicate or ("relative" if args.relative else "symplectic")
    if args.spec:
        spec, name = load_spec(args.spec, args.catalog_dir)
        model, basis = build_sum(spec, name)
        alpha = parse_class(model.lattice, args.class_expr)
        if predicate == "sum":
            verdict = sum_cone_contains(spec, basis, alpha)
        else:
            verdict = _check_on_model(model, alpha, predicate, args.relative)
    else:
        if predicate == "sum":
            raise UsageError("--predicate sum needs --spec")
        model = catalog.resolve_model(args.model, args.catalog_dir)
        alpha = parse_class(model.lattice, args.class_expr)
        verdict = _check_on_model(model, alpha, predicate, args.relative)

    payload = {"model": model.name, "class": format_class(alpha)}
    payload.update(verdict.to_json())
    return (EXIT_OK if verdict.member else EXIT_NEGATIVE), payload


def cmd_sum_build(args):
    spec, name = load_spec(args.spec, args.catalog_dir)
    model, basis = build_sum(spec, name)
    return EXIT_OK, {
        "model": model.to_json(),
        "basis_roles": basis.to_json(),
        "goodness": check_good(spec).to_json(),
    }


def cmd_sum_split(args):
    spec, name = load_spec(args.spec, args.catalog_dir)
    model, basis = build_sum(spec, name)
    alpha = parse_class(model.lattice, args.class_expr)
    total = square(model.lattice, alpha)
    rho = total / 2 if args.rho is None else as_fraction(args.rho)
    alpha_x, alpha_y = split_class(spec, basis, alpha, rho)
    payload = {"model": model.name, "class": format_class(alpha), "square": fraction_to_json(total)}
    payload.update(SplitWitness(alpha_x, alpha_y, rho).to_json())
    payload["square_x"] = fraction_to_json(square(spec.x_model.lattice, alpha_x))
    payload["square_y"] = fraction_to_json(square(spec.y_model.lattice, alpha_y))
    return EXIT_OK, payload


def cmd_verify(args):
    report = verify_suites.run_suite(args.suite, args.samples, args.seed)
    if args.csv:
        verify_suites.write_csv(report, args.csv)
    return (EXIT_OK if report.passed else EXIT_NEGATIVE), report.to_json()


COMMANDS = {
    "catalog-list": cmd_catalog_list,
    "catalog-show": cmd_catalog_show,
    "lattice-sig": cmd_lattice_sig,
    "cone-check": cmd_cone_check,
    "sum-build": cmd_sum_build,
    "sum-split": cmd_sum_split,
    "verify": cmd_verify,
}


def emit(payload, stream=None):
    stream = stream or sys.stdout
    stream.write(json.dumps(payload, indent=2, ensure_ascii=False) + "\n")


def run(argv=None):
    """Parse argv, run one verb, print its JSON; returns the exit code"""
    try:
        args = build_parser().parse_args(argv)
        configure_logging(args.verbose)
        logger.debug("verb %s", args.verb)
        code, payload = COMMANDS[args.verb](args)
    except HelpRequested as exc:
        emit({"help": exc.text})
        return EXIT_OK
    except ConeKitError as exc:
        logger.info("%s: %s", exc.code, exc)
        emit(exc.to_json())
        return EXIT_ERROR
    emit(payload)
    return code


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
