"""Command-line front end: analyze, polytope, sample, verify.

Exit codes: 0 success, 1 I/O or input error, 2 infeasible design (analyze)
or failing suite (verify).
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from fractions import Fraction

import numpy as np

from . import polytope, verification
from .design import ProbabilityVector, build_design, existence_check, parse_weight
from .sampler import PreconditionError, StratifiedPopulation, StratifiedSampler
from .variance import (
    DEFAULT_PSD_TOL,
    PopulationValues,
    Verdict,
    gamma_matrix,
    psi_matrix,
    sufficient_condition,
    symmetric_eigenvalues,
    variance_with_replacement,
    variance_without_replacement,
)

TOL_ENV = "AFFINE_SWOR_TOL"

EXIT_OK = 0
EXIT_IO = 1
EXIT_INFEASIBLE = 2


class InputError(Exception):
    pass


def _num(value):
    """Rationals as "num/den" strings, everything else as JSON floats."""
    if isinstance(value, Fraction):
        return f"{value.numerator}/{value.denominator}"
    return float(value)


def _load_json(path: str) -> dict:
    try:
        with open(path) as fh:
            return json.load(fh, parse_float=str)
    except OSError as exc:
        raise OSError(f"cannot read {path}: {exc.strerror}") from exc
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: malformed JSON ({exc.msg} at line {exc.lineno})") from exc


def _field(obj: dict, key: str, where: str):
    if key not in obj:
        raise InputError(f"missing field '{where}{key}'")
    return obj[key]


def _weights(values, where: str):
    if not isinstance(values, list) or not values:
        raise InputError(f"field '{where}' must be a non-empty list")
    try:
        return [parse_weight(v) for v in values]
    except (TypeError, ValueError, ZeroDivisionError) as exc:
        raise InputError(f"field '{where}': {exc}") from exc


def _default_tol() -> float:
    raw = os.environ.get(TOL_ENV)
    return float(raw) if raw else DEFAULT_PSD_TOL


# ---------------------------------------------------------------------------
# analyze


def _scaled_witness(vec: np.ndarray) -> np.ndarray:
    # largest-magnitude entry becomes +1
    return vec / vec[np.argmax(np.abs(vec))]


def build_report(p: ProbabilityVector, n: int, x, tol: float) -> tuple[dict, int]:
    report: dict = {
        "input": {"p": [_num(w) for w in p.weights], "n": n, "x": x},
        "arithmetic": "rational" if p.exact else "float",
        "tol": tol,
    }
    feasible, margin = existence_check(p, n)
    report["feasible"] = bool(feasible)
    report["margin"] = _num(margin)
    if not feasible:
        return report, EXIT_INFEASIBLE
    d = build_design(p, n)
    report["pairwise_pmf"] = [[_num(v) for v in row] for row in d.pairwise_matrix()]
    guarantee, threshold = sufficient_condition(p)
    report["sufficient_condition"] = {"verdict": guarantee.value, "threshold": _num(threshold)}
    positive = all(w > 0 for w in p.weights)
    gamma = symmetric_eigenvalues(gamma_matrix(p), tol)
    report["gamma"] = gamma.to_dict()
    psi = symmetric_eigenvalues(psi_matrix(p), tol) if positive else None
    report["psi"] = psi.to_dict() if psi else None
    main = psi or gamma
    report["verdict"] = main.verdict.value
    if x is not None and positive:
        pv = PopulationValues.of(p, x)
        report["variance"] = {
            "with_replacement": variance_with_replacement(pv, n),
            "without_replacement": variance_without_replacement(pv, d),
        }
    if psi is not None and psi.verdict is Verdict.INDEFINITE:
        w = _scaled_witness(psi.witness)
        pv = PopulationValues.of(p, w)
        report["witness"] = {
            "x": [float(v) for v in w],
            "with_replacement": variance_with_replacement(pv, n),
            "without_replacement": variance_without_replacement(pv, d),
        }
    return report, EXIT_OK


def _flatten(obj, prefix=""):
    if isinstance(obj, dict):
        for k, v in obj.items():
            yield from _flatten(v, f"{prefix}{k}.")
    elif isinstance(obj, list):
        for i, v in enumerate(obj):
            yield from _flatten(v, f"{prefix}{i}.")
    else:
        yield prefix.rstrip("."), obj


def render(report: dict, fmt: str) -> str:
    if fmt == "json":
        return json.dumps(report, indent=2)
    rows = list(_flatten(report))
    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["key", "value"])
        writer.writerows(rows)
        return buf.getvalue().rstrip("\n")
    return "\n".join(f"{k}: {v}" for k, v in rows)


def cmd_analyze(args) -> int:
    data = _load_json(args.population)
    if not isinstance(data, dict):
        raise InputError("population file must hold a JSON object")
    weights = _weights(_field(data, "p", ""), "p")
    n = args.n if args.n is not None else _field(data, "n", "")
    if not isinstance(n, int) or isinstance(n, bool):
        raise InputError("field 'n' must be an integer")
    x = args.x if args.x is not None else data.get("x")
    if x is not None:
        try:
            x = [float(v) for v in x]
        except (TypeError, ValueError) as exc:
            raise InputError(f"field 'x': {exc}") from exc
        if len(x) != len(weights):
            raise InputError(f"field 'x' has {len(x)} entries, 'p' has {len(weights)}")
    try:
        p = ProbabilityVector.from_values(weights)
    except ValueError as exc:
        raise InputError(f"field 'p': {exc}") from exc
    if not 2 <= n < p.n_pop:
        raise InputError(f"field 'n' must satisfy 2 <= n < N={p.n_pop}")
    report, code = build_report(p, n, x, args.tol)
    print(render(report, args.format))
    return code


# ---------------------------------------------------------------------------
# polytope


def _vertex_json(v: polytope.PolytopeVertex) -> dict:
    return {"label": v.label, "kind": v.kind.value, "pivot": v.pivot, "coords": [_num(c) for c in v.coords]}


def polytope_payload(n_pop: int, n: int, emit: str, tol: float) -> dict:
    if emit == "counterexample":
        ce = polytope.boundary_counterexample(n_pop, tol)
        return {
            "N": n_pop,
            "n": 2,
            "p": [_num(w) for w in ce.p.weights],
            "gamma": ce.gamma_report.to_dict(),
            "closed_form_eigenvalue": ce.closed_form_eigenvalue,
            "psi": ce.psi_report.to_dict(),
        }
    verts = polytope.vertices(n_pop, n)
    if emit == "vertices":
        return {"N": n_pop, "n": n, "vertices": [_vertex_json(v) for v in verts]}
    if emit == "facets":
        fl = polytope.facets(n_pop, n)
        return {
            "N": n_pop,
            "n": n,
            "vertex_labels": [v.label for v in verts],
            "facets": [{"subset": list(f.subset), "vertices": [v.label for v in f.vertex_set]} for f in fl],
            "incidence": [[int(v in f.vertex_set) for v in verts] for f in fl],
        }
    edges = polytope.adjacency_edges(n_pop, n)
    return {
        "N": n_pop,
        "n": n,
        "vertex_labels": [v.label for v in verts],
        "edges": [[u.label, v.label] for u, v in edges],
    }


def cmd_polytope(args) -> int:
    try:
        payload = polytope_payload(args.N, args.n, args.emit, args.tol)
    except ValueError as exc:
        raise InputError(str(exc)) from exc
    print(json.dumps(payload, indent=2))
    return EXIT_OK


# ---------------------------------------------------------------------------
# sample


def load_stratified(data: dict) -> tuple[StratifiedPopulation, int, int | None]:
    strata = _field(data, "strata", "")
    if not isinstance(strata, list) or not strata:
        raise InputError("field 'strata' must be a non-empty list")
    probs, sizes = [], []
    for i, s in enumerate(strata):
        if not isinstance(s, dict):
            raise InputError(f"field 'strata[{i}]' must be an object")
        probs.append(_field(s, "p", f"strata[{i}]."))
        size = _field(s, "size", f"strata[{i}].")
        if not isinstance(size, int) or isinstance(size, bool):
            raise InputError(f"field 'strata[{i}].size' must be an integer")
        sizes.append(size)
    n = _field(data, "n", "")
    if not isinstance(n, int) or isinstance(n, bool):
        raise InputError("field 'n' must be an integer")
    try:
        pop = StratifiedPopulation.from_values(_weights(probs, "strata[].p"), sizes)
    except ValueError as exc:
        raise InputError(f"field 'strata': {exc}") from exc
    return pop, n, data.get("seed")


def cmd_sample(args) -> int:
    data = _load_json(args.population)
    if not isinstance(data, dict):
        raise InputError("population file must hold a JSON object")
    pop, n, seed = load_stratified(data)
    if args.seed is not None:
        seed = args.seed
    try:
        sampler = StratifiedSampler(pop, n, seed=seed)
    except PreconditionError as exc:
        print(f"precondition violated: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    out = sys.stdout
    for sample in sampler.draw(args.draws):
        out.write(json.dumps(sample) + "\n")
    if args.stats:
        stats = sampler.stats.to_dict()
        stats["approx_bound"] = sampler.bound.approx
        stats["seed"] = seed
        print(json.dumps(stats), file=sys.stderr)
    return EXIT_OK


# ---------------------------------------------------------------------------
# verify


def cmd_verify(args) -> int:
    suites = args.suite or list(verification.SUITES)
    all_ok = True
    for name in suites:
        for check in verification.SUITES[name]():
            status = "PASS" if check.ok else "FAIL"
            print(f"[{status}] {name}: {check.name} ({check.passed}/{check.total})")
            all_ok &= check.ok
    return EXIT_OK if all_ok else EXIT_INFEASIBLE


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="affine-swor", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    tol_help = f"PSD tolerance (default ${TOL_ENV} or {DEFAULT_PSD_TOL})"

    an = sub.add_parser("analyze", help="feasibility, spectra and variances for a probability vector")
    an.add_argument("population", help='JSON file {"p": [...], "n": int, "x": [...]}')
    an.add_argument("--n", type=int, help="sample size (overrides the file)")
    an.add_argument("--x", type=float, nargs="+", help="attribute values (override the file)")
    an.add_argument("--tol", type=float, default=None, help=tol_help)
    an.add_argument("--format", choices=["json", "csv", "text"], default="json")
    an.set_defaults(func=cmd_analyze)

    po = sub.add_parser("polytope", help="vertices, facets, adjacency or the boundary counterexample")
    po.add_argument("--N", type=int, required=True)
    po.add_argument("--n", type=int, default=2)
    po.add_argument("--emit", choices=["vertices", "facets", "adjacency", "counterexample"], default="vertices")
    po.add_argument("--tol", type=float, default=None, help=tol_help)
    po.set_defaults(func=cmd_polytope)

    sa = sub.add_parser("sample", help="draw labelled samples from a stratified population")
    sa.add_argument("population", help='JSON file {"strata": [{"p": ..., "size": ...}], "n": int, "seed": int}')
    sa.add_argument("--draws", type=int, default=1)
    sa.add_argument("--seed", type=int, default=None, help="overrides the file's seed")
    sa.add_argument("--stats", action="store_true", help="print rejection statistics to stderr")
    sa.set_defaults(func=cmd_sample)

    ve = sub.add_parser("verify", help="run oracle suites")
    ve.add_argument("--suite", action="append", choices=list(verification.SUITES))
    ve.set_defaults(func=cmd_verify)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "tol", "absent") is None:
        args.tol = _default_tol()
    try:
        return args.func(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
