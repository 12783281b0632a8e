#!/usr/bin/env python3
"""
Command-line front end: parse a Gram matrix or knot, run one computation,
print a report.

Exit codes: 0 on success (verdicts live in the report), 2 for invalid input
or usage errors, 3 when a configured resource cap is exceeded.
"""

import argparse
import json
import logging
import sys
from fractions import Fraction
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple, Union

import charvec
import glue
import linking
import surgery
from config import FORMATS, get_settings
from errors import CapExceededError, ConsistencyError, GramParseError, InvalidInputError
from exact_core import SymGram
from report import Report, emit

logger = logging.getLogger(__name__)

COMMANDS = (
    "min-char",
    "check-bound",
    "congruence",
    "linking",
    "gauss",
    "glue4",
    "glue2",
    "surgery-d",
    "obstruct",
    "torus-table",
)


def _parse_int(token: str, line: Optional[int] = None, field: Optional[str] = None) -> int:
    try:
        return int(token)
    except (TypeError, ValueError):
        raise GramParseError(f"not an integer: {token!r}", line=line, field=field)


def _finish_gram(rows: List[List[int]], where: Callable[[int, int], Dict[str, Any]]) -> SymGram:
    n = len(rows)
    for i in range(n):
        for j in range(i + 1, n):
            if rows[i][j] != rows[j][i]:
                raise GramParseError(
                    f"matrix is not symmetric: entry ({j},{i}) = {rows[j][i]} but ({i},{j}) = {rows[i][j]}",
                    **where(j, i),
                )
    g = SymGram(tuple(tuple(r) for r in rows))
    if g.det == 0:
        raise GramParseError("determinant is zero")
    return g


def _parse_structured(data: Dict[str, Any]) -> SymGram:
    if not isinstance(data, dict):
        raise GramParseError("structured Gram input must be an object")
    if "n" not in data:
        raise GramParseError("missing rank", field="n")
    if "gram" not in data:
        raise GramParseError("missing matrix", field="gram")
    n = data["n"]
    if isinstance(n, bool) or not isinstance(n, int) or n < 1:
        raise GramParseError(f"rank must be a positive integer, got {n!r}", field="n")
    rows = data["gram"]
    if not isinstance(rows, list) or len(rows) != n:
        raise GramParseError(f"expected {n} rows", field="gram")
    parsed = []
    for r, row in enumerate(rows):
        if not isinstance(row, list) or len(row) != n:
            raise GramParseError(f"expected {n} entries", field=f"gram[{r}]")
        for c, x in enumerate(row):
            if isinstance(x, bool) or not isinstance(x, int):
                raise GramParseError(f"not an integer: {x!r}", field=f"gram[{r}][{c}]")
        parsed.append(list(row))
    return _finish_gram(parsed, lambda r, c: {"field": f"gram[{r}][{c}]"})


def _parse_text(text: str) -> SymGram:
    lines = [(no, line.split()) for no, line in enumerate(text.splitlines(), start=1) if line.strip()]
    if not lines:
        raise GramParseError("empty Gram input")
    first_no, first = lines[0]
    if len(first) != 1:
        raise GramParseError("first line must hold only the rank", line=first_no)
    n = _parse_int(first[0], line=first_no, field="n")
    if n < 1:
        raise GramParseError(f"rank must be positive, got {n}", line=first_no, field="n")
    body = lines[1:]
    if len(body) != n:
        raise GramParseError(f"expected {n} matrix rows, found {len(body)}", line=body[-1][0] if body else first_no)
    rows = []
    for no, tokens in body:
        if len(tokens) != n:
            raise GramParseError(f"expected {n} entries, found {len(tokens)}", line=no)
        rows.append([_parse_int(t, line=no) for t in tokens])
    return _finish_gram(rows, lambda r, c: {"line": body[r][0]})


def parse_gram(source: Union[str, Dict[str, Any]]) -> SymGram:
    """
    Accepts the text format (rank on line 1, then the rows) or the structured
    form {"n": int, "gram": [[int]]}, either as a dict or as JSON text.
    """
    if isinstance(source, dict):
        return _parse_structured(source)
    text = source.strip()
    if text.startswith("{"):
        try:
            data = json.loads(text)
        except json.JSONDecodeError as e:
            raise GramParseError(f"invalid JSON: {e.msg}", line=e.lineno)
        return _parse_structured(data)
    return _parse_text(text)


def read_gram(path: str) -> SymGram:
    if path == "-":
        return parse_gram(sys.stdin.read())
    try:
        return parse_gram(Path(path).read_text())
    except OSError as e:
        raise InvalidInputError(f"cannot read Gram file {path}: {e.strerror}")


def _parse_pair(text: str, flag: str) -> Tuple[int, int]:
    parts = text.split(",")
    if len(parts) != 2:
        raise InvalidInputError(f"{flag} expects two comma-separated integers, got {text!r}")
    try:
        return int(parts[0]), int(parts[1])
    except ValueError:
        raise InvalidInputError(f"{flag} expects integers, got {text!r}")


def _parse_range(text: str) -> range:
    lo, sep, hi = text.partition("..")
    try:
        a, b = int(lo), int(hi)
    except ValueError:
        raise InvalidInputError(f"--range expects A..B, got {text!r}")
    if not sep or a < 1 or b < a:
        raise InvalidInputError(f"--range expects 1 <= A <= B, got {text!r}")
    return range(a, b + 1)


def _gram_inputs(g: SymGram) -> Dict[str, Any]:
    return {"n": g.n, "gram": g.to_lists()}


def _need(args, name: str) -> Any:
    value = getattr(args, name)
    if value is None:
        raise InvalidInputError(f"--{name.replace('_', '-')} is required for {args.command}")
    return value


def cmd_min_char(args) -> Report:
    g = read_gram(_need(args, "gram"))
    cov = charvec.min_characteristic(g)
    return Report(
        command=args.command,
        inputs=_gram_inputs(g),
        results={
            "rank": g.n,
            "det": g.det,
            "parity": charvec.characteristic_parity(g),
            "min_square": cov.square,
            "minimizer": cov.coords,
        },
        provenance=["branch-and-bound over the characteristic coset"],
    )


def cmd_check_bound(args) -> Report:
    g = read_gram(_need(args, "gram"))
    bound = charvec.check_main_bound(g)
    return Report(
        command=args.command,
        inputs=_gram_inputs(g),
        results={
            "min_square": bound.min_square,
            "bound": bound.bound,
            "extremal": bound.is_extremal,
            "delta": bound.delta,
            "minimizer": bound.minimizer.coords,
        },
        verdicts={"bound_holds": True, "equality": bound.min_square == bound.bound},
        provenance=["bound n-1+1/δ (δ odd) or n-1 (δ even), equality only for (n-1)<1>⊕<δ>"],
    )


def cmd_congruence(args) -> Report:
    g = read_gram(_need(args, "gram"))
    results: Dict[str, Any] = {
        "delta": g.delta,
        "signature": g.sigma,
        "mod4_residue": charvec.congruence_mod4(g),
        "mod4_modulus": f"4/{g.delta}",
    }
    verdicts: Dict[str, Any] = {}
    if g.delta % 2:
        results["mod8_residue"] = charvec.congruence_mod8(g)
        results["mod8_modulus"] = f"8/{g.delta}"
    if g.is_positive_definite:
        cov = charvec.min_characteristic(g)
        results["sample_square"] = cov.square
        verdicts["mod4_holds"] = (cov.square - results["mod4_residue"]) % Fraction(4, g.delta) == 0
        if g.delta % 2:
            verdicts["mod8_holds"] = (cov.square - results["mod8_residue"]) % Fraction(8, g.delta) == 0
    return Report(
        command=args.command,
        inputs=_gram_inputs(g),
        results=results,
        verdicts=verdicts,
        provenance=["ξ² ≡ σ-1+1/δ mod 4/δ", "ξ² mod 8/δ from the linking blocks"],
    )


def cmd_linking(args) -> Report:
    g = read_gram(_need(args, "gram"))
    group = linking.discriminant_group(g)
    blocks = linking.decompose(g)
    return Report(
        command=args.command,
        inputs=_gram_inputs(g),
        results={
            "orders": group.orders,
            "size": group.size,
            "blocks": [
                {
                    "kind": blk.kind.value,
                    "prime": blk.prime,
                    "exponent": blk.exponent,
                    "squares": blk.generator_squares,
                    "generators": blk.generators,
                }
                for blk in blocks
            ],
            "signature_key": [f"{k}_{p}^{e}" for p, e, k in linking.canonical_block_signature(blocks)],
        },
        provenance=["Smith normal form of the Gram matrix", "orthogonal splitting of the linking pairing"],
    )


def cmd_gauss(args) -> Report:
    g = read_gram(_need(args, "gram"))
    cap = args.cap if args.cap is not None else get_settings().gauss_cap
    result = linking.gauss_sum_milgram(g, cap=cap)
    return Report(
        command=args.command,
        inputs={**_gram_inputs(g), "cap": cap},
        results={
            "group_size": result.group_size,
            "signature": g.sigma,
            "value": result.value,
            "expected": result.expected,
        },
        verdicts={"milgram_ok": result.milgram_ok},
        provenance=["G(M) = e^{2πiσ/8} for even M"],
    )


def cmd_glue4(args) -> Report:
    g = read_gram(_need(args, "gram"))
    emb = glue.embed_four_copies(g)
    return Report(
        command=args.command,
        inputs=_gram_inputs(g),
        results={
            "rank": emb.gram.n,
            "det": emb.gram.det,
            "index": emb.index,
            "delta": emb.delta,
            "even": emb.gram.is_even,
            "quaternionic": glue.verify_quaternionic(emb.gram, emb.action),
            "steps": [
                {"stage": chain.stage, "prime": step.prime, "index": step.index, "rule": step.rule}
                for chain in emb.chains
                for step in chain.steps
            ],
        },
        provenance=["prime-order, complex and quaternionic gluing stages"],
    )


def cmd_glue2(args) -> Report:
    g = read_gram(_need(args, "gram"))
    result = glue.embed_two_copies(g)
    results: Dict[str, Any] = {"delta": g.delta}
    if result.ok:
        results.update(rank=result.lattice.gram.n, det=result.lattice.gram.det, index=result.lattice.index)
    else:
        results["certificate"] = result.certificate
    return Report(
        command=args.command,
        inputs=_gram_inputs(g),
        results=results,
        verdicts={"embeds": result.ok},
        provenance=["L² embeds unimodularly iff primes ≡ 3 mod 4 divide δ to even powers"],
    )


def cmd_surgery_d(args) -> Report:
    knot = surgery.LSpaceKnot.parse(_need(args, "knot"))
    coeff = _need(args, "n")
    rows = [
        {"i": i, "t": knot.torsion(i), "d": surgery.d_surgery(knot, coeff, i)}
        for i in range(abs(coeff) // 2 + 1)
    ]
    return Report(
        command=args.command,
        inputs={"knot": knot.name, "n": coeff},
        results={"alexander": str(knot.alexander), "rows": rows},
        provenance=["d(K_n,i) = d(U_n,i) - 2t_i, d(K_-n,i) = -d(U_n,i)"],
    )


def _obstruction_fields(rep: surgery.ObstructionReport) -> Dict[str, Any]:
    return {
        "knot": rep.knot,
        "n": rep.n,
        "bound": rep.bound,
        "max4d": rep.max4d,
        "verdict": rep.verdict,
        "witnesses": rep.failing,
    }


def cmd_obstruct(args) -> Report:
    knot = surgery.LSpaceKnot.parse(_need(args, "knot"))
    if args.range is not None:
        n_values = _parse_range(args.range)
    else:
        n_values = [_need(args, "n")]
    reports = surgery.scan_obstructions(knot, n_values, route=args.route)
    inputs = {"knot": knot.name, "route": args.route}
    provenance = ["max 4d < 1-1/δ (δ odd) or 1 (δ even) rules out negative-definite fillings"]
    if len(reports) == 1:
        rep = reports[0]
        results = _obstruction_fields(rep)
        results.update(
            witness=rep.witness,
            implied_range=f"1..{rep.n}" if rep.implied_range else None,
            rows=[{"i": r.i, "t": r.t, "d": r.d, "4d": r.four_d, "threshold": r.threshold} for r in rep.rows],
            hypothesis=rep.hypothesis,
            notes=list(rep.notes),
        )
        return Report(
            command=args.command,
            inputs={**inputs, "n": rep.n},
            results=results,
            verdicts={"obstructed": rep.obstructed},
            provenance=provenance,
        )
    return Report(
        command=args.command,
        inputs={**inputs, "range": args.range},
        results={"rows": [_obstruction_fields(rep) for rep in reports]},
        verdicts={"obstructed": [rep.n for rep in reports if rep.obstructed]},
        provenance=provenance,
    )


def cmd_torus_table(args) -> Report:
    p, q = _parse_pair(_need(args, "pq"), "--pq")
    knot = surgery.LSpaceKnot.torus_knot(p, q)
    nmax = args.nmax if args.nmax is not None else p * q - 1
    if nmax < 1:
        raise InvalidInputError(f"--nmax must be positive, got {nmax}")
    reports = surgery.scan_obstructions(knot, range(1, nmax + 1))
    prefix = 0
    for rep in reports:
        if not rep.obstructed:
            break
        prefix = rep.n
    ranges = surgery.torus_obstruction_range(p, q)
    return Report(
        command=args.command,
        inputs={"pq": [p, q], "nmax": nmax},
        results={
            "genus": knot.genus,
            "torsion": [knot.torsion(i) for i in range(knot.genus + 1)],
            "obstructed_range": f"1..{prefix}" if prefix else None,
            "exact_max_n": ranges.exact,
            "closed_form_max_n": ranges.closed_form,
            "headline_max_n": ranges.headline,
            "rows": [{"n": rep.n, "max4d": rep.max4d, "bound": rep.bound, "verdict": rep.verdict} for rep in reports],
        },
        verdicts={"bounds_ordered": ranges.headline <= ranges.closed_form <= ranges.exact},
        provenance=["torsion t_i = #{ap+bq < N-i}", "closed form 2N+m from the three-term minimum"],
    )


HANDLERS: Dict[str, Callable[[argparse.Namespace], Report]] = {
    "min-char": cmd_min_char,
    "check-bound": cmd_check_bound,
    "congruence": cmd_congruence,
    "linking": cmd_linking,
    "gauss": cmd_gauss,
    "glue4": cmd_glue4,
    "glue2": cmd_glue2,
    "surgery-d": cmd_surgery_d,
    "obstruct": cmd_obstruct,
    "torus-table": cmd_torus_table,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="charcov", description="Characteristic covectors, lattice gluing and surgery obstructions")
    parser.add_argument("command", choices=COMMANDS, help="Computation to run")
    parser.add_argument("--gram", help="Gram matrix file (text or JSON), '-' for stdin")
    parser.add_argument("--knot", help="torus:p,q | exponents:n1,n2,... | unknot")
    parser.add_argument("--n", type=int, help="Surgery coefficient")
    parser.add_argument("--range", help="Range of coefficients A..B")
    parser.add_argument("--route", choices=("integer", "squarefree"), default="integer", help="Obstruction bound to use")
    parser.add_argument("--pq", help="Torus knot parameters p,q")
    parser.add_argument("--nmax", type=int, help="Largest coefficient in a torus table")
    parser.add_argument("--format", choices=FORMATS, help="Output format (default from CHARCOV_FORMAT)")
    parser.add_argument("--cap", type=int, help="Gauss-sum group size cap")
    parser.add_argument("-v", "--verbose", action="store_true", help="Debug logging on stderr")
    return parser


def run(argv: Sequence[str]) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(list(argv))
    except SystemExit as e:
        return 0 if e.code == 0 else 2

    try:
        settings = get_settings()
        logging.basicConfig(
            level=logging.DEBUG if args.verbose else settings.log_level,
            format="%(asctime)s %(levelname)s %(name)s: %(message)s",
            stream=sys.stderr,
        )
        if args.cap is not None and args.cap < 1:
            raise InvalidInputError(f"--cap must be positive, got {args.cap}")
        logger.info("[CLI] running %s", args.command)
        report = HANDLERS[args.command](args)
        print(emit(report, args.format or settings.output_format), end="")
        return 0
    except InvalidInputError as e:
        print(f"❌ {e}", file=sys.stderr)
        return 2
    except CapExceededError as e:
        print(f"❌ {e}", file=sys.stderr)
        return 3
    except ConsistencyError as e:
        logger.exception("[CLI] internal check failed")
        print(f"❌ internal check failed: {e}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(run(sys.argv[1:]))


if __name__ == "__main__":
    main()
