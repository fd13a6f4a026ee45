"""Command line front end: batch scoring of JSONL prediction files and oracle runs.

Input files are UTF-8 JSON lines.  The first line declares the universe::

    {"type": "header", "classes": ["a", "b", "c"]}

and every following line is one case::

    {"type": "case", "prediction": {"kind": "toplist", "classes": ["a"], "confidences": [0.7]}, "y": "b"}
    {"type": "case", "prediction": {"kind": "hard", "class": "a"}, "y": "a"}
    {"type": "case", "prediction": {"kind": "dist", "probs": [0.5, 0.3, 0.2]}, "y": "c"}

Exit codes: 0 success, 1 oracle failure, 2 parse error, 3 scoring
precondition failure, 4 work budget exceeded.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from . import verify
from .core import (
    Categorical,
    ClassUniverse,
    EvalCase,
    TopList,
    is_valid,
    largest_valid_sublist,
    proxy_probability,
)
from .metrics import LabelSetError, f1_mode_inconsistency_demo, hard_class, instance_f1, top_k_error, zero_one
from .scoring import (
    DEFAULT_PENALTY,
    InvalidTopListError,
    PenaltyConfig,
    extended_fsum,
    get_rule,
    padded_score,
    penalized_score,
)

EXIT_OK, EXIT_FAIL, EXIT_PARSE, EXIT_SCORING, EXIT_BUDGET = 0, 1, 2, 3, 4
METRICS = ("zero-one", "top-k-error", "set-accuracy", "instance-f1")


class ParseError(ValueError):
    def __init__(self, path, line: int, message: str):
        super().__init__(f"{path}:{line}: {message}")
        self.line = line


@dataclass(frozen=True)
class EvalFile:
    universe: ClassUniverse
    cases: tuple[EvalCase, ...]


def _parse_prediction(obj: dict, universe: ClassUniverse):
    kind = obj.get("kind")
    if kind == "hard":
        label = obj["class"]
        if not isinstance(label, str):
            raise ValueError("hard prediction class must be a string")
        universe.index(label)
        return label
    if kind == "toplist":
        classes, confs = obj["classes"], obj["confidences"]
        if not isinstance(classes, list) or not isinstance(confs, list):
            raise ValueError("toplist needs 'classes' and 'confidences' arrays")
        if any(not isinstance(c, str) for c in classes):
            raise ValueError("toplist classes must be strings")
        return TopList(universe, classes, confs)
    if kind == "dist":
        probs = obj["probs"]
        if not isinstance(probs, list):
            raise ValueError("dist needs a 'probs' array")
        return Categorical(universe, probs)
    raise ValueError(f"unknown prediction kind {kind!r}")


def parse_eval_lines(lines: Iterable[str], path="<input>") -> EvalFile:
    universe = None
    cases = []
    for lineno, raw in enumerate(lines, start=1):
        if not raw.strip():
            continue
        try:
            obj = json.loads(raw)
        except json.JSONDecodeError as exc:
            raise ParseError(path, lineno, f"malformed JSON: {exc.msg}") from None
        if not isinstance(obj, dict):
            raise ParseError(path, lineno, "each line must be a JSON object")
        try:
            if universe is None:
                if obj.get("type") != "header":
                    raise ValueError("first line must be the header")
                classes = obj["classes"]
                if not isinstance(classes, list) or any(not isinstance(c, str) for c in classes):
                    raise ValueError("header 'classes' must be an array of strings")
                universe = ClassUniverse(classes)
                continue
            if obj.get("type") != "case":
                raise ValueError(f"expected a case record, got type {obj.get('type')!r}")
            y = obj["y"]
            if not isinstance(y, str):
                raise ValueError("observation 'y' must be a string")
            prediction = _parse_prediction(obj["prediction"], universe)
            cases.append(EvalCase(prediction, y, universe))
        except KeyError as exc:
            raise ParseError(path, lineno, f"missing field {exc}") from None
        except (ValueError, TypeError) as exc:
            raise ParseError(path, lineno, str(exc)) from None
    if universe is None:
        raise ParseError(path, 1, "empty file: no header")
    return EvalFile(universe, tuple(cases))


def parse_eval_file(path) -> EvalFile:
    """Read and validate a JSONL evaluation file."""
    with open(path, encoding="utf-8") as fh:
        return parse_eval_lines(fh, path)


def serialize_eval_file(ef: EvalFile) -> str:
    """Canonical JSONL form: every prediction written as a toplist."""
    out = [json.dumps({"type": "header", "classes": list(ef.universe.labels)})]
    for case in ef.cases:
        t = case.prediction
        pred = {"kind": "toplist", "classes": list(t.classes), "confidences": list(t.confidences)}
        out.append(json.dumps({"type": "case", "prediction": pred, "y": case.observation}))
    return "\n".join(out) + "\n"


def fmt(x: float, digits: int = 6) -> str:
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return f"{x:.{digits}g}"


def _json_number(x):
    if isinstance(x, float) and not math.isfinite(x):
        return "inf" if x > 0 else ("-inf" if x < 0 else "nan")
    return x


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    return _json_number(obj)


def _emit_json(data) -> None:
    print(json.dumps(_jsonable(data), indent=2, sort_keys=True))


def _parse_metrics(text: str | None) -> list[str]:
    if not text:
        return []
    names = [name.strip() for name in text.split(",") if name.strip()]
    for name in names:
        if name not in METRICS:
            raise argparse.ArgumentTypeError(f"unknown metric {name!r}; choose from {', '.join(METRICS)}")
    return names


def _case_metrics(case: EvalCase, names: Sequence[str]) -> dict[str, float]:
    out = {}
    guess = hard_class(case.prediction)
    for name in names:
        if name in ("zero-one", "set-accuracy"):
            out[name] = zero_one(guess, case.observation)
        elif name == "top-k-error":
            out[name] = top_k_error(case.prediction, case.observation)
        elif name == "instance-f1":
            out[name] = instance_f1(guess, case.observation)
    return out


def evaluate_file(ef: EvalFile, rule_name: str, penalty: float, metric_names: Sequence[str], reject_invalid: bool = False) -> dict:
    rule = get_rule(rule_name)
    cfg = PenaltyConfig(penalty)
    per_case = []
    for i, case in enumerate(ef.cases, start=1):
        t = case.prediction
        if reject_invalid:
            score = padded_score(rule, t, case.observation)
        else:
            score = penalized_score(rule, t, case.observation, cfg)
        entry = {"case": i, "kind": case.kind, "valid": is_valid(t), "score": score}
        entry.update(_case_metrics(case, metric_names))
        per_case.append(entry)
    n = len(per_case)
    summary = {
        "rule": rule.name,
        "cases": n,
        "penalty": cfg.c_invalid,
        "invalid": sum(not e["valid"] for e in per_case),
        "mean_score": extended_fsum(e["score"] for e in per_case) / n if n else math.nan,
    }
    for name in metric_names:
        mean = math.fsum(e[name] for e in per_case) / n if n else math.nan
        summary[name] = 1.0 - mean if name == "set-accuracy" else mean
    return {"summary": summary, "per_case": per_case}


def _scoring_failure(exc: Exception) -> int:
    print(f"error: {exc}", file=sys.stderr)
    return EXIT_SCORING


def cmd_score(args) -> int:
    ef = parse_eval_file(args.input)
    if not ef.cases:
        return _scoring_failure(ValueError("no cases to score"))
    try:
        result = evaluate_file(ef, args.rule, args.penalty, args.metrics, args.reject_invalid)
    except (InvalidTopListError, LabelSetError) as exc:
        return _scoring_failure(exc)
    summary = result["summary"]
    if args.json:
        data = {"input": str(args.input), **summary}
        if args.per_instance:
            data["per_case"] = result["per_case"]
        _emit_json(data)
        return EXIT_OK
    d = args.digits
    print(f"input: {args.input}")
    print(f"rule: {summary['rule']}")
    print(f"cases: {summary['cases']}")
    print(f"penalty: {fmt(summary['penalty'], d)}")
    print(f"invalid lists: {summary['invalid']}")
    print(f"mean score: {fmt(summary['mean_score'], d)}")
    for name in args.metrics:
        print(f"{name}: {fmt(summary[name], d)}")
    if args.per_instance:
        for e in result["per_case"]:
            extras = "".join(f" {name}={fmt(e[name], d)}" for name in args.metrics)
            flag = "" if e["valid"] else " invalid"
            print(f"case {e['case']}: {e['kind']}{flag} score={fmt(e['score'], d)}{extras}")
    return EXIT_OK


def cmd_compare(args) -> int:
    rows = []
    for path in args.input:
        ef = parse_eval_file(path)
        if not ef.cases:
            return _scoring_failure(ValueError(f"{path}: no cases to score"))
        try:
            summary = evaluate_file(ef, args.rule, args.penalty, args.metrics, args.reject_invalid)["summary"]
        except (InvalidTopListError, LabelSetError) as exc:
            return _scoring_failure(exc)
        rows.append({"input": str(path), **summary})
    if args.json:
        _emit_json(rows)
        return EXIT_OK
    header = ["input", "cases", "invalid", f"mean {args.rule}"] + list(args.metrics)
    table = [header]
    for r in rows:
        table.append(
            [r["input"], str(r["cases"]), str(r["invalid"]), fmt(r["mean_score"], args.digits)]
            + [fmt(r[name], args.digits) for name in args.metrics]
        )
    widths = [max(len(row[i]) for row in table) for i in range(len(header))]
    for row in table:
        print("  ".join(cell.ljust(w) for cell, w in zip(row, widths)).rstrip())
    return EXIT_OK


def _list_str(t: TopList, digits: int) -> str:
    confs = ",".join(fmt(c, digits) for c in t.confidences)
    return f"({{{','.join(t.classes)}}},({confs}))"


def cmd_validate(args) -> int:
    ef = parse_eval_file(args.input)
    records = []
    for i, case in enumerate(ef.cases, start=1):
        t = case.prediction
        rec = {"case": i, "kind": case.kind, "k": t.k, "valid": is_valid(t), "proxy_probability": proxy_probability(t)}
        if not rec["valid"]:
            sub = largest_valid_sublist(t)
            rec["largest_valid_sublist"] = {"classes": list(sub.classes), "confidences": list(sub.confidences)}
            rec["_sub"] = sub
        records.append(rec)
    if args.json:
        _emit_json([{k: v for k, v in r.items() if k != "_sub"} for r in records])
        return EXIT_OK
    d = args.digits
    for r in records:
        line = f"case {r['case']}: {'valid' if r['valid'] else 'invalid'}; pi = {fmt(r['proxy_probability'], d)}"
        if not r["valid"]:
            line += f"; largest valid sublist = {_list_str(r['_sub'], d)}"
        print(line)
    return EXIT_OK


def _consistency_sections(args, rule, cfg) -> list[verify.OracleSummary]:
    ks = [args.k] if args.k is not None else list(range(1, args.m))
    out = []
    for k in ks:
        report = verify.check_consistency(
            rule, args.m, k, args.grid, cfg, include_invalid=not args.valid_only, budget=args.budget
        )
        lists = "valid only" if args.valid_only else "all (incl. invalid)"
        lines = [
            f"consistency rule={rule.name} m={args.m} k={k} N={args.grid} c_invalid={fmt(cfg.c_invalid)} lists={lists}",
            f"  distributions: {report.n_distributions}  candidates: {report.n_candidates}",
            f"  violations: {len(report.violations)}",
        ]
        lines += [f"    {f.describe(args.grid)}" for f in report.violations]
        note = "guaranteed" if report.strict_expected else "not guaranteed"
        lines.append(f"  strictness failures: {len(report.strictness_failures)} (strictness {note})")
        shown = report.strictness_failures[: args.show]
        lines += [f"    {f.describe(args.grid)}" for f in shown]
        if len(report.strictness_failures) > len(shown):
            lines.append(f"    ... {len(report.strictness_failures) - len(shown)} more")
        out.append(verify.OracleSummary(f"consistency k={k}", report.passed, report.to_dict(), lines))
    return out


def _random_sections(args, rule) -> list[verify.OracleSummary]:
    out = []
    oracle = args.oracle
    universe = ClassUniverse.numbered(args.m)
    if oracle in ("comparability", "all"):
        rng = np.random.default_rng(args.seed)
        failures = [p.probs for p in (verify.random_categorical(universe, rng) for _ in range(args.trials))
                    if not verify.check_comparability(rule, p)]
        lines = [f"comparability rule={rule.name} m={args.m} trials={args.trials} seed={args.seed}",
                 f"  failures: {len(failures)}"]
        lines += [f"    p={tuple(round(x, 12) for x in f)}" for f in failures]
        out.append(verify.OracleSummary("comparability", not failures, {"failures": failures}, lines))
    if oracle in ("majorization", "all"):
        grid = verify.SimplexGrid(args.m, args.grid)
        bad = []
        for nums in grid:
            p = grid.categorical(nums, universe)
            bad += [(nums, k) for k in range(args.m + 1) if not verify.check_true_list_majorization(p, k)]
        lines = [f"true-list majorization m={args.m} N={args.grid} points={len(grid)}", f"  failures: {len(bad)}"]
        lines += [f"    p={nums} k={k}" for nums, k in bad]
        out.append(verify.OracleSummary("majorization", not bad, {"failures": bad}, lines))
    if oracle in ("schur", "all"):
        ok = verify.check_entropy_schur_concavity(rule, args.m, args.trials, args.seed)
        out.append(verify.OracleSummary("schur", ok, {}, [f"entropy Schur-concavity rule={rule.name} m={args.m}: {'ok' if ok else 'FAILED'}"]))
    if oracle in ("symmetry", "all"):
        ok = verify.check_symmetry(rule, args.m, args.trials, args.seed)
        out.append(verify.OracleSummary("symmetry", ok, {}, [f"symmetry rule={rule.name} m={args.m}: {'ok' if ok else 'FAILED'}"]))
    if oracle in ("propriety", "all"):
        size = len(verify.SimplexGrid(args.m, args.grid))
        if size * size > args.budget:
            raise verify.BudgetExceeded(f"{size * size} expectations exceed the budget of {args.budget}")
        ok = verify.check_propriety(rule, args.m, args.grid)
        out.append(verify.OracleSummary("propriety", ok, {}, [f"propriety rule={rule.name} m={args.m} N={args.grid}: {'ok' if ok else 'FAILED'}"]))
    if oracle in ("brier-bound", "all") and args.m >= 2:
        rng = np.random.default_rng(args.seed)
        bad = []
        for i in range(args.trials):
            t = verify.random_alpha_list(args.m, rng)
            if not verify.check_brier_alpha_bound(t, trials=20, seed=args.seed + i):
                bad.append(str(t))
        lines = [f"Brier relative-gap bound m={args.m} lists={args.trials}", f"  failures: {len(bad)}"]
        lines += [f"    {t}" for t in bad]
        out.append(verify.OracleSummary("brier-bound", not bad, {"failures": bad}, lines))
    return out


def cmd_check(args) -> int:
    rule = get_rule(args.rule)
    cfg = PenaltyConfig(args.penalty)
    if args.k is not None and not 0 <= args.k <= args.m:
        print(f"error: --k must lie in 0..{args.m}", file=sys.stderr)
        return EXIT_PARSE
    try:
        sections = []
        if args.oracle in ("consistency", "all"):
            sections += _consistency_sections(args, rule, cfg)
        sections += _random_sections(args, rule)
    except verify.BudgetExceeded as exc:
        print(f"budget exceeded: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    passed = all(s.passed for s in sections)
    if args.json:
        _emit_json({"passed": passed, "oracles": [{"name": s.name, "passed": s.passed, **s.details} for s in sections]})
    else:
        for s in sections:
            print("\n".join(s.lines))
            print(f"  result: {'PASS' if s.passed else 'FAIL'}")
        print(f"overall: {'PASS' if passed else 'FAIL'}")
    return EXIT_OK if passed else EXIT_FAIL


def cmd_table1(args) -> int:
    pm = verify.P_MODERATE_DISPLAYED if args.displayed_pm else verify.P_MODERATE
    rows = verify.table1(pm)
    if args.json:
        _emit_json(rows)
        return EXIT_OK
    header = ["p", "S"] + list(verify.TABLE1_COLUMNS)
    table = [header]
    for r in rows:
        cells = []
        for c in r["cells"]:
            text = fmt(c["score"]) if math.isinf(c["score"]) else f"{c['score']:.4f}"
            if c["gap"] is not None:
                text += f" ({round(100 * c['gap'], 2) + 0.0:.2f}%)"
            cells.append(text)
        table.append([r["p"], r["rule"]] + cells)
    widths = [max(len(row[i]) for row in table) for i in range(len(header))]
    for row in table:
        print("  ".join(cell.ljust(w) for cell, w in zip(row, widths)).rstrip())
    for name, probs in (("p(h)", verify.P_HIGH), ("p(m)", pm), ("p(l)", verify.P_LOW)):
        print(f"{name} = {probs}")
    return EXIT_OK


def cmd_f1_demo(args) -> int:
    report = f1_mode_inconsistency_demo()
    if args.json:
        _emit_json({
            "distribution": {k: str(v) for k, v in report.distribution.items()},
            "mode": sorted(report.mode),
            "expected_f1": {k: float(v) for k, v in report.expected_f1.items()},
            "expected_f1_exact": {k: str(v) for k, v in report.expected_f1.items()},
            "inconsistent": report.inconsistent,
        })
    else:
        print("\n".join(report.lines()))
    return EXIT_OK


def _scoring_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--rule", choices=("brier", "log"), default="brier")
    p.add_argument("--penalty", type=float, default=DEFAULT_PENALTY, help="c_invalid added to invalid lists")
    p.add_argument("--metrics", type=_parse_metrics, default=[], help=f"comma list from: {', '.join(METRICS)}")
    p.add_argument("--reject-invalid", action="store_true", help="fail (exit 3) on invalid lists instead of penalizing")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="toplists", description=__doc__.splitlines()[0])
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--json", action="store_true", help="machine-readable output")
    common.add_argument("--digits", type=int, default=6, help="significant digits in text output")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("score", parents=[common], help="mean score of one prediction file")
    p.add_argument("--input", required=True, type=Path)
    p.add_argument("--per-instance", action="store_true")
    _scoring_flags(p)
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("compare", parents=[common], help="score several prediction files side by side")
    p.add_argument("--input", required=True, type=Path, action="append")
    _scoring_flags(p)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("validate", parents=[common], help="validity of each prediction")
    p.add_argument("--input", required=True, type=Path)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("check", parents=[common], help="run brute-force oracles")
    p.add_argument("--rule", choices=("brier", "log"), default="brier")
    p.add_argument("--oracle", default="consistency",
                   choices=("consistency", "comparability", "majorization", "schur", "symmetry", "propriety", "brier-bound", "all"))
    p.add_argument("--m", type=int, default=3)
    p.add_argument("--k", type=int, default=None, help="list length (default: every k in 1..m-1)")
    p.add_argument("--grid", type=int, default=10, help="grid denominator N")
    p.add_argument("--penalty", type=float, default=DEFAULT_PENALTY)
    p.add_argument("--valid-only", action="store_true", help="compete against valid lists only")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--trials", type=int, default=1000)
    p.add_argument("--budget", type=int, default=verify.DEFAULT_BUDGET)
    p.add_argument("--show", type=int, default=10, help="strictness failures to print per section")
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("table1", parents=[common], help="expected scores of mode/top-1/top-2/full predictions")
    p.add_argument("--displayed-pm", action="store_true",
                   help="use p(m) = (0.5,0.44,0.03,0.02,0.01) instead of the vector consistent with the table")
    p.set_defaults(func=cmd_table1)

    p = sub.add_parser("f1-demo", parents=[common], help="instance F1 is not consistent for the mode")
    p.set_defaults(func=cmd_f1_demo)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "penalty", 0.0) < 0:
        parser.error("--penalty must be nonnegative")
    try:
        return args.func(args)
    except ParseError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE


if __name__ == "__main__":
    sys.exit(main())
