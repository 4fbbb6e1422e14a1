"""Command-line interface.

Exit codes: 0 success, 1 validation or equivalence failure, 2 usage or
config error, 3 search budget exceeded (a partial report is still printed).

Every report is a single JSON object {command, input, config, outcome} so
runs are comparable across machines; --format text renders the same data
as indented key: value lines.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import asdict
from pathlib import Path

from .config import Config, ConfigError, load_config, override
from .cost import rank_key
from .interp import (
    WorkloadDiverged,
    default_workload,
    differential_check,
    dynamic_cost_total,
    interpret,
    load_workload,
)
from .ir import (
    Function,
    ParseError,
    parse_module,
    print_function,
    validate_module,
)
from .passes import FORWARD_PASSES, apply_pass
from .reverse import REVERSE_PASSES
from .search import (
    BudgetExceeded,
    IboOutcome,
    ReplayDiverged,
    SearchOutcome,
    check_closure,
    exhaustive_search,
    explore_sep_class,
    ibo,
    replay_sequence,
)


def _emit(report: dict, cfg: Config) -> None:
    if cfg.format == "json":
        print(json.dumps(report, indent=2, sort_keys=True))
    else:
        _emit_text(report)


def _emit_text(report: dict, indent: str = "") -> None:
    for key in sorted(report):
        value = report[key]
        if isinstance(value, dict):
            print(f"{indent}{key}:")
            _emit_text(value, indent + "  ")
        elif isinstance(value, list) and value and isinstance(value[0], dict):
            print(f"{indent}{key}:")
            for item in value:
                _emit_text(item, indent + "  ")
                print()
        else:
            print(f"{indent}{key}: {value}")


def _key_json(key: tuple) -> list:
    # final element is the canonical-text tie-break; the IR itself is reported
    return list(key[:-1])


def _config_json(cfg: Config) -> dict:
    d = asdict(cfg)
    for k in ("passes", "reverses"):
        if d[k] is not None:
            d[k] = list(d[k])
    return d


def _report(command: str, cfg: Config, **fields) -> dict:
    rep = {"command": command, "config": _config_json(cfg)}
    rep.update(fields)
    return rep


def _load(path: str, function: str | None = None) -> Function:
    try:
        text = Path(path).read_text()
    except OSError as e:
        print(f"error: cannot read {path}: {e}", file=sys.stderr)
        raise SystemExit(2)
    try:
        m = parse_module(text)
    except ParseError as e:
        print(f"{path}:{e.line}:{e.col}: {e.message}", file=sys.stderr)
        raise SystemExit(1)
    errs = validate_module(m)
    if errs:
        for err in errs:
            print(f"{path}: {err.kind} at {err.where}: {err.message}", file=sys.stderr)
        raise SystemExit(1)
    if function is not None:
        try:
            return m.function(function)
        except KeyError:
            print(f"error: no function @{function} in {path}", file=sys.stderr)
            raise SystemExit(2)
    if len(m.functions) != 1:
        names = ", ".join(f.name for f in m.functions)
        print(f"error: {path} defines {len(m.functions)} functions ({names}); pass --function",
              file=sys.stderr)
        raise SystemExit(2)
    return m.functions[0]


def _input_json(path: str, f: Function, cfg: Config) -> dict:
    return {"file": str(path), "function": f.name,
            "key": _key_json(rank_key(f, cfg.model()))}


def _workload(cfg: Config, f: Function, path: str | None, count: int = 1000):
    chosen = path or cfg.workload
    if chosen:
        try:
            return load_workload(Path(chosen), f.name)
        except (OSError, ValueError) as e:
            print(f"error: cannot load workload {chosen}: {e}", file=sys.stderr)
            raise SystemExit(2)
    return default_workload(f, seed=cfg.seed, count=count)


def _trace(f: Function, steps, cfg: Config, workload=None) -> list:
    """Replay a reported sequence step by step, recording the key after each."""
    rows = []
    g = f
    for step in steps:
        g = replay_sequence(g, [step], cfg.limits())
        rows.append({"step": step, "key": _key_json(rank_key(g, cfg.model(), workload))})
    return rows


def _search_json(out: SearchOutcome, f: Function, cfg: Config, workload=None) -> dict:
    return {
        "best_ir": print_function(out.best_function),
        "best_key": _key_json(out.best_key),
        "sequence": list(out.best_sequence),
        "trace": _trace(f, out.best_sequence, cfg, workload),
        "start_key": _key_json(out.start_key),
        "explored": out.explored,
        "saturated_leaves": out.saturated_leaves,
        "pruned_by_hash": out.pruned_by_hash,
        "truncated": out.truncated,
        "skipped_oversize": out.skipped_oversize,
    }


def _ibo_json(out: IboOutcome, f: Function, cfg: Config, workload=None) -> dict:
    return {
        "best_ir": print_function(out.best_function),
        "best_key": _key_json(out.best_key),
        "sequence": list(out.best_provenance),
        "trace": _trace(f, out.best_provenance, cfg, workload),
        "baseline": _search_json(out.baseline, f, cfg, workload),
        "iterations": [
            {
                "iteration": it.iteration,
                "frontier_size": it.frontier_size,
                "variants_generated": it.variants_generated,
                "searches_run": it.searches_run,
                "cache_hits": it.cache_hits,
                "best_key": _key_json(it.best_key),
                "improved": it.improved,
            }
            for it in out.iterations
        ],
        "total_programs": out.total_programs,
    }


# ---------------------------------------------------------------------------
# subcommands

def cmd_validate(args, cfg: Config) -> int:
    try:
        text = Path(args.file).read_text()
    except OSError as e:
        print(f"error: cannot read {args.file}: {e}", file=sys.stderr)
        return 2
    report = _report("validate", cfg, input={"file": args.file})
    try:
        m = parse_module(text)
    except ParseError as e:
        report["outcome"] = {
            "valid": False,
            "errors": [{"kind": "ParseError", "where": f"line {e.line}",
                        "message": e.message}],
        }
        _emit(report, cfg)
        return 1
    errs = validate_module(m)
    report["outcome"] = {
        "valid": not errs,
        "functions": [f.name for f in m.functions],
        "errors": [{"kind": e.kind, "where": e.where, "message": e.message}
                   for e in errs],
    }
    _emit(report, cfg)
    return 0 if not errs else 1


def cmd_run(args, cfg: Config) -> int:
    f = _load(args.file, args.function)
    report = _report("run", cfg, input=_input_json(args.file, f, cfg))
    if args.workload or cfg.workload:
        wl = _workload(cfg, f, args.workload)
        try:
            total = dynamic_cost_total(f, wl, limit=cfg.step_limit, model=cfg.model())
        except WorkloadDiverged as e:
            report["outcome"] = {
                "cases": len(wl.args),
                "diverged_args": list(e.args),
                "outcome": e.result.outcome,
                "reason": e.result.reason,
            }
            _emit(report, cfg)
            return 0
        report["outcome"] = {"cases": len(wl.args), "dynamic_cost_total": total}
        _emit(report, cfg)
        return 0
    try:
        vals = [int(s, 0) & 0xFFFFFFFF for s in args.args]
    except ValueError:
        print("error: arguments must be integers", file=sys.stderr)
        return 2
    if len(vals) != len(f.params):
        print(f"error: @{f.name} takes {len(f.params)} argument(s), got {len(vals)}",
              file=sys.stderr)
        return 2
    res = interpret(f, vals, limit=cfg.step_limit, model=cfg.model())
    report["outcome"] = {
        "args": vals, "outcome": res.outcome, "value": res.value,
        "reason": res.reason, "steps": res.steps, "dynamic_cost": res.dynamic_cost,
    }
    _emit(report, cfg)
    return 0


def cmd_opt(args, cfg: Config) -> int:
    f = _load(args.file, args.function)
    steps = [s for s in args.passes.split(",") if s]
    for step in steps:
        name = step.partition("@")[0]
        if name not in FORWARD_PASSES and name not in REVERSE_PASSES:
            print(f"error: unknown pass {name!r}", file=sys.stderr)
            return 2
    g = f
    applied = []
    try:
        if args.strict:
            g = replay_sequence(f, steps, cfg.limits())
            applied = steps
        else:
            for step in steps:
                if "@" in step:
                    g = replay_sequence(g, [step], cfg.limits())
                    applied.append(step)
                else:
                    out = apply_pass(step, g)
                    if out.changed:
                        applied.append(step)
                    g = out.function
    except ReplayDiverged as e:
        print(f"error: replay diverged: {e}", file=sys.stderr)
        return 1
    if args.output:
        Path(args.output).write_text(print_function(g))
    if cfg.format == "text" and not args.report:
        sys.stdout.write(print_function(g))
        return 0
    report = _report("opt", cfg, input=_input_json(args.file, f, cfg))
    report["outcome"] = {
        "steps": steps, "applied": applied,
        "ir": print_function(g),
        "key": _key_json(rank_key(g, cfg.model())),
    }
    _emit(report, cfg)
    return 0


def cmd_search(args, cfg: Config) -> int:
    f = _load(args.file, args.function)
    wl = _workload(cfg, f, args.workload) if cfg.metric == "dynamic" else None
    report = _report("search", cfg, input=_input_json(args.file, f, cfg))
    try:
        out = exhaustive_search(f, cfg.passes, cfg.limits(), cfg.model(), wl)
    except BudgetExceeded as e:
        report["outcome"] = _search_json(e.partial, f, cfg, wl)
        report["budget_exceeded"] = True
        _emit(report, cfg)
        return 3
    report["outcome"] = _search_json(out, f, cfg, wl)
    report["budget_exceeded"] = False
    _emit(report, cfg)
    return 0


def cmd_ibo(args, cfg: Config) -> int:
    if args.iterations < 0:
        print(f"error: -k must be >= 0, got {args.iterations}", file=sys.stderr)
        return 2
    f = _load(args.file, args.function)
    wl = _workload(cfg, f, args.workload) if cfg.metric == "dynamic" else None
    reverses = cfg.reverses if cfg.reverses is not None else REVERSE_PASSES
    report = _report("ibo", cfg, input=_input_json(args.file, f, cfg),
                     iterations_requested=args.iterations)
    try:
        out = ibo(f, args.iterations, cfg.passes, tuple(reverses), cfg.limits(),
                  cfg.model(), wl, cfg.frontier_policy, cfg.reverse_from,
                  cfg.single_variant)
    except BudgetExceeded as e:
        report["outcome"] = _ibo_json(e.partial, f, cfg, wl)
        report["budget_exceeded"] = True
        _emit(report, cfg)
        return 3
    report["outcome"] = _ibo_json(out, f, cfg, wl)
    report["budget_exceeded"] = False
    _emit(report, cfg)
    return 0


def cmd_equiv_class(args, cfg: Config) -> int:
    f = _load(args.file, args.function)
    reverses = cfg.reverses if cfg.reverses is not None else REVERSE_PASSES
    graph = explore_sep_class(f, cfg.passes, tuple(reverses), cfg.limits())
    rep = check_closure(graph)
    if args.dot:
        Path(args.dot).write_text(_dot(graph, cfg))
    report = _report("equiv-class", cfg, input=_input_json(args.file, f, cfg))
    report["outcome"] = {
        "nodes": len(graph.nodes), "edges": len(graph.edges),
        "truncated": graph.truncated, "verdict": rep.verdict,
        "components": rep.components,
        "violations": [[a.hex, l, b.hex] for a, l, b in rep.violations],
    }
    _emit(report, cfg)
    return 0 if rep.verdict != "violated" else 1


def _dot(graph, cfg: Config) -> str:
    lines = ["digraph equiv {", '  node [shape=box, fontname="monospace"];']
    for d, g in graph.nodes.items():
        key = rank_key(g, cfg.model())
        extra = ", peripheries=2" if d == graph.start else ""
        lines.append(f'  "{d.hex[:12]}" [label="{d.hex[:12]}\\n{key[0]},{key[1]}"{extra}];')
    for a, label, b in graph.edges:
        style = ', style=dashed' if "@" in label else ""
        lines.append(f'  "{a.hex[:12]}" -> "{b.hex[:12]}" [label="{label}"{style}];')
    lines.append("}")
    return "\n".join(lines) + "\n"


def cmd_compare(args, cfg: Config) -> int:
    """Side-by-side exhaustive vs ibo(k=1..K) over a file or a corpus directory."""
    if args.k_max < 0:
        print(f"error: -k must be >= 0, got {args.k_max}", file=sys.stderr)
        return 2
    root = Path(args.path)
    if root.is_dir():
        files = sorted(root.glob("*.ir"))
        if not files:
            print(f"error: no .ir files in {args.path}", file=sys.stderr)
            return 2
    else:
        files = [root]
    model = cfg.model()
    reverses = cfg.reverses if cfg.reverses is not None else REVERSE_PASSES
    rows = []
    better = worse = ties = 0
    any_budget = any_inequivalent = False
    for fp in files:
        f = _load(str(fp))
        wl = _workload(cfg, f, args.workload, count=64)
        swl = wl if cfg.metric == "dynamic" else None
        row = {"file": str(fp), "function": f.name,
               "input_key": _key_json(rank_key(f, model))}
        try:
            ex = exhaustive_search(f, cfg.passes, cfg.limits(), model, swl)
        except BudgetExceeded as e:
            ex = e.partial
            row["exhaustive_budget_exceeded"] = True
            any_budget = True
        try:
            ib = ibo(f, args.k_max, cfg.passes, tuple(reverses), cfg.limits(),
                     model, swl, cfg.frontier_policy, cfg.reverse_from,
                     cfg.single_variant)
        except BudgetExceeded as e:
            ib = e.partial
            row["ibo_budget_exceeded"] = True
            any_budget = True
        row["exhaustive_key"] = _key_json(ex.best_key)
        row["ibo_key"] = _key_json(ib.best_key)
        row["ibo_keys_by_k"] = {"0": _key_json(ib.baseline.best_key)}
        for it in ib.iterations:
            row["ibo_keys_by_k"][str(it.iteration)] = _key_json(it.best_key)
        row["ibo_sequence"] = list(ib.best_provenance)
        # winner is decided on the cost prefix; the canonical-text tie-break
        # only picks a representative, it is not an efficiency difference
        ex_prefix, ib_prefix = ex.best_key[:-1], ib.best_key[:-1]
        if ib_prefix < ex_prefix:
            row["winner"] = "ibo"
            better += 1
        elif ex_prefix < ib_prefix:
            row["winner"] = "exhaustive"
            worse += 1
        else:
            row["winner"] = "tie"
            ties += 1
        eq = (differential_check(f, ex.best_function, wl, limit=cfg.step_limit).equivalent
              and differential_check(f, ib.best_function, wl, limit=cfg.step_limit).equivalent)
        row["equivalent"] = eq
        if not eq:
            any_inequivalent = True
        rows.append(row)
    outcome = {
        "k": args.k_max,
        "functions": len(rows),
        "ibo_strictly_better": better,
        "ibo_strictly_worse": worse,
        "ties": ties,
        "rows": rows,
    }
    report = _report("compare", cfg, input={"path": args.path}, outcome=outcome)
    if cfg.format == "text":
        print(f"{'function':<24} {'exhaustive':<14} {'ibo(k<=' + str(args.k_max) + ')':<14} winner")
        for row in rows:
            ex_s = ",".join(str(v) for v in row["exhaustive_key"])
            ib_s = ",".join(str(v) for v in row["ibo_key"])
            print(f"{row['function']:<24} ({ex_s:<12}) ({ib_s:<12}) {row['winner']}")
        print(f"\nfunctions: {len(rows)}  ibo strictly better: {better}  "
              f"worse: {worse}  ties: {ties}")
    else:
        _emit(report, cfg)
    if any_inequivalent:
        return 1
    if any_budget:
        return 3
    return 0


# ---------------------------------------------------------------------------

def _common(p: argparse.ArgumentParser) -> argparse.ArgumentParser:
    # also accepted after the subcommand; SUPPRESS keeps the top-level value
    p.add_argument("--config", default=argparse.SUPPRESS,
                   help="JSON config file (or $BIDIROPT_CONFIG)")
    p.add_argument("--format", choices=("json", "text"), default=argparse.SUPPRESS,
                   help="report format")
    return p


def _budgets(p: argparse.ArgumentParser) -> argparse.ArgumentParser:
    p.add_argument("--budget-seq", type=int, dest="max_sequence_length",
                   help="max pass-sequence length")
    p.add_argument("--budget-programs", type=int, dest="max_programs_explored",
                   help="max distinct programs explored")
    p.add_argument("--budget-instrs", type=int, dest="max_instructions_per_program",
                   help="size envelope for explored programs")
    return p


def _build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="bidiropt",
        description="mini-IR laboratory for bi-directional pass pipelines")
    ap.add_argument("--config", help="JSON config file (or $BIDIROPT_CONFIG)")
    ap.add_argument("--format", choices=("json", "text"), help="report format")
    sub = ap.add_subparsers(dest="command", required=True)

    p = _common(sub.add_parser("validate", help="parse and validate a module"))
    p.add_argument("file")

    p = _common(sub.add_parser("run", help="interpret a function"))
    p.add_argument("file")
    p.add_argument("args", nargs="*", help="integer arguments")
    p.add_argument("--function", help="function name (for multi-function files)")
    p.add_argument("--workload", help="JSON workload; prints dynamic_cost_total")
    p.add_argument("--seed", type=int, help="seed for generated workloads")
    p.add_argument("--step-limit", type=int, dest="step_limit")

    p = _common(sub.add_parser("opt", help="apply a pass pipeline"))
    p.add_argument("file")
    p.add_argument("--function")
    p.add_argument("--passes", required=True,
                   help="comma-separated: forward names, or reverse name@index")
    p.add_argument("--strict", action="store_true",
                   help="fail if any forward step does not fire (replay mode)")
    p.add_argument("--output", help="write resulting IR to a file")
    p.add_argument("--report", action="store_true",
                   help="emit the report even in text format")
    p.add_argument("--cap-per-pass", type=int, dest="cap_per_pass")

    p = _budgets(_common(sub.add_parser(
        "search", help="exhaustive forward phase-ordering search")))
    p.add_argument("file")
    p.add_argument("--function")
    p.add_argument("--passes", help="comma-separated forward pass subset")
    p.add_argument("--metric", choices=("static", "dynamic"))
    p.add_argument("--workload", help="JSON workload file (dynamic metric)")
    p.add_argument("--seed", type=int)

    p = _budgets(_common(sub.add_parser("ibo", help="iterative reverse-then-optimize")))
    p.add_argument("file")
    p.add_argument("-k", "--iterations", type=int, required=True, dest="iterations",
                   help="number of reverse-then-optimize iterations")
    p.add_argument("--function")
    p.add_argument("--passes", help="comma-separated forward pass subset")
    p.add_argument("--reverses", help="comma-separated reverse pass subset")
    p.add_argument("--metric", choices=("static", "dynamic"))
    p.add_argument("--workload")
    p.add_argument("--seed", type=int)
    p.add_argument("--frontier-policy", choices=("cheap-first", "worst-first", "all"),
                   dest="frontier_policy")
    p.add_argument("--reverse-from", choices=("frontier", "optimized"),
                   dest="reverse_from")
    p.add_argument("--single-variant", action="store_true", default=None,
                   dest="single_variant")
    p.add_argument("--cap-per-pass", type=int, dest="cap_per_pass")
    p.add_argument("--max-frontier", type=int, dest="ibo_max_frontier")

    p = _budgets(_common(sub.add_parser(
        "equiv-class", help="explore the rewrite neighborhood")))
    p.add_argument("file")
    p.add_argument("--function")
    p.add_argument("--reverses")
    p.add_argument("--dot", help="write the class graph as DOT")
    p.add_argument("--cap-per-pass", type=int, dest="cap_per_pass")

    p = _budgets(_common(sub.add_parser(
        "compare", help="table: exhaustive search vs ibo over a file or directory")))
    p.add_argument("path", help=".ir file or a directory of .ir files")
    p.add_argument("-k", type=int, default=3, dest="k_max",
                   help="max ibo iterations per function (default 3)")
    p.add_argument("--passes")
    p.add_argument("--reverses")
    p.add_argument("--metric", choices=("static", "dynamic"))
    p.add_argument("--workload")
    p.add_argument("--seed", type=int)
    p.add_argument("--frontier-policy", choices=("cheap-first", "worst-first", "all"),
                   dest="frontier_policy")
    p.add_argument("--cap-per-pass", type=int, dest="cap_per_pass")
    p.add_argument("--max-frontier", type=int, dest="ibo_max_frontier")

    return ap


_CFG_FLAGS = ("format", "metric", "step_limit", "seed", "frontier_policy",
              "reverse_from", "single_variant", "max_sequence_length",
              "max_programs_explored", "max_instructions_per_program",
              "cap_per_pass", "ibo_max_frontier")


def main(argv: list[str] | None = None) -> int:
    ap = _build_parser()
    args = ap.parse_args(argv)
    try:
        cfg = load_config(args.config)
        updates = {k: getattr(args, k) for k in _CFG_FLAGS if hasattr(args, k)}
        for name in ("passes", "reverses"):
            if getattr(args, name, None):
                updates[name] = tuple(s for s in getattr(args, name).split(",") if s)
        if args.command == "opt":
            updates.pop("passes", None)  # opt's --passes is a pipeline, not a subset
        cfg = override(cfg, **updates)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return 2
    handlers = {
        "validate": cmd_validate,
        "run": cmd_run,
        "opt": cmd_opt,
        "search": cmd_search,
        "ibo": cmd_ibo,
        "equiv-class": cmd_equiv_class,
        "compare": cmd_compare,
    }
    try:
        return handlers[args.command](args, cfg)
    except SystemExit as e:
        return int(e.code or 0)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
