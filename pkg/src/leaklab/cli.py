"""Command-line front end.

Subcommands: parse, run, leakscan, ogcheck, dl, ifc, emit-smt.

Exit codes: 0 success / no leak / proven; 1 leak found / proof refuted /
flow violation; 2 input error (parse, annotation, scenario); 3 inconclusive
(bounds exhausted or undischarged conditions).  The cost-model file can
also be supplied through the ``LEAKLAB_CONFIG`` environment variable.
"""

from __future__ import annotations

import argparse
import itertools
import json
import os
import sys
from pathlib import Path

from . import assertions as asrt
from . import dl as dl_mod
from . import explorer, ifc, lang, proofs, semantics
from .config import load_config
from .errors import LeakLabError
from .lattice import load_lattice, two_point


def _read_program(path: str) -> lang.Program:
    return lang.parse_program(Path(path).read_text(encoding="utf-8"))


def _emit(data: dict, as_json: bool, human_lines: list[str]) -> None:
    if as_json:
        print(json.dumps(data, sort_keys=True, indent=2))
    else:
        for line in human_lines:
            print(line)


def _bounds_from(args: argparse.Namespace) -> explorer.ExploreBounds:
    return explorer.ExploreBounds(
        max_steps=args.bound_steps,
        max_configs=args.bound_configs,
        timing_blind=getattr(args, "timing_blind", False),
        observe_thread_ids=getattr(args, "observe_threads", False),
    )


def _parse_secret_override(program: lang.Program, specs: list[str]) -> tuple:
    """``--secret h=0..1`` restricts a declared secret's enumerated domain."""
    if not specs:
        return explorer.secret_domain_of(program)
    domains: dict[str, tuple] = {
        d.name: d.domain for d in program.declarations if d.secret}
    for spec in specs:
        name, _, rng = spec.partition("=")
        if name not in domains:
            raise LeakLabError(f"--secret {name}: not a declared secret variable")
        lo, _, hi = rng.partition("..")
        try:
            values = tuple(range(int(lo), int(hi) + 1)) if hi else (int(lo),)
        except ValueError:
            raise LeakLabError(f"--secret {spec!r}: expected NAME=LO..HI with "
                               "integer bounds") from None
        bad = [v for v in values if v not in domains[name]]
        if bad:
            raise LeakLabError(f"--secret {name}: {bad} outside the declared domain")
        domains[name] = values
    names = sorted(domains)
    return tuple(tuple(zip(names, combo))
                 for combo in itertools.product(*(domains[n] for n in names)))


def _parse_inits(program: lang.Program, specs: list[str]) -> dict:
    out: dict = {}
    for spec in specs:
        name, _, value = spec.partition("=")
        try:
            decl = program.decl(name)
        except KeyError:
            raise LeakLabError(f"--init {name}: undeclared variable") from None
        if decl.type == lang.BOOL:
            out[name] = value == "true"
        else:
            try:
                out[name] = int(value)
            except ValueError:
                raise LeakLabError(f"--init {spec!r}: expected an integer") from None
    return out


def cmd_parse(args: argparse.Namespace) -> int:
    program = _read_program(args.file)
    print(lang.unparse(program, show_labels=args.labels), end="")
    return 0


def cmd_run(args: argparse.Namespace) -> int:
    program = _read_program(args.file)
    costs = load_config(args.config).cost_model(program)
    store = dict(program.initial_store())
    store.update(_parse_inits(program, args.init or []))
    missing = [d.name for d in program.declarations if d.name not in store]
    if missing:
        raise LeakLabError(f"secret variable(s) {missing} need --init values")
    final = semantics.run_deterministic(program, store, costs,
                                        max_steps=args.bound_steps)
    for event in final.trace:
        print(f"{program.threads[event.thread].name}\t{event.payload}\t{event.timestamp}")
    return 0


def cmd_leakscan(args: argparse.Namespace) -> int:
    program = _read_program(args.file)
    tool_config = load_config(args.config)
    costs = tool_config.cost_model(program)
    bounds = _bounds_from(args)
    secret_domain = _parse_secret_override(program, args.secret or [])
    init = _parse_inits(program, args.init or [])
    report = explorer.knowledge_partition(program, init, secret_domain, bounds,
                                          costs, jobs=args.jobs)
    data = report.to_json()
    human = [f"verdict: {report.verdict} (complete={report.complete})"]
    for row in data["observations"]:
        flag = " LEAKY" if row["leaky"] else ""
        human.append(f"  obs [{row['letters']}] K={row['knowledge']}{flag}")
    _emit(data, args.format == "json", human)
    return {"leak-found": 1, "no-leak": 0, "inconclusive": 3}[report.verdict]


def cmd_ogcheck(args: argparse.Namespace) -> int:
    program = _read_program(args.file)
    tool_config = load_config(args.config)
    costs = tool_config.cost_model(program)
    annotated = asrt.annotate_program(program)
    result = proofs.check_proof(
        annotated,
        strict_stability=not args.no_strict_stability,
        costs=costs,
        snapshot_bound=args.snapshot_bound,
        tolerance=tool_config.tolerance,
    )
    rows = []
    for vc, outcome in result.entries:
        row = {"kind": vc.kind, "provenance": vc.provenance, "status": outcome.status}
        if outcome.counterexample is not None:
            row["counterexample"] = outcome.counterexample
        if outcome.reason:
            row["reason"] = outcome.reason
        rows.append(row)
    data = {
        "overall": result.overall,
        "message": result.message,
        "certified": [program.location_str(l) for l in result.certified],
        "vcs": rows,
        "warnings": result.warnings,
    }
    human = [f"{result.overall}: {result.message}"]
    for row in rows:
        human.append(f"  [{row['status']:^14}] {row['kind']}: {row['provenance']}")
        if "counterexample" in row:
            human.append(f"      counterexample: {row['counterexample']}")
    _emit(data, args.format == "json", human)
    return {"proven": 0, "refuted": 1, "incomplete": 3}[result.overall]


def cmd_dl(args: argparse.Namespace) -> int:
    program = _read_program(args.file)
    lattice = load_lattice(args.lattice) if args.lattice else two_point()
    report = dl_mod.dl_certify(program, lattice)
    data = report.to_json(program)
    if args.synthesize:
        tool_config = load_config(args.config)
        costs = tool_config.cost_model(program)
        bounds = _bounds_from(args)
        synthesis = dl_mod.synthesize_leaky_assertions(
            program, report.suggested_pairs, None, bounds, costs)
        data["synthesized"] = [
            {"location": program.location_str(s.location),
             "annotation": f"@leaky {{| {asrt.unparse_assertion(s.assertion, program)} |}}",
             "threshold": s.threshold,
             "isolated_durations": s.isolated,
             "composed_durations": s.composed,
             "composed_separable": s.composed_separable}
            for s in synthesis.assertions
        ]
        data["indeterminate"] = [
            {"pair": [program.location_str(r.pair[0]), program.location_str(r.pair[1])],
             "reason": r.reason, "isolated_durations": r.isolated}
            for r in synthesis.indeterminate
        ]
        data["skipped"] = synthesis.skipped
    human = [f"flags: {len(data['flags'])}"]
    for f in data["flags"]:
        human.append(f"  {f['location']}: {f['reason']} ({f['responsible']})")
    for note in data["notes"]:
        human.append(f"note: {note}")
    if args.synthesize:
        for s in data.get("synthesized", []):
            human.append(f"synthesized at {s['location']}: {s['annotation']}")
        for r in data.get("indeterminate", []):
            human.append(f"indeterminate for pair {r['pair']}: {r['reason']}")
    _emit(data, args.format == "json", human)
    return 0


def _parse_command(text: str) -> ifc.Command:
    text = text.strip()
    if text == "skip":
        return lang.Skip()
    ts = lang.TokenStream(lang.tokenize(text))
    if ts.at("keyword", "print"):
        ts.next()
        ts.expect("sym", "(")
        if ts.at("string"):
            value: lang.Expr = lang.StrLit(ts.next().text)
        else:
            value = lang.parse_expr(ts)
        ts.expect("sym", ")")
        return lang.Print(value)
    if ts.at("ident", "guard"):
        ts.next()
        ts.expect("sym", "(")
        guard = lang.parse_expr(ts)
        ts.expect("sym", ")")
        return ifc.GuardEval(guard)
    target = ts.expect("ident").text
    ts.expect("sym", "=")
    value = lang.parse_expr(ts)
    return lang.Assign(target, value)


def cmd_ifc(args: argparse.Namespace) -> int:
    scenario = json.loads(Path(args.file).read_text(encoding="utf-8"))
    lattice_spec = scenario.get("lattice")
    if lattice_spec:
        from .lattice import build_lattice
        lattice = build_lattice(lattice_spec["elements"],
                                [tuple(p) for p in lattice_spec.get("order", [])])
    else:
        lattice = two_point()
    users = scenario["users"]
    variables = scenario["variables"]
    labels = dict(users)
    values = {}
    for name, spec in variables.items():
        labels[name] = spec["label"]
        values[name] = spec["value"]
    members = frozenset((u, v) for u in users for v in variables)
    q0 = ifc.MachineState(members, labels, values)
    sequences = {
        name: [(user, _parse_command(cmd)) for user, cmd in seq]
        for name, seq in scenario["sequences"].items()
    }
    observer = scenario["observer"]
    mode = scenario.get("mode", "sequential")
    results: dict[str, dict] = {}
    ok = True
    if mode == "concurrent":
        names = sorted(sequences)
        if len(names) != 2:
            raise LeakLabError("concurrent mode needs exactly two sequences")
        outcome = ifc.check_concurrent_ni(sequences[names[0]], sequences[names[1]],
                                          observer, q0, lattice)
        results["concurrent"] = _ni_json(outcome)
        ok = outcome.ni
    else:
        for name in sorted(sequences):
            outcome = ifc.check_sequential_ni(sequences[name], observer, q0, lattice)
            results[name] = _ni_json(outcome)
            ok = ok and outcome.ni
    data = {"mode": mode, "observer": observer, "results": results,
            "non_interfering": ok}
    human = [f"non-interfering: {ok}"]
    for name, row in results.items():
        human.append(f"  {name}: {'NI' if row['ni'] else row['reason']}")
    _emit(data, args.format == "json", human)
    return 0 if ok else 1


def _ni_json(outcome: ifc.NIResult) -> dict:
    row: dict = {"ni": outcome.ni}
    if not outcome.ni:
        row["reason"] = outcome.reason
        if outcome.violating_prefix is not None:
            row["violating_prefix"] = [
                [user, f"{op.variable}:{op.op}"] for user, op in outcome.violating_prefix]
        if outcome.flow_violation is not None:
            v = outcome.flow_violation
            row["flow_violation"] = {"user": v.user, "variable": v.variable,
                                     "constraint": v.constraint}
    return row


def cmd_emit_smt(args: argparse.Namespace) -> int:
    program = _read_program(args.file)
    tool_config = load_config(args.config)
    costs = tool_config.cost_model(program)
    annotated = asrt.annotate_program(program)
    vcs: list[proofs.VC] = []
    for t in range(len(program.threads)):
        seq, _ = proofs.gen_sequential_vcs(annotated, t)
        vcs += seq
    vcs += proofs.gen_interference_vcs(annotated, not args.no_strict_stability)
    leaky_vcs, _notices = proofs.gen_leaky_vcs(annotated, costs)
    vcs += leaky_vcs
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    counters: dict[str, int] = {}
    written = 0
    for vc in vcs:
        index = counters.get(vc.kind, 0)
        counters[vc.kind] = index + 1
        text = proofs.emit_smtlib(vc, program, costs, args.snapshot_bound,
                                  tool_config.tolerance)
        (out_dir / f"vc_{vc.kind}_{index}.smt2").write_text(text, encoding="utf-8")
        written += 1
    print(f"wrote {written} SMT-LIB files to {out_dir}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="leaklab",
        description="Information-leak checking for concurrent programs "
                    "with observable output and timing.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser, bounds: bool = False) -> None:
        p.add_argument("file", help="input file")
        p.add_argument("--config", default=os.environ.get("LEAKLAB_CONFIG"),
                       help="cost-model configuration file")
        p.add_argument("--format", choices=("human", "json"), default="human")
        if bounds:
            p.add_argument("--bound-steps", type=int, default=200)
            p.add_argument("--bound-configs", type=int, default=200_000)

    p = sub.add_parser("parse", help="parse, validate and pretty-print")
    p.add_argument("file")
    p.add_argument("--labels", action="store_true", help="show location labels")
    p.set_defaults(func=cmd_parse)

    p = sub.add_parser("run", help="run a single-thread program; dump the trace")
    common(p, bounds=True)
    p.add_argument("--init", action="append", metavar="NAME=VALUE",
                   help="fix a secret or override a declared initializer")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("leakscan", help="exhaustive exploration leak scan")
    common(p, bounds=True)
    p.add_argument("--timing-blind", action="store_true",
                   help="drop timestamps from observations")
    p.add_argument("--observe-threads", action="store_true",
                   help="attacker additionally sees which thread printed")
    p.add_argument("--secret", action="append", metavar="NAME=LO..HI",
                   help="restrict a secret's enumerated domain")
    p.add_argument("--init", action="append", metavar="NAME=VALUE",
                   help="override a declared initializer")
    p.add_argument("--jobs", type=int, default=1,
                   help="parallel exploration of top-level schedule subtrees")
    p.set_defaults(func=cmd_leakscan)

    p = sub.add_parser("ogcheck", help="check an annotated proof outline")
    common(p)
    p.add_argument("--no-strict-stability", action="store_true",
                   help="do not protect print/delay pre-assertions")
    p.add_argument("--snapshot-bound", type=int, default=64)
    p.set_defaults(func=cmd_ogcheck)

    p = sub.add_parser("dl", help="dynamic-labelling pass; flag sensitive outputs")
    common(p, bounds=True)
    p.add_argument("--lattice", help="lattice definition JSON")
    p.add_argument("--synthesize", action="store_true",
                   help="also synthesize duration-rule postulates")
    p.set_defaults(func=cmd_dl)

    p = sub.add_parser("ifc", help="run a state-machine scenario")
    common(p)
    p.set_defaults(func=cmd_ifc)

    p = sub.add_parser("emit-smt", help="emit one SMT-LIB file per condition")
    common(p)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--no-strict-stability", action="store_true")
    p.add_argument("--snapshot-bound", type=int, default=64)
    p.set_defaults(func=cmd_emit_smt)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except LeakLabError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except FileNotFoundError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
