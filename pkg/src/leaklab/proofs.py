"""Proof outlines for parallel programs: VC generation and discharge.

Three families of Hoare triples are generated from an annotated program.
Sequential triples form the per-thread chain: each atomic statement must
carry its outline from its own pre-assertion to the next one (loop
locations carry the loop invariant; branch entries default to parent-pre
plus guard). Interference triples demand that every assignment or region
of one thread preserve the other threads' post assertions and the
pre-assertions of their assignments and regions (optionally also of their
prints and delays). Leaky triples cover each leak postulate A on an
output statement T: the stability conditions {Q and A} T {Q},
{P and A} T {P} and {A and P} S {A} against every assignment/region S of
the other threads, plus rule-support conditions that check each
implication of a rule-form postulate against the marked thread's own
isolated path timings.

Every triple is discharged by exhaustive enumeration of the referenced
finite domains; snapshot terms and the clock are enumerated as rigid
bounded symbols.  A transition that leaves a declared domain, or a region
whose guard fails, is vacuous for partial correctness.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Optional

from . import assertions as asrt
from . import lang, semantics
from .errors import AnnotationError, LeakLabError

SEQUENTIAL = "sequential"
INTERFERENCE = "interference"
LEAKY = "leaky"


@dataclass(frozen=True)
class VC:
    """One verification condition {pre} stmt {post}.

    ``stmt`` is an atomic unit (assignment, skip, print, delay or a
    non-nested region); None marks a pure consequence obligation pre=>post
    with no state change.
    """

    pre: asrt.Assertion
    stmt: Optional[lang.Stmt]
    post: asrt.Assertion
    kind: str
    provenance: str


@dataclass
class DischargeResult:
    status: str  # "valid" | "counterexample" | "undischarged"
    counterexample: Optional[dict] = None
    reason: Optional[str] = None
    checked: int = 0


@dataclass
class ProofResult:
    entries: list[tuple[VC, DischargeResult]]
    overall: str  # "proven" | "refuted" | "incomplete"
    message: str
    certified: tuple[lang.LocationId, ...]
    warnings: list[str] = field(default_factory=list)

    def by_status(self, status: str) -> list[tuple[VC, DischargeResult]]:
        return [(vc, r) for vc, r in self.entries if r.status == status]


def _conj(*parts: asrt.Assertion) -> asrt.Assertion:
    out: Optional[asrt.Assertion] = None
    for p in parts:
        if isinstance(p, lang.BoolLit) and p.value:
            continue
        out = p if out is None else lang.BinOp("and", out, p)
    return out if out is not None else asrt.TRUE


def _negate(a: asrt.Assertion) -> asrt.Assertion:
    return lang.UnaryOp("not", a)


def _guard_assertion(guard: lang.Expr, program: lang.Program) -> asrt.Assertion:
    decls = {d.name: d for d in program.declarations}
    if lang.expr_type(guard, decls) == lang.INT:
        return lang.BinOp("!=", guard, lang.IntLit(0))
    return guard


# ---------------------------------------------------------------------------
# Outline walking
# ---------------------------------------------------------------------------

def atomic_statements(body: tuple[lang.Stmt, ...]) -> list[lang.Stmt]:
    """Assignments and regions reachable outside region bodies."""
    out: list[lang.Stmt] = []
    for s in body:
        if isinstance(s, (lang.Assign, lang.Await)):
            out.append(s)
        elif isinstance(s, lang.If):
            out += atomic_statements(s.then_body) + atomic_statements(s.else_body)
        elif isinstance(s, lang.While):
            out += atomic_statements(s.body)
    return out


def public_statements(body: tuple[lang.Stmt, ...]) -> list[lang.Stmt]:
    """Prints and delays outside region bodies."""
    out: list[lang.Stmt] = []
    for s in body:
        if isinstance(s, (lang.Print, lang.Delay)):
            out.append(s)
        elif isinstance(s, lang.If):
            out += public_statements(s.then_body) + public_statements(s.else_body)
        elif isinstance(s, lang.While):
            out += public_statements(s.body)
    return out


@dataclass
class Outline:
    """Effective pre/post assertions per location after chain construction."""

    pre: dict[lang.LocationId, asrt.Assertion]
    post: dict[lang.LocationId, asrt.Assertion]


def gen_sequential_vcs(annotated: asrt.AnnotatedProgram, thread: int,
                       ) -> tuple[list[VC], Outline]:
    """Chain VCs for one thread's proof outline.

    Every statement needs a pre-assertion, except the first statement of a
    branch or loop body, which defaults to the parent assertion conjoined
    with the (possibly negated) guard.  Loop annotations are invariants.
    """
    program = annotated.program
    name = program.threads[thread].name
    if thread not in annotated.posts:
        raise AnnotationError(f"thread {name} lacks a post assertion")
    outline = Outline({}, {})
    vcs: list[VC] = []

    def ann(s: lang.Stmt) -> Optional[asrt.Assertion]:
        return annotated.pre.get(s.label)

    def where(s: lang.Stmt) -> str:
        return program.location_str(s.label)

    def chain(body: tuple[lang.Stmt, ...], entry: Optional[asrt.Assertion],
              exit_assertion: asrt.Assertion, exit_note: str) -> None:
        """Emit VCs for a statement list given the computed entry assertion
        (None when an explicit annotation is mandatory) and the assertion
        that must hold after the list."""
        for i, s in enumerate(body):
            explicit = ann(s)
            if explicit is None and entry is None:
                raise AnnotationError(f"missing pre-assertion at {where(s)}")
            if explicit is not None and entry is not None:
                vcs.append(VC(entry, None, explicit, SEQUENTIAL,
                              f"{name}: consequence at {where(s)}"))
            pre = explicit if explicit is not None else entry
            assert pre is not None
            entry = None  # only the first statement inherits a computed entry
            nxt = body[i + 1] if i + 1 < len(body) else None
            if nxt is not None:
                post = ann(nxt)  # None surfaces as a missing-annotation error
                post_note = f"pre of {where(nxt)}"
            else:
                post, post_note = exit_assertion, exit_note
            outline.pre[s.label] = pre
            if isinstance(s, lang.If):
                g = _guard_assertion(s.guard, program)
                if post is None:
                    raise AnnotationError(f"missing pre-assertion at {where(nxt)}")
                chain(s.then_body, _conj(pre, g), post, post_note)
                if not s.then_body:
                    vcs.append(VC(_conj(pre, g), None, post, SEQUENTIAL,
                                  f"{name}: empty then-branch of {where(s)}"))
                chain(s.else_body, _conj(pre, _negate(g)), post, post_note)
                if not s.else_body:
                    vcs.append(VC(_conj(pre, _negate(g)), None, post, SEQUENTIAL,
                                  f"{name}: else of {where(s)}"))
                outline.post[s.label] = post
            elif isinstance(s, lang.While):
                g = _guard_assertion(s.guard, program)
                inv = pre  # the loop location's annotation is its invariant
                if post is None:
                    raise AnnotationError(f"missing pre-assertion at {where(nxt)}")
                chain(s.body, _conj(inv, g), inv, f"invariant of {where(s)}")
                if not s.body:
                    vcs.append(VC(_conj(inv, g), None, inv, SEQUENTIAL,
                                  f"{name}: empty loop body of {where(s)}"))
                vcs.append(VC(_conj(inv, _negate(g)), None, post, SEQUENTIAL,
                              f"{name}: loop exit of {where(s)}"))
                outline.post[s.label] = post
            else:
                if post is None:
                    raise AnnotationError(f"missing pre-assertion at {where(nxt)}")
                vcs.append(VC(pre, s, post, SEQUENTIAL,
                              f"{name}: {where(s)} establishes {post_note}"))
                outline.post[s.label] = post

    body = program.threads[thread].body
    post = annotated.posts[thread]
    if not body:
        return vcs, outline
    chain(body, None, post, f"{name} post")
    return vcs, outline


def thread_outline(annotated: asrt.AnnotatedProgram, thread: int) -> Outline:
    _, outline = gen_sequential_vcs(annotated, thread)
    return outline


def gen_interference_vcs(annotated: asrt.AnnotatedProgram,
                         strict_stability: bool = True) -> list[VC]:
    """Freedom-from-interference conditions between every thread pair.

    For each assignment or region T of thread j and each other thread i:
    (1) T preserves thread i's post assertion, and (2) T preserves the
    pre-assertion of every assignment/region of thread i (with
    ``strict_stability`` also of i's prints and delays).
    """
    program = annotated.program
    outlines = {t: thread_outline(annotated, t) for t in range(len(program.threads))}
    vcs: list[VC] = []
    for j, thread_j in enumerate(program.threads):
        writers = atomic_statements(thread_j.body)
        for target in writers:
            pre_t = outlines[j].pre[target.label]
            t_where = program.location_str(target.label)
            for i, thread_i in enumerate(program.threads):
                if i == j:
                    continue
                vcs.append(VC(_conj(annotated.posts[i], pre_t), target,
                              annotated.posts[i], INTERFERENCE,
                              f"{t_where} preserves post of {thread_i.name}"))
                protected = atomic_statements(thread_i.body)
                if strict_stability:
                    protected = protected + public_statements(thread_i.body)
                for s_prime in protected:
                    a = outlines[i].pre[s_prime.label]
                    vcs.append(VC(
                        _conj(a, pre_t), target, a, INTERFERENCE,
                        f"{t_where} preserves pre of "
                        f"{program.location_str(s_prime.label)}"))
    return vcs


# ---------------------------------------------------------------------------
# Leak postulates
# ---------------------------------------------------------------------------

def isolated_path_duration(program: lang.Program, thread: int,
                           loc_from: lang.LocationId, loc_to: lang.LocationId,
                           secret_valuation: dict,
                           costs: semantics.CostModel = semantics.CostModel(),
                           budget: int = 100_000) -> Optional[int]:
    """Clock difference between two locations when the thread runs alone.

    Computed by a direct walk of the thread's syntax against the declared
    initial values: guards are resolved concretely, costs are summed.
    Returns None when the walk blocks (a region guard stays false), a value
    leaves its domain, or the budget runs out.
    """
    store: dict = {d.name: d.init for d in program.declarations if not d.secret}
    store.update(secret_valuation)
    clock = 0
    arrived: dict[lang.LocationId, int] = {}
    work: list = list(program.threads[thread].body)
    while work:
        budget -= 1
        if budget <= 0:
            return None
        s = work.pop(0)
        arrived.setdefault(s.label, clock)
        if loc_to in arrived and loc_from in arrived:
            break
        try:
            if isinstance(s, lang.Skip):
                clock += costs.action_cost(s.label)
            elif isinstance(s, lang.Assign):
                value = semantics.eval_expr(s.value, store)
                if value not in program.decl(s.target).domain:
                    return None
                store[s.target] = value
                clock += costs.action_cost(s.label)
            elif isinstance(s, lang.Print):
                clock += costs.action_cost(s.label)
            elif isinstance(s, lang.Delay):
                if s.label in costs.overrides:
                    d = costs.overrides[s.label]
                else:
                    d = semantics.eval_expr(s.duration, store)
                if not isinstance(d, int) or d < 0:
                    return None
                clock += d
            elif isinstance(s, lang.If):
                clock += costs.action_cost(s.label)
                branch = s.then_body if semantics.eval_guard(s.guard, store) else s.else_body
                work = list(branch) + work
            elif isinstance(s, lang.While):
                clock += costs.action_cost(s.label)
                if semantics.eval_guard(s.guard, store):
                    work = list(s.body) + [s] + work
            elif isinstance(s, lang.Await):
                if not semantics.eval_guard(s.guard, store):
                    return None  # blocked forever in isolation
                clock += costs.action_cost(s.label)
                work = list(s.body) + work
            else:
                return None
        except LeakLabError:
            return None
    if loc_from in arrived and loc_to in arrived and arrived[loc_from] <= arrived[loc_to]:
        return arrived[loc_to] - arrived[loc_from]
    return None


def _secret_valuation_assertion(valuation: tuple) -> asrt.Assertion:
    parts = [lang.BinOp("=", lang.Var(n),
                        lang.BoolLit(v) if isinstance(v, bool) else lang.IntLit(v))
             for n, v in valuation]
    return _conj(*parts) if parts else asrt.TRUE


def path_fact_assertion(program: lang.Program, thread: int,
                        loc_from: lang.LocationId, loc_to: lang.LocationId,
                        secret_domain: tuple,
                        costs: semantics.CostModel) -> Optional[asrt.Assertion]:
    """Per-secret exact isolated durations, as one conjunction of rules.

    ``(h = v) -> (t@to - t@from = D_v)`` for every valuation v; None when
    any duration is underivable.
    """
    diff = lang.BinOp(
        "-",
        asrt.SnapshotTerm(None, loc_to.index, None, loc_to),
        asrt.SnapshotTerm(None, loc_from.index, None, loc_from))
    parts: list[asrt.Assertion] = []
    for valuation in secret_domain:
        d = isolated_path_duration(program, thread, loc_from, loc_to,
                                   dict(valuation), costs)
        if d is None:
            return None
        parts.append(asrt.Implies(_secret_valuation_assertion(valuation),
                                  lang.BinOp("=", diff, lang.IntLit(d))))
    return _conj(*parts)


def gen_leaky_vcs(annotated: asrt.AnnotatedProgram,
                  costs: semantics.CostModel = semantics.CostModel(),
                  secret_domain: Optional[tuple] = None,
                  ) -> tuple[list[VC], list[str]]:
    """Stability and rule-support conditions for every leak postulate."""
    from . import explorer  # local import to keep module load cheap

    program = annotated.program
    notices: list[str] = []
    if not annotated.leaky:
        return [], ["no leak postulates present"]
    if secret_domain is None:
        secret_domain = explorer.secret_domain_of(program)
    vcs: list[VC] = []
    outlines = {t: thread_outline(annotated, t) for t in range(len(program.threads))}

    for loc, postulate in sorted(annotated.leaky.items()):
        output_stmt = program.statement_at(loc)
        t_thread = loc.thread
        t_where = program.location_str(loc)
        for i, thread_i in enumerate(program.threads):
            if i == t_thread:
                continue
            for s in atomic_statements(thread_i.body):
                p = outlines[i].pre[s.label]
                q = outlines[i].post[s.label]
                s_where = program.location_str(s.label)
                vcs.append(VC(_conj(q, postulate), output_stmt, q, LEAKY,
                              f"postulate at {t_where} respects post of {s_where}"))
                vcs.append(VC(_conj(p, postulate), output_stmt, p, LEAKY,
                              f"postulate at {t_where} respects pre of {s_where}"))
                vcs.append(VC(_conj(postulate, p), s, postulate, LEAKY,
                              f"{s_where} preserves postulate at {t_where}"))

        rules = asrt.decompose_rules(
            asrt.resolve_assertion(postulate, program, t_thread),
            frozenset(program.secret_names()))
        if rules is None:
            notices.append(f"postulate at {t_where} is not rule-form; "
                           "certification rests on stability alone")
            continue
        locs = {term.resolved for rule in rules
                for term in asrt.snapshot_terms(rule.antecedent)}
        same_thread = sorted(
            (l for l in locs if l is not None and l.thread == t_thread))
        if len(same_thread) != 2:
            notices.append(f"postulate at {t_where}: antecedents do not span one "
                           "snapshot pair; no rule-support conditions generated")
            continue
        loc_from, loc_to = same_thread
        facts = path_fact_assertion(program, t_thread, loc_from, loc_to,
                                    secret_domain, costs)
        if facts is None:
            notices.append(f"postulate at {t_where}: isolated path timings "
                           "underivable; no rule-support conditions generated")
            continue
        for k, rule in enumerate(rules):
            vcs.append(VC(_conj(facts, rule.antecedent), output_stmt,
                          rule.consequent, LEAKY,
                          f"rule {k} of postulate at {t_where} against "
                          "isolated path timings"))
    return vcs, notices


# ---------------------------------------------------------------------------
# Discharge by enumeration
# ---------------------------------------------------------------------------

class _RegionBudget(LeakLabError):
    pass


def _execute_atomic(stmt: lang.Stmt, store: dict, clock: int,
                    costs: semantics.CostModel,
                    domains: dict[str, tuple]) -> Optional[tuple[dict, int]]:
    """Big-step of one atomic unit over a plain store; None when vacuous."""
    store = dict(store)

    def run_one(s: lang.Stmt, at: int) -> Optional[int]:
        if isinstance(s, lang.Skip) or isinstance(s, lang.Print):
            return at + costs.action_cost(s.label)
        if isinstance(s, lang.Assign):
            value = semantics.eval_expr(s.value, store)
            if value not in domains[s.target]:
                return None
            store[s.target] = value
            return at + costs.action_cost(s.label)
        if isinstance(s, lang.Delay):
            if s.label in costs.overrides:
                d = costs.overrides[s.label]
            else:
                d = semantics.eval_expr(s.duration, store)
            if not isinstance(d, int) or isinstance(d, bool) or d < 0:
                return None
            return at + d
        raise TypeError(s)

    if isinstance(stmt, lang.Await):
        if not semantics.eval_guard(stmt.guard, store):
            return None
        clock += costs.action_cost(stmt.label)
        work = list(stmt.body)
        budget = 10_000
        while work:
            budget -= 1
            if budget <= 0:
                raise _RegionBudget("region body exceeded the loop budget")
            inner = work.pop(0)
            if isinstance(inner, lang.If):
                branch = (inner.then_body if semantics.eval_guard(inner.guard, store)
                          else inner.else_body)
                clock += costs.action_cost(inner.label)
                work = list(branch) + work
            elif isinstance(inner, lang.While):
                if semantics.eval_guard(inner.guard, store):
                    work = list(inner.body) + [inner] + work
                clock += costs.action_cost(inner.label)
            else:
                nxt = run_one(inner, clock)
                if nxt is None:
                    return None
                clock = nxt
        return store, clock
    nxt = run_one(stmt, clock)
    if nxt is None:
        return None
    return store, nxt


def _vc_symbols(vc: VC, program: lang.Program) -> tuple[list, list, bool]:
    """Referenced program/ghost variables, snapshot slots, clock usage."""
    names = asrt.assertion_vars(vc.pre) | asrt.assertion_vars(vc.post)
    if vc.stmt is not None:
        names |= lang.free_vars(vc.stmt)
    decls = {d.name: d for d in program.declarations}
    ghosts = {g.name: g for g in program.ghosts}
    variables = []
    for n in sorted(names):
        if n in decls:
            variables.append((n, decls[n].domain, False))
        elif n in ghosts:
            variables.append((n, ghosts[n].domain, True))
        else:
            raise LeakLabError(f"undeclared name {n!r} in verification condition")
    slots: dict[lang.LocationId, int] = {}
    for term in asrt.snapshot_terms(vc.pre) + asrt.snapshot_terms(vc.post):
        if term.resolved is None:
            raise LeakLabError("unresolved snapshot term in verification condition")
        want = 1 if term.arrival is None else term.arrival + 1
        slots[term.resolved] = max(slots.get(term.resolved, 0), want)
    uses_clock = asrt.references_clock(vc.pre) or asrt.references_clock(vc.post)
    return variables, sorted(slots.items()), uses_clock


def discharge_vc(vc: VC, program: lang.Program,
                 costs: semantics.CostModel = semantics.CostModel(),
                 snapshot_bound: int = 64,
                 max_states: int = 2_000_000,
                 tolerance: int = 0) -> DischargeResult:
    """Enumerate all relevant states; valid iff no pre-state breaks the post.

    Snapshot terms and the clock range over [0, snapshot_bound].  Only
    symbols actually referenced by the triple are enumerated; unreferenced
    variables cannot influence the verdict.
    """
    try:
        variables, slots, uses_clock = _vc_symbols(vc, program)
    except LeakLabError as e:
        return DischargeResult("undischarged", reason=str(e))
    domains_all = {d.name: d.domain for d in program.declarations}

    axes: list[tuple] = [d for _, d, _ in variables]
    slot_axes = []
    for loc, count in slots:
        for k in range(count):
            slot_axes.append((loc, k))
            axes.append(tuple(range(snapshot_bound + 1)))
    if uses_clock:
        axes.append(tuple(range(snapshot_bound + 1)))

    total = 1
    for axis in axes:
        total *= len(axis)
        if total > max_states:
            return DischargeResult(
                "undischarged",
                reason=f"state space exceeds budget ({total} > {max_states})")

    pre_fn = asrt.compile_assertion(vc.pre, tolerance)
    post_fn = asrt.compile_assertion(vc.post, tolerance)
    var_names = [name for name, _, _ in variables]
    n_vars = len(var_names)

    checked = 0
    for combo in itertools.product(*axes):
        checked += 1
        store = dict(zip(var_names, combo))
        pos = n_vars
        snaps: dict[lang.LocationId, tuple[int, ...]] = {}
        for loc, _k in slot_axes:
            snaps[loc] = snaps.get(loc, ()) + (combo[pos],)
            pos += 1
        clock = combo[pos] if uses_clock else 0

        try:
            if not pre_fn(store, snaps, clock):
                continue
        except LeakLabError:
            continue
        if vc.stmt is None:
            post_store, post_clock = store, clock
        else:
            try:
                result = _execute_atomic(vc.stmt, store, clock, costs, domains_all)
            except _RegionBudget as e:
                return DischargeResult("undischarged", reason=str(e), checked=checked)
            if result is None:
                continue  # blocked guard or domain exit: vacuous
            post_store, post_clock = result
        try:
            ok = post_fn(post_store, snaps, post_clock)
        except LeakLabError as e:
            return DischargeResult("undischarged", reason=str(e), checked=checked)
        if not ok:
            cx = {"store": dict(store),
                  "snapshots": {f"{program.location_str(l)}": list(v)
                                for l, v in snaps.items()}}
            if uses_clock:
                cx["clock"] = clock
            # Self-check: the reported state must satisfy pre and break post.
            assert asrt.eval_assertion(vc.pre, store, snaps, clock, tolerance)
            return DischargeResult("counterexample", counterexample=cx, checked=checked)
    return DischargeResult("valid", checked=checked)


# ---------------------------------------------------------------------------
# SMT-LIB emission
# ---------------------------------------------------------------------------

def _substitute_var(a: asrt.Assertion, name: str, value: int) -> asrt.Assertion:
    def go(x):
        if isinstance(x, lang.Var) and x.name == name:
            return lang.IntLit(value)
        if isinstance(x, (lang.IntLit, lang.BoolLit, asrt.ClockTerm, asrt.SnapshotTerm)):
            return x
        if isinstance(x, lang.UnaryOp):
            return lang.UnaryOp(x.op, go(x.operand))
        if isinstance(x, lang.BinOp):
            return lang.BinOp(x.op, go(x.left), go(x.right))
        if isinstance(x, asrt.Implies):
            return asrt.Implies(go(x.antecedent), go(x.consequent))
        if isinstance(x, asrt.Approx):
            tol = go(x.tolerance) if x.tolerance is not None else None
            return asrt.Approx(go(x.left), go(x.right), tol)
        if isinstance(x, asrt.Quantified):
            if x.var == name:
                return x
            return asrt.Quantified(x.kind, x.var, x.lo, x.hi, go(x.body))
        raise TypeError(x)
    return go(a)


def emit_smtlib(vc: VC, program: lang.Program,
                costs: semantics.CostModel = semantics.CostModel(),
                snapshot_bound: int = 64,
                tolerance: int = 0) -> str:
    """SMT-LIB v2 script asserting pre, the transition, and not-post.

    ``unsat`` means the triple is valid.  Region bodies must be loop free;
    bounded quantifiers are expanded.
    """
    try:
        variables, slots, uses_clock = _vc_symbols(vc, program)
    except LeakLabError as e:
        raise LeakLabError(f"cannot emit: {e}") from None
    decls = {d.name: d for d in program.declarations}
    lines = [f"; {vc.kind} VC: {vc.provenance}", "(set-logic ALL)"]

    def snap_name(loc: lang.LocationId, k: int) -> str:
        return f"snap_{program.threads[loc.thread].name}_l{loc.index}_{k}"

    term_of: dict[str, str] = {}
    for name, domain, _ in variables:
        if domain == (False, True):
            lines.append(f"(declare-const {name} Bool)")
        else:
            lines.append(f"(declare-const {name} Int)")
            lines.append(f"(assert (and (>= {name} {domain[0]}) (<= {name} {domain[-1]})))")
        term_of[name] = name
    slot_latest: dict[lang.LocationId, str] = {}
    slot_terms: dict[tuple[lang.LocationId, int], str] = {}
    for loc, count in slots:
        for k in range(count):
            sym = snap_name(loc, k)
            lines.append(f"(declare-const {sym} Int)")
            lines.append(f"(assert (and (>= {sym} 0) (<= {sym} {snapshot_bound})))")
            slot_terms[(loc, k)] = sym
            slot_latest[loc] = sym
    clock_term = "tclock"
    if uses_clock:
        lines.append(f"(declare-const {clock_term} Int)")
        lines.append(f"(assert (and (>= {clock_term} 0) (<= {clock_term} {snapshot_bound})))")

    def smt_value(v) -> str:
        if isinstance(v, bool):
            return "true" if v else "false"
        return str(v) if v >= 0 else f"(- {-v})"

    def expr_smt(e: lang.Expr, env: dict[str, str], clock: str) -> str:
        if isinstance(e, lang.IntLit):
            return smt_value(e.value)
        if isinstance(e, lang.BoolLit):
            return smt_value(e.value)
        if isinstance(e, lang.Var):
            if e.name not in env:
                raise LeakLabError(f"unsupported construct: unknown name {e.name!r}")
            return env[e.name]
        if isinstance(e, asrt.ClockTerm):
            return clock
        if isinstance(e, asrt.SnapshotTerm):
            if e.arrival is None:
                return slot_latest[e.resolved]
            return slot_terms[(e.resolved, e.arrival)]
        if isinstance(e, lang.UnaryOp):
            inner = expr_smt(e.operand, env, clock)
            return f"(- {inner})" if e.op == "-" else f"(not {inner})"
        if isinstance(e, asrt.Implies):
            return (f"(=> {expr_smt(e.antecedent, env, clock)} "
                    f"{expr_smt(e.consequent, env, clock)})")
        if isinstance(e, asrt.Approx):
            tol = (expr_smt(e.tolerance, env, clock) if e.tolerance is not None
                   else str(tolerance))
            return (f"(<= (abs (- {expr_smt(e.left, env, clock)} "
                    f"{expr_smt(e.right, env, clock)})) {tol})")
        if isinstance(e, asrt.Quantified):
            parts = [expr_smt(_substitute_var(e.body, e.var, v), env, clock)
                     for v in range(e.lo, e.hi + 1)]
            if not parts:
                return "true" if e.kind == "forall" else "false"
            op = "and" if e.kind == "forall" else "or"
            return f"({op} {' '.join(parts)})" if len(parts) > 1 else parts[0]
        if isinstance(e, lang.BinOp):
            ls = expr_smt(e.left, env, clock)
            rs = expr_smt(e.right, env, clock)
            op = {"=": "=", "!=": "distinct", "and": "and", "or": "or",
                  "<": "<", "<=": "<=", ">": ">", ">=": ">=",
                  "+": "+", "-": "-", "*": "*"}[e.op]
            return f"({op} {ls} {rs})"
        if isinstance(e, lang.StrLit):
            raise LeakLabError("unsupported construct: string literal in VC")
        raise LeakLabError(f"unsupported construct: {type(e).__name__}")

    lines.append(f"(assert {expr_smt(vc.pre, term_of, clock_term)})")

    env = dict(term_of)
    clock_now = clock_term
    fresh = itertools.count(1)

    def guard_smt(guard: lang.Expr) -> str:
        g = _guard_assertion(guard, program)
        return expr_smt(g, env, clock_now)

    def shift_clock(amount: str) -> None:
        nonlocal clock_now
        if not uses_clock:
            return
        sym = f"tclock__{next(fresh)}"
        lines.append(f"(declare-const {sym} Int)")
        lines.append(f"(assert (= {sym} (+ {clock_now} {amount})))")
        clock_now = sym

    def transition(s: lang.Stmt) -> None:
        if isinstance(s, (lang.Skip, lang.Print)):
            shift_clock(str(costs.action_cost(s.label)))
            return
        if isinstance(s, lang.Assign):
            d = decls[s.target]
            sort = "Bool" if d.domain == (False, True) else "Int"
            sym = f"{s.target}__{next(fresh)}"
            lines.append(f"(declare-const {sym} {sort})")
            lines.append(f"(assert (= {sym} {expr_smt(s.value, env, clock_now)}))")
            if sort == "Int":
                lines.append(f"(assert (and (>= {sym} {d.domain[0]}) "
                             f"(<= {sym} {d.domain[-1]})))")
            env[s.target] = sym
            shift_clock(str(costs.action_cost(s.label)))
            return
        if isinstance(s, lang.Delay):
            if s.label in costs.overrides:
                amount = str(costs.overrides[s.label])
            else:
                amount = expr_smt(s.duration, env, clock_now)
                lines.append(f"(assert (>= {amount} 0))")
            shift_clock(amount)
            return
        if isinstance(s, lang.If) or isinstance(s, lang.While):
            raise LeakLabError(
                "unsupported construct: branch or loop inside an emitted region")
        raise LeakLabError(f"unsupported construct: {type(s).__name__}")

    if vc.stmt is not None:
        if isinstance(vc.stmt, lang.Await):
            lines.append(f"(assert {guard_smt(vc.stmt.guard)})")
            shift_clock(str(costs.action_cost(vc.stmt.label)))
            for inner in vc.stmt.body:
                transition(inner)
        else:
            transition(vc.stmt)

    lines.append(f"(assert (not {expr_smt(vc.post, env, clock_now)}))")
    lines.append("(check-sat)")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# Whole-proof checking
# ---------------------------------------------------------------------------

def check_proof(annotated: asrt.AnnotatedProgram,
                strict_stability: bool = True,
                costs: semantics.CostModel = semantics.CostModel(),
                snapshot_bound: int = 64,
                max_states: int = 2_000_000,
                tolerance: int = 0,
                secret_domain: Optional[tuple] = None) -> ProofResult:
    """Generate all three VC families, discharge them, and aggregate."""
    program = annotated.program
    vcs: list[VC] = []
    for t in range(len(program.threads)):
        seq, _ = gen_sequential_vcs(annotated, t)
        vcs += seq
    vcs += gen_interference_vcs(annotated, strict_stability)
    leaky_vcs, notices = gen_leaky_vcs(annotated, costs, secret_domain)
    vcs += leaky_vcs

    entries = [(vc, discharge_vc(vc, program, costs, snapshot_bound,
                                 max_states, tolerance)) for vc in vcs]
    statuses = [r.status for _, r in entries]
    if any(s == "counterexample" for s in statuses):
        overall = "refuted"
    elif any(s == "undischarged" for s in statuses):
        overall = "incomplete"
    else:
        overall = "proven"

    certified: tuple[lang.LocationId, ...] = ()
    if annotated.leaky:
        leaky_bad = [r.status for vc, r in entries
                     if vc.kind == LEAKY and r.status != "valid"]
        if overall == "proven":
            certified = tuple(sorted(annotated.leaky))
            locs = ", ".join(program.location_str(l) for l in certified)
            message = f"program certified leaky at {locs}"
        elif leaky_bad:
            message = "leak not established (assertions interfered with)"
        else:
            message = "outline not established; leak postulates unjudged"
    else:
        if overall == "proven":
            message = "functionally non-interfering; no leak assertions checked"
        else:
            message = "outline not established"
    return ProofResult(entries, overall, message, certified,
                       annotated.warnings + notices)
