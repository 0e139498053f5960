"""Information-flow state machine over a security lattice.

A machine state carries a membership set of (user, variable) tuples, a
label map over users and variables, and a value map over variables.
Commands decompose into read/write input sequences; a read by a user below
the variable's label is a flow violation (a first-class epsilon result,
not an exception), and a write by a user above the variable's label
relabels the variable upward with the join.

Non-interference is checked by running every prefix of the (user-tagged)
input sequence and comparing the observer's view with the initial one; the
concurrent variant additionally enumerates every interleaving of every
prefix pair.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, replace
from typing import Optional, Union

from . import lang, semantics
from .errors import LeakLabError
from .lattice import SecurityLattice

READ = "r"
WRITE = "w"

OUT_VAR = "out"  # distinguished public sink written by print


@dataclass(frozen=True)
class MachineState:
    members: frozenset[tuple[str, str]]
    labels: dict[str, str]  # users and variables -> lattice element
    values: dict[str, semantics.Value]

    def __post_init__(self) -> None:
        for u, v in self.members:
            if u not in self.labels or v not in self.labels:
                raise LeakLabError(f"member ({u}, {v}) lacks a label")
        for v in self.values:
            if v not in self.labels:
                raise LeakLabError(f"variable {v} lacks a label")

    def variables(self) -> tuple[str, ...]:
        return tuple(sorted(self.values))

    def with_value(self, var: str, value: semantics.Value) -> "MachineState":
        values = dict(self.values)
        values[var] = value
        return replace(self, values=values)

    def with_label(self, var: str, label: str) -> "MachineState":
        labels = dict(self.labels)
        labels[var] = label
        return replace(self, labels=labels)


@dataclass(frozen=True)
class FlowViolation:
    """The epsilon outcome: a read broke the can-flow-to constraint."""

    user: str
    variable: str
    op: str
    constraint: str


@dataclass(frozen=True)
class InputOp:
    variable: str
    op: str  # READ or WRITE
    value_expr: Optional[lang.Expr] = None  # for writes: new value

    def __post_init__(self) -> None:
        if self.op not in (READ, WRITE):
            raise LeakLabError(f"bad primitive op {self.op!r}")


Command = Union[lang.Assign, lang.Skip, lang.Print, "GuardEval"]


@dataclass(frozen=True)
class GuardEval:
    guard: lang.Expr


def input_sequence(command: Command) -> tuple[InputOp, ...]:
    """Decompose one command into its primitive reads and writes.

    Assignment reads the expression support left to right then writes the
    target; print reads then writes the public sink; skip is empty; a bare
    guard evaluation only reads.
    """
    def reads(e: lang.Expr) -> list[InputOp]:
        ordered: list[str] = []
        def walk(x: lang.Expr) -> None:
            if isinstance(x, lang.Var):
                if x.name not in ordered:
                    ordered.append(x.name)
            elif isinstance(x, lang.UnaryOp):
                walk(x.operand)
            elif isinstance(x, lang.BinOp):
                walk(x.left)
                walk(x.right)
        walk(e)
        return [InputOp(v, READ) for v in ordered]

    if isinstance(command, lang.Skip):
        return ()
    if isinstance(command, lang.Assign):
        return tuple(reads(command.value) + [InputOp(command.target, WRITE, command.value)])
    if isinstance(command, lang.Print):
        if isinstance(command.value, lang.StrLit):
            return (InputOp(OUT_VAR, WRITE, command.value),)
        return tuple(reads(command.value) + [InputOp(OUT_VAR, WRITE, command.value)])
    if isinstance(command, GuardEval):
        return tuple(reads(command.guard))
    raise LeakLabError(f"unsupported command {type(command).__name__}")


def transition(state: MachineState, lattice: SecurityLattice, user: str,
               op: InputOp) -> Union[MachineState, FlowViolation]:
    """Apply one primitive operation.

    Reads leave the state unchanged but demand label(v) <= label(u); a
    failing read returns the epsilon outcome.  Writes always update the
    value, relabelling the variable to join(label(u), label(v)) when the
    user's label does not already flow to the variable's.
    """
    if user not in state.labels:
        raise LeakLabError(f"unknown user {user!r}")
    if op.variable not in state.values:
        raise LeakLabError(f"unknown variable {op.variable!r}")
    u_label = state.labels[user]
    v_label = state.labels[op.variable]
    if op.op == READ:
        if lattice.leq(v_label, u_label):
            return state
        return FlowViolation(user, op.variable, READ,
                             f"{v_label} cannot flow to {u_label}")
    new_value: semantics.Value = 0
    if op.value_expr is not None:
        if isinstance(op.value_expr, lang.StrLit):
            new_value = 1  # the sink records that an output happened
        else:
            new_value = semantics.eval_expr(op.value_expr, state.values)
    out = state.with_value(op.variable, new_value)
    if not lattice.leq(u_label, v_label):
        out = out.with_label(op.variable, lattice.join(u_label, v_label))
    return out


@dataclass(frozen=True)
class ViewEntry:
    visible: bool
    label: Optional[str] = None
    value: Optional[semantics.Value] = None


def view(state: MachineState, lattice: SecurityLattice, user: str
         ) -> dict[str, ViewEntry]:
    """The observer's projection: label and value where label(v) <= label(u),
    concealed otherwise."""
    if user not in state.labels:
        raise LeakLabError(f"unknown user {user!r}")
    out: dict[str, ViewEntry] = {}
    for v in state.variables():
        if lattice.leq(state.labels[v], state.labels[user]):
            out[v] = ViewEntry(True, state.labels[v], state.values[v])
        else:
            out[v] = ViewEntry(False)
    return out


def indistinguishable(q1: MachineState, q2: MachineState,
                      lattice: SecurityLattice, user: str) -> bool:
    if q1.variables() != q2.variables():
        raise LeakLabError("states range over different variable universes")
    return view(q1, lattice, user) == view(q2, lattice, user)


# ---------------------------------------------------------------------------
# Non-interference
# ---------------------------------------------------------------------------

TaggedOp = tuple[str, InputOp]  # (issuing user, primitive op)


def expand_commands(commands: list[tuple[str, Command]]) -> list[TaggedOp]:
    ops: list[TaggedOp] = []
    for user, command in commands:
        ops += [(user, op) for op in input_sequence(command)]
    return ops


@dataclass
class NIResult:
    ni: bool
    reason: Optional[str] = None
    violating_prefix: Optional[tuple[TaggedOp, ...]] = None
    flow_violation: Optional[FlowViolation] = None


def _run(state: MachineState, lattice: SecurityLattice,
         ops: tuple[TaggedOp, ...]) -> Union[MachineState, FlowViolation]:
    for user, op in ops:
        result = transition(state, lattice, user, op)
        if isinstance(result, FlowViolation):
            return result
        state = result
    return state


def check_sequential_ni(commands: list[tuple[str, Command]], observer: str,
                        q0: MachineState, lattice: SecurityLattice) -> NIResult:
    """Every prefix of the program's input sequence must keep the observer's
    view at its initial value and never hit the epsilon outcome."""
    ops = expand_commands(commands)
    for cut in range(len(ops) + 1):
        prefix = tuple(ops[:cut])
        result = _run(q0, lattice, prefix)
        if isinstance(result, FlowViolation):
            return NIResult(False, "flow violation", prefix, result)
        if not indistinguishable(q0, result, lattice, observer):
            return NIResult(False, "observer view changed", prefix)
    return NIResult(True)


def _interleavings(a: tuple, b: tuple):
    if not a:
        yield b
        return
    if not b:
        yield a
        return
    for rest in _interleavings(a[1:], b):
        yield (a[0],) + rest
    for rest in _interleavings(a, b[1:]):
        yield (b[0],) + rest


def check_concurrent_ni(s1: list[tuple[str, Command]],
                        s2: list[tuple[str, Command]], observer: str,
                        q0: MachineState, lattice: SecurityLattice) -> NIResult:
    """Both command sequences must be sequentially non-interfering, and every
    interleaving of every prefix pair must preserve the observer's view."""
    for seq in (s1, s2):
        result = check_sequential_ni(seq, observer, q0, lattice)
        if not result.ni:
            return result
    ops1, ops2 = expand_commands(s1), expand_commands(s2)
    for cut1, cut2 in itertools.product(range(len(ops1) + 1), range(len(ops2) + 1)):
        p1, p2 = tuple(ops1[:cut1]), tuple(ops2[:cut2])
        for weave in _interleavings(p1, p2):
            result = _run(q0, lattice, weave)
            if isinstance(result, FlowViolation):
                return NIResult(False, "flow violation", weave, result)
            if not indistinguishable(q0, result, lattice, observer):
                return NIResult(False, "observer view changed", weave)
    return NIResult(True)


# ---------------------------------------------------------------------------
# Bridge from programs
# ---------------------------------------------------------------------------

def program_to_commands(program: lang.Program, thread: int,
                        max_paths: int = 64) -> list[list[tuple[str, Command]]]:
    """Branch-resolved command paths of one loop-free, region-free thread.

    Each if splits the path set (the guard evaluation is kept as a read-only
    command on both sides).  The issuing user is the thread name.
    """
    user = program.threads[thread].name

    def walk(body: tuple[lang.Stmt, ...]) -> list[list[tuple[str, Command]]]:
        paths: list[list[tuple[str, Command]]] = [[]]
        for s in body:
            if isinstance(s, (lang.While, lang.Await)):
                raise LeakLabError(
                    "machine bridge accepts loop-free, region-free threads only")
            if isinstance(s, lang.If):
                expanded: list[list[tuple[str, Command]]] = []
                for branch in (s.then_body, s.else_body):
                    for suffix in walk(branch):
                        expanded += [p + [(user, GuardEval(s.guard))] + suffix
                                     for p in paths]
                paths = expanded
            elif isinstance(s, lang.Delay):
                continue  # no variable traffic
            else:
                paths = [p + [(user, s)] for p in paths]
            if len(paths) > max_paths:
                raise LeakLabError("path explosion in machine bridge")
        return paths

    return walk(program.threads[thread].body)
