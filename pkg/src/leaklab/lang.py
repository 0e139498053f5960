"""Syntax of the concurrent while-language: AST, parser, location labelling.

A program is a list of variable declarations followed by one or more
``thread NAME { ... }`` blocks executed in parallel.  Statement bodies are
plain Python lists (sequencing carries no label of its own); every
executable or control statement carries a :class:`LocationId` assigned by
:func:`label_statements` in source order, plus one exit label per thread.

Proof-outline annotations (``{| ... |}`` before a statement, ``@leaky
{| ... |}`` markers, ``post {| ... |}`` after a thread block) are captured
here as raw text and parsed into assertion ASTs by
:mod:`leaklab.assertions`.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Iterator, Optional, Union

from .errors import ParseError

INT = "int"
BOOL = "bool"

# Binary operators, in increasing precedence tiers for parsing/printing.
BOOL_OPS = ("or", "and")
CMP_OPS = ("=", "!=", "<", "<=", ">", ">=")
ADD_OPS = ("+", "-")
MUL_OPS = ("*",)


# ---------------------------------------------------------------------------
# Expressions
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Expr:
    pass


@dataclass(frozen=True)
class IntLit(Expr):
    value: int


@dataclass(frozen=True)
class BoolLit(Expr):
    value: bool


@dataclass(frozen=True)
class StrLit(Expr):
    """String literal; legal only as the argument of print."""

    value: str


@dataclass(frozen=True)
class Var(Expr):
    name: str


@dataclass(frozen=True)
class UnaryOp(Expr):
    op: str  # "-" or "not"
    operand: Expr


@dataclass(frozen=True)
class BinOp(Expr):
    op: str
    left: Expr
    right: Expr


# ---------------------------------------------------------------------------
# Locations and statements
# ---------------------------------------------------------------------------

@dataclass(frozen=True, order=True)
class LocationId:
    """Control location: thread index plus statement index within the thread."""

    thread: int
    index: int

    def __str__(self) -> str:
        return f"l{self.index}"


@dataclass(frozen=True)
class Stmt:
    """Base statement.  ``label`` is None until label_statements runs."""

    label: Optional[LocationId] = field(default=None, kw_only=True)
    pre_text: Optional[str] = field(default=None, kw_only=True)
    leaky_text: Optional[str] = field(default=None, kw_only=True)


@dataclass(frozen=True)
class Skip(Stmt):
    pass


@dataclass(frozen=True)
class Assign(Stmt):
    target: str
    value: Expr


@dataclass(frozen=True)
class Print(Stmt):
    value: Expr


@dataclass(frozen=True)
class Delay(Stmt):
    duration: Expr


@dataclass(frozen=True)
class If(Stmt):
    guard: Expr
    then_body: tuple["Stmt", ...]
    else_body: tuple["Stmt", ...]


@dataclass(frozen=True)
class While(Stmt):
    guard: Expr
    body: tuple["Stmt", ...]


@dataclass(frozen=True)
class Await(Stmt):
    """Conditional critical region: guard test plus body fire as one action."""

    guard: Expr
    body: tuple["Stmt", ...]


@dataclass(frozen=True)
class Decl:
    name: str
    type: str  # INT or BOOL
    security_label: str
    domain: tuple  # ints (lo..hi inclusive) or (False, True)
    init: Union[int, bool, None]  # None means the variable is secret
    secret: bool


@dataclass(frozen=True)
class Thread:
    name: str
    body: tuple[Stmt, ...]
    post_text: Optional[str] = None


@dataclass(frozen=True)
class Program:
    declarations: tuple[Decl, ...]
    threads: tuple[Thread, ...]
    ghosts: tuple[Decl, ...] = ()  # rigid logical constants for proof outlines

    def decl(self, name: str) -> Decl:
        for d in self.declarations:
            if d.name == name:
                return d
        raise KeyError(name)

    def secret_names(self) -> tuple[str, ...]:
        return tuple(d.name for d in self.declarations if d.secret)

    def thread_index(self, name: str) -> int:
        for i, t in enumerate(self.threads):
            if t.name == name:
                return i
        raise KeyError(name)

    def initial_store(self) -> dict:
        """Declared initializers; secret variables are left out."""
        return {d.name: d.init for d in self.declarations if not d.secret}

    def labels_of_thread(self, thread: int) -> list[LocationId]:
        """All statement labels of a thread plus its exit label, in order."""
        out = [s.label for s in iter_statements(self.threads[thread].body)]
        out.append(exit_label(self, thread))
        return out

    def statement_at(self, loc: LocationId) -> Optional[Stmt]:
        for s in iter_statements(self.threads[loc.thread].body):
            if s.label == loc:
                return s
        return None

    def location_str(self, loc: LocationId) -> str:
        return f"{self.threads[loc.thread].name}.l{loc.index}"


def iter_statements(body: tuple[Stmt, ...]) -> Iterator[Stmt]:
    """Pre-order walk over a body, descending into branches and regions."""
    for s in body:
        yield s
        if isinstance(s, If):
            yield from iter_statements(s.then_body)
            yield from iter_statements(s.else_body)
        elif isinstance(s, (While, Await)):
            yield from iter_statements(s.body)


def exit_label(program: Program, thread: int) -> LocationId:
    count = sum(1 for _ in iter_statements(program.threads[thread].body))
    return LocationId(thread, count)


# ---------------------------------------------------------------------------
# Free variables
# ---------------------------------------------------------------------------

def free_vars(node: Union[Expr, Stmt, tuple]) -> frozenset[str]:
    """Exact syntactic variable support of an expression or statement."""
    if isinstance(node, tuple):
        out: frozenset[str] = frozenset()
        for s in node:
            out |= free_vars(s)
        return out
    if isinstance(node, (IntLit, BoolLit, StrLit)):
        return frozenset()
    if isinstance(node, Var):
        return frozenset((node.name,))
    if isinstance(node, UnaryOp):
        return free_vars(node.operand)
    if isinstance(node, BinOp):
        return free_vars(node.left) | free_vars(node.right)
    if isinstance(node, Skip):
        return frozenset()
    if isinstance(node, Assign):
        return frozenset((node.target,)) | free_vars(node.value)
    if isinstance(node, Print):
        return free_vars(node.value)
    if isinstance(node, Delay):
        return free_vars(node.duration)
    if isinstance(node, If):
        return free_vars(node.guard) | free_vars(node.then_body) | free_vars(node.else_body)
    if isinstance(node, (While, Await)):
        return free_vars(node.guard) | free_vars(node.body)
    raise TypeError(f"not an AST node: {node!r}")


# ---------------------------------------------------------------------------
# Lexer (shared with the assertion sub-language)
# ---------------------------------------------------------------------------

KEYWORDS = {
    "var", "ghost", "int", "bool", "label", "secret", "thread", "post",
    "skip", "if", "then", "else", "while", "do", "await", "print", "delay",
    "true", "false", "and", "or", "not",
    "forall", "exists", "in", "approx",
}

TWO_CHAR = ("{|", "|}", "!=", "<=", ">=", "->", "..")
ONE_CHAR = "{}()[]=<>+-*;:,@."


@dataclass(frozen=True)
class Token:
    kind: str  # "ident", "keyword", "int", "string", "sym", "annotation", "eof"
    text: str
    line: int
    col: int


def tokenize(source: str) -> list[Token]:
    tokens: list[Token] = []
    i, line, col = 0, 1, 1
    n = len(source)

    def error(msg: str) -> ParseError:
        return ParseError(msg, line, col)

    while i < n:
        ch = source[i]
        if ch == "\n":
            i, line, col = i + 1, line + 1, 1
            continue
        if ch in " \t\r":
            i, col = i + 1, col + 1
            continue
        if source.startswith("//", i):
            while i < n and source[i] != "\n":
                i += 1
            continue
        if source.startswith("{|", i):
            # Annotation block: capture raw text, parsed later as an assertion.
            start_line, start_col = line, col
            j = source.find("|}", i + 2)
            if j < 0:
                raise error("unterminated annotation block '{|'")
            text = source[i + 2:j]
            for c in source[i:j + 2]:
                if c == "\n":
                    line, col = line + 1, 1
                else:
                    col += 1
            tokens.append(Token("annotation", text.strip(), start_line, start_col))
            i = j + 2
            continue
        if ch == "'":
            j = source.find("'", i + 1)
            if j < 0 or "\n" in source[i + 1:j]:
                raise error("unterminated string literal")
            tokens.append(Token("string", source[i + 1:j], line, col))
            col += j + 1 - i
            i = j + 1
            continue
        if ch.isdigit():
            j = i
            while j < n and source[j].isdigit():
                j += 1
            tokens.append(Token("int", source[i:j], line, col))
            col += j - i
            i = j
            continue
        if ch.isalpha() or ch == "_":
            j = i
            while j < n and (source[j].isalnum() or source[j] == "_"):
                j += 1
            text = source[i:j]
            kind = "keyword" if text in KEYWORDS else "ident"
            tokens.append(Token(kind, text, line, col))
            col += j - i
            i = j
            continue
        matched = False
        for two in TWO_CHAR:
            if source.startswith(two, i):
                tokens.append(Token("sym", two, line, col))
                i += 2
                col += 2
                matched = True
                break
        if matched:
            continue
        if ch in ONE_CHAR:
            tokens.append(Token("sym", ch, line, col))
            i += 1
            col += 1
            continue
        raise error(f"unexpected character {ch!r}")
    tokens.append(Token("eof", "", line, col))
    return tokens


class TokenStream:
    def __init__(self, tokens: list[Token]):
        self._tokens = tokens
        self._pos = 0

    def peek(self, ahead: int = 0) -> Token:
        return self._tokens[min(self._pos + ahead, len(self._tokens) - 1)]

    def next(self) -> Token:
        tok = self.peek()
        if tok.kind != "eof":
            self._pos += 1
        return tok

    def at(self, kind: str, text: Optional[str] = None, ahead: int = 0) -> bool:
        tok = self.peek(ahead)
        return tok.kind == kind and (text is None or tok.text == text)

    def expect(self, kind: str, text: Optional[str] = None) -> Token:
        tok = self.peek()
        if not self.at(kind, text):
            want = text if text is not None else kind
            raise ParseError(f"expected {want!r}, found {tok.text!r}", tok.line, tok.col)
        return self.next()

    def error(self, msg: str) -> ParseError:
        tok = self.peek()
        return ParseError(msg, tok.line, tok.col)


# ---------------------------------------------------------------------------
# Expression parsing (shared precedence climbing)
# ---------------------------------------------------------------------------

def parse_expr(ts: TokenStream) -> Expr:
    return _parse_or(ts)


def _parse_or(ts: TokenStream) -> Expr:
    left = _parse_and(ts)
    while ts.at("keyword", "or"):
        ts.next()
        left = BinOp("or", left, _parse_and(ts))
    return left


def _parse_and(ts: TokenStream) -> Expr:
    left = _parse_not(ts)
    while ts.at("keyword", "and"):
        ts.next()
        left = BinOp("and", left, _parse_not(ts))
    return left


def _parse_not(ts: TokenStream) -> Expr:
    if ts.at("keyword", "not"):
        ts.next()
        return UnaryOp("not", _parse_not(ts))
    return _parse_cmp(ts)


def _parse_cmp(ts: TokenStream) -> Expr:
    left = _parse_add(ts)
    if ts.at("sym") and ts.peek().text in CMP_OPS:
        op = ts.next().text
        return BinOp(op, left, _parse_add(ts))
    return left


def _parse_add(ts: TokenStream) -> Expr:
    left = _parse_mul(ts)
    while ts.at("sym") and ts.peek().text in ADD_OPS:
        op = ts.next().text
        left = BinOp(op, left, _parse_mul(ts))
    return left


def _parse_mul(ts: TokenStream) -> Expr:
    left = _parse_unary(ts)
    while ts.at("sym", "*"):
        ts.next()
        left = BinOp("*", left, _parse_unary(ts))
    return left


def _parse_unary(ts: TokenStream) -> Expr:
    if ts.at("sym", "-"):
        ts.next()
        return UnaryOp("-", _parse_unary(ts))
    return _parse_atom(ts)


def _parse_atom(ts: TokenStream) -> Expr:
    tok = ts.peek()
    if tok.kind == "int":
        ts.next()
        return IntLit(int(tok.text))
    if tok.kind == "keyword" and tok.text in ("true", "false"):
        ts.next()
        return BoolLit(tok.text == "true")
    if tok.kind == "ident":
        ts.next()
        return Var(tok.text)
    if tok.kind == "sym" and tok.text == "(":
        ts.next()
        inner = parse_expr(ts)
        ts.expect("sym", ")")
        return inner
    raise ts.error(f"expected expression, found {tok.text!r}")


# ---------------------------------------------------------------------------
# Program parsing
# ---------------------------------------------------------------------------

def parse_program(text: str) -> Program:
    """Parse source text into a labelled, validated Program."""
    ts = TokenStream(tokenize(text))
    decls: list[Decl] = []
    ghosts: list[Decl] = []
    while ts.at("keyword", "var") or ts.at("keyword", "ghost"):
        if ts.at("keyword", "var"):
            decls.append(_parse_decl(ts))
        else:
            ghosts.append(_parse_ghost(ts))
    threads: list[Thread] = []
    while ts.at("keyword", "thread"):
        threads.append(_parse_thread(ts))
    tok = ts.peek()
    if tok.kind != "eof":
        raise ts.error(f"unexpected {tok.text!r} at top level")
    if not threads:
        raise ParseError("program has no threads", tok.line, tok.col)
    program = label_statements(Program(tuple(decls), tuple(threads), tuple(ghosts)))
    _validate(program)
    return program


def _parse_ghost(ts: TokenStream) -> Decl:
    """Rigid logical constant: ``ghost V0 : int[0..4];`` (no initializer)."""
    ts.expect("keyword", "ghost")
    name = ts.expect("ident").text
    if name == "t":
        raise ts.error("'t' is reserved for the clock")
    ts.expect("sym", ":")
    if ts.at("keyword", "int"):
        ts.next()
        ts.expect("sym", "[")
        lo = int(ts.expect("int").text)
        ts.expect("sym", "..")
        hi = int(ts.expect("int").text)
        ts.expect("sym", "]")
        vtype, domain = INT, tuple(range(lo, hi + 1))
    elif ts.at("keyword", "bool"):
        ts.next()
        vtype, domain = BOOL, (False, True)
    else:
        raise ts.error("expected type 'int[lo..hi]' or 'bool'")
    ts.expect("sym", ";")
    return Decl(name, vtype, "low", domain, None, False)


def _parse_decl(ts: TokenStream) -> Decl:
    ts.expect("keyword", "var")
    name = ts.expect("ident").text
    if name == "t":
        raise ts.error("'t' is reserved for the clock")
    ts.expect("sym", ":")
    if ts.at("keyword", "int"):
        ts.next()
        ts.expect("sym", "[")
        lo = int(ts.expect("int").text)
        ts.expect("sym", "..")
        hi = int(ts.expect("int").text)
        ts.expect("sym", "]")
        if hi < lo:
            raise ts.error(f"empty domain [{lo}..{hi}] for {name}")
        vtype, domain = INT, tuple(range(lo, hi + 1))
    elif ts.at("keyword", "bool"):
        ts.next()
        vtype, domain = BOOL, (False, True)
    else:
        raise ts.error("expected type 'int[lo..hi]' or 'bool'")
    security = "low"
    if ts.at("keyword", "label"):
        ts.next()
        tok = ts.peek()
        if tok.kind not in ("ident", "keyword"):
            raise ts.error("expected security label name")
        security = ts.next().text
    ts.expect("sym", "=")
    init: Union[int, bool, None]
    secret = False
    if ts.at("keyword", "secret"):
        ts.next()
        init, secret = None, True
    elif ts.at("int"):
        init = int(ts.next().text)
        if vtype != INT or init not in domain:
            raise ts.error(f"initializer {init} outside domain of {name}")
    elif ts.at("keyword", "true") or ts.at("keyword", "false"):
        init = ts.next().text == "true"
        if vtype != BOOL:
            raise ts.error(f"boolean initializer for int variable {name}")
    else:
        raise ts.error("expected initializer or 'secret'")
    ts.expect("sym", ";")
    return Decl(name, vtype, security, domain, init, secret)


def _parse_thread(ts: TokenStream) -> Thread:
    ts.expect("keyword", "thread")
    name = ts.expect("ident").text
    body = _parse_block(ts, in_await=False)
    post_text = None
    if ts.at("keyword", "post"):
        ts.next()
        post_text = ts.expect("annotation").text
    return Thread(name, tuple(body), post_text)


def _parse_block(ts: TokenStream, in_await: bool) -> list[Stmt]:
    ts.expect("sym", "{")
    stmts: list[Stmt] = []
    while not ts.at("sym", "}"):
        stmts.append(_parse_stmt(ts, in_await))
    ts.expect("sym", "}")
    return stmts


def _parse_stmt(ts: TokenStream, in_await: bool) -> Stmt:
    pre_text = None
    leaky_text = None
    while True:
        if ts.at("annotation"):
            pre_text = ts.next().text
        elif ts.at("sym", "@"):
            at_tok = ts.next()
            marker = ts.expect("ident")
            if marker.text != "leaky":
                raise ParseError(f"unknown marker '@{marker.text}'", at_tok.line, at_tok.col)
            leaky_text = ts.expect("annotation").text
        else:
            break
    tok = ts.peek()
    stmt = _parse_bare_stmt(ts, in_await, tok)
    return replace(stmt, pre_text=pre_text, leaky_text=leaky_text)


def _parse_bare_stmt(ts: TokenStream, in_await: bool, tok: Token) -> Stmt:
    if ts.at("keyword", "skip"):
        ts.next()
        ts.expect("sym", ";")
        return Skip()
    if ts.at("keyword", "print"):
        ts.next()
        ts.expect("sym", "(")
        if ts.at("string"):
            value: Expr = StrLit(ts.next().text)
        else:
            value = parse_expr(ts)
        ts.expect("sym", ")")
        ts.expect("sym", ";")
        return Print(value)
    if ts.at("keyword", "delay"):
        ts.next()
        ts.expect("sym", "(")
        duration = parse_expr(ts)
        ts.expect("sym", ")")
        ts.expect("sym", ";")
        return Delay(duration)
    if ts.at("keyword", "if"):
        ts.next()
        guard = parse_expr(ts)
        ts.expect("keyword", "then")
        then_body = _parse_block(ts, in_await)
        else_body: list[Stmt] = []
        if ts.at("keyword", "else"):
            ts.next()
            else_body = _parse_block(ts, in_await)
        ts.expect("sym", ";")
        return If(guard, tuple(then_body), tuple(else_body))
    if ts.at("keyword", "while"):
        ts.next()
        guard = parse_expr(ts)
        ts.expect("keyword", "do")
        body = _parse_block(ts, in_await)
        ts.expect("sym", ";")
        return While(guard, tuple(body))
    if ts.at("keyword", "await"):
        if in_await:
            raise ParseError("nested await rejected", tok.line, tok.col)
        ts.next()
        guard = parse_expr(ts)
        ts.expect("keyword", "then")
        body = _parse_block(ts, in_await=True)
        ts.expect("sym", ";")
        return Await(guard, tuple(body))
    if ts.at("ident"):
        target = ts.next().text
        ts.expect("sym", "=")
        value = parse_expr(ts)
        ts.expect("sym", ";")
        return Assign(target, value)
    raise ts.error(f"expected statement, found {tok.text!r}")


# ---------------------------------------------------------------------------
# Labelling
# ---------------------------------------------------------------------------

def label_statements(program: Program) -> Program:
    """Assign per-thread location labels l0, l1, ... in source order.

    Sequencing is transparent: only executable and control statements consume
    an index.  Statements inside if/while/await bodies are labelled where the
    pre-order walk meets them, and each thread additionally owns an exit
    label one past its last statement index.
    """
    threads = []
    for t_idx, thread in enumerate(program.threads):
        counter = 0

        def relabel(body: tuple[Stmt, ...]) -> tuple[Stmt, ...]:
            nonlocal counter
            out = []
            for s in body:
                loc = LocationId(t_idx, counter)
                counter += 1
                if isinstance(s, If):
                    then_body = relabel(s.then_body)
                    else_body = relabel(s.else_body)
                    s = replace(s, then_body=then_body, else_body=else_body, label=loc)
                elif isinstance(s, While):
                    s = replace(s, body=relabel(s.body), label=loc)
                elif isinstance(s, Await):
                    # The region's own label precedes its body labels.
                    s = replace(s, body=relabel(s.body), label=loc)
                else:
                    s = replace(s, label=loc)
                out.append(s)
            return tuple(out)

        threads.append(replace(thread, body=relabel(thread.body)))
    return Program(program.declarations, tuple(threads), program.ghosts)


def _validate(program: Program) -> None:
    seen: dict[str, Decl] = {}
    for d in program.declarations + program.ghosts:
        if d.name in seen:
            raise ParseError(f"duplicate declaration of {d.name!r}")
        seen[d.name] = d
    seen = {d.name: d for d in program.declarations}
    names: set[str] = set()
    for t in program.threads:
        if t.name in names:
            raise ParseError(f"duplicate thread name {t.name!r}")
        names.add(t.name)
    for t_idx, t in enumerate(program.threads):
        for s in iter_statements(t.body):
            for v in free_vars(s):
                if v not in seen:
                    raise ParseError(f"undeclared variable {v!r} in thread {t.name}")
            _typecheck_stmt(s, seen)
    labels = [s.label for t in program.threads for s in iter_statements(t.body)]
    if len(labels) != len(set(labels)):
        raise ParseError("duplicate statement labels")


def expr_type(e: Expr, decls: dict[str, Decl]) -> str:
    if isinstance(e, IntLit):
        return INT
    if isinstance(e, BoolLit):
        return BOOL
    if isinstance(e, StrLit):
        return "string"
    if isinstance(e, Var):
        return decls[e.name].type
    if isinstance(e, UnaryOp):
        want = INT if e.op == "-" else BOOL
        if expr_type(e.operand, decls) != want:
            raise ParseError(f"operator {e.op!r} applied to {unparse_expr(e.operand)}")
        return want
    if isinstance(e, BinOp):
        lt, rt = expr_type(e.left, decls), expr_type(e.right, decls)
        if e.op in BOOL_OPS:
            if lt != BOOL or rt != BOOL:
                raise ParseError(f"boolean operator {e.op!r} on non-bool operands")
            return BOOL
        if e.op in ("=", "!="):
            if lt != rt:
                raise ParseError(f"comparison {e.op!r} between {lt} and {rt}")
            return BOOL
        if e.op in ("<", "<=", ">", ">="):
            if lt != INT or rt != INT:
                raise ParseError(f"ordering {e.op!r} on non-int operands")
            return BOOL
        if lt != INT or rt != INT:
            raise ParseError(f"arithmetic {e.op!r} on non-int operands")
        return INT
    raise TypeError(e)


def _typecheck_stmt(s: Stmt, decls: dict[str, Decl]) -> None:
    if isinstance(s, Assign):
        vt = expr_type(s.value, decls)
        if vt != decls[s.target].type:
            raise ParseError(f"assigning {vt} value to {decls[s.target].type} variable {s.target!r}")
    elif isinstance(s, Print):
        expr_type(s.value, decls)
    elif isinstance(s, Delay):
        if expr_type(s.duration, decls) != INT:
            raise ParseError("delay duration must be an int expression")
    elif isinstance(s, (If, While, Await)):
        # Guards may be bool or int; an int guard means "value != 0".
        gt = expr_type(s.guard, decls)
        if gt not in (BOOL, INT):
            raise ParseError("guard must be bool or int")


# ---------------------------------------------------------------------------
# Unparser
# ---------------------------------------------------------------------------

_PRECEDENCE = {"or": 1, "and": 2, "=": 4, "!=": 4, "<": 4, "<=": 4, ">": 4,
               ">=": 4, "+": 5, "-": 5, "*": 6}


def unparse_expr(e: Expr, parent_prec: int = 0) -> str:
    if isinstance(e, IntLit):
        return str(e.value)
    if isinstance(e, BoolLit):
        return "true" if e.value else "false"
    if isinstance(e, StrLit):
        return f"'{e.value}'"
    if isinstance(e, Var):
        return e.name
    if isinstance(e, UnaryOp):
        inner = unparse_expr(e.operand, 7)
        text = f"-{inner}" if e.op == "-" else f"not {inner}"
        return f"({text})" if parent_prec >= 7 else text
    if isinstance(e, BinOp):
        prec = _PRECEDENCE[e.op]
        left = unparse_expr(e.left, prec - 1)
        right = unparse_expr(e.right, prec)
        text = f"{left} {e.op} {right}"
        return f"({text})" if parent_prec >= prec else text
    raise TypeError(e)


def unparse(program: Program, show_labels: bool = False) -> str:
    """Canonical source form; with show_labels=True, prefix locations."""
    lines: list[str] = []
    for d in program.declarations:
        if d.type == INT:
            ty = f"int[{d.domain[0]}..{d.domain[-1]}]"
        else:
            ty = "bool"
        init = "secret" if d.secret else (
            str(d.init) if d.type == INT else ("true" if d.init else "false"))
        lines.append(f"var {d.name} : {ty} label {d.security_label} = {init};")
    for g in program.ghosts:
        ty = f"int[{g.domain[0]}..{g.domain[-1]}]" if g.type == INT else "bool"
        lines.append(f"ghost {g.name} : {ty};")
    for t_idx, t in enumerate(program.threads):
        lines.append("")
        lines.append(f"thread {t.name} {{")
        _unparse_body(t.body, lines, indent=1, show_labels=show_labels)
        if show_labels:
            lines.append(f"  l{exit_label(program, t_idx).index}:")
        close = "}"
        if t.post_text is not None:
            close += f" post {{| {t.post_text} |}}"
        lines.append(close)
    return "\n".join(lines) + "\n"


def _unparse_body(body: tuple[Stmt, ...], lines: list[str], indent: int,
                  show_labels: bool) -> None:
    pad = "  " * indent
    for s in body:
        if s.pre_text is not None:
            lines.append(f"{pad}{{| {s.pre_text} |}}")
        if s.leaky_text is not None:
            lines.append(f"{pad}@leaky {{| {s.leaky_text} |}}")
        tag = f"l{s.label.index}: " if show_labels and s.label is not None else ""
        if isinstance(s, Skip):
            lines.append(f"{pad}{tag}skip;")
        elif isinstance(s, Assign):
            lines.append(f"{pad}{tag}{s.target} = {unparse_expr(s.value)};")
        elif isinstance(s, Print):
            lines.append(f"{pad}{tag}print({unparse_expr(s.value)});")
        elif isinstance(s, Delay):
            lines.append(f"{pad}{tag}delay({unparse_expr(s.duration)});")
        elif isinstance(s, If):
            lines.append(f"{pad}{tag}if {unparse_expr(s.guard)} then {{")
            _unparse_body(s.then_body, lines, indent + 1, show_labels)
            if s.else_body:
                lines.append(f"{pad}}} else {{")
                _unparse_body(s.else_body, lines, indent + 1, show_labels)
            lines.append(f"{pad}}};")
        elif isinstance(s, While):
            lines.append(f"{pad}{tag}while {unparse_expr(s.guard)} do {{")
            _unparse_body(s.body, lines, indent + 1, show_labels)
            lines.append(f"{pad}}};")
        elif isinstance(s, Await):
            lines.append(f"{pad}{tag}await {unparse_expr(s.guard)} then {{")
            _unparse_body(s.body, lines, indent + 1, show_labels)
            lines.append(f"{pad}}};")
        else:
            raise TypeError(s)
