"""Width-annotated bitvector expression DAGs and their executable semantics.

Every node carries an output width; every operator computes in unbounded
unsigned integers and truncates modulo 2^width. Expressions are immutable
and hash-consed at construction, so structural equality is object identity
and shared subterms are shared objects.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

MAX_WIDTH = 64  # one machine word per value; wider nodes are rejected


class OpKind(enum.Enum):
    LSHIFT = "<<"
    RSHIFT = ">>"
    ADD = "+"
    SUB = "-"
    NEG = "neg"
    MUL = "*"
    MUX = "mux"
    NOT = "~"
    CONCAT = "concat"
    LT = "<"
    GT = ">"
    SUM = "sum"
    MUXAR = "muxar"
    FMA = "fma"
    VAR = "var"
    CONST = "const"


# Exact arity per operator; None means n-ary with at least 3 operands (SUM).
ARITY: dict[OpKind, int | None] = {
    OpKind.LSHIFT: 2,
    OpKind.RSHIFT: 2,
    OpKind.ADD: 2,
    OpKind.SUB: 2,
    OpKind.NEG: 1,
    OpKind.MUL: 2,
    OpKind.MUX: 3,
    OpKind.NOT: 1,
    OpKind.CONCAT: 2,
    OpKind.LT: 2,
    OpKind.GT: 2,
    OpKind.SUM: None,
    OpKind.MUXAR: 3,
    OpKind.FMA: 3,
    OpKind.VAR: 0,
    OpKind.CONST: 0,
}

# Tie-break rank used by extraction; order follows the operator table
# (shifts, add/sub, neg, mul, mux, not, concat, compares, then merged ops).
OP_RANK: dict[OpKind, int] = {
    OpKind.VAR: -2,
    OpKind.CONST: -1,
    OpKind.LSHIFT: 0,
    OpKind.RSHIFT: 1,
    OpKind.ADD: 2,
    OpKind.SUB: 3,
    OpKind.NEG: 4,
    OpKind.MUL: 5,
    OpKind.MUX: 6,
    OpKind.NOT: 7,
    OpKind.CONCAT: 8,
    OpKind.LT: 9,
    OpKind.GT: 10,
    OpKind.SUM: 11,
    OpKind.MUXAR: 12,
    OpKind.FMA: 13,
}


class IrError(ValueError):
    pass


def mask(width: int) -> int:
    return (1 << width) - 1


class Expr:
    """Immutable, interned expression node. Equality is identity."""

    __slots__ = ("op", "width", "children", "payload")

    op: OpKind
    width: int
    children: tuple["Expr", ...]
    payload: str | int | None

    def __repr__(self) -> str:  # debugging aid only; canonical text lives in sexpr
        if self.op is OpKind.VAR:
            return f"(var {self.payload} {self.width})"
        if self.op is OpKind.CONST:
            return f"(const {self.payload} {self.width})"
        kids = " ".join(repr(c) for c in self.children)
        return f"({self.op.value} {self.width} {kids})"


_intern: dict[tuple, Expr] = {}


def node(op: OpKind, width: int, children: tuple[Expr, ...] = (), payload=None) -> Expr:
    """Build (or reuse) an expression node, validating shape invariants."""
    if not isinstance(width, int) or not (1 <= width <= MAX_WIDTH):
        raise IrError(f"width {width!r} out of range 1..{MAX_WIDTH}")
    arity = ARITY[op]
    if arity is None:
        if len(children) < 3:
            raise IrError(f"{op.value} needs at least 3 operands, got {len(children)}")
    elif len(children) != arity:
        raise IrError(f"{op.value} expects {arity} operands, got {len(children)}")
    if op is OpKind.VAR:
        if not isinstance(payload, str) or not payload:
            raise IrError("var needs a name payload")
    elif op is OpKind.CONST:
        if not isinstance(payload, int) or payload < 0:
            raise IrError("const needs a non-negative integer payload")
        if payload > mask(width):
            raise IrError(f"const {payload} does not fit in {width} bits")
    elif payload is not None:
        raise IrError(f"{op.value} takes no payload")
    if op is OpKind.MUX and children[0].width != 1:
        raise IrError("mux select must be 1 bit wide")
    key = (op, width, children, payload)
    cached = _intern.get(key)
    if cached is None:
        cached = object.__new__(Expr)
        cached.op = op
        cached.width = width
        cached.children = children
        cached.payload = payload
        _intern[key] = cached
    return cached


def var(name: str, width: int) -> Expr:
    return node(OpKind.VAR, width, (), name)


def const(value: int, width: int) -> Expr:
    return node(OpKind.CONST, width, (), value)


Env = dict[str, int]


def apply_op(op: OpKind, width: int, child_widths: tuple[int, ...], args: tuple[int, ...],
             payload=None) -> int:
    """Single-operator semantics over plain integers, truncated to `width`."""
    if op is OpKind.ADD:
        v = args[0] + args[1]
    elif op is OpKind.SUB:
        v = args[0] - args[1]
    elif op is OpKind.NEG:
        v = -args[0]
    elif op is OpKind.MUL:
        v = args[0] * args[1]
    elif op is OpKind.LSHIFT:
        sh = args[1]
        v = args[0] << sh if sh < width else 0
    elif op is OpKind.RSHIFT:
        v = args[0] >> args[1] if args[1] <= MAX_WIDTH else 0
    elif op is OpKind.NOT:
        v = args[0] ^ mask(child_widths[0])
    elif op is OpKind.MUX:
        v = args[1] if args[0] else args[2]
    elif op is OpKind.CONCAT:
        lo_w = child_widths[1]
        v = (args[0] << lo_w) + args[1] if lo_w < width else args[1]
    elif op is OpKind.LT:
        v = int(args[0] < args[1])
    elif op is OpKind.GT:
        v = int(args[0] > args[1])
    elif op is OpKind.SUM:
        v = sum(args)
    elif op is OpKind.FMA:
        v = args[0] * args[1] + args[2]
    elif op is OpKind.MUXAR:
        sel, a, c = args
        r = child_widths[0]
        v = sum((a if (sel >> i) & 1 else c) << i for i in range(r))
    elif op is OpKind.CONST:
        v = payload
    else:
        raise IrError(f"cannot evaluate {op}")
    return v & mask(width)


def eval_expr(e: Expr, env: Env, _memo: dict[Expr, int] | None = None) -> int:
    """Evaluate one expression under `env`; shared nodes evaluated once."""
    memo = {} if _memo is None else _memo
    cached = memo.get(e)
    if cached is not None:
        return cached
    if e.op is OpKind.VAR:
        try:
            v = env[e.payload]
        except KeyError:
            raise IrError(f"unbound variable {e.payload!r}") from None
    else:
        args = tuple(eval_expr(c, env, memo) for c in e.children)
        v = apply_op(e.op, e.width, tuple(c.width for c in e.children), args, e.payload)
    memo[e] = v
    return v


@dataclass(frozen=True)
class Design:
    """A named dataflow block: ordered inputs with widths, named output roots."""

    inputs: tuple[tuple[str, int], ...]
    outputs: tuple[tuple[str, Expr], ...]

    def input_widths(self) -> dict[str, int]:
        return dict(self.inputs)

    def total_input_bits(self) -> int:
        return sum(w for _, w in self.inputs)

    def nodes(self) -> list[Expr]:
        """All distinct nodes reachable from the outputs, children first."""
        seen: dict[Expr, None] = {}

        def walk(e: Expr) -> None:
            if e in seen:
                return
            for c in e.children:
                walk(c)
            seen[e] = None

        for _, root in self.outputs:
            walk(root)
        return list(seen)


def make_design(inputs, outputs) -> Design:
    d = Design(tuple((str(n), int(w)) for n, w in inputs),
               tuple((str(n), e) for n, e in outputs))
    validate_design(d)
    return d


def validate_design(d: Design) -> None:
    declared = {}
    for name, w in d.inputs:
        if name in declared:
            raise IrError(f"duplicate input {name!r}")
        if not (1 <= w <= MAX_WIDTH):
            raise IrError(f"input {name!r} width {w} out of range")
        declared[name] = w
    names = [n for n, _ in d.outputs]
    if len(set(names)) != len(names):
        raise IrError("duplicate output names")
    for e in d.nodes():
        if e.op is OpKind.VAR:
            if e.payload not in declared:
                raise IrError(f"undeclared variable {e.payload!r}")
            if declared[e.payload] != e.width:
                raise IrError(
                    f"variable {e.payload!r} used at width {e.width}, declared {declared[e.payload]}")


def eval_design(d: Design, env: Env) -> dict[str, int]:
    """Evaluate every output; env must bind exactly the declared inputs."""
    declared = d.input_widths()
    if set(env) != set(declared):
        missing = set(declared) - set(env)
        extra = set(env) - set(declared)
        raise IrError(f"env mismatch (missing={sorted(missing)}, extra={sorted(extra)})")
    for name, value in env.items():
        if not (0 <= value <= mask(declared[name])):
            raise IrError(f"value {value} out of range for {name!r} ({declared[name]} bits)")
    memo: dict[Expr, int] = {}
    return {name: eval_expr(root, env, memo) for name, root in d.outputs}
