"""Patterns over e-graphs: term variables, width variables, constant matchers.

A width slot is an int literal, a variable name, or None (ignored). Term
variables may repeat; repeated occurrences must match the same e-class.
Constant matchers match any class whose analysis knows its value, regardless
of the stored constant's width.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterator, Union

from .egraph import EGraph
from .ir import OpKind

WidthSlot = Union[int, str, None]


@dataclass(frozen=True)
class PVar:
    """Matches any e-class; binds the class and (optionally) its width."""

    name: str
    width: WidthSlot = None


@dataclass(frozen=True)
class PConst:
    """Matches a class with a known constant value.

    `value` fixes the required value (e.g. the literal 2 in a times-two
    pattern); `bind` records the matched value under a name for conditions
    and appliers. `build_width` is the canonical width used when the harness
    materializes this matcher as a concrete constant.
    """

    value: int | None = None
    width: WidthSlot = None
    bind: str | None = None
    build_width: int = 1


@dataclass(frozen=True)
class PNode:
    op: OpKind
    width: WidthSlot
    children: tuple["Pattern", ...]


Pattern = Union[PVar, PConst, PNode]


@dataclass
class Subst:
    classes: dict[str, int] = field(default_factory=dict)
    widths: dict[str, int] = field(default_factory=dict)
    consts: dict[str, int] = field(default_factory=dict)
    extra: dict = field(default_factory=dict)

    def copy(self) -> "Subst":
        return Subst(dict(self.classes), dict(self.widths), dict(self.consts), dict(self.extra))


def _match_width(slot: WidthSlot, actual: int, s: Subst) -> bool:
    if slot is None:
        return True
    if isinstance(slot, int):
        return slot == actual
    bound = s.widths.get(slot)
    if bound is None:
        s.widths[slot] = actual
        return True
    return bound == actual


def match_in_class(g: EGraph, pat: Pattern, cid: int, s: Subst) -> Iterator[Subst]:
    """Yield every substitution making `pat` describe a member of class `cid`."""
    cid = g.find(cid)
    cls = g.classes[cid]
    if isinstance(pat, PVar):
        bound = s.classes.get(pat.name)
        if bound is not None and g.find(bound) != cid:
            return
        t = s.copy()
        t.classes[pat.name] = cid
        if _match_width(pat.width, cls.width, t):
            yield t
        return
    if isinstance(pat, PConst):
        if cls.const is None:
            return
        if pat.value is not None and cls.const != pat.value:
            return
        t = s.copy()
        if not _match_width(pat.width, cls.width, t):
            return
        if pat.bind is not None:
            t.consts[pat.bind] = cls.const
            t.classes[pat.bind] = cid
        yield t
        return
    for enode in list(cls.nodes):
        if enode.op is not pat.op or len(enode.children) != len(pat.children):
            continue
        t = s.copy()
        if not _match_width(pat.width, enode.width, t):
            continue
        stack = [t]
        for sub, child in zip(pat.children, enode.children):
            stack = [nxt for cur in stack for nxt in match_in_class(g, sub, child, cur)]
            if not stack:
                break
        yield from stack


def ematch(g: EGraph, pat: Pattern) -> list[tuple[Subst, int]]:
    """All (substitution, class) pairs where the pattern is represented."""
    out = []
    for cid in g.class_ids():
        for s in match_in_class(g, pat, cid, Subst()):
            out.append((s, cid))
    return out


# Builders shared by rewrite application and the soundness harness. A sink
# abstracts over "build into the e-graph" vs "build a concrete expression".


class EGraphSink:
    def __init__(self, g: EGraph):
        self.g = g

    def node(self, op: OpKind, width: int, children: tuple) -> int:
        from .egraph import ENode

        return self.g.add(ENode(op, width, tuple(self.g.find(c) for c in children)))

    def const(self, value: int, width: int) -> int:
        from .egraph import ENode

        return self.g.add(ENode(OpKind.CONST, width, (), value))

    def term(self, s: Subst, name: str) -> int:
        return self.g.find(s.classes[name])


class ExprSink:
    """Builds `ir.Expr` trees; term variables resolve through a name map."""

    def __init__(self, terms: dict[str, "object"]):
        self.terms = terms

    def node(self, op: OpKind, width: int, children: tuple):
        from . import ir

        return ir.node(op, width, tuple(children))

    def const(self, value: int, width: int):
        from . import ir

        return ir.const(value, width)

    def term(self, s: Subst, name: str):
        return self.terms[name]


RWidth = Union[int, str, Callable[[Subst], int]]
RValue = Union[int, str, Callable[[Subst], int]]


@dataclass(frozen=True)
class RVar:
    name: str


@dataclass(frozen=True)
class RConst:
    value: RValue
    width: RWidth


@dataclass(frozen=True)
class RNode:
    op: OpKind
    width: RWidth
    children: tuple["RPattern", ...]


RPattern = Union[RVar, RConst, RNode]


def _resolve(v, s: Subst, table: dict[str, int]) -> int:
    if isinstance(v, int):
        return v
    if isinstance(v, str):
        return table[v]
    return v(s)


def build(pat: RPattern, s: Subst, sink):
    if isinstance(pat, RVar):
        return sink.term(s, pat.name)
    if isinstance(pat, RConst):
        return sink.const(_resolve(pat.value, s, s.consts), _resolve(pat.width, s, s.widths))
    kids = tuple(build(c, s, sink) for c in pat.children)
    return sink.node(pat.op, _resolve(pat.width, s, s.widths), kids)


def lhs_vars(pat: Pattern) -> tuple[list[str], list[str], list[tuple[str, str]]]:
    """Collect (width vars, term vars, const binders with their width slots)."""
    widths: list[str] = []
    terms: list[str] = []
    consts: list[tuple[str, str]] = []

    def note_width(slot):
        if isinstance(slot, str) and slot not in widths:
            widths.append(slot)

    def walk(p: Pattern):
        if isinstance(p, PVar):
            note_width(p.width)
            if p.name not in terms:
                terms.append(p.name)
        elif isinstance(p, PConst):
            note_width(p.width)
            if p.bind is not None and all(b != p.bind for b, _ in consts):
                consts.append((p.bind, p.width if isinstance(p.width, str) else ""))
        else:
            note_width(p.width)
            for c in p.children:
                walk(c)

    walk(pat)
    return widths, terms, consts
