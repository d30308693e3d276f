"""The bitwidth-conditional rewrite catalog.

Each rule pairs patterns over term and width variables with a sufficient
width condition. Conditions are conjunctions; a conjunct is checked as soon
as all the variables it reads are bound, so rules with free right-hand-side
widths filter on the bound part first and synthesize the minimum feasible
value for each free width afterwards. Synthesized widths beyond the 64-bit
cap skip the match (reported, not fatal).

Two supplementary rules extend the core catalog: `shift-cancel` discharges
`(a << n) >> n` when the intermediate is wide enough, and
`mult-const-factor` splits a constant multiplier into a product of factors.
Both carry the same exhaustive soundness obligations as the rest.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterator

from .egraph import EGraph, ENode
from .ir import OpKind
from .patterns import (EGraphSink, PConst, PNode, PVar, Pattern, RConst, RNode, RPattern,
                       RVar, Subst, build, ematch)

MAX_WIDTH = 64

ARITH = "arith"
LOGIC = "logic"
CONST_EXPANSION = "const_expansion"
EXCHANGE = "arith_logic_exchange"
MERGING = "merging"

RULE_CLASSES = (ARITH, LOGIC, CONST_EXPANSION, EXCHANGE, MERGING)


class CapExceeded(Exception):
    """A synthesized width fell outside 1..64; the match is skipped."""


@dataclass(frozen=True)
class Conjunct:
    reads: frozenset[str]
    fn: Callable[[Subst], bool]
    text: str


def _bound(s: Subst, name: str) -> bool:
    return name in s.widths or name in s.consts


@dataclass(frozen=True)
class RewriteRule:
    name: str
    klass: str
    row: str | None  # catalog row this rule realizes; None for supplementary
    lhs: Pattern | None = None
    rhs: RPattern | None = None
    conjuncts: tuple[Conjunct, ...] = ()
    free_widths: tuple[tuple[str, Callable[[Subst], int]], ...] = ()
    matcher: Callable[[EGraph], list[tuple[Subst, int]]] | None = None
    applier: Callable[[Subst, object], object] | None = None
    harness: Callable[[int], Iterator[dict]] | None = None

    def matches(self, g: EGraph) -> tuple[list[tuple["RewriteRule", Subst, int]], int]:
        raw = self.matcher(g) if self.matcher else ematch(g, self.lhs)
        found = []
        skipped = 0
        for s, cid in raw:
            if not check_condition(self, s):
                continue
            try:
                s = synthesize_free_widths(self, s)
            except CapExceeded:
                skipped += 1
                continue
            found.append((self, s, cid))
        return found, skipped

    def apply(self, s: Subst, g: EGraph) -> int:
        return instantiate_rhs(self, s, g)


def check_condition(rule: RewriteRule, s: Subst, g: EGraph | None = None) -> bool:
    """Every conjunct whose variables are all bound must hold."""
    for c in rule.conjuncts:
        if all(_bound(s, v) for v in c.reads) and not c.fn(s):
            return False
    return True


def synthesize_free_widths(rule: RewriteRule, s: Subst) -> Subst:
    """Bind each free right-hand-side width to its minimum feasible value."""
    if not rule.free_widths:
        return s
    s = s.copy()
    for name, fn in rule.free_widths:
        v = fn(s)
        if not (1 <= v <= MAX_WIDTH):
            raise CapExceeded(f"{rule.name}: {name}={v}")
        s.widths[name] = v
    for c in rule.conjuncts:
        if all(_bound(s, v) for v in c.reads) and not c.fn(s):
            raise CapExceeded(f"{rule.name}: synthesized widths violate {c.text}")
    return s


def instantiate_rhs(rule: RewriteRule, s: Subst, g: EGraph) -> int:
    sink = EGraphSink(g)
    if rule.applier:
        return rule.applier(s, sink)
    return build(rule.rhs, s, sink)


# -- catalog ----------------------------------------------------------------


def _C(reads: str, fn, text: str) -> Conjunct:
    return Conjunct(frozenset(reads.split()), fn, text)


def _v(name, width) -> PVar:
    return PVar(name, width)


def _rules() -> list[RewriteRule]:
    W = lambda s, k: s.widths[k]
    K = lambda s, k: s.consts[k]
    rules: list[RewriteRule] = []

    def rule(name, klass, row, lhs, rhs, conjuncts=(), free=(), **kw):
        rules.append(RewriteRule(name, klass, row, lhs, rhs, tuple(conjuncts), tuple(free), **kw))

    # bitvector arithmetic identities
    for name, op in (("commutativity-add", OpKind.ADD), ("commutativity-mul", OpKind.MUL)):
        rule(name, ARITH, "Commutativity",
             PNode(op, "r", (_v("a", "p"), _v("b", "q"))),
             RNode(op, "r", (RVar("b"), RVar("a"))))

    rule("mult-associativity", ARITH, "Mult Associativity",
         PNode(OpKind.MUL, "t", (PNode(OpKind.MUL, "u", (_v("a", "p"), _v("b", "r"))),
                                 _v("c", "s"))),
         RNode(OpKind.MUL, "t", (RVar("a"), RNode(OpKind.MUL, "q", (RVar("b"), RVar("c"))))),
         [_C("u t p r", lambda s: W(s, "u") >= W(s, "t") or W(s, "p") + W(s, "r") <= W(s, "u"),
             "u >= t or p+r <= u"),
          _C("q t r s", lambda s: W(s, "q") >= W(s, "t") or W(s, "r") + W(s, "s") <= W(s, "q"),
             "q >= t or r+s <= q")],
         [("q", lambda s: min(W(s, "t"), W(s, "r") + W(s, "s")))])

    rule("add-associativity", ARITH, "Add Associativity",
         PNode(OpKind.ADD, "t", (PNode(OpKind.ADD, "u", (_v("a", "p"), _v("b", "r"))),
                                 _v("c", "s"))),
         RNode(OpKind.ADD, "t", (RVar("a"), RNode(OpKind.ADD, "q", (RVar("b"), RVar("c"))))),
         [_C("u t p r", lambda s: W(s, "u") >= W(s, "t") or max(W(s, "p"), W(s, "r")) < W(s, "u"),
             "u >= t or max(p,r) < u"),
          _C("q t r s", lambda s: W(s, "q") >= W(s, "t") or max(W(s, "r"), W(s, "s")) < W(s, "q"),
             "q >= t or max(r,s) < q")],
         [("q", lambda s: min(W(s, "t"), max(W(s, "r"), W(s, "s")) + 1))])

    rule("distribute-mult-over-add", ARITH, "Distribute Mult over Add",
         PNode(OpKind.MUL, "r", (_v("a", "p"),
                                 PNode(OpKind.ADD, "q", (_v("b", "s"), _v("c", "t"))))),
         RNode(OpKind.ADD, "r", (RNode(OpKind.MUL, "u", (RVar("a"), RVar("b"))),
                                 RNode(OpKind.MUL, "v", (RVar("a"), RVar("c"))))),
         [_C("q r", lambda s: W(s, "q") >= W(s, "r"), "q >= r"),
          _C("u r", lambda s: W(s, "u") >= W(s, "r"), "u >= r"),
          _C("v r", lambda s: W(s, "v") >= W(s, "r"), "v >= r")],
         [("u", lambda s: W(s, "r")), ("v", lambda s: W(s, "r"))])

    rule("sum-same", ARITH, "Sum Same",
         PNode(OpKind.ADD, "q", (_v("a", "p"), _v("a", "p"))),
         RNode(OpKind.MUL, "q", (RConst(2, 2), RVar("a"))))

    rule("mult-sum-same", ARITH, "Mult Sum Same",
         PNode(OpKind.ADD, "r", (PNode(OpKind.MUL, "s", (_v("a", "p"), _v("b", "q"))),
                                 _v("b", "q"))),
         RNode(OpKind.MUL, "r", (RNode(OpKind.ADD, "t", (RVar("a"), RConst(1, 1))), RVar("b"))),
         [_C("t p", lambda s: W(s, "t") > W(s, "p"), "t > p"),
          _C("s p q", lambda s: W(s, "s") >= W(s, "p") + W(s, "q"), "s >= p+q")],
         [("t", lambda s: W(s, "p") + 1)])

    rule("add-zero", ARITH, "Add Zero",
         PNode(OpKind.ADD, "p", (_v("a", "p"), PConst(None, "q", bind="b"))),
         RVar("a"),
         [_C("p b", lambda s: K(s, "b") % (1 << W(s, "p")) == 0, "b == 0 mod 2^p")])

    # q >= r added: the negation truncates at q, so 2^q must vanish mod 2^r.
    rule("sub-to-neg", ARITH, "Sub to Neg",
         PNode(OpKind.SUB, "r", (_v("a", "p"), _v("b", "q"))),
         RNode(OpKind.ADD, "r", (RVar("a"), RNode(OpKind.NEG, "q", (RVar("b"),)))),
         [_C("q r", lambda s: W(s, "q") >= W(s, "r"), "q >= r")])

    rule("mult-by-one", ARITH, "Mult by One",
         PNode(OpKind.MUL, "p", (_v("a", "p"), PConst(None, "q", bind="b"))),
         RVar("a"),
         [_C("p b", lambda s: K(s, "b") % (1 << W(s, "p")) == 1, "b == 1 mod 2^p")])

    rule("mult-by-two", ARITH, "Mult by Two",
         PNode(OpKind.MUL, "r", (_v("a", "p"), PConst(2, None, build_width=2))),
         RNode(OpKind.LSHIFT, "r", (RVar("a"), RConst(1, 1))))

    # bitvector logic identities
    rule("merge-left-shift", LOGIC, "Merge Left Shift",
         PNode(OpKind.LSHIFT, "r", (PNode(OpKind.LSHIFT, "u", (_v("a", "p"), _v("b", "q"))),
                                    _v("c", "s"))),
         RNode(OpKind.LSHIFT, "r", (RVar("a"), RNode(OpKind.ADD, "t", (RVar("b"), RVar("c"))))),
         [_C("t q s", lambda s: W(s, "t") > max(W(s, "q"), W(s, "s")), "t > max(q,s)"),
          _C("u r", lambda s: W(s, "u") >= W(s, "r"), "u >= r")],
         [("t", lambda s: max(W(s, "q"), W(s, "s")) + 1)])

    rule("merge-right-shift", LOGIC, "Merge Right Shift",
         PNode(OpKind.RSHIFT, "r", (PNode(OpKind.RSHIFT, "u", (_v("a", "p"), _v("b", "q"))),
                                    _v("c", "s"))),
         RNode(OpKind.RSHIFT, "r", (RVar("a"), RNode(OpKind.ADD, "t", (RVar("b"), RVar("c"))))),
         [_C("t q s", lambda s: W(s, "t") > max(W(s, "q"), W(s, "s")), "t > max(q,s)"),
          _C("u p", lambda s: W(s, "u") >= W(s, "p"), "u >= p")],
         [("t", lambda s: max(W(s, "q"), W(s, "s")) + 1)])

    rule("redundant-sel", LOGIC, "Redundant Sel",
         PNode(OpKind.MUX, "p", (_v("b", 1), _v("a", "p"), _v("a", "p"))),
         RVar("a"))

    rule("neg-not", LOGIC, "Neg Not",
         PNode(OpKind.NEG, "r", (_v("a", "p"),)),
         RNode(OpKind.ADD, "r", (RNode(OpKind.NOT, "p", (RVar("a"),)), RConst(1, 1))),
         [_C("r p", lambda s: W(s, "r") <= W(s, "p"), "r <= p")])

    rule("not-over-concat", LOGIC, "Not over Con",
         PNode(OpKind.NOT, "r", (PNode(OpKind.CONCAT, "qs", (_v("a", "q"), _v("b", "s"))),)),
         RNode(OpKind.CONCAT, "r", (RNode(OpKind.NOT, "q", (RVar("a"),)),
                                    RNode(OpKind.NOT, "s", (RVar("b"),)))),
         [_C("qs q s", lambda s: W(s, "qs") == W(s, "q") + W(s, "s"), "concat width = q+s"),
          _C("q s r", lambda s: W(s, "q") + W(s, "s") >= W(s, "r"), "q+s >= r")])

    # constant expansion
    rule("mult-constant", CONST_EXPANSION, "Mult Constant",
         PNode(OpKind.MUL, "r", (PConst(None, "q", bind="c"), _v("x", "p"))),
         RNode(OpKind.ADD, "r",
               (RNode(OpKind.MUL, "r",
                      (RNode(OpKind.MUL, "q",
                             (RConst(2, 2),
                              RConst(lambda s: s.consts["c"] >> 1,
                                     lambda s: s.widths["q"] - 1))),
                       RVar("x"))),
                RNode(OpKind.MUL, "p", (RConst(lambda s: s.consts["c"] & 1, 1), RVar("x"))))),
         [_C("q", lambda s: W(s, "q") >= 2, "q >= 2 (slice c[q-1:1] must be non-empty)")])

    rule("one-to-two-mult", CONST_EXPANSION, "One to Two Mult",
         PNode(OpKind.MUL, "p", (PConst(1, None, build_width=1), _v("x", "p"))),
         RNode(OpKind.SUB, "p", (RNode(OpKind.MUL, "q", (RConst(2, 2), RVar("x"))), RVar("x"))),
         [_C("q p", lambda s: W(s, "q") > W(s, "p"), "q > p")],
         [("q", lambda s: W(s, "p") + 1)])

    # arithmetic/logic exchange
    rule("left-shift-add", EXCHANGE, "Left Shift Add",
         PNode(OpKind.LSHIFT, "r", (PNode(OpKind.ADD, "s", (_v("a", "p"), _v("b", "q"))),
                                    _v("c", "t"))),
         RNode(OpKind.ADD, "r", (RNode(OpKind.LSHIFT, "u", (RVar("a"), RVar("c"))),
                                 RNode(OpKind.LSHIFT, "u", (RVar("b"), RVar("c"))))),
         [_C("s r p q", lambda s: W(s, "s") >= W(s, "r") or max(W(s, "p"), W(s, "q")) < W(s, "s"),
             "s >= r or max(p,q) < s"),
          _C("u r", lambda s: W(s, "u") >= W(s, "r"), "u >= r")],
         [("u", lambda s: W(s, "r"))])

    rule("add-right-shift", EXCHANGE, "Add Right Shift",
         PNode(OpKind.ADD, "r", (_v("a", "p"),
                                 PNode(OpKind.RSHIFT, "q", (_v("b", "t"), _v("c", "u"))))),
         RNode(OpKind.RSHIFT, "r",
               (RNode(OpKind.ADD, "v",
                      (RNode(OpKind.LSHIFT, "s", (RVar("a"), RVar("c"))), RVar("b"))),
                RVar("c"))),
         [_C("q t", lambda s: W(s, "q") >= W(s, "t"), "q >= t"),
          _C("s p u", lambda s: W(s, "s") >= W(s, "p") + (1 << W(s, "u")) - 1,
             "s >= p + 2^u - 1"),
          _C("v s t", lambda s: W(s, "v") > max(W(s, "s"), W(s, "t")), "v > max(s,t)")],
         [("s", lambda s: W(s, "p") + (1 << W(s, "u")) - 1),
          ("v", lambda s: max(W(s, "s"), W(s, "t")) + 1)])

    rule("left-shift-mult", EXCHANGE, "Left Shift Mult",
         PNode(OpKind.LSHIFT, "r", (PNode(OpKind.MUL, "t", (_v("a", "p"), _v("b", "q"))),
                                    _v("c", "u"))),
         RNode(OpKind.MUL, "r", (RNode(OpKind.LSHIFT, "v", (RVar("a"), RVar("c"))), RVar("b"))),
         [_C("t r", lambda s: W(s, "t") >= W(s, "r"), "t >= r"),
          _C("v r", lambda s: W(s, "v") >= W(s, "r"), "v >= r")],
         [("v", lambda s: W(s, "r"))])

    rule("sel-add", EXCHANGE, "Sel Add",
         PNode(OpKind.MUX, "r", (_v("e", 1),
                                 PNode(OpKind.ADD, "r", (_v("a", "p"), _v("b", "q"))),
                                 PNode(OpKind.ADD, "r", (_v("c", "p"), _v("d", "q"))))),
         RNode(OpKind.ADD, "r", (RNode(OpKind.MUX, "p", (RVar("e"), RVar("a"), RVar("c"))),
                                 RNode(OpKind.MUX, "q", (RVar("e"), RVar("b"), RVar("d"))))))

    rule("sel-add-zero", EXCHANGE, "Sel Add Zero",
         PNode(OpKind.MUX, "p", (_v("e", 1),
                                 PNode(OpKind.ADD, "p", (_v("a", "p"), _v("b", "q"))),
                                 _v("c", "p"))),
         RNode(OpKind.ADD, "p", (RNode(OpKind.MUX, "p", (RVar("e"), RVar("a"), RVar("c"))),
                                 RNode(OpKind.MUX, "q", (RVar("e"), RVar("b"), RConst(0, "q"))))))

    rule("move-sel-zero", EXCHANGE, "Move Sel Zero",
         PNode(OpKind.MUL, "r", (PNode(OpKind.MUX, "p", (_v("b", 1),
                                                         PConst(0, None, build_width="p"),
                                                         _v("a", "p"))),
                                 _v("c", "q"))),
         RNode(OpKind.MUL, "r", (RVar("a"),
                                 RNode(OpKind.MUX, "q", (RVar("b"), RConst(0, "q"), RVar("c"))))))

    rule("concat-to-add", EXCHANGE, "Concat to Add",
         PNode(OpKind.CONCAT, "r", (_v("a", "p"), _v("b", "q"))),
         RNode(OpKind.ADD, "r",
               (RNode(OpKind.LSHIFT, "s", (RVar("a"), RConst(lambda s: s.widths["q"], "u"))),
                RVar("b"))),
         [_C("s p u", lambda s: W(s, "s") >= W(s, "p") + (1 << W(s, "u")) - 1,
             "s >= p + 2^u - 1"),
          _C("u q", lambda s: (1 << W(s, "u")) >= W(s, "q") + 1, "u >= ceil(log2(q+1))")],
         [("u", lambda s: W(s, "q").bit_length()),
          ("s", lambda s: W(s, "p") + (1 << W(s, "u")) - 1)])

    # merging operators
    rule("merge-additions", MERGING, "Merge Additions",
         PNode(OpKind.ADD, "q1", (_v("a1", "p1"),
                                  PNode(OpKind.ADD, "q2", (_v("a2", "p2"), _v("a3", "p3"))))),
         RNode(OpKind.SUM, "q1", (RVar("a1"), RVar("a2"), RVar("a3"))),
         [_C("q1 p1 q2", lambda s: W(s, "q1") > max(W(s, "p1"), W(s, "q2")),
             "q1 > max(p1,q2)"),
          _C("q2 p2 p3", lambda s: W(s, "q2") > max(W(s, "p2"), W(s, "p3")),
             "q2 > max(p2,p3)")])

    rules.append(_absorb_rule())

    rule("merge-mult-array", MERGING, "Merge Mult Array",
         PNode(OpKind.ADD, "t", (PNode(OpKind.MUL, "s", (_v("a", "q"), _v("b", "r"))),
                                 PNode(OpKind.MUL, "s", (_v("c", "q"),
                                                         PNode(OpKind.NOT, "r", (_v("b", "r"),)))))),
         RNode(OpKind.MUXAR, "t", (RVar("b"), RVar("a"), RVar("c"))),
         [_C("s q r", lambda s: W(s, "s") >= W(s, "q") + W(s, "r"), "s >= q+r"),
          _C("t s", lambda s: W(s, "t") > W(s, "s"), "t > s")])

    # `s >= t` disjunct added: a product truncated at s >= t is exact mod 2^t,
    # which is what lets an FMA absorb a left-shifted multiplier.
    rule("fma-merge", MERGING, "FMA Merge",
         PNode(OpKind.ADD, "t", (PNode(OpKind.MUL, "s", (_v("a", "p"), _v("b", "q"))),
                                 _v("c", "r"))),
         RNode(OpKind.FMA, "t", (RVar("a"), RVar("b"), RVar("c"))),
         [_C("s p q t r",
             lambda s: (W(s, "s") >= W(s, "p") + W(s, "q")
                        and W(s, "t") > max(W(s, "s"), W(s, "r")))
                       or W(s, "s") >= W(s, "t"),
             "(s >= p+q and t > max(s,r)) or s >= t")])

    # supplementary: cancel an exactly-undone left shift (same amount class)
    rule("shift-cancel", LOGIC, None,
         PNode(OpKind.RSHIFT, "r", (PNode(OpKind.LSHIFT, "u", (_v("a", "p"), _v("b", "q"))),
                                    _v("b", "q"))),
         RVar("a"),
         [_C("r p", lambda s: W(s, "r") == W(s, "p"), "r == p"),
          _C("u p q", lambda s: W(s, "u") >= W(s, "p") + (1 << W(s, "q")) - 1,
             "u >= p + 2^q - 1")])

    rules.append(_factor_rule())
    return rules


# -- merge-additions absorb scheme ------------------------------------------


def _absorb_condition(s: Subst) -> bool:
    q1, p1, q2 = s.widths["q1"], s.widths["p1"], s.widths["q2"]
    if q1 <= max(p1, q2):
        return False
    # the SUM must be truncation-free by widths, otherwise absorbing loses bits
    capacity = sum((1 << p) - 1 for p in s.extra["operand_widths"])
    return capacity <= (1 << q2) - 1


def _absorb_matches(g: EGraph) -> list[tuple[Subst, int]]:
    out = []
    for cid in g.class_ids():
        for n in list(g.classes[cid].nodes):
            if n.op is not OpKind.ADD:
                continue
            head, tail = n.children
            for inner in list(g.classes[g.find(tail)].nodes):
                if inner.op is not OpKind.SUM:
                    continue
                s = Subst()
                s.widths.update(q1=n.width, p1=g.width_of(head), q2=inner.width)
                s.classes["a1"] = g.find(head)
                s.extra["operands"] = tuple(g.find(c) for c in inner.children)
                s.extra["operand_widths"] = tuple(g.width_of(c) for c in inner.children)
                if _absorb_condition(s):
                    out.append((s, cid))
    return out


def _absorb_apply(s: Subst, sink) -> object:
    kids = (sink.term(s, "a1"),) + tuple(s.extra["operands"])
    return sink.node(OpKind.SUM, s.widths["q1"], kids)


def _absorb_harness(max_width: int) -> Iterator[dict]:
    from . import ir

    for n in (3, 4):
        names = [f"a{i}" for i in range(1, n + 2)]
        widths_space = _width_tuples(n + 3, max_width)
        for ws in widths_space:
            q1, q2 = ws[0], ws[1]
            ps = ws[2:]
            s = Subst()
            s.widths.update(q1=q1, p1=ps[0], q2=q2)
            s.extra["operand_widths"] = ps[1:]
            if not _absorb_condition(s):
                continue
            terms = {nm: ir.var(nm, w) for nm, w in zip(names, ps)}
            inner = ir.node(OpKind.SUM, q2, tuple(terms[nm] for nm in names[1:]))
            lhs = ir.node(OpKind.ADD, q1, (terms[names[0]], inner))
            rhs = ir.node(OpKind.SUM, q1, tuple(terms[nm] for nm in names))
            yield {"widths": dict(s.widths), "consts": {},
                   "lhs": lhs, "rhs": rhs, "inputs": list(zip(names, ps))}


def _absorb_rule() -> RewriteRule:
    return RewriteRule(
        "merge-additions-absorb", MERGING, "Merge Additions",
        matcher=_absorb_matches, applier=_absorb_apply, harness=_absorb_harness,
        conjuncts=(Conjunct(frozenset(), lambda s: True,
                            "q1 > max(p1,q2) and sum(2^p_i - 1) <= 2^q2 - 1"),))


# -- constant factor split ---------------------------------------------------


def _factor_pairs(c: int) -> list[tuple[int, int]]:
    pairs = []
    d = 2
    while d * d <= c:
        if c % d == 0:
            pairs.append((d, c // d))
            if d != c // d:
                pairs.append((c // d, d))
        d += 1
    return sorted(pairs)


def _factor_matches(g: EGraph) -> list[tuple[Subst, int]]:
    out = []
    for cid in g.class_ids():
        for n in list(g.classes[cid].nodes):
            if n.op is not OpKind.MUL:
                continue
            head, tail = (g.find(c) for c in n.children)
            c = g.const_of(head)
            if c is None or c < 4:
                continue
            p = g.width_of(tail)
            for f1, f2 in _factor_pairs(c):
                v = p + f2.bit_length()
                if v > MAX_WIDTH:
                    continue
                s = Subst()
                s.widths.update(r=n.width, p=p, v=v)
                s.consts.update(f1=f1, f2=f2)
                s.classes["x"] = tail
                out.append((s, cid))
    return out


def _factor_apply(s: Subst, sink) -> object:
    f1, f2 = s.consts["f1"], s.consts["f2"]
    inner = sink.node(OpKind.MUL, s.widths["v"],
                      (sink.const(f2, f2.bit_length()), sink.term(s, "x")))
    return sink.node(OpKind.MUL, s.widths["r"], (sink.const(f1, f1.bit_length()), inner))


def _factor_harness(max_width: int) -> Iterator[dict]:
    from . import ir

    for q in range(3, max_width + 2):
        for c in range(4, 1 << min(q, 5)):
            pairs = _factor_pairs(c)
            if not pairs or c.bit_length() != q:
                continue
            for p in range(1, max_width + 1):
                for r in range(1, max_width + 1):
                    x = ir.var("x", p)
                    lhs = ir.node(OpKind.MUL, r, (ir.const(c, q), x))
                    for f1, f2 in pairs:
                        v = p + f2.bit_length()
                        if v > MAX_WIDTH:
                            continue
                        inner = ir.node(OpKind.MUL, v, (ir.const(f2, f2.bit_length()), x))
                        rhs = ir.node(OpKind.MUL, r, (ir.const(f1, f1.bit_length()), inner))
                        yield {"widths": {"r": r, "p": p, "q": q, "v": v},
                               "consts": {"c": c, "f1": f1, "f2": f2},
                               "lhs": lhs, "rhs": rhs, "inputs": [("x", p)]}


def _factor_rule() -> RewriteRule:
    return RewriteRule(
        "mult-const-factor", CONST_EXPANSION, None,
        matcher=_factor_matches, applier=_factor_apply, harness=_factor_harness,
        conjuncts=(Conjunct(frozenset(), lambda s: True,
                            "c = f1*f2 composite, v = p + bits(f2) <= 64"),))


def _width_tuples(k: int, max_width: int) -> Iterator[tuple[int, ...]]:
    if k == 0:
        yield ()
        return
    for rest in _width_tuples(k - 1, max_width):
        for w in range(1, max_width + 1):
            yield rest + (w,)


_TABLE: list[RewriteRule] | None = None


def rule_table() -> list[RewriteRule]:
    """The full catalog: every table row realized, plus supplementary rules."""
    global _TABLE
    if _TABLE is None:
        _TABLE = _rules()
    return list(_TABLE)


def select_rules(classes: set[str] | None = None,
                 names: set[str] | None = None) -> list[RewriteRule]:
    rules = rule_table()
    if classes is not None:
        unknown = set(classes) - set(RULE_CLASSES)
        if unknown:
            raise ValueError(f"unknown rule classes: {sorted(unknown)}")
        rules = [r for r in rules if r.klass in classes]
    if names is not None:
        rules = [r for r in rules if r.name in names]
    return rules


def default_rule_classes() -> set[str]:
    """Constant expansion is off by default; it blows up the e-graph."""
    return {ARITH, LOGIC, EXCHANGE, MERGING}


def _pattern_text(p) -> str:
    if isinstance(p, PVar):
        return f"{p.name}:{p.width}" if p.width is not None else p.name
    if isinstance(p, PConst):
        v = "c" if p.value is None else str(p.value)
        return f"const[{p.bind or v}]"
    if isinstance(p, RVar):
        return p.name
    if isinstance(p, RConst):
        v = p.value if isinstance(p.value, (int, str)) else "<computed>"
        return f"const[{v}]"
    kids = " ".join(_pattern_text(c) for c in p.children)
    w = p.width if isinstance(p.width, (int, str)) else "<computed>"
    return f"({p.op.value}:{w} {kids})"


def catalog_json() -> list[dict]:
    out = []
    for r in rule_table():
        out.append({
            "name": r.name,
            "class": r.klass,
            "row": r.row,
            "lhs": _pattern_text(r.lhs) if r.lhs is not None else "<custom>",
            "rhs": _pattern_text(r.rhs) if r.rhs is not None else "<custom>",
            "condition": " and ".join(c.text for c in r.conjuncts) or "true",
            "free_widths": [n for n, _ in r.free_widths],
        })
    return out
