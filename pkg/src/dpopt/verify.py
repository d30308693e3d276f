"""Simulation oracles: design equivalence and per-rule soundness replay.

Equivalence checks evaluate both designs over the same environments with a
vectorized evaluator (uint64 lanes, masked per node width). Any mismatch is
re-checked through the scalar interpreter before it is reported, so a
counterexample always genuinely distinguishes the designs.

Rule soundness enumerates every width assignment of a rule's bound width
variables (and every constant value for constant matchers), filters by the
rule's condition, synthesizes free widths, materializes both sides as
concrete designs over fresh inputs, and compares them exhaustively when the
total input bits fit the budget, sampled otherwise.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import product

import numpy as np

from . import ir
from .ir import Design, Expr, OpKind, eval_design
from .patterns import PConst, PNode, PVar, Subst, build, lhs_vars
from .rules import CapExceeded, RewriteRule, check_condition, synthesize_free_widths


class VerifyError(ValueError):
    pass


EXHAUSTIVE_BIT_LIMIT = 20


# -- vectorized evaluation ----------------------------------------------------

_U64 = np.uint64


def _np_mask(width: int) -> np.uint64:
    return _U64((1 << width) - 1 if width < 64 else (1 << 64) - 1)


def _np_shift_amounts(sh: np.ndarray) -> np.ndarray:
    return np.minimum(sh, _U64(63))


def eval_design_vec(d: Design, env: dict[str, np.ndarray]) -> dict[str, np.ndarray]:
    """Evaluate all outputs over parallel environments (one lane per case)."""
    vals: dict[Expr, np.ndarray] = {}

    def ev(e: Expr) -> np.ndarray:
        got = vals.get(e)
        if got is not None:
            return got
        m = _np_mask(e.width)
        with np.errstate(over="ignore"):
            if e.op is OpKind.VAR:
                v = env[e.payload].astype(_U64)
            elif e.op is OpKind.CONST:
                v = np.full_like(next(iter(env.values())), e.payload, dtype=_U64)
            elif e.op is OpKind.ADD:
                v = (ev(e.children[0]) + ev(e.children[1])) & m
            elif e.op is OpKind.SUB:
                v = (ev(e.children[0]) - ev(e.children[1])) & m
            elif e.op is OpKind.NEG:
                v = (_U64(0) - ev(e.children[0])) & m
            elif e.op is OpKind.MUL:
                v = (ev(e.children[0]) * ev(e.children[1])) & m
            elif e.op is OpKind.LSHIFT:
                a, sh = ev(e.children[0]), ev(e.children[1])
                v = np.where(sh >= _U64(e.width), _U64(0),
                             (a << _np_shift_amounts(sh)) & m)
            elif e.op is OpKind.RSHIFT:
                a, sh = ev(e.children[0]), ev(e.children[1])
                v = np.where(sh >= _U64(64), _U64(0), a >> _np_shift_amounts(sh)) & m
            elif e.op is OpKind.NOT:
                v = (ev(e.children[0]) ^ _np_mask(e.children[0].width)) & m
            elif e.op is OpKind.MUX:
                v = np.where(ev(e.children[0]).astype(bool),
                             ev(e.children[1]), ev(e.children[2])) & m
            elif e.op is OpKind.CONCAT:
                lo_w = e.children[1].width
                hi, lo = ev(e.children[0]), ev(e.children[1])
                v = lo & m if lo_w >= 64 else ((hi << _U64(lo_w)) | lo) & m
            elif e.op is OpKind.LT:
                v = (ev(e.children[0]) < ev(e.children[1])).astype(_U64)
            elif e.op is OpKind.GT:
                v = (ev(e.children[0]) > ev(e.children[1])).astype(_U64)
            elif e.op is OpKind.SUM:
                v = ev(e.children[0]).copy()
                for c in e.children[1:]:
                    v = v + ev(c)
                v &= m
            elif e.op is OpKind.FMA:
                v = (ev(e.children[0]) * ev(e.children[1]) + ev(e.children[2])) & m
            elif e.op is OpKind.MUXAR:
                sel, a, c = (ev(k) for k in e.children)
                r = e.children[0].width
                v = np.zeros_like(sel)
                for i in range(r):
                    bit = ((sel >> _U64(i)) & _U64(1)).astype(bool)
                    v = v + (np.where(bit, a, c) << _U64(i))
                v &= m
            else:
                raise AssertionError(f"unhandled op {e.op}")
        vals[e] = v
        return v

    return {name: ev(root) for name, root in d.outputs}


# -- equivalence ----------------------------------------------------------------


@dataclass
class EquivVerdict:
    status: str  # equivalent | counterexample | inconclusive
    counterexample: dict[str, int] | None
    cases_checked: int
    mode: str  # exhaustive | sampled


def _check_signatures(a: Design, b: Design) -> None:
    if a.inputs != b.inputs:
        raise VerifyError("designs have different input signatures")
    if tuple(n for n, _ in a.outputs) != tuple(n for n, _ in b.outputs):
        raise VerifyError("designs have different output names")


def _compare(a: Design, b: Design, env: dict[str, np.ndarray], mode: str) -> EquivVerdict:
    outs_a = eval_design_vec(a, env)
    outs_b = eval_design_vec(b, env)
    cases = len(next(iter(env.values()))) if env else 0
    for name in outs_a:
        neq = outs_a[name] != outs_b[name]
        if neq.any():
            i = int(np.argmax(neq))
            cex = {k: int(v[i]) for k, v in env.items()}
            got_a = eval_design(a, cex)  # scalar re-check: the counterexample
            got_b = eval_design(b, cex)  # must really distinguish the designs
            if got_a == got_b:
                raise VerifyError("vectorized and scalar evaluators disagree")
            return EquivVerdict("counterexample", cex, cases, mode)
    return EquivVerdict("equivalent", None, cases, mode)


def equiv_exhaustive(a: Design, b: Design) -> EquivVerdict:
    """Compare over every environment; requires total input bits <= 20."""
    _check_signatures(a, b)
    bits = a.total_input_bits()
    if bits > EXHAUSTIVE_BIT_LIMIT:
        raise VerifyError(
            f"{bits} input bits exceed the exhaustive limit "
            f"({EXHAUSTIVE_BIT_LIMIT}); use equiv_sampled")
    idx = np.arange(1 << bits, dtype=_U64)
    env = {}
    off = 0
    for name, w in a.inputs:
        env[name] = (idx >> _U64(off)) & _np_mask(w)
        off += w
    if not a.inputs:
        env = {}
        same = all(eval_design(a, {}) == eval_design(b, {}) for _ in (0,))
        return EquivVerdict("equivalent" if same else "counterexample",
                            None if same else {}, 1, "exhaustive")
    return _compare(a, b, env, "exhaustive")


def corner_envs(inputs: tuple[tuple[str, int], ...]) -> list[dict[str, int]]:
    """All-zeros, all-max, each single bit, and each single input at max."""
    envs = [{n: 0 for n, _ in inputs}, {n: ir.mask(w) for n, w in inputs}]
    for name, w in inputs:
        for b in range(w):
            e = {n: 0 for n, _ in inputs}
            e[name] = 1 << b
            envs.append(e)
        e = {n: 0 for n, _ in inputs}
        e[name] = ir.mask(w)
        envs.append(e)
    uniq = []
    seen = set()
    for e in envs:
        key = tuple(sorted(e.items()))
        if key not in seen:
            seen.add(key)
            uniq.append(e)
    return uniq


def equiv_sampled(a: Design, b: Design, n: int = 100_000, seed: int = 0) -> EquivVerdict:
    """Seeded random environments plus deterministic corners; a clean pass is
    still only sampled evidence."""
    _check_signatures(a, b)
    corners = corner_envs(a.inputs)
    rng = np.random.default_rng(seed)
    env = {}
    for name, w in a.inputs:
        col = np.array([e[name] for e in corners], dtype=_U64)
        if w >= 64:
            rand = rng.integers(0, (1 << 64) - 1, size=n, dtype=np.uint64, endpoint=True)
        else:
            rand = rng.integers(0, 1 << w, size=n, dtype=np.uint64)
        env[name] = np.concatenate([col, rand])
    if not a.inputs:
        same = eval_design(a, {}) == eval_design(b, {})
        return EquivVerdict("equivalent" if same else "counterexample",
                            None if same else {}, 1, "sampled")
    return _compare(a, b, env, "sampled")


def equiv_auto(a: Design, b: Design, n: int = 100_000, seed: int = 0) -> EquivVerdict:
    if a.total_input_bits() <= EXHAUSTIVE_BIT_LIMIT:
        return equiv_exhaustive(a, b)
    return equiv_sampled(a, b, n, seed)


# -- rule soundness -------------------------------------------------------------


@dataclass
class RuleCheckReport:
    rule: str
    assignments_tried: int = 0
    assignments_satisfied: int = 0
    assignments_skipped: int = 0  # cap-exceeded synthesis, counted separately
    failures: list[dict] = field(default_factory=list)
    minimality_failures: list[dict] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.failures and not self.minimality_failures

    def to_json(self) -> dict:
        return {
            "rule": self.rule,
            "assignments_tried": self.assignments_tried,
            "assignments_satisfied": self.assignments_satisfied,
            "assignments_skipped": self.assignments_skipped,
            "failures": self.failures[:10],
            "minimality_failures": self.minimality_failures[:10],
        }


class _LhsExprSink:
    """Builds the LHS pattern as a concrete expression for the harness."""

    def __init__(self, s: Subst, terms: dict[str, Expr]):
        self.s = s
        self.terms = terms

    def walk(self, pat) -> Expr:
        if isinstance(pat, PVar):
            return self.terms[pat.name]
        if isinstance(pat, PConst):
            value = pat.value if pat.value is not None else self.s.consts[pat.bind]
            bw = pat.build_width
            width = bw if isinstance(bw, int) else self.s.widths[bw]
            if isinstance(pat.width, str):
                width = self.s.widths[pat.width]
            return ir.const(value, width)
        kids = tuple(self.walk(c) for c in pat.children)
        width = pat.width if isinstance(pat.width, int) else self.s.widths[pat.width]
        return ir.node(pat.op, width, kids)


class _RhsExprSink:
    def __init__(self, terms: dict[str, Expr]):
        self.terms = terms

    def node(self, op, width, children):
        return ir.node(op, width, tuple(children))

    def const(self, value, width):
        return ir.const(value, width)

    def term(self, s, name):
        return self.terms[name]


def _term_widths(pat) -> dict[str, object]:
    out: dict[str, object] = {}

    def walk(p):
        if isinstance(p, PVar):
            out.setdefault(p.name, p.width)
        elif isinstance(p, PNode):
            for c in p.children:
                walk(c)

    walk(pat)
    return out


def _derived_cases(rule: RewriteRule, max_width: int):
    """Enumerate width assignments and constant values for a declarative rule."""
    width_vars, _, const_binders = lhs_vars(rule.lhs)
    term_slots = _term_widths(rule.lhs)
    for combo in product(range(1, max_width + 1), repeat=len(width_vars)):
        widths = dict(zip(width_vars, combo))
        const_spaces = []
        for name, wvar in const_binders:
            w = widths[wvar] if wvar else 1
            const_spaces.append([(name, v) for v in range(1 << w)])
        for consts in product(*const_spaces) if const_spaces else [()]:
            s = Subst(widths=dict(widths), consts=dict(consts))
            terms = {}
            ok = True
            for name, slot in term_slots.items():
                w = slot if isinstance(slot, int) else s.widths[slot]
                if not (1 <= w <= 64):
                    ok = False
                    break
                terms[name] = ir.var(name, w)
            if not ok:
                continue
            try:
                lhs = _LhsExprSink(s, terms).walk(rule.lhs)
            except (ir.IrError, KeyError):
                continue  # structurally impossible width combination
            yield s, lhs, terms


def check_rule_soundness(rule: RewriteRule, max_width: int = 4,
                         input_bit_budget: int = 16, samples: int = 10_000,
                         seed: int = 0) -> RuleCheckReport:
    report = RuleCheckReport(rule.name)

    def run_case(s: Subst, lhs: Expr, rhs: Expr, inputs: list[tuple[str, int]]):
        report.assignments_satisfied += 1
        da = ir.make_design(inputs, [("out", lhs)])
        db = ir.make_design(inputs, [("out", rhs)])
        bits = sum(w for _, w in inputs)
        if bits <= input_bit_budget:
            verdict = equiv_exhaustive(da, db)
        else:
            verdict = equiv_sampled(da, db, samples, seed)
        if verdict.status != "equivalent":
            report.failures.append({
                "widths": dict(s.widths), "consts": dict(s.consts),
                "env": verdict.counterexample,
                "lhs": eval_design(da, verdict.counterexample)["out"],
                "rhs": eval_design(db, verdict.counterexample)["out"],
            })

    if rule.harness is not None:
        for case in rule.harness(max_width):
            report.assignments_tried += 1
            s = Subst(widths=dict(case["widths"]), consts=dict(case["consts"]))
            run_case(s, case["lhs"], case["rhs"], case["inputs"])
        return report

    for s, lhs, terms in _derived_cases(rule, max_width):
        report.assignments_tried += 1
        if not check_condition(rule, s):
            continue
        try:
            s_full = synthesize_free_widths(rule, s)
        except CapExceeded:
            report.assignments_skipped += 1
            continue
        rhs = build(rule.rhs, s_full, _RhsExprSink(terms))
        inputs = [(t.payload, t.width) for t in terms.values()]
        run_case(s_full, lhs, rhs, inputs)
        _check_minimality(rule, s, s_full, report)
    return report


def _check_minimality(rule: RewriteRule, s_bound: Subst, s_full: Subst,
                      report: RuleCheckReport) -> None:
    """A synthesized width must satisfy the condition while one less fails."""
    for name, _ in rule.free_widths:
        v = s_full.widths[name]
        if v <= 1:
            continue
        probe = s_full.copy()
        probe.widths[name] = v - 1
        if check_condition(rule, probe):
            report.minimality_failures.append(
                {"free": name, "value": v, "widths": dict(s_full.widths)})
