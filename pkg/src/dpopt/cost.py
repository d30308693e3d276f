"""Theoretical two-input-gate area model.

Costs are exact rationals so extraction argmins are stable. Every formula is
homogeneous of degree one in the config constants, so scaling the whole
config by a positive factor scales every cost by the same factor and leaves
extraction argmins unchanged.

Reference architectures: prefix adder for add/sub/neg/compares, Booth
radix-4 for multiplication, mux trees for variable shifts and selects,
compressor rows feeding a prefix adder for the merged operators. Constant
multipliers are priced by the nonzero digits of a canonical signed digit
recoding; one or zero digits is bare wiring.
"""

from __future__ import annotations

from dataclasses import dataclass, fields
from fractions import Fraction
from typing import Hashable, Iterable

from .ir import Design, Expr, OpKind


@dataclass(frozen=True)
class CostConfig:
    mux_gate: Fraction = Fraction(3)
    fa_row_gate: Fraction = Fraction(4)
    pa_base: Fraction = Fraction(3)
    pa_log: Fraction = Fraction(1)
    not_gate: Fraction = Fraction(1, 2)
    booth_pp: Fraction = Fraction(3, 2)
    const_discount: Fraction = Fraction(1, 2)

    def __post_init__(self):
        for f in fields(self):
            v = getattr(self, f.name)
            if not isinstance(v, Fraction):
                object.__setattr__(self, f.name, Fraction(v))
            if getattr(self, f.name) < 0:
                raise ValueError(f"{f.name} must be non-negative")

    def scaled(self, k) -> "CostConfig":
        k = Fraction(k)
        return CostConfig(**{f.name: getattr(self, f.name) * k for f in fields(self)})

    def as_dict(self) -> dict[str, str]:
        return {f.name: str(getattr(self, f.name)) for f in fields(self)}

    @classmethod
    def from_file(cls, path) -> "CostConfig":
        """Flat key=value text; '#' comments; values parsed as exact rationals."""
        values = {}
        known = {f.name for f in fields(cls)}
        with open(path, encoding="utf-8") as fh:
            for lineno, raw in enumerate(fh, 1):
                line = raw.split("#", 1)[0].strip()
                if not line:
                    continue
                if "=" not in line:
                    raise ValueError(f"{path}:{lineno}: expected key=value")
                key, _, text = line.partition("=")
                key = key.strip()
                if key not in known:
                    raise ValueError(f"{path}:{lineno}: unknown cost constant {key!r}")
                values[key] = Fraction(text.strip())
        return cls(**values)


def clog2(n: int) -> int:
    """Ceiling log2 for n >= 1."""
    return (n - 1).bit_length()


def csd_profile(c: int) -> tuple[int, int]:
    """(nonzero digits, negative digits) of the canonical signed digit
    recoding of c >= 0."""
    count = neg = 0
    while c:
        if c & 1:
            count += 1
            digit = 2 - (c & 3)  # +1 when c%4==1, -1 when c%4==3
            neg += digit < 0
            c -= digit
        c >>= 1
    return count, neg


def csd_digits(c: int) -> int:
    return csd_profile(c)[0]


@dataclass(frozen=True)
class NodeCostQuery:
    """One operator instance: widths plus per-operand constant values (None
    when the operand is not known constant)."""

    op: OpKind
    in_widths: tuple[int, ...]
    out_width: int
    const_values: tuple[int | None, ...] = ()

    def __post_init__(self):
        if not self.const_values:
            object.__setattr__(self, "const_values", (None,) * len(self.in_widths))

    @property
    def const_flags(self) -> tuple[bool, ...]:
        return tuple(v is not None for v in self.const_values)


def _pa(w: int, cfg: CostConfig) -> Fraction:
    return w * (cfg.pa_base + cfg.pa_log * clog2(max(w, 2)))


def _fa_row(w: int, cfg: CostConfig) -> Fraction:
    return cfg.fa_row_gate * w


def _booth(p: int, q: int, out: int, cfg: CostConfig) -> Fraction:
    w = min(out, p + q)
    rows = (min(p, q) + 1) // 2 + 1
    return cfg.booth_pp * w * rows + _fa_row(w, cfg) * max(rows - 2, 0) + _pa(w, cfg)


def _const_mul(value: int, p: int, q: int, out: int, cfg: CostConfig) -> Fraction:
    d, neg = csd_profile(value)
    if d <= 1:
        return Fraction(0)
    w = min(out, p + q)
    c = _fa_row(w, cfg) * (d - 2 if d > 2 else 0) + _pa(w, cfg)
    if neg:
        c += cfg.not_gate * w  # negative digits subtract: one inverter row
    return c


def op_cost(q: NodeCostQuery, cfg: CostConfig) -> Fraction:
    op, out = q.op, q.out_width
    ins = q.in_widths
    consts = q.const_values
    if op in (OpKind.VAR, OpKind.CONST, OpKind.CONCAT):
        return Fraction(0)
    if op in (OpKind.ADD, OpKind.SUB):
        w = min(out, max(ins) + 1)
        c = _pa(w, cfg)
        if op is OpKind.SUB:
            c += cfg.not_gate * w
        if any(v is not None for v in consts):
            c *= cfg.const_discount
        return c
    if op is OpKind.NEG:
        # invert-and-increment row, half a compressor row per bit
        return Fraction(1, 2) * cfg.fa_row_gate * min(ins[0], out)
    if op is OpKind.MUL:
        for i, v in enumerate(consts):
            if v is not None:
                return _const_mul(v, ins[0], ins[1], out, cfg)
        return _booth(ins[0], ins[1], out, cfg)
    if op in (OpKind.LSHIFT, OpKind.RSHIFT):
        if consts[1] is not None:
            return Fraction(0)  # shift by constant is wiring
        return cfg.mux_gate * out * ins[1]
    if op is OpKind.MUX:
        return cfg.mux_gate * out
    if op is OpKind.NOT:
        return cfg.not_gate * min(ins[0], out)
    if op in (OpKind.LT, OpKind.GT):
        c = _pa(max(ins), cfg)
        if any(v is not None for v in consts):
            c *= cfg.const_discount
        return c
    if op is OpKind.SUM:
        n = len(ins)
        w = min(out, max(ins) + clog2(n))
        return _fa_row(w, cfg) * (n - 2) + _pa(w, cfg)
    if op is OpKind.FMA:
        p, q2 = ins[0], ins[1]
        w = min(out, p + q2)
        cv = consts[0] if consts[0] is not None else consts[1]
        if cv is not None:
            # d digit rows plus the addend row reduce through d-1 compressor
            # rows; the final carry-propagate adder spans the addend too
            d, neg = csd_profile(cv)
            w_pa = min(out, max(p + q2, ins[2]) + 1)
            c = _fa_row(w, cfg) * max(d - 1, 0) + _pa(w_pa, cfg)
            if neg:
                c += cfg.not_gate * w
            return c
        return _booth(p, q2, out, cfg) + _fa_row(w, cfg)
    if op is OpKind.MUXAR:
        r, qw = ins[0], ins[1]
        w = min(out, qw + clog2(max(r, 2)))
        return cfg.mux_gate * qw * r + _fa_row(w, cfg) * max(r - 2, 0) + _pa(w, cfg)
    raise ValueError(f"no cost rule for {op}")


def dag_cost(entries: Iterable[tuple[Hashable, NodeCostQuery]], cfg: CostConfig) -> Fraction:
    """Sum of op costs over distinct keys; sharing is free by construction."""
    seen = {}
    for key, query in entries:
        seen.setdefault(key, query)
    return sum((op_cost(qq, cfg) for qq in seen.values()), Fraction(0))


def expr_query(e: Expr) -> NodeCostQuery:
    consts = tuple(c.payload if c.op is OpKind.CONST else None for c in e.children)
    return NodeCostQuery(e.op, tuple(c.width for c in e.children), e.width, consts)


def design_cost(d: Design, cfg: CostConfig) -> Fraction:
    return dag_cost(((e, expr_query(e)) for e in d.nodes()), cfg)
