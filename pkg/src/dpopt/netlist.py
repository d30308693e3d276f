"""Flat netlist emission: one declaration per input, one operation per line.

Wires are named w0, w1, ... in topological order and carry their width as a
bit range (`w0[8:0]` is 9 bits). Constants are 0-ary operations and get their
own lines so every named operand has a declared width. SUM prints as a
chained `+`; FMA prints as `a * b + c`; MUXAR prints via its definitional
expansion, which is the only place bit selects of the select operand appear.
"""

from __future__ import annotations

from .ir import Design, Expr, OpKind

_BINOPS = {
    OpKind.ADD: "+",
    OpKind.SUB: "-",
    OpKind.MUL: "*",
    OpKind.LSHIFT: "<<",
    OpKind.RSHIFT: ">>",
    OpKind.LT: "<",
    OpKind.GT: ">",
}


def emit_netlist(d: Design) -> str:
    lines = [f"input {name}[{width - 1}:0]" for name, width in d.inputs]
    wire_of: dict[Expr, str] = {}
    counter = 0

    def fresh(width: int) -> str:
        nonlocal counter
        name = f"w{counter}"
        counter += 1
        return f"{name}[{width - 1}:0]", name

    def operand(e: Expr) -> str:
        if e.op is OpKind.VAR:
            return e.payload
        return wire_of[e]

    def emit(e: Expr) -> None:
        if e in wire_of or e.op is OpKind.VAR:
            return
        for c in e.children:
            emit(c)
        if e.op is OpKind.CONST:
            decl, name = fresh(e.width)
            lines.append(f"{decl} = {e.payload}")
            wire_of[e] = name
            return
        if e.op is OpKind.MUXAR:
            sel, a, c = e.children
            parts = []
            for i in range(sel.width):
                decl, name = fresh(a.width)
                lines.append(f"{decl} = {operand(sel)}[{i}] ? {operand(a)} : {operand(c)}")
                parts.append(f"({name} << {i})")
            decl, name = fresh(e.width)
            lines.append(f"{decl} = " + " + ".join(parts))
            wire_of[e] = name
            return
        decl, name = fresh(e.width)
        ops = [operand(c) for c in e.children]
        if e.op in _BINOPS:
            rhs = f"{ops[0]} {_BINOPS[e.op]} {ops[1]}"
        elif e.op is OpKind.NEG:
            rhs = f"-{ops[0]}"
        elif e.op is OpKind.NOT:
            rhs = f"~{ops[0]}"
        elif e.op is OpKind.MUX:
            rhs = f"{ops[0]} ? {ops[1]} : {ops[2]}"
        elif e.op is OpKind.CONCAT:
            rhs = f"{{{ops[0]}, {ops[1]}}}"
        elif e.op is OpKind.SUM:
            rhs = " + ".join(ops)
        elif e.op is OpKind.FMA:
            rhs = f"{ops[0]} * {ops[1]} + {ops[2]}"
        else:
            raise AssertionError(f"unhandled op {e.op}")
        lines.append(f"{decl} = {rhs}")
        wire_of[e] = name

    for _, root in d.outputs:
        emit(root)
    for name, root in d.outputs:
        lines.append(f"{name} = {operand(root)}")
    return "\n".join(lines) + "\n"
