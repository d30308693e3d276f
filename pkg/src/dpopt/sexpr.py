"""S-expression text format for designs.

Grammar (prefix, one form per operator):

    design   := (design (inputs (NAME WIDTH)...) [(lets (NAME expr)...)] (outputs (NAME expr)...))
    expr     := (var NAME WIDTH) | (const VALUE WIDTH) | (OP WIDTH expr...) | NAME
    OP       := << >> + - * mux ~ concat < > sum muxar fma

A bare NAME in expression position refers to a let binding. `-` is binary
subtraction with two operands and negation with one. `concat` accepts more
than two parts and parses as right-nested binary concatenations. Lines may
carry `#` comments.
"""

from __future__ import annotations

from .ir import ARITY, Design, Expr, OpKind, IrError, const, make_design, node, var

_OP_TOKENS = {
    "<<": OpKind.LSHIFT,
    ">>": OpKind.RSHIFT,
    "+": OpKind.ADD,
    "-": OpKind.SUB,  # unary form maps to NEG
    "*": OpKind.MUL,
    "mux": OpKind.MUX,
    "~": OpKind.NOT,
    "concat": OpKind.CONCAT,
    "<": OpKind.LT,
    ">": OpKind.GT,
    "sum": OpKind.SUM,
    "muxar": OpKind.MUXAR,
    "fma": OpKind.FMA,
}
_TOKEN_OF_OP = {v: k for k, v in _OP_TOKENS.items()}
_TOKEN_OF_OP[OpKind.NEG] = "-"


class DesignParseError(ValueError):
    def __init__(self, message: str, line: int, col: int):
        super().__init__(f"{message} (line {line}, column {col})")
        self.line = line
        self.col = col


class _Tok:
    __slots__ = ("text", "line", "col")

    def __init__(self, text, line, col):
        self.text = text
        self.line = line
        self.col = col


def _tokenize(text: str) -> list[_Tok]:
    toks = []
    line, col = 1, 1
    i = 0
    while i < len(text):
        ch = text[i]
        if ch == "\n":
            line += 1
            col = 1
            i += 1
        elif ch in " \t\r":
            col += 1
            i += 1
        elif ch == "#":
            while i < len(text) and text[i] != "\n":
                i += 1
        elif ch in "()":
            toks.append(_Tok(ch, line, col))
            col += 1
            i += 1
        else:
            start = i
            start_col = col
            while i < len(text) and text[i] not in " \t\r\n()#":
                i += 1
                col += 1
            toks.append(_Tok(text[start:i], line, start_col))
    return toks


class _Reader:
    def __init__(self, toks: list[_Tok]):
        self.toks = toks
        self.pos = 0

    def peek(self) -> _Tok | None:
        return self.toks[self.pos] if self.pos < len(self.toks) else None

    def next(self) -> _Tok:
        t = self.peek()
        if t is None:
            last = self.toks[-1] if self.toks else _Tok("", 1, 1)
            raise DesignParseError("unexpected end of input", last.line, last.col)
        self.pos += 1
        return t

    def expect(self, text: str) -> _Tok:
        t = self.next()
        if t.text != text:
            raise DesignParseError(f"expected {text!r}, found {t.text!r}", t.line, t.col)
        return t

    def read_form(self):
        """A form is either an atom token or a list of forms."""
        t = self.next()
        if t.text == "(":
            items = []
            while True:
                nxt = self.peek()
                if nxt is None:
                    raise DesignParseError("unclosed '('", t.line, t.col)
                if nxt.text == ")":
                    self.next()
                    return (items, t)
                items.append(self.read_form())
        if t.text == ")":
            raise DesignParseError("unbalanced ')'", t.line, t.col)
        return t


def _as_int(tok: _Tok, what: str) -> int:
    try:
        return int(tok.text)
    except ValueError:
        raise DesignParseError(f"expected {what}, found {tok.text!r}", tok.line, tok.col) from None


def _width_of(tok: _Tok) -> int:
    w = _as_int(tok, "a width")
    if not (1 <= w <= 64):
        raise DesignParseError(f"width {w} out of range 1..64", tok.line, tok.col)
    return w


def _head(form, what: str) -> _Tok:
    if not isinstance(form, tuple) or not form[0]:
        tok = form if isinstance(form, _Tok) else _Tok("?", 1, 1)
        raise DesignParseError(f"expected {what}", tok.line, tok.col)
    items, opener = form
    if not items or not isinstance(items[0], _Tok):
        raise DesignParseError(f"expected {what}", opener.line, opener.col)
    return items[0]


def _parse_expr(form, inputs: dict[str, int], lets: dict[str, Expr]) -> Expr:
    if isinstance(form, _Tok):
        if form.text in lets:
            return lets[form.text]
        raise DesignParseError(f"unknown binding {form.text!r}", form.line, form.col)
    items, opener = form
    head = _head(form, "an operator")
    rest = items[1:]
    if head.text == "var":
        if len(rest) != 2 or not isinstance(rest[0], _Tok) or not isinstance(rest[1], _Tok):
            raise DesignParseError("var takes a name and a width", head.line, head.col)
        name = rest[0].text
        width = _width_of(rest[1])
        if name not in inputs:
            raise DesignParseError(f"undeclared variable {name!r}", rest[0].line, rest[0].col)
        if inputs[name] != width:
            raise DesignParseError(
                f"variable {name!r} declared {inputs[name]} bits, used at {width}",
                rest[1].line, rest[1].col)
        return var(name, width)
    if head.text == "const":
        if len(rest) != 2 or not isinstance(rest[0], _Tok) or not isinstance(rest[1], _Tok):
            raise DesignParseError("const takes a value and a width", head.line, head.col)
        value = _as_int(rest[0], "a value")
        width = _width_of(rest[1])
        if value < 0 or value >= (1 << width):
            raise DesignParseError(f"constant {value} does not fit in {width} bits",
                                   rest[0].line, rest[0].col)
        return const(value, width)
    op = _OP_TOKENS.get(head.text)
    if op is None:
        raise DesignParseError(f"unknown operator {head.text!r}", head.line, head.col)
    if not rest or not isinstance(rest[0], _Tok):
        raise DesignParseError(f"{head.text} needs a width", head.line, head.col)
    width = _width_of(rest[0])
    kids = [_parse_expr(f, inputs, lets) for f in rest[1:]]
    if head.text == "-" and len(kids) == 1:
        op = OpKind.NEG
    if head.text == "concat" and len(kids) > 2:
        # n-ary source concatenation nests to the right; intermediate widths
        # are the sums of the remaining part widths (capped at 64 upstream).
        acc = kids[-1]
        for part in reversed(kids[1:-1]):
            acc = node(OpKind.CONCAT, min(part.width + acc.width, 64), (part, acc))
        kids = [kids[0], acc]
    arity = ARITY[op]
    if arity is None:
        if len(kids) < 3:
            raise DesignParseError("sum needs at least 3 operands", head.line, head.col)
    elif len(kids) != arity:
        raise DesignParseError(
            f"{head.text} expects {arity} operand(s), got {len(kids)}", head.line, head.col)
    try:
        return node(op, width, tuple(kids))
    except IrError as exc:
        raise DesignParseError(str(exc), head.line, head.col) from None


def parse_design(text: str) -> Design:
    """Parse the canonical design grammar; raises DesignParseError with location."""
    reader = _Reader(_tokenize(text))
    top = reader.read_form()
    if isinstance(top, _Tok):
        raise DesignParseError("expected (design ...)", top.line, top.col)
    head = _head(top, "(design ...)")
    if head.text != "design":
        raise DesignParseError("expected (design ...)", head.line, head.col)
    if reader.peek() is not None:
        t = reader.peek()
        raise DesignParseError("trailing input after design", t.line, t.col)
    sections = top[0][1:]
    inputs: dict[str, int] = {}
    lets: dict[str, Expr] = {}
    outputs: list[tuple[str, Expr]] = []
    seen = []
    for section in sections:
        shead = _head(section, "a design section")
        seen.append(shead.text)
        items = section[0][1:]
        if shead.text == "inputs":
            for form in items:
                nhead = _head(form, "(name width)")
                pair = form[0]
                if len(pair) != 2 or not isinstance(pair[1], _Tok):
                    raise DesignParseError("input entries are (name width)", nhead.line, nhead.col)
                name = nhead.text
                if name in inputs:
                    raise DesignParseError(f"duplicate input {name!r}", nhead.line, nhead.col)
                inputs[name] = _width_of(pair[1])
        elif shead.text == "lets":
            for form in items:
                nhead = _head(form, "(name expr)")
                pair = form[0]
                if len(pair) != 2:
                    raise DesignParseError("let entries are (name expr)", nhead.line, nhead.col)
                name = nhead.text
                if name in lets or name in inputs:
                    raise DesignParseError(f"binding {name!r} already defined", nhead.line, nhead.col)
                lets[name] = _parse_expr(pair[1], inputs, lets)
        elif shead.text == "outputs":
            for form in items:
                nhead = _head(form, "(name expr)")
                pair = form[0]
                if len(pair) != 2:
                    raise DesignParseError("output entries are (name expr)", nhead.line, nhead.col)
                outputs.append((nhead.text, _parse_expr(pair[1], inputs, lets)))
        else:
            raise DesignParseError(f"unknown section {shead.text!r}", shead.line, shead.col)
    if "inputs" not in seen or "outputs" not in seen:
        raise DesignParseError("design needs (inputs ...) and (outputs ...)", 1, 1)
    if len(set(n for n, _ in outputs)) != len(outputs):
        raise DesignParseError("duplicate output names", 1, 1)
    return make_design(list(inputs.items()), outputs)


def _expr_text(e: Expr, names: dict[Expr, str], at_binding: Expr | None = None) -> str:
    if e in names and e is not at_binding:
        return names[e]
    if e.op is OpKind.VAR:
        return f"(var {e.payload} {e.width})"
    if e.op is OpKind.CONST:
        return f"(const {e.payload} {e.width})"
    kids = " ".join(_expr_text(c, names) for c in e.children)
    return f"({_TOKEN_OF_OP[e.op]} {e.width} {kids})"


def print_design(d: Design) -> str:
    """Canonical single-line text; shared interior nodes become let bindings."""
    refs: dict[Expr, int] = {}
    order: list[Expr] = []

    def walk(e: Expr) -> None:
        refs[e] = refs.get(e, 0) + 1
        if refs[e] > 1:
            return
        for c in e.children:
            walk(c)
        order.append(e)

    for _, root in d.outputs:
        walk(root)
    shared = [e for e in order
              if refs[e] > 1 and e.op not in (OpKind.VAR, OpKind.CONST)]
    taken = {name for name, _ in d.inputs}
    names: dict[Expr, str] = {}
    i = 0
    for e in shared:
        while f"t{i}" in taken:
            i += 1
        names[e] = f"t{i}"
        taken.add(f"t{i}")
        i += 1
    parts = ["(design (inputs "
             + " ".join(f"({n} {w})" for n, w in d.inputs) + ")"]
    if shared:
        lets = " ".join(f"({names[e]} {_expr_text(e, names, at_binding=e)})" for e in shared)
        parts.append(f" (lets {lets})")
    outs = " ".join(f"({n} {_expr_text(e, names)})" for n, e in d.outputs)
    parts.append(f" (outputs {outs}))")
    return "".join(parts)
