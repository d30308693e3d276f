import pytest
from hypothesis import given, settings, strategies as st

from dpopt import ir
from dpopt.ir import OpKind, const, eval_design, eval_expr, make_design, node, var


def test_add_wraps_modulo_width():
    e = node(OpKind.ADD, 2, (var("a", 2), var("b", 2)))
    assert eval_expr(e, {"a": 3, "b": 3}) == 2


def test_rshift_by_constant():
    e = node(OpKind.RSHIFT, 8, (var("a", 8), const(3, 2)))
    assert eval_expr(e, {"a": 0xB0}) == 0x16


def test_muxar_definitional_expansion():
    # select 0b101 picks a at bits 0 and 2, c at bit 1
    e = node(OpKind.MUXAR, 6, (var("b", 3), var("a", 2), var("c", 2)))
    assert eval_expr(e, {"b": 0b101, "a": 3, "c": 1}) == 17


def test_muxar_matches_mul_form_exhaustively():
    # MUXAR(b,a,c) == a*b + c*~b whenever nothing truncates
    for r in (1, 2, 3, 4):
        for q in (1, 2, 3, 4):
            t = q + r + 1
            m = node(OpKind.MUXAR, t, (var("b", r), var("a", q), var("c", q)))
            prod = node(OpKind.ADD, t, (
                node(OpKind.MUL, t, (var("a", q), var("b", r))),
                node(OpKind.MUL, t, (var("c", q), node(OpKind.NOT, r, (var("b", r),))))))
            for b in range(1 << r):
                for a in range(1 << q):
                    for c in range(1 << q):
                        env = {"b": b, "a": a, "c": c}
                        assert eval_expr(m, env) == eval_expr(prod, env)


def test_neg_is_twos_complement():
    e = node(OpKind.NEG, 4, (var("a", 4),))
    assert eval_expr(e, {"a": 5}) == 11


def test_not_complements_within_input_width():
    inner = var("a", 3)
    widened = node(OpKind.NOT, 6, (inner,))
    assert eval_expr(widened, {"a": 0b101}) == 0b010


def test_concat_puts_first_operand_high():
    e = node(OpKind.CONCAT, 6, (var("a", 2), var("b", 4)))
    assert eval_expr(e, {"a": 0b10, "b": 0b0110}) == 0b100110


def test_mux_requires_one_bit_select():
    with pytest.raises(ir.IrError):
        node(OpKind.MUX, 4, (var("s", 2), var("a", 4), var("b", 4)))


def test_width_bounds_enforced():
    with pytest.raises(ir.IrError):
        var("x", 0)
    with pytest.raises(ir.IrError):
        var("x", 65)
    with pytest.raises(ir.IrError):
        const(4, 2)


def test_interning_shares_structurally_identical_nodes():
    a = node(OpKind.ADD, 9, (var("x", 8), var("x", 8)))
    b = node(OpKind.ADD, 9, (var("x", 8), var("x", 8)))
    assert a is b


def test_eval_design_fig1_identity():
    d = make_design(
        [("x", 8)],
        [("y", node(OpKind.RSHIFT, 8,
                    (node(OpKind.MUL, 9, (const(2, 2), var("x", 8))), const(1, 1))))])
    assert eval_design(d, {"x": 5}) == {"y": 5}


def test_eval_design_empty_outputs():
    d = make_design([("x", 4)], [])
    assert eval_design(d, {"x": 3}) == {}


def test_eval_design_rejects_out_of_range_values():
    d = make_design([("x", 8)], [("y", var("x", 8))])
    with pytest.raises(ir.IrError):
        eval_design(d, {"x": 300})
    with pytest.raises(ir.IrError):
        eval_design(d, {"x": 1, "zz": 0})


def test_design_rejects_undeclared_and_mismatched_vars():
    with pytest.raises(ir.IrError):
        make_design([("x", 8)], [("y", var("z", 8))])
    with pytest.raises(ir.IrError):
        make_design([("x", 8)], [("y", var("x", 4))])


_LEAF = st.one_of(
    # one name per width so environments can respect declared widths
    st.builds(lambda l, w: var(f"{l}{w}", w), st.sampled_from(["a", "b"]),
              st.integers(1, 6)),
    st.builds(lambda w, v: const(v % (1 << w), w), st.integers(1, 6), st.integers(0, 63)),
)


def _exprs(depth: int):
    if depth == 0:
        return _LEAF
    sub = _exprs(depth - 1)
    binop = st.sampled_from([OpKind.ADD, OpKind.SUB, OpKind.MUL, OpKind.LSHIFT,
                             OpKind.RSHIFT, OpKind.LT, OpKind.GT, OpKind.CONCAT])
    return st.one_of(
        _LEAF,
        st.builds(lambda op, w, x, y: node(op, w, (x, y)),
                  binop, st.integers(1, 10), sub, sub),
        st.builds(lambda w, x: node(OpKind.NOT, w, (x,)), st.integers(1, 10), sub),
        st.builds(lambda w, x: node(OpKind.NEG, w, (x,)), st.integers(1, 10), sub),
    )


@settings(max_examples=300, deadline=None)
@given(e=_exprs(3), bits=st.integers(0, 2 ** 12 - 1))
def test_eval_stays_below_width_and_truncation_is_monotone(e, bits):
    names = sorted({n.payload for n in _walk(e) if n.op is OpKind.VAR})
    widths = {n.payload: n.width for n in _walk(e) if n.op is OpKind.VAR}
    env = {}
    for i, name in enumerate(names):
        env[name] = (bits >> (6 * i)) & ((1 << widths[name]) - 1)
    v = eval_expr(e, env)
    assert v < (1 << e.width)
    if e.op not in (OpKind.VAR, OpKind.CONST) and e.width < 64:
        wider = node(e.op, e.width + 1, e.children, e.payload)
        assert eval_expr(wider, env) & ((1 << e.width) - 1) == v


def _walk(e):
    seen = []

    def go(x):
        seen.append(x)
        for c in x.children:
            go(c)

    go(e)
    return seen


def test_var_widths_must_agree_within_design():
    # the same name at two widths cannot validate
    bad = node(OpKind.ADD, 9, (var("x", 8), var("x", 4)))
    with pytest.raises(ir.IrError):
        make_design([("x", 8)], [("y", bad)])
