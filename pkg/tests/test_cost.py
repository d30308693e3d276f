from fractions import Fraction

import pytest

from dpopt.cost import (CostConfig, NodeCostQuery, clog2, csd_digits, csd_profile,
                        dag_cost, design_cost, op_cost)
from dpopt.ir import OpKind, const, make_design, node, var

CFG = CostConfig()


def q(op, ins, out, consts=()):
    return NodeCostQuery(op, tuple(ins), out, tuple(consts) or (None,) * len(ins))


def test_csd_profiles():
    assert csd_profile(0) == (0, 0)
    assert csd_profile(1) == (1, 0)
    assert csd_profile(2) == (1, 0)
    assert csd_profile(7) == (2, 1)     # 8 - 1
    assert csd_profile(21) == (3, 0)    # 16 + 4 + 1
    assert csd_digits(5) == 2
    assert csd_profile(3) == (2, 1)     # 4 - 1


def test_add_8_bit_worked_example():
    assert op_cost(q(OpKind.ADD, (8, 8), 8), CFG) == 48


def test_const_mul_seven_worked_example():
    # CSD(7) = 8 - 1: a prefix adder at width 11 plus the negative-digit
    # inverter row
    c = op_cost(q(OpKind.MUL, (3, 8), 11, (7, None)), CFG)
    assert c == 77 + Fraction(11, 2)


def test_const_shift_is_wiring():
    assert op_cost(q(OpKind.LSHIFT, (8, 2), 10, (None, 2)), CFG) == 0
    assert op_cost(q(OpKind.RSHIFT, (8, 2), 8, (None, 3)), CFG) == 0


def test_sum_beats_chained_adds_at_worked_widths():
    s = op_cost(q(OpKind.SUM, (8, 8, 8), 10), CFG)
    assert s == 110
    first = op_cost(q(OpKind.ADD, (8, 8), 9), CFG)
    second = op_cost(q(OpKind.ADD, (9, 8), 10), CFG)
    assert first + second == 133
    assert s < first + second


def test_merging_pays_for_sum_above_width_four():
    for p in range(4, 64 - 2):
        merged = op_cost(q(OpKind.SUM, (p, p, p), p + 2), CFG)
        chained = (op_cost(q(OpKind.ADD, (p, p), p + 1), CFG)
                   + op_cost(q(OpKind.ADD, (p + 1, p), p + 2), CFG))
        assert merged < chained, p


def test_fma_beats_mul_plus_add():
    for p in range(2, 30):
        t = 2 * p + 1
        fma = op_cost(q(OpKind.FMA, (p, p, 2 * p), t), CFG)
        split = (op_cost(q(OpKind.MUL, (p, p), 2 * p), CFG)
                 + op_cost(q(OpKind.ADD, (2 * p, 2 * p), t), CFG))
        assert fma < split, p


def test_muxar_beats_two_muls_plus_add():
    for r in range(2, 16):
        for qw in range(2, 16):
            s = r + qw
            merged = op_cost(q(OpKind.MUXAR, (r, qw, qw), s + 1), CFG)
            split = (2 * op_cost(q(OpKind.MUL, (qw, r), s), CFG)
                     + op_cost(q(OpKind.ADD, (s, s), s + 1), CFG)
                     + op_cost(q(OpKind.NOT, (r,), r), CFG))
            assert merged < split, (r, qw)


def test_constant_discount():
    for op in (OpKind.ADD, OpKind.SUB, OpKind.LT, OpKind.GT):
        for w in range(2, 10):
            plain = op_cost(q(op, (w, w), w + 1), CFG)
            disc = op_cost(q(op, (w, w), w + 1, (None, 3)), CFG)
            assert disc < plain, (op, w)
    for w in range(2, 10):
        plain = op_cost(q(OpKind.MUL, (w, w), 2 * w), CFG)
        disc = op_cost(q(OpKind.MUL, (w, w), 2 * w, (None, 3)), CFG)
        assert disc < plain, w


def test_zero_cost_set_is_exact():
    zero = [
        q(OpKind.VAR, (), 8),
        q(OpKind.CONST, (), 8),
        q(OpKind.CONCAT, (4, 4), 8),
        q(OpKind.LSHIFT, (8, 2), 10, (None, 1)),
        q(OpKind.RSHIFT, (8, 2), 8, (None, 1)),
        q(OpKind.MUL, (2, 8), 10, (2, None)),  # one CSD digit
        q(OpKind.MUL, (1, 8), 8, (1, None)),
        q(OpKind.MUL, (1, 8), 8, (0, None)),
    ]
    for query in zero:
        assert op_cost(query, CFG) == 0, query
    nonzero = [
        q(OpKind.ADD, (4, 4), 5),
        q(OpKind.ADD, (4, 4), 5, (None, 0)),
        q(OpKind.SUB, (4, 4), 5),
        q(OpKind.NEG, (4,), 4),
        q(OpKind.NOT, (4,), 4),
        q(OpKind.MUX, (1, 4, 4), 4),
        q(OpKind.LSHIFT, (8, 2), 10),
        q(OpKind.MUL, (4, 4), 8),
        q(OpKind.MUL, (3, 8), 11, (5, None)),
        q(OpKind.LT, (4, 4), 1),
        q(OpKind.GT, (4, 4), 1),
        q(OpKind.SUM, (4, 4, 4), 6),
        q(OpKind.FMA, (4, 4, 4), 9),
        q(OpKind.FMA, (1, 8, 8), 9, (1, None, None)),
        q(OpKind.MUXAR, (2, 4, 4), 7),
    ]
    for query in nonzero:
        assert op_cost(query, CFG) > 0, query


def test_monotone_in_output_width():
    shapes = [
        (OpKind.ADD, (8, 8), ()),
        (OpKind.SUB, (8, 8), ()),
        (OpKind.MUL, (8, 8), ()),
        (OpKind.MUL, (3, 8), (5, None)),
        (OpKind.SUM, (8, 8, 8), ()),
        (OpKind.FMA, (4, 4, 8), ()),
        (OpKind.MUXAR, (3, 4, 4), ()),
        (OpKind.MUX, (1, 8, 8), ()),
        (OpKind.NEG, (8,), ()),
        (OpKind.NOT, (8,), ()),
        (OpKind.LSHIFT, (8, 3), ()),
    ]
    for op, ins, consts in shapes:
        prev = Fraction(-1)
        for out in range(1, 64):
            c = op_cost(q(op, ins, out, consts), CFG)
            assert c >= prev, (op, out)
            prev = c


def test_dag_cost_counts_shared_nodes_once():
    entries = [("k1", q(OpKind.ADD, (8, 8), 9)), ("k1", q(OpKind.ADD, (8, 8), 9)),
               ("k2", q(OpKind.NOT, (4,), 4))]
    assert dag_cost(entries, CFG) == op_cost(q(OpKind.ADD, (8, 8), 9), CFG) + 2
    assert dag_cost([], CFG) == 0


def test_fig3_adder_tree_beats_three_const_mults():
    x = var("x", 8)
    x3 = node(OpKind.ADD, 10, (node(OpKind.LSHIFT, 9, (x, const(1, 1))), x))
    x7 = node(OpKind.SUB, 11, (node(OpKind.LSHIFT, 11, (x, const(3, 2))), x))
    x21 = node(OpKind.ADD, 13, (node(OpKind.LSHIFT, 12, (x7, const(1, 1))), x7))
    tree = make_design([("x", 8)], [("y3", x3), ("y7", x7), ("y21", x21)])
    mults = make_design([("x", 8)], [
        (f"y{c}", node(OpKind.MUL, 8 + c.bit_length(), (const(c, c.bit_length()), x)))
        for c in (3, 7, 21)])
    assert design_cost(tree, CFG) < design_cost(mults, CFG)


def test_uniform_scaling_preserves_order():
    queries = [
        q(OpKind.ADD, (8, 8), 9), q(OpKind.MUL, (8, 8), 16),
        q(OpKind.SUM, (8, 8, 8), 10), q(OpKind.FMA, (4, 4, 8), 9),
        q(OpKind.MUXAR, (3, 4, 4), 7), q(OpKind.MUL, (3, 8), 11, (7, None)),
        q(OpKind.SUB, (8, 8), 9), q(OpKind.MUX, (1, 8, 8), 8),
        q(OpKind.NEG, (8,), 8), q(OpKind.NOT, (8,), 8),
        q(OpKind.LSHIFT, (8, 3), 8), q(OpKind.LT, (8, 8), 1),
    ]
    base = [op_cost(x, CFG) for x in queries]
    scaled = [op_cost(x, CFG.scaled(Fraction(7, 3))) for x in queries]
    for i in range(len(queries)):
        assert scaled[i] == base[i] * Fraction(7, 3)


def test_config_file_roundtrip(tmp_path):
    path = tmp_path / "cost.cfg"
    path.write_text("# tweak\nfa_row_gate = 5\nbooth_pp = 1.25\n")
    cfg = CostConfig.from_file(path)
    assert cfg.fa_row_gate == 5
    assert cfg.booth_pp == Fraction(5, 4)
    assert cfg.mux_gate == 3  # untouched default
    with pytest.raises(ValueError):
        CostConfig.from_file(_write(tmp_path, "bogus = 1\n"))
    with pytest.raises(ValueError):
        CostConfig.from_file(_write(tmp_path, "mux_gate 3\n"))


def _write(tmp_path, text):
    p = tmp_path / "bad.cfg"
    p.write_text(text)
    return p


def test_clog2():
    assert [clog2(n) for n in (1, 2, 3, 4, 5, 8, 9)] == [0, 1, 2, 2, 3, 3, 4]
