import random

import numpy as np
import pytest

from dpopt import rules as rules_mod
from dpopt.ir import OpKind, const, eval_design, make_design, node, var
from dpopt.rules import RewriteRule
from dpopt.verify import (VerifyError, check_rule_soundness, equiv_exhaustive,
                          equiv_sampled, eval_design_vec)


def _design(out, *inputs):
    return make_design(list(inputs), [("y", out)])


def test_sum_same_instance_is_equivalent():
    x = ("x", 2)
    lhs = _design(node(OpKind.ADD, 3, (var("x", 2), var("x", 2))), x)
    rhs = _design(node(OpKind.MUL, 3, (const(2, 2), var("x", 2))), x)
    verdict = equiv_exhaustive(lhs, rhs)
    assert verdict.status == "equivalent"
    assert verdict.cases_checked == 4
    assert verdict.mode == "exhaustive"


def test_sub_is_not_commutative():
    ins = [("a", 2), ("b", 2)]
    lhs = make_design(ins, [("y", node(OpKind.SUB, 2, (var("a", 2), var("b", 2))))])
    rhs = make_design(ins, [("y", node(OpKind.SUB, 2, (var("b", 2), var("a", 2))))])
    verdict = equiv_exhaustive(lhs, rhs)
    assert verdict.status == "counterexample"
    env = verdict.counterexample
    assert eval_design(lhs, env) != eval_design(rhs, env)


def test_equiv_is_symmetric_and_reflexive():
    x = ("x", 4)
    d = _design(node(OpKind.NOT, 4, (var("x", 4),)), x)
    e = _design(node(OpKind.ADD, 4, (var("x", 4), const(1, 1))), x)
    assert equiv_exhaustive(d, d).status == "equivalent"
    assert (equiv_exhaustive(d, e).status == "counterexample"
            and equiv_exhaustive(e, d).status == "counterexample")


def test_signature_mismatch_raises():
    a = _design(var("x", 4), ("x", 4))
    b = _design(var("x", 5), ("x", 5))
    with pytest.raises(VerifyError):
        equiv_exhaustive(a, b)


def test_bit_budget_enforced():
    ins = [(f"x{i}", 8) for i in range(3)]
    d = make_design(ins, [("y", var("x0", 8))])
    with pytest.raises(VerifyError):
        equiv_exhaustive(d, d)


def test_sampled_mode_reports_sampled():
    ins = [("a", 32), ("b", 32)]
    d = make_design(ins, [("y", node(OpKind.ADD, 33, (var("a", 32), var("b", 32))))])
    verdict = equiv_sampled(d, d, n=500, seed=1)
    assert verdict.status == "equivalent"
    assert verdict.mode == "sampled"
    assert verdict.cases_checked > 500  # corners included


def test_sampled_is_deterministic_per_seed():
    ins = [("a", 16)]
    d = make_design(ins, [("y", node(OpKind.NEG, 16, (var("a", 16),)))])
    v1 = equiv_sampled(d, d, n=100, seed=7)
    v2 = equiv_sampled(d, d, n=100, seed=7)
    assert v1.cases_checked == v2.cases_checked


def test_vectorized_matches_interpreter_on_random_designs():
    rng = random.Random(11)
    ops2 = [OpKind.ADD, OpKind.SUB, OpKind.MUL, OpKind.LSHIFT, OpKind.RSHIFT,
            OpKind.LT, OpKind.GT, OpKind.CONCAT]
    for _ in range(120):
        a = var("a", rng.randrange(1, 12))
        b = var("b", rng.randrange(1, 12))
        op = rng.choice(ops2)
        w = rng.randrange(1, 16)
        e = node(op, w, (a, b))
        if rng.random() < 0.5:
            e = node(rng.choice([OpKind.NOT, OpKind.NEG]), rng.randrange(1, 16), (e,))
        d = make_design([("a", a.width), ("b", b.width)], [("y", e)])
        envs = {"a": np.array([rng.randrange(1 << a.width) for _ in range(64)],
                              dtype=np.uint64),
                "b": np.array([rng.randrange(1 << b.width) for _ in range(64)],
                              dtype=np.uint64)}
        vec = eval_design_vec(d, envs)["y"]
        for i in range(64):
            scalar = eval_design(d, {"a": int(envs["a"][i]), "b": int(envs["b"][i])})
            assert int(vec[i]) == scalar["y"]


def test_vectorized_wide_ops():
    # 64-bit lanes must wrap exactly like the interpreter
    d = make_design([("a", 64), ("b", 64)],
                    [("m", node(OpKind.MUL, 64, (var("a", 64), var("b", 64)))),
                     ("s", node(OpKind.ADD, 64, (var("a", 64), var("b", 64))))])
    env = {"a": np.array([2 ** 63 + 12345], dtype=np.uint64),
           "b": np.array([2 ** 62 + 6789], dtype=np.uint64)}
    out = eval_design_vec(d, env)
    scalar = eval_design(d, {"a": 2 ** 63 + 12345, "b": 2 ** 62 + 6789})
    assert int(out["m"][0]) == scalar["m"]
    assert int(out["s"][0]) == scalar["s"]


# -- rule soundness harness -----------------------------------------------------


def test_mult_by_two_assignment_passes():
    rule = next(r for r in rules_mod.rule_table() if r.name == "mult-by-two")
    report = check_rule_soundness(rule, max_width=4, input_bit_budget=16)
    assert report.ok
    assert report.assignments_satisfied > 0


def test_add_zero_filters_condition_violations():
    rule = next(r for r in rules_mod.rule_table() if r.name == "add-zero")
    report = check_rule_soundness(rule, max_width=3, input_bit_budget=16)
    assert report.ok
    # not every (widths, constant) combination satisfies b % 2^p == 0
    assert report.assignments_satisfied < report.assignments_tried


def test_corrupted_distribute_rule_is_caught():
    base = next(r for r in rules_mod.rule_table() if r.name == "distribute-mult-over-add")
    corrupted = RewriteRule(
        name="distribute-no-condition", klass=base.klass, row=None,
        lhs=base.lhs, rhs=base.rhs, conjuncts=(), free_widths=base.free_widths)
    report = check_rule_soundness(corrupted, max_width=3, input_bit_budget=16)
    assert report.failures, "harness must detect the unsound variant"
    failure = report.failures[0]
    assert failure["lhs"] != failure["rhs"]


def test_known_distribute_counterexample():
    # q=1 truncates the sum; distributing past it changes the value
    widths = {"r": 2, "p": 2, "q": 1, "s": 2, "t": 2, "u": 4, "v": 4}
    a, b, c = var("a", 2), var("b", 2), var("c", 2)
    lhs = node(OpKind.MUL, 2, (a, node(OpKind.ADD, 1, (b, c))))
    rhs = node(OpKind.ADD, 2, (node(OpKind.MUL, 4, (a, b)),
                               node(OpKind.MUL, 4, (a, c))))
    env = {"a": 1, "b": 1, "c": 1}
    dl = make_design([("a", 2), ("b", 2), ("c", 2)], [("y", lhs)])
    dr = make_design([("a", 2), ("b", 2), ("c", 2)], [("y", rhs)])
    assert eval_design(dl, env) != eval_design(dr, env)
    assert equiv_exhaustive(dl, dr).status == "counterexample"


def test_counterexamples_really_distinguish():
    rule = next(r for r in rules_mod.rule_table() if r.name == "distribute-mult-over-add")
    corrupted = RewriteRule(
        name="distribute-no-condition", klass=rule.klass, row=None,
        lhs=rule.lhs, rhs=rule.rhs, conjuncts=(), free_widths=rule.free_widths)
    report = check_rule_soundness(corrupted, max_width=3, input_bit_budget=16)
    for failure in report.failures[:5]:
        assert failure["lhs"] != failure["rhs"]


def test_synthesis_minimality_recorded():
    # a rule whose synthesizer deliberately overshoots must be flagged
    base = next(r for r in rules_mod.rule_table() if r.name == "one-to-two-mult")
    sloppy = RewriteRule(
        name="one-to-two-overshoot", klass=base.klass, row=None,
        lhs=base.lhs, rhs=base.rhs, conjuncts=base.conjuncts,
        free_widths=(("q", lambda s: s.widths["p"] + 2),))
    report = check_rule_soundness(sloppy, max_width=4, input_bit_budget=16)
    assert report.minimality_failures
    assert not report.failures  # still sound, just not minimal
