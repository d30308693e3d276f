import pytest

from dpopt import benchmarks
from dpopt.ir import OpKind, eval_design, mask, validate_design
from dpopt.sexpr import parse_design, print_design


def test_registry_names():
    assert set(benchmarks.REGISTRY) == {
        "fig1", "shifted_fma", "mcm", "fir4", "fir8", "muxarray_kernel", "adpcm_recon"}


def test_unknown_name_errors():
    with pytest.raises(KeyError):
        benchmarks.benchmark("nope")


def test_all_benchmarks_validate_and_round_trip():
    for name in benchmarks.REGISTRY:
        d = benchmarks.benchmark(name)
        validate_design(d)
        assert parse_design(print_design(d)) == d


def test_fig1_semantics():
    d = benchmarks.benchmark("fig1")
    for x in (0, 1, 5, 127, 200, 255):
        assert eval_design(d, {"x": x})["y"] == (2 * x % 512) >> 1


def test_mcm_outputs():
    d = benchmarks.benchmark("mcm")
    assert [n for n, _ in d.outputs] == ["y3", "y7", "y21"]
    assert d.inputs == (("x", 8),)
    for x in (0, 1, 7, 255):
        out = eval_design(d, {"x": x})
        assert out["y3"] == 3 * x
        assert out["y7"] == 7 * x
        assert out["y21"] == 21 * x


def test_mcm_widths_fit_products():
    d = benchmarks.benchmark("mcm")
    for (name, root), c in zip(d.outputs, (3, 7, 21)):
        assert mask(root.width) >= c * 255


def test_shifted_fma_semantics():
    d = benchmarks.benchmark("shifted_fma")
    for env in ({"a": 3, "b": 5, "c": 100}, {"a": 15, "b": 15, "c": 255}):
        expected = ((((env["a"] * env["b"]) % 1024) * 4) % 512 + env["c"]) % 256
        assert eval_design(d, env)["y"] == expected


def test_muxarray_semantics():
    d = benchmarks.benchmark("muxarray_kernel")
    for env in ({"a": 5, "b": 9, "c": 3}, {"a": 15, "b": 0, "c": 15}):
        nb = env["b"] ^ 0xF
        assert eval_design(d, env)["y"] == (env["a"] * env["b"] + env["c"] * nb) % (1 << 9)


def test_adpcm_recon_is_nine_real_ops():
    d = benchmarks.benchmark("adpcm_recon")
    ops = [e.op for e in d.nodes()
           if e.op not in (OpKind.VAR, OpKind.CONST)]
    assert len(ops) == 9
    assert sorted(o.value for o in ops) == sorted(
        [">>"] * 3 + ["mux"] * 3 + ["+"] * 3)
    env = {"step": 1000, "b2": 1, "b1": 0, "b0": 1}
    expected = 1000 + (1000 >> 2) + (1000 >> 3)
    assert eval_design(d, env)["y"] == expected


def test_fir4_taps_and_accumulate():
    d = benchmarks.benchmark("fir4")
    # taps {2,3,5,7}: y = ((2+3+5+7)x >> sh) + acc, all mod widths
    for env in ({"x": 7, "sh": 0, "acc": 100}, {"x": 255, "sh": 1, "acc": 65535}):
        total = 17 * env["x"]
        w = d.outputs[0][1].width
        expected = ((total >> env["sh"]) + env["acc"]) % (1 << w)
        assert eval_design(d, env)["y"] == expected


def test_fir8_taps():
    d = benchmarks.benchmark("fir8")
    env = {"x": 9, "sh": 0, "acc": 0}
    assert eval_design(d, env)["y"] == (2 + 3 + 4 + 5 + 6 + 7 + 3 + 5) * 9


def test_parameterized_widths():
    d = benchmarks.benchmark("fir4", p=16)
    assert d.input_widths()["x"] == 16
    d = benchmarks.benchmark("fig1", width=12)
    assert d.input_widths()["x"] == 12
    d = benchmarks.benchmark("mcm", coeffs=(5, 11))
    assert [n for n, _ in d.outputs] == ["y5", "y11"]


def test_fir_width_caps_keep_designs_legal():
    for p in (4, 16, 38, 40, 52, 64):
        for name in ("fir4", "fir8"):
            d = benchmarks.benchmark(name, p=p)
            validate_design(d)
            env = {"x": (1 << p) - 1, "sh": 1, "acc": 65535}
            eval_design(d, env)  # must not raise
