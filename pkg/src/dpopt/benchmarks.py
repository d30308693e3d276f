"""Built-in benchmark designs.

The FIR kernels write their constant taps as explicit shift-add trees (the
way the source RTL of such filters is usually written), so tap sharing falls
out of hash-consing; the accumulate side sits behind a variable scaling
shift, which is where the bitwidth-dependent architecture choice lives. The
ADPCM kernel is a reconstruction of the usual mux/add/shift step dequantizer
and is labeled non-authoritative.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

from .ir import Design, OpKind, const, make_design, node, var

_A = OpKind.ADD
_M = OpKind.MUL
_LS = OpKind.LSHIFT
_RS = OpKind.RSHIFT


def _n(op, w, *kids):
    return node(op, w, tuple(kids))


def fig1(width: int = 8) -> Design:
    x = var("x", width)
    y = _n(_RS, width, _n(_M, width + 1, const(2, 2), x), const(1, 1))
    return make_design([("x", width)], [("y", y)])


def shifted_fma(width: int = 4) -> Design:
    a = var("a", width)
    b = var("b", width)
    c = var("c", 2 * width)
    m = _n(_M, 2 * width + 2, a, b)
    sh = _n(_LS, 2 * width + 1, m, const(2, 2))
    y = _n(_A, 2 * width, sh, c)
    return make_design([("a", width), ("b", width), ("c", 2 * width)], [("y", y)])


def mcm(coeffs: tuple[int, ...] = (3, 7, 21), width: int = 8) -> Design:
    x = var("x", width)
    outs = []
    for c in coeffs:
        outs.append((f"y{c}", _n(_M, width + c.bit_length(), const(c, c.bit_length()), x)))
    return make_design([("x", width)], outs)


def muxarray_kernel(width: int = 4) -> Design:
    b = var("b", width)
    a = var("a", width)
    c = var("c", width)
    m1 = _n(_M, 2 * width, a, b)
    m2 = _n(_M, 2 * width, c, _n(OpKind.NOT, width, b))
    y = _n(_A, 2 * width + 1, m1, m2)
    return make_design([("b", width), ("a", width), ("c", width)], [("y", y)])


def adpcm_recon(width: int = 16) -> Design:
    step = var("step", width)
    bits = [var(n, 1) for n in ("b2", "b1", "b0")]
    zero = const(0, width)
    t0 = _n(_RS, width, step, const(1, 1))
    t1 = _n(_RS, width, step, const(2, 2))
    t2 = _n(_RS, width, step, const(3, 2))
    m2 = _n(OpKind.MUX, width, bits[0], step, zero)
    m1 = _n(OpKind.MUX, width, bits[1], t0, zero)
    m0 = _n(OpKind.MUX, width, bits[2], t1, zero)
    y = _n(_A, width + 3, m2, _n(_A, width + 2, m1, _n(_A, width + 1, m0, t2)))
    return make_design([("step", width), ("b2", 1), ("b1", 1), ("b0", 1)], [("y", y)])


_ACC_WIDTH = 16


def _taps(x, p: int):
    """Shift-add trees for 2x..7x; widths capped so rewrites stay under 64 bits."""

    def w(k: int, cap: int) -> int:
        return min(p + k, cap)

    x2 = _n(_LS, w(1, 39), x, const(1, 1))
    x3 = _n(_A, w(2, 40), x2, x)
    x4 = _n(_LS, w(2, 40), x, const(2, 2))
    x5 = _n(_A, w(3, 41), x4, x)
    x6 = _n(_LS, w(3, 41), x3, const(1, 1))
    x7 = _n(_A, w(4, 42), x6, x)
    return {2: x2, 3: x3, 4: x4, 5: x5, 6: x6, 7: x7}


def _fir(p: int, tap_order: list[int]) -> Design:
    x = var("x", p)
    sh = var("sh", 1)
    acc = var("acc", _ACC_WIDTH)
    taps = _taps(x, p)
    terms = [taps[t] for t in tap_order]
    base = max(t.width for t in terms)
    acc_chain = terms[-1]
    lvl = 0
    for term in reversed(terms[:-1]):
        lvl += 1
        acc_chain = _n(_A, min(p + 4 + lvl, base + 1 + lvl), term, acc_chain)
    total = acc_chain
    shifted = _n(_RS, total.width, total, sh)
    y = _n(_A, total.width, acc, shifted)
    return make_design([("x", p), ("sh", 1), ("acc", _ACC_WIDTH)], [("y", y)])


def fir4(p: int = 8) -> Design:
    return _fir(p, [2, 3, 5, 7])


def fir8(p: int = 8) -> Design:
    return _fir(p, [2, 3, 4, 5, 6, 7, 3, 5])


@dataclass(frozen=True)
class BenchmarkEntry:
    build: Callable[..., Design]
    param: str  # name of the width parameter a sweep may override
    description: str


REGISTRY: dict[str, BenchmarkEntry] = {
    "fig1": BenchmarkEntry(fig1, "width", "(2*x) >> 1, collapses to the bare input"),
    "shifted_fma": BenchmarkEntry(
        shifted_fma, "width", "(a*b) << 2 + c with a truncating sum, merges into an FMA"),
    "mcm": BenchmarkEntry(
        mcm, "width", "multiple constant multiplication by {3, 7, 21}"),
    "fir4": BenchmarkEntry(
        fir4, "p", "4-tap transposed FIR slice: taps {2,3,5,7}, scaled accumulate"),
    "fir8": BenchmarkEntry(
        fir8, "p", "8-tap FIR slice: taps {2..7} with repeats {3,5}"),
    "muxarray_kernel": BenchmarkEntry(
        muxarray_kernel, "width", "(a*b) + (c*~b), merges into a muxed multiplier array"),
    "adpcm_recon": BenchmarkEntry(
        adpcm_recon, "width",
        "ADPCM step dequantizer, reconstructed mux/add/shift kernel (non-authoritative)"),
}


def benchmark(name: str, **params) -> Design:
    entry = REGISTRY.get(name)
    if entry is None:
        raise KeyError(f"unknown benchmark {name!r}; known: {', '.join(sorted(REGISTRY))}")
    return entry.build(**params)
