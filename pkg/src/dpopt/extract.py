"""Selecting one e-node per needed e-class to minimize total area.

Two backends: a bottom-up greedy fixpoint over per-class tree costs, and an
integer program with one binary per e-node, child-closure constraints, root
equality constraints, and topological-ordering acyclicity constraints. The
ILP is solved by an internal depth-first branch-and-bound (lower bound: sum
of per-class minimum operator costs over still-needed classes) and can be
exported in LP text format for external solvers.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from fractions import Fraction

from .cost import CostConfig, NodeCostQuery, dag_cost, op_cost
from .egraph import EGraph, ENode
from .ir import OP_RANK, Design, Expr, OpKind, make_design
from . import ir


class ExtractionError(Exception):
    pass


def node_query(g: EGraph, n: ENode) -> NodeCostQuery:
    ins = tuple(g.width_of(c) for c in n.children)
    consts = tuple(g.const_of(c) for c in n.children)
    return NodeCostQuery(n.op, ins, n.width, consts)


@dataclass
class Selection:
    chosen: dict[int, ENode]
    roots: list[int]

    def cost(self, g: EGraph, cfg: CostConfig) -> Fraction:
        return dag_cost((((cid, n), node_query(g, n)) for cid, n in self.chosen.items()), cfg)


def _check_selection(g: EGraph, sel: Selection) -> None:
    for root in sel.roots:
        if g.find(root) not in sel.chosen:
            raise ExtractionError("selection misses a root")
    for cid, n in sel.chosen.items():
        for c in n.children:
            if g.find(c) not in sel.chosen:
                raise ExtractionError("selection is not closed under children")
    # acyclicity over the induced class graph
    state: dict[int, int] = {}

    def visit(cid: int) -> None:
        if state.get(cid) == 2:
            return
        if state.get(cid) == 1:
            raise ExtractionError("selection induces a cycle")
        state[cid] = 1
        for c in sel.chosen[cid].children:
            visit(g.find(c))
        state[cid] = 2

    for root in sel.roots:
        visit(g.find(root))


# -- greedy -------------------------------------------------------------------


def _tie_key(g: EGraph, n: ENode, counts: dict[int, int]) -> tuple:
    tree_nodes = 1 + sum(counts[g.find(c)] for c in n.children)
    return (tree_nodes, OP_RANK[n.op], n.children)


def extract_greedy(g: EGraph, roots: list[int], cfg: CostConfig) -> Selection:
    """Per-class minimum tree cost to fixpoint; deterministic tie-breaking."""
    best: dict[int, tuple[Fraction, tuple, ENode]] = {}
    counts: dict[int, int] = {}
    changed = True
    while changed:
        changed = False
        for cid in g.class_ids():
            for n in g.classes[cid].nodes:
                kids = [g.find(c) for c in n.children]
                if any(k not in best for k in kids):
                    continue
                cost = op_cost(node_query(g, n), cfg) + sum(
                    (best[k][0] for k in kids), Fraction(0))
                counts.setdefault(cid, 0)
                tie = (1 + sum(counts[k] for k in kids), OP_RANK[n.op], n.children)
                cur = best.get(cid)
                if cur is None or (cost, tie) < (cur[0], cur[1]):
                    best[cid] = (cost, tie, n)
                    counts[cid] = tie[0]
                    changed = True
    chosen: dict[int, ENode] = {}

    def collect(cid: int) -> None:
        cid = g.find(cid)
        if cid in chosen:
            return
        if cid not in best:
            raise ExtractionError(f"class {cid} has no finite-cost implementation")
        n = best[cid][2]
        chosen[cid] = n
        for c in n.children:
            collect(c)

    for root in roots:
        collect(root)
    sel = Selection(chosen, [g.find(r) for r in roots])
    _check_selection(g, sel)
    return sel


def greedy_class_costs(g: EGraph, cfg: CostConfig) -> dict[int, Fraction]:
    """Per-class best tree cost (children counted per reference)."""
    best: dict[int, Fraction] = {}
    changed = True
    while changed:
        changed = False
        for cid in g.class_ids():
            for n in g.classes[cid].nodes:
                kids = [g.find(c) for c in n.children]
                if any(k not in best for k in kids):
                    continue
                cost = op_cost(node_query(g, n), cfg) + sum(
                    (best[k] for k in kids), Fraction(0))
                if cid not in best or cost < best[cid]:
                    best[cid] = cost
                    changed = True
    return best


# -- ILP ----------------------------------------------------------------------


@dataclass
class IlpModel:
    g: EGraph
    roots: list[int]
    cfg: CostConfig
    nodes: list[tuple[int, ENode]] = field(default_factory=list)  # var index -> (class, node)
    costs: list[Fraction] = field(default_factory=list)
    class_nodes: dict[int, list[int]] = field(default_factory=dict)
    child_rows: list[tuple[int, int]] = field(default_factory=list)  # (node var, child class)
    root_rows: list[int] = field(default_factory=list)
    acyc_rows: list[tuple[int, int, int]] = field(default_factory=list)  # (parent class, node var, child class)

    @property
    def n_classes(self) -> int:
        return len(self.class_nodes)


def build_ilp(g: EGraph, roots: list[int], cfg: CostConfig) -> IlpModel:
    """One binary per e-node; child, root-equality, and acyclicity rows."""
    m = IlpModel(g, [g.find(r) for r in roots], cfg)
    for cid in g.class_ids():
        idxs = []
        for n in g.classes[cid].nodes:
            idx = len(m.nodes)
            m.nodes.append((cid, n))
            m.costs.append(op_cost(node_query(g, n), cfg))
            idxs.append(idx)
        m.class_nodes[cid] = idxs
    for idx, (cid, n) in enumerate(m.nodes):
        for child in dict.fromkeys(g.find(c) for c in n.children):
            m.child_rows.append((idx, child))
            m.acyc_rows.append((cid, idx, child))
    m.root_rows = sorted(dict.fromkeys(m.roots))
    return m


def export_lp(m: IlpModel) -> str:
    """Deterministic LP-format text with x_<node> binaries and t_<class> integers."""
    N = m.n_classes
    lines = ["Minimize", " obj: " + _lp_sum(
        [(m.costs[i], f"x_{i}") for i in range(len(m.nodes))])]
    lines.append("Subject To")
    for k, (idx, child) in enumerate(m.child_rows):
        terms = [(Fraction(1), f"x_{idx}")] + [
            (Fraction(-1), f"x_{j}") for j in m.class_nodes[child]]
        lines.append(f" child{k}: " + _lp_sum(terms) + " <= 0")
    for k, cid in enumerate(m.root_rows):
        terms = [(Fraction(1), f"x_{j}") for j in m.class_nodes[cid]]
        lines.append(f" root{k}: " + _lp_sum(terms) + " = 1")
    for k, (pcid, idx, child) in enumerate(m.acyc_rows):
        terms = [(Fraction(1), f"t_{pcid}"), (Fraction(-N), f"x_{idx}"),
                 (Fraction(-1), f"t_{child}")]
        lines.append(f" acyc{k}: " + _lp_sum(terms) + f" >= {1 - N}")
    lines.append("Bounds")
    for cid in sorted(m.class_nodes):
        lines.append(f" 0 <= t_{cid} <= {N - 1}")
    lines.append("Generals")
    lines.append(" " + " ".join(f"t_{cid}" for cid in sorted(m.class_nodes)))
    lines.append("Binary")
    lines.append(" " + " ".join(f"x_{i}" for i in range(len(m.nodes))))
    lines.append("End")
    return "\n".join(lines) + "\n"


def _lp_num(x: Fraction) -> str:
    if x.denominator == 1:
        return str(x.numerator)
    return repr(float(x))


def _lp_sum(terms) -> str:
    parts = []
    for coef, name in terms:
        sign = "-" if coef < 0 else "+"
        mag = -coef if coef < 0 else coef
        text = name if mag == 1 else f"{_lp_num(mag)} {name}"
        parts.append(f"{sign} {text}")
    out = " ".join(parts)
    return out[2:] if out.startswith("+ ") else out


def solve_ilp(m: IlpModel, budget_ms: int = 100_000) -> tuple[Selection, str]:
    """Exact branch-and-bound over per-class choices; statuses mirror a MIP
    solver: optimal, feasible (timeout incumbent), infeasible."""
    g = m.g
    deadline = time.monotonic() + budget_ms / 1000.0
    for root in m.roots:
        if not m.class_nodes.get(root):
            return Selection({}, list(m.roots)), "infeasible"
    if not m.roots:
        return Selection({}, []), "optimal"

    greedy_cost = greedy_class_costs(g, m.cfg)
    huge = Fraction(10 ** 9)
    min_op: dict[int, Fraction] = {}
    cand: dict[int, list[int]] = {}
    index_of: dict[tuple[int, ENode], int] = {}
    for cid, idxs in m.class_nodes.items():
        min_op[cid] = min(m.costs[i] for i in idxs)

        def key(i, _cid=cid):
            node = m.nodes[i][1]
            est = m.costs[i] + sum(
                (greedy_cost.get(g.find(c), huge) for c in node.children), Fraction(0))
            return (est, m.costs[i], OP_RANK[node.op], node.children)

        # a zero-cost leaf dominates every other choice in its class: it is
        # free, needs no children, and can never close a cycle
        free_leaves = [i for i in idxs
                       if not m.nodes[i][1].children and m.costs[i] == 0]
        if free_leaves:
            cand[cid] = [min(free_leaves, key=key)]
        else:
            # drop nodes dominated by a cheaper-or-equal node whose child
            # set is a subset: never worse in cost, closure, or cycles
            order = sorted(idxs, key=key)
            kept: list[int] = []
            for i in order:
                ci = set(g.find(c) for c in m.nodes[i][1].children)
                dominated = any(
                    m.costs[j] <= m.costs[i]
                    and set(g.find(c) for c in m.nodes[j][1].children) <= ci
                    for j in kept)
                if not dominated:
                    kept.append(i)
            cand[cid] = kept
        for i in idxs:
            index_of[(cid, m.nodes[i][1])] = i

    best_cost: Fraction | None = None
    best_sel: dict[int, int] | None = None
    try:  # greedy incumbent keeps the timeout result dominated by greedy
        seed = extract_greedy(g, m.roots, m.cfg)
        best_sel = {cid: index_of[(cid, n)] for cid, n in seed.chosen.items()}
        best_cost = sum((m.costs[i] for i in best_sel.values()), Fraction(0))
    except ExtractionError:
        pass

    timed_out = False
    adj: dict[int, tuple[int, ...]] = {}

    def reaches(src: int, target: int) -> bool:
        stack = [src]
        seen = set()
        while stack:
            cur = stack.pop()
            if cur == target:
                return True
            if cur in seen:
                continue
            seen.add(cur)
            stack.extend(adj.get(cur, ()))
        return False

    def dfs(pending: list[int], chosen: dict[int, int], acc: Fraction) -> None:
        nonlocal best_cost, best_sel, timed_out
        if timed_out:
            return
        if time.monotonic() > deadline:
            timed_out = True
            return
        if not pending:
            if best_cost is None or acc < best_cost:
                best_cost, best_sel = acc, dict(chosen)
            return
        if best_cost is not None and acc + sum(
                (min_op[c] for c in pending), Fraction(0)) >= best_cost:
            return
        # branch on the most expensive undecided class first
        pick = max(pending, key=lambda c: (min_op[c], -c))
        rest = [c for c in pending if c != pick]
        for idx in cand[pick]:
            node = m.nodes[idx][1]
            kids = tuple(dict.fromkeys(g.find(c) for c in node.children))
            if any(k == pick or reaches(k, pick) for k in kids):
                continue  # selecting this node would close a class cycle
            adj[pick] = kids
            chosen[pick] = idx
            new = [k for k in kids if k not in chosen and k not in rest]
            dfs(rest + new, chosen, acc + m.costs[idx])
            del chosen[pick]
            del adj[pick]

    dfs(list(dict.fromkeys(m.roots)), {}, Fraction(0))

    if best_sel is None:
        return Selection({}, list(m.roots)), "infeasible"
    chosen = {cid: m.nodes[idx][1] for cid, idx in best_sel.items()}
    sel = Selection(chosen, list(m.roots))
    _check_selection(g, sel)
    return sel, ("feasible" if timed_out else "optimal")


# -- back to expressions -------------------------------------------------------


def selection_to_design(sel: Selection, g: EGraph, names: list[str],
                        inputs: list[tuple[str, int]]) -> Design:
    """Materialize a selection as an expression DAG with maximal sharing."""
    memo: dict[int, Expr] = {}

    def walk(cid: int) -> Expr:
        cid = g.find(cid)
        if cid in memo:
            return memo[cid]
        n = sel.chosen.get(cid)
        if n is None:
            raise ExtractionError(f"class {cid} not in selection")
        kids = tuple(walk(c) for c in n.children)
        e = ir.node(n.op, n.width, kids, n.payload)
        memo[cid] = e
        return e

    outputs = [(name, walk(root)) for name, root in zip(names, sel.roots)]
    return make_design(inputs, outputs)
