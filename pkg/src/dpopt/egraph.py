"""E-graph: hash-consed e-nodes in union-find e-classes with constant analysis.

Every e-node and e-class carries a width; merging classes of different widths
is a hard error, as is a conflicting constant analysis (either one indicates
an unsound rewrite and is surfaced, never resolved silently). When a class's
value becomes known the corresponding CONST e-node is inserted, so folded
constants are extractable at zero cost.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

from .ir import Expr, OpKind, apply_op


class EGraphError(Exception):
    pass


class WidthMismatchError(EGraphError):
    pass


class AnalysisConflictError(EGraphError):
    pass


class NodeLimitError(EGraphError):
    pass


@dataclass(frozen=True)
class ENode:
    op: OpKind
    width: int
    children: tuple[int, ...] = ()
    payload: str | int | None = None


class EClass:
    __slots__ = ("id", "width", "const", "nodes", "parents")

    def __init__(self, cid: int, width: int):
        self.id = cid
        self.width = width
        self.const: int | None = None
        # insertion-ordered so matching and reports are reproducible
        self.nodes: dict[ENode, None] = {}
        self.parents: list[tuple[ENode, int]] = []


class EGraph:
    def __init__(self, node_limit: int | None = None):
        self.node_limit = node_limit
        self.hashcons: dict[ENode, int] = {}
        self.classes: dict[int, EClass] = {}
        self._uf: list[int] = []
        self._dirty: list[int] = []
        self.n_adds = 0
        self.n_unions = 0

    # union-find ---------------------------------------------------------

    def find(self, cid: int) -> int:
        uf = self._uf
        while uf[cid] != cid:
            uf[cid] = uf[uf[cid]]
            cid = uf[cid]
        return cid

    def canonicalize(self, n: ENode) -> ENode:
        kids = tuple(self.find(c) for c in n.children)
        return n if kids == n.children else ENode(n.op, n.width, kids, n.payload)

    # construction -------------------------------------------------------

    def add(self, n: ENode) -> int:
        n = self.canonicalize(n)
        existing = self.hashcons.get(n)
        if existing is not None:
            return self.find(existing)
        if self.node_limit is not None and len(self.hashcons) >= self.node_limit:
            raise NodeLimitError(f"node limit {self.node_limit} exceeded")
        cid = len(self._uf)
        self._uf.append(cid)
        cls = EClass(cid, n.width)
        self.classes[cid] = cls
        cls.nodes[n] = None
        self.hashcons[n] = cid
        self.n_adds += 1
        for child in dict.fromkeys(n.children):
            self.classes[self.find(child)].parents.append((n, cid))
        v = self._fold(n)
        if v is not None:
            self._set_const(cid, v)
        return self.find(cid)

    def add_expr(self, e: Expr, _memo: dict[Expr, int] | None = None) -> int:
        """Insert an expression DAG; structurally identical subterms share classes."""
        memo = {} if _memo is None else _memo
        cached = memo.get(e)
        if cached is not None:
            return self.find(cached)
        kids = tuple(self.add_expr(c, memo) for c in e.children)
        cid = self.add(ENode(e.op, e.width, kids, e.payload))
        memo[e] = cid
        return cid

    # analysis -----------------------------------------------------------

    def _fold(self, n: ENode) -> int | None:
        if n.op is OpKind.CONST:
            return n.payload
        if n.op is OpKind.VAR:
            return None
        kids = [self.classes[self.find(c)] for c in n.children]
        vals = [k.const for k in kids]
        if n.op is OpKind.MUL and 0 in vals:
            return 0  # absorbing zero holds under every environment
        if any(v is None for v in vals):
            return None
        return apply_op(n.op, n.width, tuple(k.width for k in kids), tuple(vals), n.payload)

    def _set_const(self, cid: int, value: int) -> None:
        cls = self.classes[self.find(cid)]
        if cls.const is not None:
            if cls.const != value:
                raise AnalysisConflictError(
                    f"class {cls.id} is both {cls.const} and {value} (unsound rewrite)")
            return
        cls.const = value
        self._dirty.append(cls.id)
        cnode = ENode(OpKind.CONST, cls.width, (), value)
        other = self.hashcons.get(cnode)
        if other is None:
            if cnode not in cls.nodes:
                cls.nodes[cnode] = None
                self.n_adds += 1
            self.hashcons[cnode] = cls.id
        elif self.find(other) != cls.id:
            self.merge(cls.id, other)

    # merging ------------------------------------------------------------

    def merge(self, a: int, b: int) -> int:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return ra
        ca, cb = self.classes[ra], self.classes[rb]
        if ca.width != cb.width:
            raise WidthMismatchError(
                f"cannot merge width-{ca.width} class with width-{cb.width} class")
        if ca.const is not None and cb.const is not None and ca.const != cb.const:
            raise AnalysisConflictError(
                f"merging classes with constants {ca.const} != {cb.const} (unsound rewrite)")
        root, loser = (ra, rb) if ra < rb else (rb, ra)
        keep, drop = self.classes[root], self.classes[loser]
        self._uf[loser] = root
        self.n_unions += 1
        keep.nodes.update(drop.nodes)
        keep.parents.extend(drop.parents)
        joined = keep.const if keep.const is not None else drop.const
        keep.const = joined
        del self.classes[loser]
        self._dirty.append(root)
        if joined is not None:
            cnode = ENode(OpKind.CONST, keep.width, (), joined)
            if cnode not in keep.nodes:
                keep.const = None  # let _set_const re-run its insertion path
                self._set_const(root, joined)
        return root

    # congruence ---------------------------------------------------------

    def rebuild(self) -> None:
        """Restore hash-cons and congruence invariants, re-propagating analyses."""
        while self._dirty:
            todo = {self.find(c) for c in self._dirty}
            self._dirty.clear()
            for cid in todo:
                self._repair(self.find(cid))
        self._refresh_class_nodes()

    def _repair(self, cid: int) -> None:
        cls = self.classes.get(cid)
        if cls is None:
            return
        parents = cls.parents
        cls.parents = []
        for pnode, _ in parents:
            self.hashcons.pop(pnode, None)
        seen: dict[ENode, int] = {}
        for pnode, pcid in parents:
            canon = self.canonicalize(pnode)
            prev = seen.get(canon)
            if prev is not None and self.find(prev) != self.find(pcid):
                self.merge(prev, pcid)  # congruent users collapse into one class
            seen[canon] = self.find(pcid)
        fresh: list[tuple[ENode, int]] = []
        for canon, owner in seen.items():
            owner = self.find(owner)
            known = self.hashcons.get(canon)
            if known is not None and self.find(known) != owner:
                self.merge(known, owner)
                owner = self.find(owner)
            self.hashcons[canon] = owner
            self.classes[owner].nodes[canon] = None
            fresh.append((canon, owner))
            v = self._fold(canon)
            if v is not None:
                self._set_const(owner, v)
        target = self.classes.get(self.find(cid))
        if target is not None:
            target.parents.extend(fresh)

    def _refresh_class_nodes(self) -> None:
        """Canonicalize stored node forms and drop superseded duplicates."""
        for cls in self.classes.values():
            if all(self.canonicalize(n) is n for n in cls.nodes):
                continue
            fresh: dict[ENode, None] = {}
            for n in cls.nodes:
                canon = self.canonicalize(n)
                if canon != n and n in self.hashcons:
                    self.hashcons.pop(n, None)
                    self.hashcons[canon] = cls.id
                fresh[canon] = None
            cls.nodes = fresh

    # views ---------------------------------------------------------------

    def node_count(self) -> int:
        return len(self.hashcons)

    def class_count(self) -> int:
        return len(self.classes)

    def class_ids(self) -> list[int]:
        return sorted(self.classes)

    def width_of(self, cid: int) -> int:
        return self.classes[self.find(cid)].width

    def const_of(self, cid: int) -> int | None:
        return self.classes[self.find(cid)].const


# saturation ---------------------------------------------------------------


@dataclass(frozen=True)
class RunLimits:
    max_iterations: int = 10
    max_nodes: int = 100_000
    time_budget_ms: int = 60_000

    def __post_init__(self):
        if min(self.max_iterations, self.max_nodes, self.time_budget_ms) <= 0:
            raise ValueError("run limits must be positive")


@dataclass
class RunReport:
    iterations_run: int = 0
    node_counts: list[int] = field(default_factory=list)
    class_counts: list[int] = field(default_factory=list)
    saturated: bool = False
    stop_reason: str = "saturated"  # saturated | iteration_limit | node_limit | time_limit
    initial_nodes: int = 0
    skipped_matches: int = 0  # synthesized widths beyond the cap

    def to_json(self) -> dict:
        return {
            "iterations_run": self.iterations_run,
            "node_counts": list(self.node_counts),
            "class_counts": list(self.class_counts),
            "saturated": self.saturated,
            "stop_reason": self.stop_reason,
            "initial_nodes": self.initial_nodes,
            "skipped_matches": self.skipped_matches,
        }


def run_saturation(g: EGraph, rules, limits: RunLimits) -> RunReport:
    """Grow the graph by all rules each iteration until saturation or a limit.

    All rules are matched against the same snapshot; instantiations are
    batched and followed by a single rebuild, so runs are reproducible.
    """
    report = RunReport(initial_nodes=g.node_count())
    deadline = time.monotonic() + limits.time_budget_ms / 1000.0
    g.rebuild()
    for _ in range(limits.max_iterations):
        if time.monotonic() > deadline:
            report.stop_reason = "time_limit"
            break
        before = (g.n_adds, g.n_unions)
        matches = []
        for rule in rules:
            found, skipped = rule.matches(g)
            matches.extend(found)
            report.skipped_matches += skipped
        stopped = None
        for rule, subst, cid in matches:
            if g.node_count() > limits.max_nodes:
                stopped = "node_limit"
                break
            if time.monotonic() > deadline:
                stopped = "time_limit"
                break
            try:
                new_cid = rule.apply(subst, g)
            except NodeLimitError:
                stopped = "node_limit"
                break
            g.merge(cid, new_cid)
        g.rebuild()
        report.iterations_run += 1
        report.node_counts.append(g.node_count())
        report.class_counts.append(g.class_count())
        if stopped:
            report.stop_reason = stopped
            break
        if (g.n_adds, g.n_unions) == before:
            report.saturated = True
            report.stop_reason = "saturated"
            break
    else:
        report.stop_reason = "iteration_limit"
    return report
