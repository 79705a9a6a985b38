"""Blow-ups over all charts, center selection, cleaning and scripted drivers.

A :class:`History` is a tree of chart nodes.  Every node carries the strict,
total and controlled transforms of the input hypersurface, its divisor
registry (inside the chart) and the birth table used for its invariant.
Edges are :class:`Step` records, one per executed blow-up.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from fractions import Fraction
from itertools import combinations
from typing import Iterable, Sequence

from .classify import Classification, Kind, classify
from .invariant import (INV_PP, ZERO, BirthTable, InvariantValue, InvRecord,
                        compute_inv, iota)
from .marked import Chart, MarkedIdeal, controlled_poly, strict_transform
from .polyring import INF, Poly

DEFAULT_BUDGET = 64


class ResolveError(RuntimeError):
    pass


class CenterError(ResolveError):
    """A proposed center failed the admissibility check."""


class BudgetExceeded(ResolveError):
    def __init__(self, history: "History"):
        super().__init__(f"step budget of {history.budget} blow-ups exceeded")
        self.history = history


@dataclass
class Node:
    """A chart of some year together with the transforms living on it."""

    id: str
    chart: Chart
    strict: Poly
    total: Poly
    controlled: Poly
    birth: BirthTable
    parent: str | None = None
    step: int | None = None
    record: InvRecord | None = None
    classification: Classification | None = None
    status: str = "open"
    note: str = ""
    protected: tuple = ()
    cleaned: bool = False
    phase: str = ""

    @property
    def year(self) -> int:
        return self.chart.year

    def on_hypersurface(self) -> bool:
        return self.strict.constant_term() == 0

    def singular(self) -> bool:
        return self.on_hypersurface() and self.strict.ord() >= 2


@dataclass(frozen=True)
class Step:
    """One executed blow-up: center in the node's normalized coordinates."""

    index: int
    node: str
    center: tuple
    label: str
    kind: str
    level: int | None
    children: tuple
    change: tuple | None


@dataclass
class History:
    nodes: dict = field(default_factory=dict)
    steps: list = field(default_factory=list)
    notes: list = field(default_factory=list)
    violations: list = field(default_factory=list)
    budget: int = DEFAULT_BUDGET
    jobs: int = 1

    def add(self, node: Node) -> Node:
        if node.id in self.nodes:
            raise ResolveError(f"duplicate chart id {node.id}")
        self.nodes[node.id] = node
        return node

    def node(self, node_id: str) -> Node:
        return self.nodes[node_id]

    @property
    def root(self) -> Node:
        return next(iter(self.nodes.values()))

    def children(self, node_id: str) -> list:
        return [n for n in self.nodes.values() if n.parent == node_id]

    def leaves(self) -> list:
        return [n for n in self.nodes.values() if n.status == "leaf"]

    def edges(self) -> list:
        """``(parent, child, step)`` triples in creation order."""
        out = []
        for step in self.steps:
            parent = self.nodes[step.node]
            out.extend((parent, self.nodes[c], step) for c in step.children)
        return out

    def path(self, node_id: str) -> list:
        """Nodes from the root down to ``node_id``."""
        out = []
        cur: str | None = node_id
        while cur is not None:
            out.append(self.nodes[cur])
            cur = self.nodes[cur].parent
        return out[::-1]


# node construction and evaluation

def strip_divisors(p: Poly, chart: Chart) -> Poly:
    """Remove every power of a divisor equation dividing ``p``."""
    for h in chart.divisors:
        m = p.ord_along(h.poly)
        if m:
            p = p.divide_power(h.poly, m)
    return p


def root_node(f: Poly, chart: Chart, birth: BirthTable | None = None,
              protected: Sequence = ()) -> Node:
    """Root of a history; ``f`` is the controlled equation (marked one)."""
    if birth is None:
        birth = BirthTable(year=chart.year, fallback=(0,))
    strict = strip_divisors(f, chart)
    return Node(chart.id, chart, strict, f, f, birth, protected=tuple(map(tuple, protected)))


def evaluate(node: Node) -> Node:
    """Compute the invariant record at the chart origin when it is singular."""
    if node.record is None and node.singular():
        node.record = compute_inv(MarkedIdeal(node.chart, (node.controlled,), 1), node.birth)
    return node


def evaluate_all(nodes: Sequence[Node], jobs: int = 1) -> list:
    if jobs > 1 and len(nodes) > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(evaluate, nodes))
    return [evaluate(n) for n in nodes]


def _images_point(images: Sequence[Poly], point: Sequence) -> tuple:
    return tuple(im.evaluate(point) for im in images)


def normalized(node: Node):
    """Node data in the coordinates where the chain is a coordinate flag.

    Returns ``(chart, strict, total, controlled, change, protected)``; the
    protected points are re-expressed in the new coordinates.
    """
    rec = node.record
    if rec is None or rec.identity_change():
        return node.chart, node.strict, node.total, node.controlled, None, node.protected
    if rec.approximate:
        raise ResolveError("maximal contact needs a nonlinear coordinate change")
    ch = rec.change
    pts = tuple(_images_point(rec.inverse, p) for p in node.protected)
    return (rec.chart, node.strict.substitute(ch), node.total.substitute(ch),
            node.controlled.substitute(ch), ch, pts)


def coordinate_of(chart: Chart, label: int) -> int | None:
    """Index ``i`` when the divisor ``label`` is ``c * x_i``, else None."""
    p = chart.divisor(label).poly
    if len(p) == 1 and p.total_degree() == 1:
        return next(iter(p.variables()))
    return None


def center_label(chart: Chart, center: Sequence[int]) -> str:
    if len(center) == chart.arity:
        return "{0}"
    return "(" + "=".join(chart.variables[i] for i in center) + "=0)"


def check_center(chart: Chart, strict: Poly, center: Sequence[int], protected: Sequence = ()) -> None:
    """Admissibility of a coordinate center at the origin; raises CenterError."""
    center = tuple(center)
    if not center or len(set(center)) != len(center):
        raise CenterError("center must be a nonempty set of distinct coordinates")
    if strict.ord_in(center) < strict.ord():
        raise CenterError(f"{center_label(chart, center)} is not in the maximal order locus")
    cset = set(center)
    for h in chart.divisors:
        if not h.through_origin() or len(center) == chart.arity:
            continue
        if coordinate_of(chart, h.label) is None:
            raise CenterError(f"divisor {chart.fmt(h.poly)} is not a coordinate at the center")
    for p in protected:
        if all(p[i] == 0 for i in cset):
            raise CenterError(f"{center_label(chart, center)} meets protected point {_fmt_point(p)}")


def _fmt_point(p) -> str:
    return "(" + ",".join(str(c) for c in p) + ")"


def _transport(points, center, j) -> tuple:
    """Protected points of the parent that land in the ``x_j``-chart."""
    out = []
    for p in points:
        if all(p[i] == 0 for i in center):
            continue
        if p[j] == 0:
            continue
        out.append(tuple(p[k] / p[j] if (k in center and k != j) else p[k] for k in range(len(p))))
    return tuple(out)


def blow_up(history: History, node: Node, center: Sequence[int], kind: str = "inv",
            level: int | None = None, normalize: bool = True) -> list:
    """Blow up ``node`` along a coordinate center and register all charts.

    With ``normalize`` the center is read in the record's normalized
    coordinates; otherwise in the chart coordinates as they stand.
    """
    if len(history.steps) >= history.budget:
        raise BudgetExceeded(history)
    if normalize:
        chart, strict, total, controlled, change, protected = normalized(node)
    else:
        chart, strict, total, controlled, change, protected = (
            node.chart, node.strict, node.total, node.controlled, None, node.protected)
    center = tuple(center)
    check_center(chart, strict, center, protected)
    index = len(history.steps)
    value = node.record.value if node.record is not None else None
    children = []
    for j in sorted(center):
        cid = f"{node.id}.{chart.variables[j]}"
        new_chart, images = chart.blow_up(center, j, cid)
        child_birth = node.birth.extended(value, new_chart.year) if value is not None else \
            replace(node.birth, year=new_chart.year)
        child = Node(
            id=cid,
            chart=new_chart,
            strict=strict_transform(strict, center, j),
            total=total.substitute(images),
            controlled=controlled_poly(controlled, center, j, 1),
            birth=child_birth,
            parent=node.id,
            step=index,
            protected=_transport(protected, center, j),
        )
        children.append(history.add(child))
    node.status = "split"
    history.steps.append(Step(index, node.id, center, center_label(chart, center), kind, level,
                              tuple(c.id for c in children), change))
    evaluate_all(children, history.jobs)
    return children


# center selection

def minimal_subset(exps: dict, threshold=1):
    """Smallest (then lexicographically first) label set with exponent sum >= threshold."""
    labels = sorted(k for k, v in exps.items() if v)
    for size in range(1, len(labels) + 1):
        for combo in combinations(labels, size):
            if sum(exps[k] for k in combo) >= threshold:
                return combo
    return None


def select_center(node: Node) -> tuple:
    """Center for the next algorithm step, in normalized coordinates.

    Returns ``(center, diagnostic)``; an unvalidated candidate is replaced by
    the origin and the diagnostic explains why.
    """
    rec = node.record
    if rec is None:
        raise ResolveError(f"chart {node.id} has no invariant record")
    chart, strict, _, _, _, protected = normalized(node)
    if rec.value.tail is INF:
        center = tuple(rec.chain)
    elif rec.value.tail is ZERO:
        subset = minimal_subset(rec.residual_exponents[-1])
        if subset is None:
            raise ResolveError("monomial case without a qualifying divisor subset")
        coords = [coordinate_of(chart, lab) for lab in subset]
        if any(c is None for c in coords):
            return _origin(chart), "divisor is not a coordinate; center demoted to the origin"
        center = tuple(rec.chain) + tuple(c for c in coords if c not in rec.chain)
    else:
        raise ResolveError("incomplete invariant value")
    try:
        check_center(chart, strict, center, protected)
    except CenterError as exc:
        if len(center) == chart.arity:
            raise
        return _origin(chart), f"{exc}; center demoted to the origin"
    return center, ""


def _origin(chart: Chart) -> tuple:
    return tuple(range(chart.arity))


# cleaning

def clean(history: History, node: Node, level: int) -> list:
    """Resolve the monomial part of ``I^level`` at ``node`` combinatorially.

    Returns the resulting nodes: those where no divisor subset qualifies any
    more (cleaned) and those that left the maximal contact subspace.  Cleaned
    nodes get their birth table restarted above ``level``.
    """
    rec = node.record
    if rec is None:
        raise ResolveError(f"chart {node.id} has no invariant record")
    if not 1 <= level < len(rec.residual_exponents):
        raise ResolveError(f"cleaning level {level} out of range")
    chain = tuple(rec.chain[:level])
    start_exps = {k: Fraction(v) for k, v in rec.residual_exponents[level].items()}
    out = []
    todo = [(node, start_exps, True)]
    while todo:
        cur, exps, first = todo.pop(0)
        chart = rec.chart if first else cur.chart
        subset = minimal_subset(exps)
        if subset is None:
            if not first:
                cur.birth = cur.birth.restarted(level, cur.year)
                cur.record = None
                evaluate(cur)
                cur.note = f"cleaned at level {level}"
            cur.cleaned = True
            out.append(cur)
            continue
        coords = [coordinate_of(chart, lab) for lab in subset]
        if any(c is None for c in coords):
            raise CenterError("cleaning divisor is not a coordinate")
        center = chain + tuple(coords)
        children = blow_up(history, cur, center, kind="clean", level=level, normalize=first)
        total = sum(exps[k] for k in subset)
        for child in children:
            j = int(child.chart.lineage.chart_var)
            if j in chain:
                child.note = "left the maximal contact subspace"
                out.append(child)
                continue
            new_exps = {k: v for k, v in exps.items() if k not in subset}
            new_exps.update({k: exps[k] for k in subset if coords[subset.index(k)] != j})
            new_exps[child.chart.divisors[-1].label] = total - 1
            todo.append((child, new_exps, False))
    return out


# drivers

DRIVERS = ("paper", "clean", "min3", "ncp")


def _leaf(node: Node, note: str = "") -> None:
    node.status = "leaf"
    if note:
        node.note = note
    if node.classification is None:
        node.classification = classify(node.strict, node.chart.variables, node.record)


def _algorithm_step(history: History, node: Node) -> list:
    center, diag = select_center(node)
    if diag:
        history.notes.append(f"{node.id}: {diag}")
    return blow_up(history, node, center)


def _protect(history: History, node: Node, cls: Classification) -> None:
    node.classification = cls
    history.notes.append(f"{node.id}: {cls.name} protected")
    _leaf(node)


def _clean_levels(history: History, node: Node, levels: Iterable[int]) -> list:
    """Clean ``node`` at each level in turn and return all resulting nodes."""
    current = [node]
    escaped = []
    for p in levels:
        nxt = []
        for n in current:
            if n.record is None or p >= len(n.record.residual_exponents):
                nxt.append(n)
                continue
            for res in clean(history, n, p):
                (nxt if res.cleaned else escaped).append(res)
        current = nxt
    return current + escaped


def run_algorithm(f: Poly, chart: Chart, driver: str = "paper", until: InvariantValue | None = None,
                  budget: int = DEFAULT_BUDGET, birth: BirthTable | None = None, jobs: int = 1,
                  protected: Sequence = ()) -> History:
    """Run a driver depth-first over charts starting at the origin of ``chart``.

    Drivers: ``paper`` blows up the invariant's centers until every origin is
    smooth (or the value drops to ``until``); ``clean`` does the same while
    the value exceeds ``until`` (default ``inv(nc2)``) and cleans at equality;
    ``min3`` and ``ncp`` aim for minimal singularities, protecting nc3/pp
    points (and nc2 once the value is low enough).
    """
    if driver not in DRIVERS:
        raise ResolveError(f"unknown driver {driver!r}")
    history = History(budget=budget, jobs=jobs)
    root = history.add(root_node(f, chart, birth, protected))
    evaluate(root)
    stack = [root]
    handler = {"paper": _drive_paper, "clean": _drive_clean, "min3": _drive_min3, "ncp": _drive_ncp}[driver]
    while stack:
        node = stack.pop()
        if node.status != "open":
            continue
        if not node.on_hypersurface():
            _leaf(node, "origin not on the strict transform")
            continue
        if not node.singular():
            _leaf(node)
            continue
        new = handler(history, node, until)
        stack.extend(reversed([n for n in new if n.status == "open"]))
    return history


def _drive_paper(history, node, until):
    if until is not None and node.record.value <= until:
        _leaf(node, f"inv <= {until}")
        return []
    return _algorithm_step(history, node)


def _drive_clean(history, node, until):
    target = until if until is not None else iota(2)
    value = node.record.value
    if node.cleaned or value < target:
        _leaf(node)
        return []
    if value > target:
        return _algorithm_step(history, node)
    levels = range(len(value.pairs) - 1, 0, -1)
    out = _clean_levels(history, node, levels)
    for n in out:
        if n.cleaned and n.status == "open":
            _leaf(n)
    return out


_MIN3_PROTECT = {Kind.PP}


def _drive_min3(history, node, until):
    value = node.record.value
    cls = classify(node.strict, node.chart.variables, node.record)
    if cls.kind in _MIN3_PROTECT or (cls.kind is Kind.NC and cls.k == 3):
        _protect(history, node, cls)
        return []
    nc2 = cls.kind is Kind.NC and cls.k == 2
    if value > iota(2):
        return _guarded_step(history, node)
    if nc2:
        node.classification = cls
        _leaf(node)
        return []
    if value == iota(2) and not node.cleaned:
        return _clean_levels(history, node, [1])
    return _guarded_step(history, node)


def _drive_ncp(history, node, until):
    value = node.record.value
    cls = classify(node.strict, node.chart.variables, node.record)
    if cls.kind is Kind.PP or (cls.kind is Kind.NC and value <= iota(cls.k)):
        _protect(history, node, cls)
        return []
    if node.phase == "special":
        out = _clean_levels(history, node, [1])
        for n in out:
            n.phase = "done"
            n.cleaned = False
        return out
    if node.cleaned and node.phase == "":
        node.cleaned = False
        history.notes.append(f"{node.id}: special blow-up of the origin")
        children = blow_up(history, node, _origin(normalized(node)[0]), kind="special")
        for c in children:
            c.phase = "special"
        return children
    if node.phase == "" and value == INV_PP:
        return _clean_levels(history, node, [2, 1])
    if node.phase == "" and value > INV_PP:
        return _guarded_step(history, node)
    return _drive_min3(history, node, until)


def _guarded_step(history, node):
    try:
        return _algorithm_step(history, node)
    except CenterError as exc:
        history.violations.append(f"{node.id}: {exc}")
        _leaf(node, str(exc))
        return []
