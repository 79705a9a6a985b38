"""Command line front end: scene files, subcommands and trace tables.

Scene files are line oriented::

    scene v1
    variables: x y z
    year: 1
    generator: x*(z^2+x*y^2)
    divisor: 1 1 x
    births: 0 1
    point: 1 0 0
    factors: x ; y

``divisor`` lines give label, birth year and equation.  ``births`` lists
fallback birth years per level for a chart without recorded history,
``point`` adds a designated rational point and ``factors`` a factorization
hint for the classifier.  Lines starting with ``#`` are comments.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import dataclass, field

from .classify import classify
from .invariant import BirthTable, InvariantError, InvRecord, inv_of, parse_value
from .marked import Chart, Divisor, MarkedError, format_factored
from .polyring import ParseError, Poly, PolyError, parse_poly, parse_rational
from .resolve import (DEFAULT_BUDGET, DRIVERS, BudgetExceeded, History, ResolveError, blow_up,
                      clean, evaluate, root_node, run_algorithm)

EXIT_OK, EXIT_PARSE, EXIT_PRECONDITION, EXIT_BUDGET = 0, 2, 3, 4
HEADER = "scene v1"
COLUMNS = ("codim", "marked ideal", "companion ideal", "maximal contact", "boundary")


@dataclass
class Scene:
    variables: tuple
    generator: Poly
    year: int = 0
    divisors: tuple = ()
    births: tuple = ()
    points: tuple = ()
    factors: tuple = ()
    extra: dict = field(default_factory=dict)

    def chart(self) -> Chart:
        return Chart("0", self.year, self.variables, self.divisors)

    def birth(self) -> BirthTable:
        # without a births line, inv_1 dates from year zero and deeper levels from the scene year
        return BirthTable(year=self.year, fallback=self.births or (0,))


def parse_scene(text: str) -> Scene:
    """Parse scene text; raises ParseError on malformed input."""
    lines = [ln.strip() for ln in text.splitlines()]
    lines = [ln for ln in lines if ln and not ln.startswith("#")]
    if not lines or lines[0] != HEADER:
        raise ParseError(f"scene must start with {HEADER!r}")
    entries = []
    for ln in lines[1:]:
        key, sep, value = ln.partition(":")
        if not sep:
            raise ParseError(f"expected 'key: value', got {ln!r}")
        entries.append((key.strip(), value.strip()))
    variables = [v for k, v in entries if k == "variables"]
    if len(variables) != 1:
        raise ParseError("exactly one 'variables' line is required")
    names = tuple(variables[0].split())
    if not names or len(set(names)) != len(names):
        raise ParseError("variables must be distinct names")
    year, generator, divisors, births, points, factors = 0, None, [], (), [], ()
    for key, value in entries:
        if key == "variables":
            continue
        if key == "year":
            year = _int(value)
        elif key == "generator":
            if generator is not None:
                raise ParseError("only one generator line is allowed")
            generator = parse_poly(value, names)
        elif key == "divisor":
            parts = value.split(None, 2)
            if len(parts) != 3:
                raise ParseError("divisor line needs: label year equation")
            divisors.append((_int(parts[0]), _int(parts[1]), parse_poly(parts[2], names)))
        elif key == "births":
            births = tuple(_int(t) for t in value.split())
        elif key == "point":
            coords = tuple(parse_rational(t) for t in value.split())
            if len(coords) != len(names):
                raise ParseError("point must have one coordinate per variable")
            points.append(coords)
        elif key == "factors":
            factors = tuple(parse_poly(t, names) for t in value.split(";"))
        else:
            raise ParseError(f"unknown scene key {key!r}")
    if generator is None:
        raise ParseError("a generator line is required")
    try:
        divs = tuple(Divisor(lab, poly, by) for lab, by, poly in divisors)
        Chart("0", year, names, divs)
    except MarkedError as exc:
        raise ParseError(str(exc)) from exc
    return Scene(names, generator, year, divs, births, tuple(points), factors)


def _int(text: str) -> int:
    try:
        return int(text)
    except ValueError as exc:
        raise ParseError(f"expected an integer, got {text!r}") from exc


def format_scene(scene: Scene) -> str:
    """Canonical scene text; ``parse_scene(format_scene(s))`` reproduces ``s``."""
    names = scene.variables
    out = [HEADER, f"variables: {' '.join(names)}", f"year: {scene.year}",
           f"generator: {scene.generator.format(names)}"]
    for h in scene.divisors:
        out.append(f"divisor: {h.label} {h.birth_year} {h.poly.format(names)}")
    if scene.births:
        out.append("births: " + " ".join(map(str, scene.births)))
    for p in scene.points:
        out.append("point: " + " ".join(str(c) for c in p))
    if scene.factors:
        out.append("factors: " + " ; ".join(h.format(names) for h in scene.factors))
    return "\n".join(out) + "\n"


# trace tables

def record_rows(rec: InvRecord) -> list:
    """Cells of the per-level table for one invariant record."""
    chart = rec.chart
    names = chart.variables
    rows = []
    for row in rec.rows:
        marked = row.marked.fmt() if row.codim or row.marked.is_zero() else _marked0(row, chart)
        comp = row.companion.fmt() if row.companion is not None else ""
        contact = "(" + "=".join(names[i] for i in row.chain) + "=0)" if row.companion is not None else ""
        boundary = ", ".join(f"({chart.fmt(chart.divisor(lab).poly)}=0)" for lab in row.block)
        rows.append((str(row.codim), marked, comp, contact, boundary))
    return rows


def _marked0(row, chart) -> str:
    s = row.marked.summands[0]
    return f"({format_factored(s.generators[0], chart, chart.divisors)},{s.d})"


def chart_title(node) -> str:
    lin = node.chart.lineage
    if lin is None or lin.chart_var is None:
        return f"Year {node.year}. Chart {node.id}"
    subs = ",".join(im.format(node.chart.variables) for im in lin.images)
    return f"Year {node.year}. Coordinate chart ({subs})"


def center_of(history: History, node) -> str:
    for step in history.steps:
        if step.node == node.id:
            return step.label
    return "-"


def render_trace(history: History, fmt: str = "md") -> str:
    blocks = []
    for node in history.nodes.values():
        if node.record is None:
            continue
        rows = record_rows(node.record)
        footer = f"inv(0) = {node.record.value}, C_{node.year} = {center_of(history, node)}"
        if fmt == "tsv":
            lines = [f"# {chart_title(node)}", "\t".join(COLUMNS)]
            lines += ["\t".join(r) for r in rows]
            lines.append(f"# {footer}")
        else:
            lines = [f"**{chart_title(node)}**", "",
                     "| " + " | ".join(COLUMNS) + " |", "|" + "---|" * len(COLUMNS)]
            lines += ["| " + " | ".join(r) + " |" for r in rows]
            lines += ["", footer]
        blocks.append("\n".join(lines))
    return "\n\n".join(blocks) + "\n"


def describe_node(node) -> str:
    names = node.chart.variables
    divs = " ".join(f"{h.label}:{h.poly.format(names)}@{h.birth_year}" for h in node.chart.divisors)
    parts = [f"chart {node.id} year {node.year}",
             f"  strict: {node.strict.format(names)}",
             f"  total: {format_factored(node.total, node.chart, node.chart.divisors)}",
             f"  controlled: {format_factored(node.controlled, node.chart, node.chart.divisors)}",
             f"  divisors: {divs or '-'}"]
    if node.record is not None:
        parts.append(f"  inv: {node.record.value}")
    if node.classification is not None:
        parts.append(f"  class: {node.classification}")
    if node.note:
        parts.append(f"  note: {node.note}")
    return "\n".join(parts)


def render_history(history: History, driver: str) -> str:
    out = [f"driver: {driver}", f"steps: {len(history.steps)}"]
    for step in history.steps:
        node = history.nodes[step.node]
        value = node.record.value if node.record else "-"
        out.append(f"step {step.index}: chart {step.node} inv {value} center {step.label} ({step.kind})")
    out.append("leaves:")
    for leaf in history.leaves():
        cls = leaf.classification
        out.append(f"  {leaf.id}: {cls} strict {leaf.strict.format(leaf.chart.variables)}")
    for note in history.notes:
        out.append(f"note: {note}")
    for v in history.violations:
        out.append(f"violation: {v}")
    return "\n".join(out) + "\n"


# commands

def _translate_chart(scene: Scene, point) -> Chart:
    divs = []
    for h in scene.divisors:
        moved = h.poly.translate(point)
        if not moved.is_constant():
            divs.append(Divisor(h.label, moved, h.birth_year))
    return Chart("0", scene.year, scene.variables, tuple(divs))


def cmd_inv(scene: Scene, args) -> str:
    out = [f"origin: {inv_of(scene.generator, scene.chart(), scene.birth()).value}"]
    for p in scene.points:
        f = scene.generator.translate(p)
        label = "(" + ",".join(str(c) for c in p) + ")"
        if f.constant_term() != 0:
            out.append(f"point {label}: not on the hypersurface")
            continue
        rec = inv_of(f, _translate_chart(scene, p), scene.birth())
        out.append(f"point {label}: {rec.value}")
    return "\n".join(out) + "\n"


def _center_indices(scene: Scene, text: str) -> tuple:
    names = [t.strip() for t in text.split(",") if t.strip()]
    try:
        return tuple(scene.variables.index(n) for n in names)
    except ValueError as exc:
        raise ParseError(f"unknown center variable in {text!r}") from exc


def cmd_blowup(scene: Scene, args) -> str:
    history = History(budget=args.budget)
    root = history.add(root_node(scene.generator, scene.chart(), scene.birth()))
    evaluate(root)
    center = _center_indices(scene, args.center) if args.center else tuple(range(len(scene.variables)))
    children = blow_up(history, root, center, normalize=False)
    return "\n".join(describe_node(c) for c in children) + "\n"


def cmd_clean(scene: Scene, args) -> str:
    history = History(budget=args.budget)
    root = history.add(root_node(scene.generator, scene.chart(), scene.birth()))
    evaluate(root)
    if root.record is None:
        raise ResolveError("the origin is not a singular point")
    results = clean(history, root, args.level)
    for n in results:
        n.classification = classify(n.strict, n.chart.variables, n.record)
    return "\n".join(describe_node(n) for n in results) + "\n"


def _run(scene: Scene, args) -> History:
    until = parse_value(args.until) if args.until else None
    return run_algorithm(scene.generator, scene.chart(), driver=args.driver, until=until,
                         budget=args.budget, birth=scene.birth(), jobs=args.jobs)


def cmd_resolve(scene: Scene, args) -> str:
    return render_history(_run(scene, args), args.driver)


def cmd_trace(scene: Scene, args) -> str:
    return render_trace(_run(scene, args), args.format)


def cmd_classify(scene: Scene, args) -> str:
    rec = None
    try:
        rec = inv_of(scene.generator, scene.chart(), scene.birth())
    except InvariantError:
        pass
    strict = root_node(scene.generator, scene.chart()).strict
    cls = classify(strict, scene.variables, rec, scene.factors or None)
    out = [cls.name]
    if cls.reason:
        out.append(f"reason: {cls.reason}")
    if cls.witness:
        out.append(f"witness: {cls.witness}")
    if cls.split is not None:
        out.append(f"split: {'yes' if cls.split else 'no'}")
    return "\n".join(out) + "\n"


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="desing", description="Desingularization invariant toolkit.")
    sub = parser.add_subparsers(dest="command", required=True)

    def scene_cmd(name, help_text):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("scene", help="scene file, or - for stdin")
        p.add_argument("--budget", type=int, default=DEFAULT_BUDGET, help="maximum number of blow-ups")
        return p

    scene_cmd("inv", "invariant at the origin and designated points")
    p = scene_cmd("blowup", "blow up the origin chart along a coordinate center")
    p.add_argument("--center", help="comma separated center variables (default: the origin)")
    p = scene_cmd("clean", "cleaning at a level of the invariant")
    p.add_argument("--level", type=int, required=True)
    for name, help_text in (("resolve", "run a driver"), ("trace", "per-chart invariant tables")):
        p = scene_cmd(name, help_text)
        p.add_argument("--driver", choices=DRIVERS, default="paper")
        p.add_argument("--until", help="stop once the invariant is at most this value")
        p.add_argument("--jobs", type=int, default=1, help="parallel chart evaluation")
        if name == "trace":
            p.add_argument("--format", choices=("md", "tsv"), default="md")
    scene_cmd("classify", "classify the singularity at the origin")
    return parser


COMMANDS = {"inv": cmd_inv, "blowup": cmd_blowup, "clean": cmd_clean, "resolve": cmd_resolve,
            "trace": cmd_trace, "classify": cmd_classify}


def _read(path: str) -> str:
    if path == "-":
        return sys.stdin.read()
    with open(path, encoding="utf-8") as fh:
        return fh.read()


def main(argv=None, out=None) -> int:
    out = out or sys.stdout
    args = build_parser().parse_args(argv)
    try:
        scene = parse_scene(_read(args.scene))
        out.write(COMMANDS[args.command](scene, args))
    except (ParseError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except BudgetExceeded as exc:
        if args.command == "trace":
            out.write(render_trace(exc.history, args.format))
        else:
            out.write(render_history(exc.history, getattr(args, "driver", args.command)))
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except (ResolveError, InvariantError, MarkedError, PolyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PRECONDITION
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
