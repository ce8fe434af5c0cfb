"""Line-oriented description files for graphs, maps, endomorphisms, curves.

Sections:

    [graph NAME]
    vertex ID rotation: h1 h2 ...
    edge ID V1 V2 length L

    [map NAME from G1 to G2]
    vertex v -> w
    edge e -> d1 d2 ...        ("." for collapse)

    [vend NAME graph0 graph1 pi phi]
    tree: e1 e2 ...            (optional preferred spanning tree of graph0)

    [traintrack NAME graph G]
    gates v: {h1 h2} {h3}

    [curve NAME on G]
    component: d1 d2 ...

Half-edge tokens are `e+` (tail end, forward traversal) and `e-` (head
end, backward traversal); in paths a bare edge name means forward.
Lengths are integers or rationals `p/q`.  Rotations list the half-edges at
a vertex in counterclockwise order.  The serializer reproduces input up to
whitespace.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from fractions import Fraction

from .graphs import (
    Dart,
    ElasticStructure,
    GraphError,
    MultiCurve,
    RibbonGraph,
    dart_token,
    parse_dart,
)


class ParseError(ValueError):
    def __init__(self, lineno: int, message: str):
        super().__init__(f"line {lineno}: {message}")
        self.lineno = lineno


@dataclass
class MapData:
    """Raw parsed graph map, resolved later against its graphs."""

    name: str
    source: str
    target: str
    vertex_image: dict[str, str] = field(default_factory=dict)
    edge_image: dict[str, tuple[Dart, ...]] = field(default_factory=dict)


@dataclass
class VendData:
    name: str
    graph0: str
    graph1: str
    pi: str
    phi: str
    tree: tuple[str, ...] = ()


@dataclass
class TrainTrackData:
    name: str
    graph: str
    gates: dict[str, tuple[tuple[Dart, ...], ...]] = field(default_factory=dict)


@dataclass
class CurveData:
    name: str
    graph: str
    components: list[tuple[Dart, ...]] = field(default_factory=list)


@dataclass
class Workspace:
    """Named objects parsed from one or more description files."""

    graphs: dict[str, tuple[RibbonGraph, ElasticStructure]] = field(default_factory=dict)
    maps: dict[str, MapData] = field(default_factory=dict)
    vends: dict[str, VendData] = field(default_factory=dict)
    traintracks: dict[str, TrainTrackData] = field(default_factory=dict)
    curves: dict[str, CurveData] = field(default_factory=dict)

    def curve(self, name: str) -> MultiCurve:
        cd = self.curves[name]
        graph, _ = self.graphs[cd.graph]
        return MultiCurve(graph, cd.components)


_SECTION = re.compile(r"^\[(\w+)\s+(.*)\]$")


def parse_workspace(text: str, into: Workspace | None = None) -> Workspace:
    ws = into if into is not None else Workspace()
    section: tuple[str, ...] | None = None
    # builders for the current graph section
    gverts: list[str] = []
    grot: dict[str, list[Dart]] = {}
    gedges: dict[str, tuple[str, str]] = {}
    glen: dict[str, Fraction] = {}
    gname = ""
    gline = 0

    def flush_graph():
        nonlocal gname
        if gname:
            try:
                graph = RibbonGraph(gverts, gedges, grot)
                elastic = ElasticStructure(graph, glen)
            except GraphError as exc:
                raise ParseError(gline, f"graph {gname}: {exc}") from exc
            if gname in ws.graphs:
                raise ParseError(gline, f"duplicate graph name {gname}")
            ws.graphs[gname] = (graph, elastic)
        gname = ""
        gverts.clear()
        grot.clear()
        gedges.clear()
        glen.clear()

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        m = _SECTION.match(line)
        if m:
            flush_graph()
            kind, rest = m.group(1), m.group(2).split()
            if kind == "graph":
                if len(rest) != 1:
                    raise ParseError(lineno, "[graph NAME]")
                section = ("graph",)
                gname, gline = rest[0], lineno
            elif kind == "map":
                if len(rest) != 5 or rest[1] != "from" or rest[3] != "to":
                    raise ParseError(lineno, "[map NAME from G1 to G2]")
                name = rest[0]
                if name in ws.maps:
                    raise ParseError(lineno, f"duplicate map name {name}")
                ws.maps[name] = MapData(name, rest[2], rest[4])
                section = ("map", name)
            elif kind == "vend":
                if len(rest) != 5:
                    raise ParseError(lineno, "[vend NAME graph0 graph1 pi phi]")
                name = rest[0]
                if name in ws.vends:
                    raise ParseError(lineno, f"duplicate vend name {name}")
                ws.vends[name] = VendData(name, *rest[1:])
                section = ("vend", name)
            elif kind == "traintrack":
                if len(rest) != 3 or rest[1] != "graph":
                    raise ParseError(lineno, "[traintrack NAME graph G]")
                name = rest[0]
                ws.traintracks[name] = TrainTrackData(name, rest[2])
                section = ("traintrack", name)
            elif kind == "curve":
                if len(rest) != 3 or rest[1] != "on":
                    raise ParseError(lineno, "[curve NAME on G]")
                name = rest[0]
                ws.curves[name] = CurveData(name, rest[2])
                section = ("curve", name)
            else:
                raise ParseError(lineno, f"unknown section kind {kind}")
            continue
        if section is None:
            raise ParseError(lineno, "content before any section header")
        kind = section[0]
        try:
            if kind == "graph":
                _parse_graph_line(line, lineno, gverts, grot, gedges, glen)
            elif kind == "map":
                _parse_map_line(line, lineno, ws.maps[section[1]])
            elif kind == "vend":
                _parse_vend_line(line, lineno, ws.vends[section[1]])
            elif kind == "traintrack":
                _parse_tt_line(line, lineno, ws.traintracks[section[1]])
            elif kind == "curve":
                _parse_curve_line(line, lineno, ws.curves[section[1]])
        except ParseError:
            raise
        except (ValueError, KeyError) as exc:
            raise ParseError(lineno, str(exc)) from exc
    flush_graph()
    return ws


def _parse_graph_line(line, lineno, gverts, grot, gedges, glen):
    parts = line.split()
    if parts[0] == "vertex":
        if len(parts) < 3 or parts[2] != "rotation:":
            raise ParseError(lineno, "vertex ID rotation: h1 h2 ...")
        v = parts[1]
        if v in grot:
            raise ParseError(lineno, f"duplicate vertex {v}")
        gverts.append(v)
        grot[v] = [_parse_half_edge(tok, lineno) for tok in parts[3:]]
    elif parts[0] == "edge":
        if len(parts) != 6 or parts[4] != "length":
            raise ParseError(lineno, "edge ID V1 V2 length L")
        e = parts[1]
        if e in gedges:
            raise ParseError(lineno, f"duplicate edge {e}")
        gedges[e] = (parts[2], parts[3])
        try:
            glen[e] = Fraction(parts[5])
        except (ValueError, ZeroDivisionError) as exc:
            raise ParseError(lineno, f"bad length {parts[5]}") from exc
    else:
        raise ParseError(lineno, f"unknown graph line {parts[0]!r}")


def _parse_half_edge(tok: str, lineno: int) -> Dart:
    if not (tok.endswith("+") or tok.endswith("-")):
        raise ParseError(lineno, f"half-edge token {tok!r} needs a +/- suffix")
    return parse_dart(tok)


def _parse_map_line(line, lineno, md: MapData):
    parts = line.split()
    if len(parts) < 3 or parts[1 if parts[0] == "vertex" else 2] != "->" and "->" not in parts:
        raise ParseError(lineno, "expected `vertex v -> w` or `edge e -> path`")
    if parts[0] == "vertex":
        if len(parts) != 4 or parts[2] != "->":
            raise ParseError(lineno, "vertex v -> w")
        md.vertex_image[parts[1]] = parts[3]
    elif parts[0] == "edge":
        if len(parts) < 4 or parts[2] != "->":
            raise ParseError(lineno, "edge e -> d1 d2 ... | .")
        if parts[3] == "." and len(parts) == 4:
            md.edge_image[parts[1]] = ()
        else:
            md.edge_image[parts[1]] = tuple(parse_dart(t) for t in parts[3:])
    else:
        raise ParseError(lineno, f"unknown map line {parts[0]!r}")


def _parse_vend_line(line, lineno, vd: VendData):
    parts = line.split()
    if parts[0] == "tree:":
        vd.tree = tuple(parts[1:])
    else:
        raise ParseError(lineno, f"unknown vend line {parts[0]!r}")


def _parse_tt_line(line, lineno, td: TrainTrackData):
    m = re.match(r"^gates\s+(\S+)\s*:\s*(.*)$", line)
    if not m:
        raise ParseError(lineno, "gates v: {h1 h2} {h3}")
    v, rest = m.group(1), m.group(2)
    groups = re.findall(r"\{([^{}]*)\}", rest)
    if not groups:
        raise ParseError(lineno, "gates need at least one {...} class")
    td.gates[v] = tuple(
        tuple(_parse_half_edge(tok, lineno) for tok in g.split()) for g in groups
    )


def _parse_curve_line(line, lineno, cd: CurveData):
    parts = line.split()
    if parts[0] != "component:":
        raise ParseError(lineno, f"unknown curve line {parts[0]!r}")
    cd.components.append(tuple(parse_dart(t) for t in parts[1:]))


# --------------------------------------------------------------------------
# Serialization


def serialize_graph(name: str, graph: RibbonGraph, elastic: ElasticStructure) -> str:
    lines = [f"[graph {name}]"]
    for v in graph.vertices:
        rot = " ".join(dart_token(d) for d in graph.rotation[v])
        lines.append(f"vertex {v} rotation: {rot}")
    for e in graph.edges:
        t, h = graph.edge_ends[e]
        lines.append(f"edge {e} {t} {h} length {elastic.alpha[e]}")
    return "\n".join(lines) + "\n"


def serialize_map(md: MapData) -> str:
    lines = [f"[map {md.name} from {md.source} to {md.target}]"]
    for v, w in md.vertex_image.items():
        lines.append(f"vertex {v} -> {w}")
    for e, path in md.edge_image.items():
        body = " ".join(dart_token(d) for d in path) if path else "."
        lines.append(f"edge {e} -> {body}")
    return "\n".join(lines) + "\n"
