"""Graph maps, covering maps, fiber products, path lifting and foldings."""
from __future__ import annotations

import hashlib
from collections import Counter
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

from . import embedding
from .graphs import (
    Dart,
    EdgePath,
    ElasticStructure,
    GraphError,
    MultiCurve,
    RibbonGraph,
    canonical_loop,
    cyclic_reduce,
    dart_token,
    invert_word,
    reduce_word,
    rev,
)


class GraphMap:
    """Map sending vertices to vertices and edges to taut edge paths.

    An empty image path collapses the edge; its endpoints must then share
    an image vertex.
    """

    def __init__(
        self,
        source: RibbonGraph,
        target: RibbonGraph,
        vertex_image: Mapping[str, str],
        edge_image: Mapping[str, Sequence[Dart]],
        tighten: bool = True,
    ):
        self.source = source
        self.target = target
        self.vertex_image = dict(vertex_image)
        for v in source.vertices:
            if v not in self.vertex_image:
                raise GraphError(f"no image for vertex {v}")
            if self.vertex_image[v] not in target.rotation:
                raise GraphError(f"vertex {v} maps to unknown vertex")
        self.edge_image: dict[str, tuple[Dart, ...]] = {}
        for e in source.edges:
            if e not in edge_image:
                raise GraphError(f"no image for edge {e}")
            path = tuple(edge_image[e])
            if tighten:
                path = reduce_word(path)
            t, h = source.edge_ends[e]
            want_from, want_to = self.vertex_image[t], self.vertex_image[h]
            if path:
                EdgePath(target, path)  # validates incidence
                if target.at(path[0]) != want_from or target.head(path[-1]) != want_to:
                    raise GraphError(f"image of edge {e} joins the wrong vertices")
            elif want_from != want_to:
                raise GraphError(f"collapsed edge {e} with distinct image endpoints")
            self.edge_image[e] = path

    def dart_path(self, d: Dart) -> tuple[Dart, ...]:
        path = self.edge_image[d[0]]
        return path if d[1] > 0 else invert_word(path)

    def word_image(self, word: Sequence[Dart], cyclic: bool = False) -> tuple[Dart, ...]:
        out: list[Dart] = []
        for d in word:
            out.extend(self.dart_path(d))
        return cyclic_reduce(out) if cyclic else reduce_word(out)

    def path_image(self, p: EdgePath) -> EdgePath:
        return EdgePath(
            self.target, self.word_image(p.steps), self.vertex_image[p.basepoint]
        )

    def is_identity_like(self) -> bool:
        return (
            self.source is self.target
            and all(self.vertex_image[v] == v for v in self.source.vertices)
            and all(self.edge_image[e] == ((e, 1),) for e in self.source.edges)
        )

    def __repr__(self) -> str:
        return f"GraphMap({self.source!r}->{self.target!r})"


def identity_map(graph: RibbonGraph) -> GraphMap:
    return GraphMap(
        graph,
        graph,
        {v: v for v in graph.vertices},
        {e: ((e, 1),) for e in graph.edges},
    )


def compose(outer: GraphMap, inner: GraphMap) -> GraphMap:
    """outer after inner, tightened."""
    if inner.target is not outer.source:
        raise GraphError("composition needs matching middle graph")
    return GraphMap(
        inner.source,
        outer.target,
        {v: outer.vertex_image[inner.vertex_image[v]] for v in inner.source.vertices},
        {e: outer.word_image(inner.edge_image[e]) for e in inner.source.edges},
    )


class Covering:
    """A graph map that is a covering: edges to single edges, stars bijective."""

    def __init__(self, gmap: GraphMap):
        self.map = gmap
        self.source = gmap.source
        self.target = gmap.target
        for e in self.source.edges:
            if len(gmap.edge_image[e]) != 1:
                raise GraphError(f"edge {e} does not map to a single edge")
        # star bijectivity
        self._lift: dict[tuple[Dart, str], Dart] = {}
        for v in self.source.vertices:
            w = gmap.vertex_image[v]
            images = [self.dart_image(d) for d in self.source.rotation[v]]
            if sorted(images) != sorted(self.target.rotation[w]):
                raise GraphError(f"star of {v} is not bijective onto star of {w}")
            for d, im in zip(self.source.rotation[v], images):
                self._lift[(im, v)] = d
        # constant fiber cardinality per target component
        fiber_count: Counter = Counter()
        for v in self.source.vertices:
            fiber_count[gmap.vertex_image[v]] += 1
        self._degree_of: dict[frozenset[str], int] = {}
        for comp in self.target.components():
            sizes = {fiber_count[w] for w in comp}
            if len(sizes) != 1 or 0 in sizes:
                raise GraphError("fiber cardinality is not constant on a component")
            self._degree_of[comp] = sizes.pop()

    # -- queries ------------------------------------------------------------

    def dart_image(self, d: Dart) -> Dart:
        im = self.map.edge_image[d[0]][0]
        return im if d[1] > 0 else rev(im)

    def vertex_image(self, v: str) -> str:
        return self.map.vertex_image[v]

    def degree(self) -> int:
        degs = set(self._degree_of.values())
        if len(degs) != 1:
            raise GraphError("covering degree differs between components")
        return degs.pop()

    def fiber(self, w: str) -> tuple[str, ...]:
        return tuple(
            sorted(v for v in self.source.vertices if self.map.vertex_image[v] == w)
        )

    def edge_fiber(self, e: str) -> tuple[str, ...]:
        return tuple(
            sorted(
                e1 for e1 in self.source.edges if self.map.edge_image[e1][0][0] == e
            )
        )

    def lift_dart(self, d: Dart, at_vertex: str) -> Dart:
        key = (d, at_vertex)
        if key not in self._lift:
            raise GraphError(
                f"{at_vertex} is not in the fiber over {dart_token(d)}'s start"
            )
        return self._lift[key]

    def lift_word(self, word: Sequence[Dart], start: str) -> tuple[Dart, ...]:
        out = []
        v = start
        for d in word:
            ld = self.lift_dart(d, v)
            out.append(ld)
            v = self.source.head(ld)
        return tuple(out)

    def lift_endpoint(self, word: Sequence[Dart], start: str) -> str:
        v = start
        for d in word:
            v = self.source.head(self.lift_dart(d, v))
        return v

    def pullback_elastic(self, elastic: ElasticStructure) -> ElasticStructure:
        return ElasticStructure(
            self.source,
            {e: elastic.alpha[self.map.edge_image[e][0][0]] for e in self.source.edges},
        )

    def pullback_rotation_of(self, base: RibbonGraph) -> dict[str, tuple[Dart, ...]]:
        """Rotation system on the source lifting the target's ribbon structure."""
        rot = {}
        for v in self.source.vertices:
            w = self.map.vertex_image[v]
            rot[v] = tuple(self.lift_dart(d, v) for d in base.rotation[w])
        return rot


def validate_covering(gmap: GraphMap) -> Covering:
    return Covering(gmap)


def lift_path(pi: Covering, p: EdgePath, start: str) -> EdgePath:
    if pi.vertex_image(start) != p.basepoint:
        raise GraphError(f"{start} does not lie over the basepoint {p.basepoint}")
    return EdgePath(pi.source, pi.lift_word(p.steps, start), start)


# --------------------------------------------------------------------------
# Fiber products


def _short_name(name: str) -> str:
    if len(name) <= 48:
        return name
    return name[:12] + "~" + hashlib.sha1(name.encode()).hexdigest()[:10]


@dataclass
class Pullback:
    graph: RibbonGraph
    elastic: ElasticStructure
    projection: Covering  # onto g's source, degree = deg(pi)
    lifted: GraphMap  # into pi's source, with pi . lifted == g . projection


def pullback_cover(
    pi: Covering, g: GraphMap, elastic_on_source: ElasticStructure
) -> Pullback:
    """Fiber product of the covering pi with an arbitrary map g into its target.

    Points are pairs (point of g's source, point of pi's source) with equal
    images.  Combinatorially: one vertex (w, y) per fiber point over g(w),
    and one edge per (edge of g's source, lift of its image path).  The
    projection is a covering of the same degree as pi, length-preserving
    for the pulled-back elastic structure; `pi . lifted == g . projection`
    holds edge path by edge path with no tightening.
    """
    if g.target is not pi.target:
        raise GraphError("pullback needs g and pi to share a target")
    W, Y = g.source, pi.source
    vnames: dict[tuple[str, str], str] = {}
    for w in W.vertices:
        for y in pi.fiber(g.vertex_image[w]):
            vnames[(w, y)] = _short_name(f"{w}|{y}")
    if len(set(vnames.values())) != len(vnames):
        raise GraphError("name collision in fiber product")
    edge_ends: dict[str, tuple[str, str]] = {}
    enames: dict[tuple[str, str], str] = {}
    lifted_paths: dict[str, tuple[Dart, ...]] = {}
    head_lookup: dict[tuple[str, str], str] = {}
    for eps in W.edges:
        w0, w1 = W.edge_ends[eps]
        path = g.edge_image[eps]
        for y0 in pi.fiber(g.vertex_image[w0]):
            name = _short_name(f"{eps}|{y0}")
            lifted = pi.lift_word(path, y0)
            y1 = Y.head(lifted[-1]) if lifted else y0
            enames[(eps, y0)] = name
            edge_ends[name] = (vnames[(w0, y0)], vnames[(w1, y1)])
            lifted_paths[name] = lifted
            head_lookup[(eps, y1)] = name
    # rotation pulled back through the projection
    rotation: dict[str, list[Dart]] = {}
    for (w, y), vn in vnames.items():
        rot = []
        for d in W.rotation[w]:
            eps = d[0]
            if d[1] > 0:
                rot.append((enames[(eps, y)], 1))
            else:
                rot.append((head_lookup[(eps, y)], -1))
        rotation[vn] = rot
    Z = RibbonGraph(sorted(vnames.values()), edge_ends, rotation)
    elastic_Z = ElasticStructure(
        Z,
        {
            enames[(eps, y0)]: elastic_on_source.alpha[eps]
            for (eps, y0) in enames
        },
    )
    proj = validate_covering(
        GraphMap(
            Z,
            W,
            {vn: w for (w, y), vn in vnames.items()},
            {enames[(eps, y0)]: ((eps, 1),) for (eps, y0) in enames},
        )
    )
    lifted_map = GraphMap(
        Z,
        Y,
        {vn: y for (w, y), vn in vnames.items()},
        lifted_paths,
        tighten=False,
    )
    return Pullback(Z, elastic_Z, proj, lifted_map)


def subdivide_to_edge_maps(
    g: GraphMap, elastic: ElasticStructure
) -> tuple[GraphMap, ElasticStructure]:
    """Subdivide g's source so every edge maps to at most one edge.

    An edge with an image path of length k >= 2 splits into k equal pieces;
    collapsed edges and single-edge images stay whole.
    """
    W = g.source
    vertices = list(W.vertices)
    edge_ends: dict[str, tuple[str, str]] = {}
    edge_image: dict[str, tuple[Dart, ...]] = {}
    alpha: dict[str, Fraction] = {}
    # rotation: replace each dart by the dart of its end piece
    tail_dart: dict[str, Dart] = {}
    head_dart: dict[str, Dart] = {}
    for e in W.edges:
        t, h = W.edge_ends[e]
        path = g.edge_image[e]
        k = len(path)
        if k <= 1:
            edge_ends[e] = (t, h)
            edge_image[e] = path
            alpha[e] = elastic.alpha[e]
            tail_dart[e], head_dart[e] = (e, 1), (e, -1)
            continue
        prev = t
        for i in range(k):
            piece = _short_name(f"{e}.{i}")
            nxt = h if i == k - 1 else _short_name(f"{e}.v{i}")
            if i < k - 1:
                vertices.append(nxt)
            edge_ends[piece] = (prev, nxt)
            edge_image[piece] = (path[i],)
            alpha[piece] = elastic.alpha[e] / k
            prev = nxt
        tail_dart[e] = (_short_name(f"{e}.0"), 1)
        head_dart[e] = (_short_name(f"{e}.{k - 1}"), -1)
    rotation: dict[str, Sequence[Dart]] = {}
    for v in W.vertices:
        rotation[v] = [
            tail_dart[d[0]] if d[1] > 0 else head_dart[d[0]] for d in W.rotation[v]
        ]
    for e in W.edges:
        k = len(g.edge_image[e])
        for i in range(k - 1):
            mid = _short_name(f"{e}.v{i}")
            rotation[mid] = [
                (_short_name(f"{e}.{i}"), -1),
                (_short_name(f"{e}.{i + 1}"), 1),
            ]
    W2 = RibbonGraph(vertices, edge_ends, rotation)
    g2 = GraphMap(
        W2,
        g.target,
        _subdivided_vertex_images(W2, g, edge_image),
        edge_image,
        tighten=False,
    )
    return g2, ElasticStructure(W2, alpha)


def _subdivided_vertex_images(W2, g, edge_image):
    out = {}
    for v in W2.vertices:
        if v in g.vertex_image:
            out[v] = g.vertex_image[v]
    # midpoint vertices: image read off the adjacent piece
    for piece, (t, h) in W2.edge_ends.items():
        if not edge_image[piece]:
            continue
        if h not in out:
            out[h] = g.target.head(edge_image[piece][0])
        if t not in out:
            out[t] = g.target.at(edge_image[piece][0])
    return out


# --------------------------------------------------------------------------
# Curves under coverings and maps


def pullback_components(pi: Covering, word: Sequence[Dart]) -> list[tuple[tuple[Dart, ...], int]]:
    """Components of the full preimage of a loop, with covering degrees.

    The fiber over the loop's basepoint splits into orbits of the loop's
    lifting action; an orbit of size k yields one component covering the
    loop with degree k.
    """
    base = pi.target.at(word[0])
    fiber = list(pi.fiber(base))
    act = {y: pi.lift_endpoint(word, y) for y in fiber}
    out = []
    seen: set[str] = set()
    for y in fiber:
        if y in seen:
            continue
        orbit = [y]
        z = act[y]
        while z != y:
            orbit.append(z)
            z = act[z]
        seen.update(orbit)
        lifted: list[Dart] = []
        for z in orbit:
            lifted.extend(pi.lift_word(word, z))
        out.append((tuple(lifted), len(orbit)))
    return out


def pullback_curve(pi: Covering, c: MultiCurve) -> MultiCurve:
    comps = []
    for w in c.components:
        comps.extend(word for word, _ in pullback_components(pi, w))
    return MultiCurve(pi.source, comps)


def pushforward_curve(phi: GraphMap, c: MultiCurve) -> MultiCurve:
    """Componentwise word substitution and cyclic reduction.

    Null-homotopic components drop out; parallel components are kept as a
    multiset (joining is a separate, weighted operation).
    """
    comps = []
    for w in c.components:
        image = phi.word_image(w, cyclic=True)
        if image:
            comps.append(image)
    return MultiCurve(phi.target, comps)


# --------------------------------------------------------------------------
# Stallings folding


@dataclass
class FoldingResult:
    core_edges: tuple[tuple[int, str, int], ...]  # (vertex, generator, vertex)
    rank: int
    is_whole_group: bool


def spanning_tree(graph: RibbonGraph, root: str | None = None, order=None) -> set[str]:
    """BFS spanning tree (edge set) of the component of `root`."""
    if root is None:
        root = min(graph.vertices)
    prefer = order if order is not None else sorted(graph.edges)
    rank = {e: i for i, e in enumerate(prefer)}
    tree: set[str] = set()
    visited = {root}
    frontier = [root]
    while frontier:
        nxt = []
        for v in frontier:
            for d in sorted(graph.rotation[v], key=lambda d: (rank[d[0]], d[1])):
                w = graph.head(d)
                if w not in visited:
                    visited.add(w)
                    tree.add(d[0])
                    nxt.append(w)
        frontier = nxt
    return tree


def tree_path(graph: RibbonGraph, tree: set[str], u: str, v: str) -> tuple[Dart, ...]:
    """The unique reduced path from u to v inside a spanning tree."""
    if u == v:
        return ()
    parent: dict[str, Dart] = {}
    visited = {u}
    frontier = [u]
    while frontier and v not in visited:
        nxt = []
        for x in frontier:
            for d in graph.rotation[x]:
                if d[0] in tree:
                    w = graph.head(d)
                    if w not in visited:
                        visited.add(w)
                        parent[w] = d
                        nxt.append(w)
        frontier = nxt
    if v not in visited:
        raise GraphError("tree does not span both vertices")
    path = []
    x = v
    while x != u:
        d = parent[x]
        path.append(d)
        x = graph.at(d)
    return tuple(reversed(path))


def fold_words(words: Sequence[Sequence[tuple[str, int]]], generators: Sequence[str]) -> FoldingResult:
    """Stallings folding of the wedge of the given words.

    Words are sequences of (generator, +-1).  The folded, trimmed core is
    the whole free group iff it is the rose carrying every generator once.
    """
    parent = list(range(1))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    def union(x, y):
        rx, ry = find(x), find(y)
        if rx != ry:
            parent[max(rx, ry)] = min(rx, ry)

    def new_vertex():
        parent.append(len(parent))
        return len(parent) - 1

    edges: list[tuple[int, str, int]] = []  # (from, label, to), oriented
    base = 0
    for word in words:
        prev = base
        for i, (g, s) in enumerate(word):
            nxt = base if i == len(word) - 1 else new_vertex()
            if s > 0:
                edges.append((prev, g, nxt))
            else:
                edges.append((nxt, g, prev))
            prev = nxt
    # fold to stability
    changed = True
    while changed:
        changed = False
        canon = [(find(a), g, find(b)) for (a, g, b) in edges]
        # drop duplicates
        canon = sorted(set(canon))
        out_map: dict[tuple[int, str], int] = {}
        in_map: dict[tuple[int, str], int] = {}
        for a, g, b in canon:
            if (a, g) in out_map and out_map[(a, g)] != b:
                union(out_map[(a, g)], b)
                changed = True
                break
            out_map[(a, g)] = b
            if (b, g) in in_map and in_map[(b, g)] != a:
                union(in_map[(b, g)], a)
                changed = True
                break
            in_map[(b, g)] = a
        edges = canon
    edges = sorted(set((find(a), g, find(b)) for (a, g, b) in edges))
    # trim: repeatedly remove degree-1 vertices other than the basepoint
    while True:
        deg: Counter = Counter()
        for a, g, b in edges:
            deg[a] += 1
            deg[b] += 1
        drop = {v for v, k in deg.items() if k == 1 and v != find(base)}
        if not drop:
            break
        edges = [(a, g, b) for (a, g, b) in edges if a not in drop and b not in drop]
    verts = {find(base)} | {v for (a, g, b) in edges for v in (a, b)}
    rank = len(edges) - len(verts) + 1
    labels = Counter(g for _, g, _ in edges)
    whole = (
        len(verts) == 1
        and all(labels[g] == 1 for g in generators)
        and sum(labels.values()) == len(generators)
    )
    return FoldingResult(tuple(edges), rank, whole)


def pi1_surjective(
    phi: GraphMap,
    source_tree: set[str] | None = None,
    target_tree: set[str] | None = None,
) -> tuple[bool, FoldingResult]:
    """Whether the induced map on fundamental groups is onto.

    Generator images are folded; the map is onto iff the folded core is the
    full rose on the target's non-tree edges.  Disconnected graphs are
    handled per matched component, returning the conjunction (the folding
    data is for the first component).
    """
    src_comps = phi.source.components()
    results = []
    overall = True
    for comp in src_comps:
        root = min(comp)
        base_target = phi.vertex_image[root]
        t_comp = next(
            c for c in phi.target.components() if base_target in c
        )
        stree = (
            {e for e in source_tree if phi.source.edge_ends[e][0] in comp}
            if source_tree is not None
            else spanning_tree(phi.source, root)
        )
        ttree = (
            {e for e in target_tree if phi.target.edge_ends[e][0] in t_comp}
            if target_tree is not None
            else spanning_tree(phi.target, base_target)
        )
        generators = sorted(
            e
            for e in phi.target.edges
            if e not in ttree and phi.target.edge_ends[e][0] in t_comp
        )
        words = []
        for e in sorted(phi.source.edges):
            if e in stree or phi.source.edge_ends[e][0] not in comp:
                continue
            u, v = phi.source.edge_ends[e]
            loop = (
                tree_path(phi.source, stree, root, u)
                + ((e, 1),)
                + tree_path(phi.source, stree, v, root)
            )
            image = phi.word_image(loop)
            words.append([(d[0], d[1]) for d in image if d[0] not in ttree])
        res = fold_words(words, generators)
        results.append(res)
        overall = overall and res.is_whole_group
    return overall, results[0] if results else FoldingResult((), 0, True)


# --------------------------------------------------------------------------
# Ribbon maps


def strand_system(phi: GraphMap) -> embedding.StrandSystem:
    """Strands and disk objects induced by a graph map between ribbon graphs."""
    target = phi.target
    strands: dict[str, list] = {e: [] for e in target.edges}
    for e in sorted(phi.source.edges):
        for i, d in enumerate(phi.edge_image[e]):
            strands[d[0]].append((e, i))
    disks: dict[str, list[embedding.DiskObject]] = {w: [] for w in target.vertices}

    def strand_end_slot(strand, at_start: bool):
        e, i = strand
        d = phi.edge_image[e][i]
        return (d, strand) if at_start else (rev(d), strand)

    # passages between consecutive steps
    for e in sorted(phi.source.edges):
        path = phi.edge_image[e]
        for i in range(len(path) - 1):
            w = target.head(path[i])
            disks[w].append(
                embedding.DiskObject(
                    slots=(strand_end_slot((e, i), False), strand_end_slot((e, i + 1), True)),
                )
            )
    # source-vertex clusters, merged along collapsed edges
    cluster_of: dict[str, int] = {}
    clusters: list[set[str]] = []
    for v in sorted(phi.source.vertices):
        if v in cluster_of:
            continue
        group = {v}
        stack = [v]
        while stack:
            x = stack.pop()
            for d in phi.source.rotation[x]:
                if not phi.edge_image[d[0]]:
                    y = phi.source.head(d)
                    if y not in group:
                        group.add(y)
                        stack.append(y)
        idx = len(clusters)
        clusters.append(group)
        for x in group:
            cluster_of[x] = idx
    for group in clusters:
        w = phi.vertex_image[min(group)]
        rotation = {}
        legs = {}
        internal = {}
        slots = []
        for v in sorted(group):
            rot = []
            for d in phi.source.rotation[v]:
                path = phi.dart_path(d)
                if path:
                    leg_id = ("leg", d)
                    rot.append((leg_id, 0))
                    e = d[0]
                    strand = (e, 0) if d[1] > 0 else (e, len(phi.edge_image[e]) - 1)
                    slot = (path[0], strand)
                    legs[leg_id] = (v, slot)
                    slots.append(slot)
                else:
                    eid = ("col", d[0])
                    side = 0 if d[1] > 0 else 1
                    rot.append((eid, side))
                    internal[eid] = phi.source.edge_ends[d[0]]
            rotation[v] = tuple(rot)
        disks[w].append(
            embedding.DiskObject(
                slots=tuple(slots),
                chord=False,
                nodes=tuple(sorted(group)),
                rotation=rotation,
                internal_edges=tuple(
                    (eid, ends[0], ends[1]) for eid, ends in sorted(internal.items())
                ),
                legs=legs,
            )
        )
    return embedding.StrandSystem(
        target=target,
        strands={e: tuple(ss) for e, ss in strands.items()},
        disks=disks,
    )


@dataclass
class RibbonVerdict:
    ok: bool | None  # None means the search budget ran out
    witness: dict[str, tuple] | None
    nodes_visited: int = 0


def is_ribbon_map(phi: GraphMap, budget: int | None = 200_000) -> RibbonVerdict:
    """Search for strand orders certifying an embedded thickening.

    Returns ok=True with an order witness, ok=False when the search space
    is exhausted, or ok=None ("unknown") when the node budget runs out.
    """
    system = strand_system(phi)
    result = embedding.search_orders(system, budget)
    if result is None:
        return RibbonVerdict(None, None)
    if result is False:
        return RibbonVerdict(False, None)
    return RibbonVerdict(True, result.orders, result.nodes_visited)
