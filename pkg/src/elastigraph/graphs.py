"""Ribbon graphs with exact rational edge lengths, edge paths and curves.

A graph is stored as a combinatorial map: each edge contributes two darts
(directed edges), and every vertex carries a counterclockwise cyclic order
of the darts attached to it.  Faces are the orbits of "rotation after
flip"; the thickened surface has one boundary circle per face, so genus
falls out of the Euler count.

All lengths are `fractions.Fraction` end to end; nothing in this module
touches floating point.
"""
from __future__ import annotations

import itertools
from collections import Counter
from fractions import Fraction
from typing import Iterable, Iterator, Mapping, Sequence

#: A dart is a directed edge: (edge id, +1) runs tail -> head, (edge id, -1)
#: runs head -> tail.  The dart (e, +1) is attached at the tail vertex.
Dart = tuple[str, int]


class GraphError(ValueError):
    """Malformed graph, structure, path or curve."""


def rev(d: Dart) -> Dart:
    return (d[0], -d[1])


def dart_token(d: Dart) -> str:
    return d[0] + ("+" if d[1] > 0 else "-")


def parse_dart(token: str) -> Dart:
    if token.endswith("+"):
        return (token[:-1], 1)
    if token.endswith("-"):
        return (token[:-1], -1)
    # bare edge name means forward traversal
    return (token, 1)


def word_token(word: Sequence[Dart]) -> str:
    return ".".join(dart_token(d) for d in word) if word else "(trivial)"


class RibbonGraph:
    """Combinatorial map: paired darts plus a rotation system.

    `edge_ends[e] = (tail, head)`; `rotation[v]` lists the darts attached at
    `v` in counterclockwise order.  A loop at `v` has both of its darts in
    `rotation[v]`.
    """

    def __init__(
        self,
        vertices: Iterable[str],
        edge_ends: Mapping[str, tuple[str, str]],
        rotation: Mapping[str, Sequence[Dart]],
    ):
        self.vertices: tuple[str, ...] = tuple(vertices)
        if len(set(self.vertices)) != len(self.vertices):
            raise GraphError("duplicate vertex names")
        vset = set(self.vertices)
        self.edge_ends: dict[str, tuple[str, str]] = dict(edge_ends)
        for e, (t, h) in self.edge_ends.items():
            if t not in vset or h not in vset:
                raise GraphError(f"edge {e} has dangling endpoint")
        self.edges: tuple[str, ...] = tuple(sorted(self.edge_ends))
        self.rotation: dict[str, tuple[Dart, ...]] = {
            v: tuple(rotation.get(v, ())) for v in self.vertices
        }
        if set(rotation) - vset:
            raise GraphError(f"rotation given for unknown vertex {set(rotation) - vset}")
        # every dart appears exactly once, at the vertex it is attached to
        expected: dict[str, set[Dart]] = {v: set() for v in self.vertices}
        for e, (t, h) in self.edge_ends.items():
            expected[t].add((e, 1))
            expected[h].add((e, -1))
        for v in self.vertices:
            rot = self.rotation[v]
            if len(set(rot)) != len(rot):
                raise GraphError(f"rotation at {v} repeats a half-edge")
            if set(rot) != expected[v]:
                missing = expected[v] - set(rot)
                extra = set(rot) - expected[v]
                raise GraphError(
                    f"rotation at {v} is not a permutation of its star"
                    f" (missing {sorted(missing)}, extra {sorted(extra)})"
                )
        self._pos: dict[Dart, tuple[str, int]] = {}
        for v in self.vertices:
            for i, d in enumerate(self.rotation[v]):
                self._pos[d] = (v, i)

    # -- incidence ---------------------------------------------------------

    def at(self, d: Dart) -> str:
        """Vertex the dart is attached to (its start when traversed)."""
        t, h = self.edge_ends[d[0]]
        return t if d[1] > 0 else h

    def head(self, d: Dart) -> str:
        return self.at(rev(d))

    def darts(self) -> Iterator[Dart]:
        for e in self.edges:
            yield (e, 1)
            yield (e, -1)

    def star(self, v: str) -> tuple[Dart, ...]:
        return self.rotation[v]

    def rotation_next(self, d: Dart) -> Dart:
        v, i = self._pos[d]
        rot = self.rotation[v]
        return rot[(i + 1) % len(rot)]

    def degree(self, v: str) -> int:
        return len(self.rotation[v])

    # -- faces, components, genus -----------------------------------------

    def next_in_face(self, d: Dart) -> Dart:
        return self.rotation_next(rev(d))

    def faces(self) -> tuple[tuple[Dart, ...], ...]:
        """Boundary walks of the ribbon surface, as orbits of next_in_face.

        Each dart lies in exactly one face walk.  Walks are rotated to start
        at their smallest dart and the list is sorted, so output is canonical.
        """
        seen: set[Dart] = set()
        out = []
        for d0 in self.darts():
            if d0 in seen:
                continue
            walk = [d0]
            seen.add(d0)
            d = self.next_in_face(d0)
            while d != d0:
                walk.append(d)
                seen.add(d)
                d = self.next_in_face(d)
            out.append(_min_rotation(tuple(walk)))
        return tuple(sorted(out))

    def components(self) -> tuple[frozenset[str], ...]:
        remaining = set(self.vertices)
        comps = []
        adj: dict[str, set[str]] = {v: set() for v in self.vertices}
        for e, (t, h) in self.edge_ends.items():
            adj[t].add(h)
            adj[h].add(t)
        while remaining:
            root = min(remaining)
            comp = {root}
            stack = [root]
            while stack:
                v = stack.pop()
                for w in adj[v]:
                    if w not in comp:
                        comp.add(w)
                        stack.append(w)
            remaining -= comp
            comps.append(frozenset(comp))
        return tuple(sorted(comps, key=min))

    def is_connected(self) -> bool:
        return len(self.components()) <= 1

    def genus_by_component(self) -> dict[frozenset[str], int]:
        """Genus of each component of the thickened surface (Euler count)."""
        faces_of: dict[frozenset[str], int] = {}
        comps = self.components()
        comp_of = {v: c for c in comps for v in c}
        counts = {c: [len(c), 0, 0] for c in comps}  # V, E, F
        for e, (t, h) in self.edge_ends.items():
            counts[comp_of[t]][1] += 1
        for walk in self.faces():
            counts[comp_of[self.at(walk[0])]][2] += 1
        out = {}
        for c, (nv, ne, nf) in counts.items():
            chi = nv - ne + nf
            if chi % 2 != 0 or chi > 2:
                raise GraphError(f"impossible Euler characteristic {chi}")
            out[c] = (2 - chi) // 2
        return out

    def genus(self) -> int:
        """Total genus (sum over components)."""
        return sum(self.genus_by_component().values())

    # -- misc ---------------------------------------------------------------

    def with_rotation(self, rotation: Mapping[str, Sequence[Dart]]) -> "RibbonGraph":
        return RibbonGraph(self.vertices, self.edge_ends, rotation)

    def __repr__(self) -> str:
        return f"RibbonGraph({len(self.vertices)}v,{len(self.edges)}e)"

    def same_as(self, other: "RibbonGraph") -> bool:
        return (
            set(self.vertices) == set(other.vertices)
            and self.edge_ends == other.edge_ends
            and all(
                _min_rotation(self.rotation[v]) == _min_rotation(other.rotation[v])
                for v in self.vertices
            )
        )


def dart_key(d: Dart) -> tuple[str, int]:
    """Sort key putting forward darts before their reverses."""
    return (d[0], -d[1])


def _word_key(word: Sequence[Dart]) -> tuple:
    return tuple(dart_key(d) for d in word)


def _min_rotation(word: tuple) -> tuple:
    """Rotation that is least in the forward-first dart order."""
    if not word:
        return word
    return min(
        (tuple(word[i:] + word[:i]) for i in range(len(word))), key=_word_key
    )


class ElasticStructure:
    """Positive rational length alpha(e) per edge."""

    def __init__(self, graph: RibbonGraph, alpha: Mapping[str, Fraction | int | str]):
        self.graph = graph
        self.alpha: dict[str, Fraction] = {}
        for e in graph.edges:
            if e not in alpha:
                raise GraphError(f"no length for edge {e}")
            a = Fraction(alpha[e])
            if a <= 0:
                raise GraphError(f"nonpositive length on edge {e}")
            self.alpha[e] = a
        extra = set(alpha) - set(graph.edges)
        if extra:
            raise GraphError(f"lengths for unknown edges {sorted(extra)}")

    @property
    def min_length(self) -> Fraction:
        return min(self.alpha.values())

    @property
    def total_length(self) -> Fraction:
        return sum(self.alpha.values(), Fraction(0))

    def __getitem__(self, e: str) -> Fraction:
        return self.alpha[e]

    def scaled(self, k: Fraction) -> "ElasticStructure":
        return ElasticStructure(self.graph, {e: a * k for e, a in self.alpha.items()})


class PConformalStructure:
    """Edge structure for the p-energy family.

    For p > 1 each edge carries a p-length alpha(e) > 0; for p = 1 each edge
    carries a weight.  p = 2 coincides with the elastic case.  `p` may be the
    float('inf') sentinel.
    """

    def __init__(self, graph: RibbonGraph, p, alpha=None, weight=None):
        self.graph = graph
        self.p = p if p == float("inf") else Fraction(p)
        if self.p != float("inf") and self.p < 1:
            raise GraphError("p must lie in [1, oo]")
        if self.p == 1:
            if weight is None or alpha is not None:
                raise GraphError("p = 1 takes weights, not lengths")
            self.weight = {e: Fraction(w) for e, w in weight.items()}
            if set(self.weight) != set(graph.edges) or any(
                w <= 0 for w in self.weight.values()
            ):
                raise GraphError("weights must be positive and cover all edges")
            self.alpha = None
        else:
            if alpha is None or weight is not None:
                raise GraphError("p > 1 takes lengths, not weights")
            self.alpha = {e: Fraction(a) for e, a in alpha.items()}
            if set(self.alpha) != set(graph.edges) or any(
                a <= 0 for a in self.alpha.values()
            ):
                raise GraphError("lengths must be positive and cover all edges")
            self.weight = None

    def as_elastic(self) -> ElasticStructure:
        if self.p != 2:
            raise GraphError("only p = 2 coincides with the elastic structure")
        return ElasticStructure(self.graph, self.alpha)


# --------------------------------------------------------------------------
# Edge paths


class EdgePath:
    """A walk in a graph: consecutive darts share endpoints.

    The empty path needs an explicit basepoint.
    """

    def __init__(self, graph: RibbonGraph, steps: Sequence[Dart], basepoint: str | None = None):
        self.graph = graph
        self.steps: tuple[Dart, ...] = tuple(steps)
        if self.steps:
            for d in self.steps:
                if d[0] not in graph.edge_ends:
                    raise GraphError(f"path uses unknown edge {d[0]}")
            for a, b in zip(self.steps, self.steps[1:]):
                if graph.head(a) != graph.at(b):
                    raise GraphError(
                        f"non-incident consecutive steps {dart_token(a)},{dart_token(b)}"
                    )
            self.basepoint = graph.at(self.steps[0])
            if basepoint is not None and basepoint != self.basepoint:
                raise GraphError("basepoint does not match first step")
        else:
            if basepoint is None:
                raise GraphError("empty path needs a basepoint")
            if basepoint not in graph.rotation:
                raise GraphError(f"unknown basepoint {basepoint}")
            self.basepoint = basepoint

    @property
    def endpoint(self) -> str:
        return self.graph.head(self.steps[-1]) if self.steps else self.basepoint

    def reduced(self) -> "EdgePath":
        return EdgePath(self.graph, reduce_word(self.steps), self.basepoint)

    def reversed(self) -> "EdgePath":
        return EdgePath(
            self.graph, tuple(rev(d) for d in self.steps[::-1]), self.endpoint
        )

    def __len__(self) -> int:
        return len(self.steps)

    def __repr__(self) -> str:
        return f"EdgePath({word_token(self.steps)})"


def reduce_word(steps: Sequence[Dart]) -> tuple[Dart, ...]:
    """Free reduction: cancel adjacent dart/reverse pairs."""
    out: list[Dart] = []
    for d in steps:
        if out and out[-1] == rev(d):
            out.pop()
        else:
            out.append(d)
    return tuple(out)


def cyclic_reduce(word: Sequence[Dart]) -> tuple[Dart, ...]:
    w = list(reduce_word(word))
    while len(w) >= 2 and w[0] == rev(w[-1]):
        w = w[1:-1]
        w = list(reduce_word(w))
    return tuple(w)


def invert_word(word: Sequence[Dart]) -> tuple[Dart, ...]:
    return tuple(rev(d) for d in reversed(word))


def canonical_loop(word: Sequence[Dart]) -> tuple[Dart, ...]:
    """Canonical form of a cyclic word up to rotation and inversion.

    This is the normal form for a free homotopy class of an unoriented
    closed curve: cyclically reduce, then take the least rotation of the
    word and of its inverse.
    """
    w = cyclic_reduce(word)
    if not w:
        return w
    return min(_min_rotation(w), _min_rotation(invert_word(w)), key=_word_key)


def canonical_loop_oriented(word: Sequence[Dart]) -> tuple[Dart, ...]:
    """Canonical form up to rotation only (oriented free homotopy class)."""
    return _min_rotation(cyclic_reduce(word))


def check_cyclic_word(graph: RibbonGraph, word: Sequence[Dart]) -> None:
    if not word:
        return
    for a, b in zip(word, word[1:] + type(word)((word[0],))):
        if graph.head(a) != graph.at(b):
            raise GraphError(
                f"cyclic word not closed at {dart_token(a)},{dart_token(b)}"
            )


class MultiCurve:
    """Multiset of unoriented closed curves, each a canonical cyclic word."""

    def __init__(self, graph: RibbonGraph, components: Iterable[Sequence[Dart]]):
        self.graph = graph
        comps = []
        for w in components:
            for d in w:
                if d[0] not in graph.edge_ends:
                    raise GraphError(f"curve references unknown edge {d[0]}")
            check_cyclic_word(graph, tuple(w))
            c = canonical_loop(w)
            if c:
                comps.append(c)
        self.components: tuple[tuple[Dart, ...], ...] = tuple(
            sorted(comps, key=lambda w: (len(w), _word_key(w)))
        )

    @property
    def nc(self) -> Counter:
        """Edge multiplicity function: total step count over each edge."""
        n: Counter = Counter()
        for w in self.components:
            for d in w:
                n[d[0]] += 1
        return n

    def is_empty(self) -> bool:
        return not self.components

    def __len__(self) -> int:
        return len(self.components)

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, MultiCurve) and self.components == other.components
        )

    def __hash__(self):
        return hash(self.components)

    def __repr__(self) -> str:
        return "MultiCurve[" + ", ".join(word_token(w) for w in self.components) + "]"


def extremal_length(curve: MultiCurve, elastic: ElasticStructure) -> Fraction:
    """Sum of alpha(e) * n(e)^2 over edges, exactly."""
    if curve.graph is not elastic.graph and set(curve.nc) - set(elastic.alpha):
        raise GraphError("curve references an edge with no length")
    total = Fraction(0)
    for e, n in curve.nc.items():
        total += elastic.alpha[e] * n * n
    return total


def enumerate_loops(graph: RibbonGraph, max_len: int) -> list[tuple[Dart, ...]]:
    """All canonical cyclically-reduced words of length <= max_len.

    Deduplicated up to rotation and inversion; deterministic order (length,
    then lexicographic).
    """
    found: set[tuple[Dart, ...]] = set()
    darts = sorted(graph.darts())

    def extend(prefix: list[Dart]):
        if len(prefix) >= 1:
            # close up if legal
            first, last = prefix[0], prefix[-1]
            if graph.head(last) == graph.at(first):
                if len(prefix) == 1 or (last != rev(first)):
                    w = tuple(prefix)
                    if cyclic_reduce(w) == reduce_word(w):
                        # already reduced as typed, no wrap cancel
                        if len(w) == 1 or w[-1] != rev(w[0]):
                            found.add(canonical_loop(w))
        if len(prefix) == max_len:
            return
        for d in darts:
            if not prefix:
                extend([d])
            else:
                if graph.head(prefix[-1]) == graph.at(d) and d != rev(prefix[-1]):
                    prefix.append(d)
                    extend(prefix)
                    prefix.pop()

    if max_len >= 1:
        extend([])
    found.discard(())
    return sorted(found, key=lambda w: (len(w), _word_key(w)))


def enumerate_curves(
    graph: RibbonGraph, max_len: int, max_components: int = 1
) -> Iterator[MultiCurve]:
    """Stream reduced multi-curves: all multisets of <= max_components loops
    of length <= max_len each, deterministic order."""
    loops = enumerate_loops(graph, max_len)
    for k in range(1, max_components + 1):
        for combo in itertools.combinations_with_replacement(loops, k):
            yield MultiCurve(graph, combo)
