"""Strand-order search deciding when a graph map lifts to an embedding of
thickened surfaces.

A map into a ribbon graph induces, over the midpoint of each target edge,
a finite set of strands (occurrences of that edge in image paths).  The
map lifts to an embedding of ribbon thickenings iff the strands of every
edge can be linearly ordered across the band so that inside every target
vertex disk the induced chord-and-cluster diagram is realizable by
disjoint arcs.  Orders are searched by backtracking; each candidate is
checked disk by disk.

Conventions: rotations are counterclockwise; strand positions are read
left to right while walking the target edge forward.  On the boundary
circle of a vertex disk this makes a tail-end cross-section appear in
reversed position order and a head-end cross-section in increasing order.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Hashable, Iterator, Sequence

from .graphs import Dart, RibbonGraph, rev

Strand = Hashable  # opaque strand ids; (source edge, step index) in practice


@dataclass
class DiskObject:
    """One connected piece inside a target vertex disk.

    A chord is a passage of a strand band through the disk (two slots, no
    internal structure).  A cluster carries internal nodes (source vertices
    mapped to this vertex), internal edges (collapsed source edges) and
    legs from nodes to slots; `rotation` prescribes the counterclockwise
    order of cluster darts at each node.
    """

    slots: tuple[tuple[Dart, Strand], ...]
    chord: bool = True
    nodes: tuple[Hashable, ...] = ()
    rotation: dict = field(default_factory=dict)
    internal_edges: tuple[tuple[Hashable, Hashable, Hashable], ...] = ()  # (id,n1,n2)
    legs: dict = field(default_factory=dict)  # leg id -> (node, (dart, strand))


@dataclass
class StrandSystem:
    target: RibbonGraph
    strands: dict[str, tuple[Strand, ...]]  # target edge -> strand ids (unordered)
    disks: dict[str, list[DiskObject]]  # target vertex -> objects


@dataclass
class OrderWitness:
    """Left-to-right strand order per target edge, forward orientation."""

    orders: dict[str, tuple[Strand, ...]]
    nodes_visited: int = 0


class BudgetExceeded(Exception):
    pass


def _slot_sequence(
    graph: RibbonGraph, vertex: str, orders: dict[str, tuple[Strand, ...]]
) -> list[tuple[Dart, Strand] | tuple[Dart, None]]:
    """Slots on the disk boundary circle in counterclockwise order.

    Slots of an unordered edge are emitted with strand None placeholders so
    positions of ordered edges stay stable during the search.
    """
    out: list = []
    for d in graph.rotation[vertex]:
        e = d[0]
        order = orders.get(e)
        if order is None:
            continue
        if d[1] > 0:  # tail end: reversed
            out.extend((d, s) for s in reversed(order))
        else:
            out.extend((d, s) for s in order)
    return out


def _noncrossing_pair(circle_index: dict, a: DiskObject, b: DiskObject) -> bool:
    """True unless the slot sets of a and b interleave on the circle."""
    marks = sorted(
        [(circle_index[s], 0) for s in a.slots] + [(circle_index[s], 1) for s in b.slots]
    )
    labels = [l for _, l in marks]
    transitions = sum(1 for x, y in zip(labels, labels[1:] + labels[:1]) if x != y)
    return transitions <= 2


def _cluster_embeddable(obj: DiskObject, circle_index: dict) -> bool:
    """Genus-0 check plus terminal cyclic order against the circle."""
    # darts of the cluster ribbon graph
    term_rot: dict = {}
    for leg, (node, slot) in obj.legs.items():
        term_rot[("t", leg)] = ((leg, 1),)
    vert_rot = dict(obj.rotation)

    def flip(d):
        kind = d[0]
        if kind in [eid for eid, _, _ in obj.internal_edges]:
            return (d[0], 1 - d[1])
        return (d[0], 1 - d[1])

    all_rot: dict = {}
    all_rot.update(vert_rot)
    all_rot.update(term_rot)
    pos: dict = {}
    for v, rot in all_rot.items():
        for i, d in enumerate(rot):
            pos[d] = (v, i)

    def rot_next(d):
        v, i = pos[d]
        rot = all_rot[v]
        return rot[(i + 1) % len(rot)]

    seen: set = set()
    faces = []
    for d0 in pos:
        if d0 in seen:
            continue
        walk = [d0]
        seen.add(d0)
        d = rot_next(flip(d0))
        while d != d0:
            walk.append(d)
            seen.add(d)
            d = rot_next(flip(d))
        faces.append(walk)
    n_v = len(all_rot)
    n_e = len(pos) // 2
    if n_v - n_e + len(faces) != 2:
        return False  # positive genus: cannot embed in a disk
    if not obj.legs:
        return True
    # all terminals must sit on one face, in the circle's cyclic order
    want = sorted(obj.legs, key=lambda leg: circle_index[obj.legs[leg][1]])
    for walk in faces:
        visits = [d[0] for d in walk if d[1] == 1 and ("t", d[0]) in term_rot]
        if len(visits) != len(obj.legs) or set(visits) != set(obj.legs):
            continue
        idx = [circle_index[obj.legs[leg][1]] for leg in visits]
        k = idx.index(min(idx))
        if idx[k:] + idx[:k] == sorted(idx):
            return True
    return False


def _check_disk(
    graph: RibbonGraph,
    vertex: str,
    objects: Sequence[DiskObject],
    orders: dict[str, tuple[Strand, ...]],
    partial: bool,
) -> bool:
    circle = _slot_sequence(graph, vertex, orders)
    index = {slot: i for i, slot in enumerate(circle)}
    ready = []
    for obj in objects:
        if all(s in index for s in obj.slots):
            ready.append(obj)
        elif not partial:
            raise AssertionError("complete check with unordered edge")
    for obj in ready:
        if not obj.chord and not _cluster_embeddable(obj, index):
            return False
    for a, b in itertools.combinations(ready, 2):
        if not _noncrossing_pair(index, a, b):
            return False
    return True


def search_orders(system: StrandSystem, budget: int | None = 200_000) -> OrderWitness | bool | None:
    """Backtracking search for a consistent strand order.

    Returns an OrderWitness, False if provably impossible, or None if the
    node budget ran out first.
    """
    target = system.target
    edges = sorted(system.strands, key=lambda e: (len(system.strands[e]), e))
    fixed = {e: ss for e, ss in system.strands.items() if len(ss) <= 1}
    free = [e for e in edges if e not in fixed]
    disks_touching: dict[str, list[str]] = {e: [] for e in system.strands}
    for v, objs in system.disks.items():
        touching = {s[0][0] for obj in objs for s in obj.slots}
        for e in touching:
            disks_touching.setdefault(e, []).append(v)

    nodes = 0

    def backtrack(i: int, orders: dict) -> dict | None:
        nonlocal nodes
        nodes += 1
        if budget is not None and nodes > budget:
            raise BudgetExceeded
        if i == len(free):
            for v, objs in system.disks.items():
                if not _check_disk(target, v, objs, orders, partial=False):
                    return None
            return dict(orders)
        e = free[i]
        for perm in itertools.permutations(system.strands[e]):
            orders[e] = perm
            ok = True
            for v in disks_touching.get(e, ()):
                if not _check_disk(target, v, system.disks[v], orders, partial=True):
                    ok = False
                    break
            if ok:
                res = backtrack(i + 1, orders)
                if res is not None:
                    return res
            del orders[e]
        return None

    try:
        result = backtrack(0, dict(fixed))
    except BudgetExceeded:
        return None
    if result is None:
        return False
    return OrderWitness(orders=result, nodes_visited=nodes)


def verify_orders(system: StrandSystem, orders: dict[str, tuple[Strand, ...]]) -> bool:
    """Check a full assignment without searching."""
    for e, ss in system.strands.items():
        if sorted(map(repr, orders.get(e, ()))) != sorted(map(repr, ss)):
            return False
    for v, objs in system.disks.items():
        if not _check_disk(system.target, v, objs, orders, partial=False):
            return False
    return True
