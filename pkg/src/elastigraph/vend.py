"""Virtual endomorphisms of elastic ribbon graphs and their iterates.

A virtual endomorphism is a pair pi, phi from one graph onto another where
pi is a finite covering and phi any graph map; iterating by fiber product
produces the tower of maps whose energies drive all the certificates.
"""
from __future__ import annotations

import os
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

from .graphs import ElasticStructure, GraphError, RibbonGraph
from .maps import (
    Covering,
    GraphMap,
    Pullback,
    RibbonVerdict,
    compose,
    identity_map,
    is_ribbon_map,
    pi1_surjective,
    pullback_cover,
    validate_covering,
)

DEFAULT_EDGE_BUDGET = 10**6


def edge_budget() -> int:
    value = os.environ.get("ELASTIGRAPH_BUDGET")
    if value:
        try:
            return int(value)
        except ValueError:
            pass
    return DEFAULT_EDGE_BUDGET


class VendError(GraphError):
    pass


@dataclass
class VirtualEndomorphism:
    gamma0: RibbonGraph
    gamma1: RibbonGraph
    pi: Covering
    phi: GraphMap
    elastic0: ElasticStructure
    elastic1: ElasticStructure
    ribbon_verdict: RibbonVerdict | None = None
    name: str = ""
    preferred_tree: tuple[str, ...] = ()

    def degree(self) -> int:
        return self.pi.degree()


def validate_vend(
    gamma0: RibbonGraph,
    gamma1: RibbonGraph,
    pi_map: GraphMap,
    phi: GraphMap,
    elastic0: ElasticStructure,
    name: str = "",
    ribbon_budget: int | None = 200_000,
    require_ribbon: bool = True,
    preferred_tree: Sequence[str] = (),
) -> VirtualEndomorphism:
    """Check all the structure and build the pulled-back data.

    The ribbon structure on gamma1 is rebuilt as the pi-pullback of the
    one on gamma0; if gamma1 came with a different rotation system that is
    an error, not an override.
    """
    if pi_map.source is not gamma1 or pi_map.target is not gamma0:
        raise VendError("pi must map gamma1 to gamma0")
    if phi.source is not gamma1 or phi.target is not gamma0:
        raise VendError("phi must map gamma1 to gamma0")
    pi = validate_covering(pi_map)
    pulled_rot = pi.pullback_rotation_of(gamma0)
    candidate = gamma1.with_rotation(pulled_rot)
    if not candidate.same_as(gamma1):
        raise VendError("ribbon structure on gamma1 is not the pullback under pi")
    # pi0-bijectivity of phi
    s_comps = gamma1.components()
    t_comps = gamma0.components()
    image_comp = {}
    for c in s_comps:
        w = phi.vertex_image[min(c)]
        image_comp[c] = next(tc for tc in t_comps if w in tc)
        if any(phi.vertex_image[v] not in image_comp[c] for v in c):
            raise VendError("phi splits a component")
    if len(set(image_comp.values())) != len(t_comps) or len(s_comps) != len(t_comps):
        raise VendError("phi is not bijective on components")
    ok, folding = pi1_surjective(phi)
    if not ok:
        raise VendError(
            f"phi is not surjective on fundamental groups (folded rank {folding.rank})"
        )
    verdict = None
    if require_ribbon:
        verdict = is_ribbon_map(phi, budget=ribbon_budget)
        if verdict.ok is False:
            raise VendError("phi is not a ribbon map")
    return VirtualEndomorphism(
        gamma0=gamma0,
        gamma1=gamma1,
        pi=pi,
        phi=phi,
        elastic0=elastic0,
        elastic1=pi.pullback_elastic(elastic0),
        ribbon_verdict=verdict,
        name=name,
        preferred_tree=tuple(preferred_tree),
    )


@dataclass
class TowerLevel:
    graph: RibbonGraph
    elastic: ElasticStructure
    pi_n: Covering  # X_n -> X_0
    phi_n: GraphMap  # X_n -> X_0, tightened
    drop_tail: GraphMap | None  # X_n -> X_{n-1}; None at levels 0 and 1


class IterateTower:
    """Levels X_0, X_1, ..., built lazily by fiber product.

    Level n is the fiber product of the covering pi_{n-1}: X_{n-1} -> X_0
    with the map phi: X_1 -> X_0; gluing at the covering side keeps every
    pi_n an honest covering while the lifted maps realize the projections
    X_n -> X_k that drop the last n - k coordinates.
    """

    def __init__(self, vend: VirtualEndomorphism, max_edges: int | None = None):
        self.vend = vend
        self.max_edges = max_edges if max_edges is not None else edge_budget()
        id0 = identity_map(vend.gamma0)
        self.levels: list[TowerLevel] = [
            TowerLevel(
                vend.gamma0,
                vend.elastic0,
                validate_covering(id0),
                id0,
                None,
            ),
            TowerLevel(
                vend.gamma1,
                vend.elastic1,
                vend.pi,
                vend.phi,
                None,
            ),
        ]

    def level(self, n: int) -> TowerLevel:
        if n < 0:
            raise VendError("level must be nonnegative")
        while len(self.levels) <= n:
            self._grow()
        return self.levels[n]

    def _grow(self) -> None:
        prev = self.levels[-1]
        vend = self.vend
        pb: Pullback = pullback_cover(prev.pi_n, vend.phi, vend.elastic1)
        if len(pb.graph.edges) > self.max_edges:
            raise VendError(
                f"tower level would exceed the edge budget ({self.max_edges})"
            )
        # pb.projection : X_n -> X_1 (covering, degree deg(pi_{n-1}))
        # pb.lifted     : X_n -> X_{n-1} (drops the last coordinate)
        pi_n = validate_covering(compose(vend.pi.map, pb.projection.map))
        phi_n = compose(prev.phi_n, pb.lifted)
        self.levels.append(
            TowerLevel(pb.graph, pb.elastic, pi_n, phi_n, pb.lifted)
        )

    def projection(self, n: int, k: int) -> GraphMap:
        """The map X_n -> X_k forgetting the deepest n - k coordinates."""
        if not 0 <= k <= n:
            raise VendError("need 0 <= k <= n")
        self.level(n)
        if n == k:
            return identity_map(self.levels[n].graph)
        out = None
        for m in range(n, k, -1):
            step = self.levels[m].drop_tail
            if step is None:
                step = self.levels[m].phi_n  # m == 1, k == 0
            out = step if out is None else compose(step, out)
        return out


def iterate(vend: VirtualEndomorphism, n: int, max_edges: int | None = None) -> IterateTower:
    """Tower of iterates up to level n (inclusive)."""
    if vend.degree() <= 1:
        raise VendError("iteration needs covering degree greater than 1")
    tower = IterateTower(vend, max_edges)
    tower.level(n)
    return tower
