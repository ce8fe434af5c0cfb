"""Piecewise-linear maps between elastic graphs and their exact energies.

A PL map stores, per source edge, a run of linear segments (duration in
source length units, target edge, parameter interval).  The embedding
energy sweep is exact: on each open interval between images of
breakpoints the preimage derivative sum is constant, so the essential
supremum is a maximum over finitely many rationals.  Vertices and vertex
images have measure zero and never contribute.
"""
from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Literal, Mapping, Sequence

from .graphs import (
    Dart,
    ElasticStructure,
    GraphError,
    MultiCurve,
    RibbonGraph,
    enumerate_curves,
    extremal_length,
    reduce_word,
    rev,
)
from .maps import Covering, GraphMap, pushforward_curve, validate_covering

INF = float("inf")

# -- positions ---------------------------------------------------------------

Position = tuple  # ("v", vertex) or ("e", edge, Fraction t) with 0 < t < alpha


def vertex_pos(v: str) -> Position:
    return ("v", v)


def edge_pos(graph: RibbonGraph, elastic: ElasticStructure, e: str, t: Fraction) -> Position:
    t = Fraction(t)
    if t < 0 or t > elastic.alpha[e]:
        raise GraphError(f"parameter {t} outside edge {e}")
    if t == 0:
        return ("v", graph.edge_ends[e][0])
    if t == elastic.alpha[e]:
        return ("v", graph.edge_ends[e][1])
    return ("e", e, t)


def position_in_edge(graph, elastic, pos: Position, e: str) -> Fraction | None:
    """Parameter of pos on edge e, or None if pos is not on e.

    For the basepoint of a loop this returns 0; use `positions_in_edge`
    where both end parameters matter.
    """
    if pos[0] == "e":
        return pos[2] if pos[1] == e else None
    t, h = graph.edge_ends[e]
    if pos[1] == t:
        return Fraction(0)
    if pos[1] == h:
        return elastic.alpha[e]
    return None


def positions_in_edge(graph, elastic, pos: Position, e: str) -> set[Fraction]:
    """All parameters of pos on edge e (two for a loop's basepoint)."""
    if pos[0] == "e":
        return {pos[2]} if pos[1] == e else set()
    out = set()
    t, h = graph.edge_ends[e]
    if pos[1] == t:
        out.add(Fraction(0))
    if pos[1] == h:
        out.add(elastic.alpha[e])
    return out


@dataclass(frozen=True)
class Seg:
    dur: Fraction  # source length consumed, > 0
    edge: str | None  # None: rest at a point
    u0: Fraction = Fraction(0)
    u1: Fraction = Fraction(0)

    @property
    def speed(self) -> Fraction:
        if self.edge is None:
            return Fraction(0)
        return abs(self.u1 - self.u0) / self.dur


class PLMap:
    """Piecewise-linear map; exact rational breakpoints throughout."""

    def __init__(
        self,
        source: RibbonGraph,
        target: RibbonGraph,
        source_elastic: ElasticStructure,
        target_elastic: ElasticStructure,
        vertex_position: Mapping[str, Position],
        tracks: Mapping[str, Sequence[Seg]],
    ):
        self.source, self.target = source, target
        self.source_elastic, self.target_elastic = source_elastic, target_elastic
        self.vertex_position = dict(vertex_position)
        self.tracks = {e: tuple(tracks[e]) for e in source.edges}
        for e in source.edges:
            segs = self.tracks[e]
            total = sum((s.dur for s in segs), Fraction(0))
            if total != source_elastic.alpha[e]:
                raise GraphError(f"track of {e} covers {total} != alpha")
            pos = self.vertex_position[source.edge_ends[e][0]]
            for s in segs:
                if s.dur <= 0:
                    raise GraphError(f"degenerate segment on {e}")
                if s.edge is not None:
                    if s.u0 not in positions_in_edge(target, target_elastic, pos, s.edge):
                        raise GraphError(f"discontinuous track on {e}")
                    alpha = target_elastic.alpha[s.edge]
                    if not (0 <= s.u1 <= alpha):
                        raise GraphError(f"parameter out of range on {e}")
                    pos = edge_pos(target, target_elastic, s.edge, s.u1)
            if pos != self.vertex_position[source.edge_ends[e][1]]:
                raise GraphError(f"track of {e} ends away from the vertex image")

    # -- evaluation ----------------------------------------------------------

    def edge_profiles(self):
        """Per target edge: merged interval profile of preimage derivatives.

        Returns {edge: [(u_lo, u_hi, [speeds])]} over open intervals between
        breakpoints; collapse segments never appear.
        """
        spans: dict[str, list[tuple[Fraction, Fraction, Fraction]]] = {
            e: [] for e in self.target.edges
        }
        for e in self.source.edges:
            for s in self.tracks[e]:
                if s.edge is not None and s.u0 != s.u1:
                    lo, hi = min(s.u0, s.u1), max(s.u0, s.u1)
                    spans[s.edge].append((lo, hi, s.speed))
        profiles = {}
        for f, items in spans.items():
            cuts = sorted({u for lo, hi, _ in items for u in (lo, hi)})
            rows = []
            for lo, hi in zip(cuts, cuts[1:]):
                speeds = [sp for l, h, sp in items if l <= lo and hi <= h]
                if speeds:
                    rows.append((lo, hi, speeds))
            profiles[f] = rows
        return profiles


@dataclass
class EnergyReport:
    value: Fraction | float
    kind: str  # "emb" | "epp" | "epinf" | "lip"
    p: Fraction | float | None = None
    per_edge_profile: dict = field(default_factory=dict)
    # exact rational max of sum(|psi'|^(p-1)) for integral p, else None
    exact_inner: Fraction | None = None


def emb_evaluate(psi: PLMap) -> EnergyReport:
    """Essential supremum over target points of the preimage derivative sum."""
    best = Fraction(0)
    profile = {}
    for f, rows in psi.edge_profiles().items():
        prof = []
        for lo, hi, speeds in rows:
            s = sum(speeds, Fraction(0))
            prof.append(((lo, hi), s))
            if s > best:
                best = s
        profile[f] = prof
    return EnergyReport(value=best, kind="emb", p=2, per_edge_profile=profile, exact_inner=best)


def emb_profile_key(psi: PLMap) -> tuple:
    """Lexicographic descent objective: (max, measure at max, next value, ...).

    Plateau moves that shrink the congested region strictly decrease this
    key even when the essential supremum itself is momentarily stuck.
    """
    load: dict[Fraction, Fraction] = {}
    for f, rows in psi.edge_profiles().items():
        for lo, hi, speeds in rows:
            s = sum(speeds, Fraction(0))
            load[s] = load.get(s, Fraction(0)) + (hi - lo)
    if not load:
        return (Fraction(0),)
    key = []
    for val in sorted(load, reverse=True):
        key.append(val)
        key.append(load[val])
    return tuple(key)


def epp_evaluate(psi: PLMap, p) -> EnergyReport:
    """The p-energy: preimage count at p=1, Lipschitz constant at p=oo,
    ess sup of (sum |psi'|^(p-1))^(1/p) in between."""
    if p == 1:
        best = 0
        profile = {}
        for f, rows in psi.edge_profiles().items():
            prof = [((lo, hi), len(speeds)) for lo, hi, speeds in rows]
            profile[f] = prof
            for _, n in prof:
                best = max(best, n)
        return EnergyReport(value=Fraction(best), kind="epp", p=1,
                            per_edge_profile=profile, exact_inner=Fraction(best))
    if p == INF:
        best = Fraction(0)
        for e in psi.source.edges:
            for s in psi.tracks[e]:
                if s.edge is not None:
                    best = max(best, s.speed)
        return EnergyReport(value=best, kind="lip", p=INF, exact_inner=best)
    p = Fraction(p)
    integral = p.denominator == 1
    best = Fraction(0) if integral else 0.0
    profile = {}
    for f, rows in psi.edge_profiles().items():
        prof = []
        for lo, hi, speeds in rows:
            if integral:
                s = sum((sp ** (p.numerator - 1) for sp in speeds), Fraction(0))
            else:
                s = sum(float(sp) ** (float(p) - 1) for sp in speeds)
            prof.append(((lo, hi), s))
            if s > best:
                best = s
        profile[f] = prof
    return EnergyReport(
        value=float(best) ** (1.0 / float(p)),
        kind="epp",
        p=p,
        per_edge_profile=profile,
        exact_inner=best if integral else None,
    )


def epinf_evaluate(psi: PLMap, p) -> EnergyReport:
    """L^p norm of the derivative over the source (target read as lengths)."""
    if p == INF:
        rep = epp_evaluate(psi, INF)
        return EnergyReport(value=rep.value, kind="epinf", p=INF, exact_inner=rep.exact_inner)
    p = Fraction(p)
    integral = p.denominator == 1
    total = Fraction(0) if integral else 0.0
    for e in psi.source.edges:
        for s in psi.tracks[e]:
            if s.edge is not None and s.u0 != s.u1:
                if integral:
                    total += s.speed ** p.numerator * s.dur
                else:
                    total += float(s.speed) ** float(p) * float(s.dur)
    return EnergyReport(
        value=float(total) ** (1.0 / float(p)),
        kind="epinf",
        p=p,
        exact_inner=total if integral else None,
    )


# -- standard representative, composition, lifting ---------------------------


def standard_plmap(
    phi: GraphMap,
    source_elastic: ElasticStructure,
    target_elastic: ElasticStructure,
) -> PLMap:
    """Constant-speed representative of a graph map (vertices to vertices)."""
    tracks = {}
    for e in phi.source.edges:
        path = phi.edge_image[e]
        alpha = source_elastic.alpha[e]
        if not path:
            tracks[e] = [Seg(alpha, None)]
            continue
        total = sum((target_elastic.alpha[d[0]] for d in path), Fraction(0))
        segs = []
        for d in path:
            la = target_elastic.alpha[d[0]]
            dur = alpha * la / total
            if d[1] > 0:
                segs.append(Seg(dur, d[0], Fraction(0), la))
            else:
                segs.append(Seg(dur, d[0], la, Fraction(0)))
        tracks[e] = segs
    return PLMap(
        phi.source,
        phi.target,
        source_elastic,
        target_elastic,
        {v: vertex_pos(phi.vertex_image[v]) for v in phi.source.vertices},
        tracks,
    )


def evaluate_at(psi: PLMap, pos: Position) -> Position:
    """Image of a source position (track time = arc length parameter)."""
    if pos[0] == "v":
        return psi.vertex_position[pos[1]]
    e, t = pos[1], pos[2]
    acc = Fraction(0)
    current = psi.vertex_position[psi.source.edge_ends[e][0]]
    for s in psi.tracks[e]:
        if acc + s.dur >= t:
            if s.edge is None:
                return current
            u = s.u0 + (s.u1 - s.u0) * (t - acc) / s.dur
            return edge_pos(psi.target, psi.target_elastic, s.edge, u)
        acc += s.dur
        if s.edge is not None:
            current = edge_pos(psi.target, psi.target_elastic, s.edge, s.u1)
    return current


def compose_pl(outer: PLMap, inner: PLMap) -> PLMap:
    """outer after inner, exact; no tightening is performed."""
    if inner.target is not outer.source:
        raise GraphError("composition needs matching middle graph")
    # outer track of edge f as a time-parametrized list with cumulative times
    cum: dict[str, list[tuple[Fraction, Fraction, Seg]]] = {}
    for f in outer.source.edges:
        acc = Fraction(0)
        rows = []
        for s in outer.tracks[f]:
            rows.append((acc, acc + s.dur, s))
            acc += s.dur
        cum[f] = rows
    tracks = {}
    for e in inner.source.edges:
        out: list[Seg] = []
        for s in inner.tracks[e]:
            if s.edge is None or s.u0 == s.u1:
                out.append(Seg(s.dur, None))
                continue
            lo, hi = s.u0, s.u1
            step = 1 if hi > lo else -1
            pieces = []
            for a, b, oseg in cum[s.edge]:
                lo2, hi2 = (max(min(lo, hi), a), min(max(lo, hi), b))
                if lo2 >= hi2:
                    continue
                pieces.append((lo2, hi2, oseg))
            pieces.sort(key=lambda r: r[0], reverse=(step < 0))
            for a, b, oseg in pieces:
                frac_dur = s.dur * (b - a) / abs(hi - lo)
                if oseg.edge is None or oseg.u0 == oseg.u1:
                    out.append(Seg(frac_dur, None))
                    continue
                ta, tb = (a, b) if step > 0 else (b, a)
                os0, od = oseg.u0, (oseg.u1 - oseg.u0) / oseg.dur
                base = next(x for x, y, z in cum[s.edge] if z is oseg)
                va = os0 + od * (ta - base)
                vb = os0 + od * (tb - base)
                out.append(Seg(frac_dur, oseg.edge, va, vb))
        # merge adjacent rests for tidiness
        merged: list[Seg] = []
        for s in out:
            if merged and s.edge is None and merged[-1].edge is None:
                merged[-1] = Seg(merged[-1].dur + s.dur, None)
            else:
                merged.append(s)
        tracks[e] = merged
    vpos = {
        v: evaluate_at(outer, inner.vertex_position[v]) for v in inner.source.vertices
    }
    return PLMap(
        inner.source,
        outer.target,
        inner.source_elastic,
        outer.target_elastic,
        vpos,
        tracks,
    )


@dataclass
class PLLift:
    graph: RibbonGraph
    elastic: ElasticStructure
    projection: Covering
    lifted: PLMap


def lift_plmap(pi: Covering, psi: PLMap, target_elastic_lifted: ElasticStructure) -> PLLift:
    """Pull a PL map back through a covering of its target.

    Builds the fiber-product source (a covering of psi's source of the same
    degree) and the lifted PL map into pi's source; derivative data is
    preserved segment by segment, so every energy is unchanged exactly.
    """
    W, X, Xt = psi.source, psi.target, pi.source
    if pi.target is not X:
        raise GraphError("covering must sit over the PL map's target")

    def lifts_of_position(pos: Position):
        if pos[0] == "v":
            return [vertex_pos(y) for y in pi.fiber(pos[1])]
        return [
            ("e", et, pos[2])
            for et in pi.edge_fiber(pos[1])
            if pi.dart_image((et, 1)) == (pos[1], 1)
        ] + [
            ("e", et, psi.target_elastic.alpha[pos[1]] - pos[2])
            for et in pi.edge_fiber(pos[1])
            if pi.dart_image((et, 1)) == (pos[1], -1)
        ]

    def step_lift(current: Position, seg: Seg) -> tuple[Position, Seg]:
        if seg.edge is None:
            return current, Seg(seg.dur, None)
        # find the lifted edge containing `current` compatibly with seg
        f = seg.edge
        alpha = psi.target_elastic.alpha[f]
        for ft in pi.edge_fiber(f):
            flip = pi.dart_image((ft, 1)) != (f, 1)
            u = position_in_edge(Xt, target_elastic_lifted, current, ft)
            if u is None:
                continue
            want = seg.u0 if not flip else alpha - seg.u0
            if u != want:
                continue
            # interior direction must stay inside this lift; endpoints need
            # the star to match, handled by trying all candidates
            if not flip:
                v0, v1 = seg.u0, seg.u1
            else:
                v0, v1 = alpha - seg.u0, alpha - seg.u1
            # check attachment when starting at a vertex
            end = edge_pos(Xt, target_elastic_lifted, ft, v1)
            return end, Seg(seg.dur, ft, v0, v1)
        raise GraphError("no lift found for a segment")

    # vertices of the lifted source: (w, lift of psi(w))
    vnames: dict[tuple[str, Position], str] = {}
    for w in W.vertices:
        for i, lp in enumerate(lifts_of_position(psi.vertex_position[w])):
            vnames[(w, lp)] = f"{w}^{i}"
    edge_ends = {}
    enames: dict[tuple[str, Position], str] = {}
    head_pos: dict[str, Position] = {}
    tracks_new: dict[str, list[Seg]] = {}
    for e in W.edges:
        w0, w1 = W.edge_ends[e]
        for (w, lp), vn in list(vnames.items()):
            if w != w0:
                continue
            current = lp
            segs = []
            for s in psi.tracks[e]:
                current, s2 = step_lift(current, s)
                segs.append(s2)
            name = f"{e}^{vn}"
            enames[(e, lp)] = name
            edge_ends[name] = (vn, vnames[(w1, current)])
            tracks_new[name] = segs
            head_pos[name] = current
    # rotation pulled back through the projection (star bijection)
    start_lookup = {}
    end_lookup = {}
    for (e, lp), name in enames.items():
        start_lookup[(e, edge_ends[name][0])] = name
        end_lookup[(e, edge_ends[name][1])] = name
    rotation = {}
    for (w, lp), vn in vnames.items():
        rot = []
        for d in W.rotation[w]:
            if d[1] > 0:
                rot.append((start_lookup[(d[0], vn)], 1))
            else:
                rot.append((end_lookup[(d[0], vn)], -1))
        rotation[vn] = rot
    Wt = RibbonGraph(sorted(vnames.values()), edge_ends, rotation)
    elastic = ElasticStructure(
        Wt, {name: psi.source_elastic.alpha[e] for (e, lp), name in enames.items()}
    )
    proj = validate_covering(
        GraphMap(
            Wt,
            W,
            {vn: w for (w, lp), vn in vnames.items()},
            {name: ((e, 1),) for (e, lp), name in enames.items()},
        )
    )
    lifted = PLMap(
        Wt,
        Xt,
        elastic,
        target_elastic_lifted,
        {vn: lp for (w, lp), vn in vnames.items()},
        tracks_new,
    )
    return PLLift(Wt, elastic, proj, lifted)


# -- stretch-factor lower bounds ---------------------------------------------


def sf_lower_bound(
    phi: GraphMap,
    source_elastic: ElasticStructure,
    target_elastic: ElasticStructure,
    max_len: int = 8,
    max_components: int = 2,
) -> tuple[Fraction, MultiCurve | None]:
    """Largest extremal-length ratio over enumerated multi-curves.

    Every ratio is a genuine lower bound for the stretch factor, hence for
    the minimal embedding energy in the homotopy class.
    """
    best = Fraction(0)
    witness = None
    for c in enumerate_curves(phi.source, max_len, max_components):
        el_src = extremal_length(c, source_elastic)
        if el_src == 0:
            continue
        image = pushforward_curve(phi, c)
        el_img = extremal_length(image, target_elastic)
        ratio = el_img / el_src
        if ratio > best:
            best, witness = ratio, c
    return best, witness


# -- descent state -----------------------------------------------------------


class _Route:
    """Stop path of one source edge.

    stops[i] -> stops[i+1] runs inside the edge of darts[i], in the dart's
    direction.  Interior stops only ever appear at the two ends; middle
    pieces are always full edge traversals.
    """

    __slots__ = ("stops", "darts")

    def __init__(self, stops: list[Position], darts: list[Dart]):
        self.stops = stops
        self.darts = darts

    def copy(self) -> "_Route":
        return _Route(list(self.stops), list(self.darts))


class DescentState:
    """Vertex positions plus taut routes; supports local homotopy moves.

    Every move drags one vertex image to a nearby position along a chosen
    dart; routes of incident edges grow by the connecting piece and are
    re-tightened.  Drag words record each vertex's anchor path so the
    homotopy class can be checked exactly against the original map.
    """

    def __init__(self, phi: GraphMap, source_elastic, target_elastic):
        self.phi = phi
        self.graph = phi.target
        self.se, self.te = source_elastic, target_elastic
        self.pos: dict[str, Position] = {
            v: vertex_pos(phi.vertex_image[v]) for v in phi.source.vertices
        }
        self.routes: dict[str, _Route] = {}
        for e in phi.source.edges:
            path = phi.edge_image[e]
            stops = [self.pos[phi.source.edge_ends[e][0]]]
            for d in path:
                stops.append(vertex_pos(phi.target.head(d)))
            self.routes[e] = _Route(stops, list(path))
        self.drag: dict[str, tuple[Dart, ...]] = {v: () for v in phi.source.vertices}
        # optional per-piece duration weights (None means proportional to
        # target length, i.e. constant speed along the edge)
        self.weights: dict[str, list[Fraction] | None] = {
            e: None for e in phi.source.edges
        }

    def copy(self) -> "DescentState":
        new = object.__new__(DescentState)
        new.phi, new.graph, new.se, new.te = self.phi, self.graph, self.se, self.te
        new.pos = dict(self.pos)
        new.routes = {e: r.copy() for e, r in self.routes.items()}
        new.drag = dict(self.drag)
        new.weights = {e: (None if w is None else list(w)) for e, w in self.weights.items()}
        return new

    # -- piece geometry --------------------------------------------------------

    def _piece_params(self, p: Position, q: Position, d: Dart) -> tuple[Fraction, Fraction]:
        """Start and end parameters of the piece p -> q inside edge(d).

        Vertex stops on a loop take the parameter forced by the direction.
        """
        f, s = d
        alpha = self.te.alpha[f]
        t, h = self.graph.edge_ends[f]
        loop = t == h

        def par(pos, departing: bool) -> Fraction:
            if pos[0] == "e":
                if pos[1] != f:
                    raise GraphError("stop off its piece's edge")
                return pos[2]
            if loop:
                if departing:
                    return Fraction(0) if s > 0 else alpha
                return alpha if s > 0 else Fraction(0)
            if pos[1] == t:
                return Fraction(0)
            if pos[1] == h:
                return alpha
            raise GraphError("stop off its piece's edge")

        u0, u1 = par(p, True), par(q, False)
        if (u1 - u0) * s < 0:
            raise GraphError("piece runs against its dart")
        return u0, u1

    def _tighten(self, r: _Route) -> None:
        changed = True
        while changed:
            changed = False
            # drop zero-length pieces
            i = 0
            while i < len(r.darts):
                u0, u1 = self._piece_params(r.stops[i], r.stops[i + 1], r.darts[i])
                if u0 == u1:
                    del r.stops[i + 1]
                    del r.darts[i]
                    changed = True
                else:
                    i += 1
            # merge consecutive pieces in the same edge, but only when the
            # junction parameters agree: a loop passage that leaves through
            # one end and re-enters through the other is an essential wrap,
            # not an interior wiggle
            i = 0
            while i + 1 < len(r.darts):
                if r.darts[i][0] == r.darts[i + 1][0]:
                    f = r.darts[i][0]
                    u0, u1 = self._piece_params(r.stops[i], r.stops[i + 1], r.darts[i])
                    v0, u2 = self._piece_params(
                        r.stops[i + 1], r.stops[i + 2], r.darts[i + 1]
                    )
                    if u1 != v0:
                        i += 1
                        continue
                    del r.stops[i + 1]
                    del r.darts[i + 1]
                    if u0 == u2:
                        # complete cancellation
                        del r.stops[i + 1]
                        del r.darts[i]
                    else:
                        r.darts[i] = (f, 1 if u2 > u0 else -1)
                    changed = True
                else:
                    i += 1

    # -- moves -------------------------------------------------------------------

    def move_vertex(self, v: str, newpos: Position, via: Dart) -> None:
        old = self.pos[v]
        if old == newpos:
            return
        # validate the motion piece and compute its anchored net word
        u0, u1 = self._piece_params(old, newpos, via)
        for e in self.phi.source.edges:
            t, h = self.phi.source.edge_ends[e]
            r = self.routes[e]
            if h == v:
                r.stops.append(newpos)
                r.darts.append(via)
            if t == v:
                r.stops.insert(0, newpos)
                r.darts.insert(0, rev(via))
            if t == v or h == v:
                self._tighten(r)
                self.weights[e] = None
        # anchored drag step: start/end at anchor parameters
        alpha = self.te.alpha[via[0]]
        start = u0 if old[0] == "v" else Fraction(0)
        end = u1 if newpos[0] == "v" else Fraction(0)
        if start != end:
            step = (via[0], 1) if end > start else (via[0], -1)
            self.drag[v] = reduce_word(self.drag[v] + (step,))
        self.pos[v] = newpos

    # -- homotopy class verification -----------------------------------------------

    def route_word(self, e: str) -> tuple[Dart, ...]:
        """Tightened dart word of the route, anchored at edge tails."""
        r = self.routes[e].copy()
        if r.stops[0][0] == "e":
            f = r.stops[0][1]
            r.stops.insert(0, vertex_pos(self.graph.edge_ends[f][0]))
            r.darts.insert(0, (f, 1))
        if r.stops[-1][0] == "e":
            f = r.stops[-1][1]
            r.stops.append(vertex_pos(self.graph.edge_ends[f][0]))
            r.darts.append((f, -1))
        self._tighten(r)
        word = []
        for i, d in enumerate(r.darts):
            u0, u1 = self._piece_params(r.stops[i], r.stops[i + 1], d)
            alpha = self.te.alpha[d[0]]
            if {u0, u1} != {Fraction(0), alpha}:
                raise GraphError("anchored route left a partial piece")
            word.append(d)
        return reduce_word(tuple(word))

    def homotopic_to_original(self) -> bool:
        src = self.phi.source
        for e in src.edges:
            u, v = src.edge_ends[e]
            expected = reduce_word(
                tuple(rev(d) for d in reversed(self.drag[u]))
                + self.phi.edge_image[e]
                + self.drag[v]
            )
            if self.route_word(e) != expected:
                return False
        return True

    # -- PL map construction ---------------------------------------------------

    def build(self) -> PLMap:
        tracks = {}
        for e in self.phi.source.edges:
            r = self.routes[e]
            alpha = self.se.alpha[e]
            pieces = []
            total = Fraction(0)
            for i, d in enumerate(r.darts):
                u0, u1 = self._piece_params(r.stops[i], r.stops[i + 1], d)
                pieces.append((d[0], u0, u1))
                total += abs(u1 - u0)
            if total == 0:
                tracks[e] = [Seg(alpha, None)]
                continue
            w = self.weights[e]
            if w is not None and len(w) == len(pieces):
                wtotal = sum(w, Fraction(0))
                segs = [
                    Seg(alpha * wi / wtotal, f, u0, u1)
                    for wi, (f, u0, u1) in zip(w, pieces)
                ]
            else:
                segs = [
                    Seg(alpha * abs(u1 - u0) / total, f, u0, u1)
                    for f, u0, u1 in pieces
                ]
            tracks[e] = segs
        return PLMap(
            self.phi.source, self.graph, self.se, self.te, dict(self.pos), tracks
        )

    def value(self) -> Fraction:
        return emb_evaluate(self.build()).value

    def value_key(self) -> tuple:
        return emb_profile_key(self.build())

    def default_weights(self, e: str) -> list[Fraction] | None:
        r = self.routes[e]
        if len(r.darts) < 2:
            return None
        out = []
        for i, d in enumerate(r.darts):
            u0, u1 = self._piece_params(r.stops[i], r.stops[i + 1], d)
            out.append(abs(u1 - u0))
        return out

    def time_moves(self, e: str):
        """Candidate duration reweightings for one edge's pieces."""
        base = self.weights[e] or self.default_weights(e)
        if base is None:
            return
        for i in range(len(base)):
            for factor in (Fraction(1, 2), Fraction(2), Fraction(3, 4), Fraction(4, 3)):
                w = list(base)
                w[i] = w[i] * factor
                yield w

    # -- candidate moves ----------------------------------------------------------

    def candidate_moves(self, v: str, depth: int = 4):
        """Nearby positions for the image of v, paired with motion darts."""
        pos = self.pos[v]
        out = []
        if pos[0] == "e":
            f, t = pos[1], pos[2]
            alpha = self.te.alpha[f]
            for k in range(1, depth + 1):
                step = alpha / 2**k
                if t - step >= 0:
                    out.append((edge_pos(self.graph, self.te, f, t - step), (f, -1)))
                if t + step <= alpha:
                    out.append((edge_pos(self.graph, self.te, f, t + step), (f, 1)))
            out.append((vertex_pos(self.graph.edge_ends[f][0]), (f, -1)))
            out.append((vertex_pos(self.graph.edge_ends[f][1]), (f, 1)))
        else:
            for d in self.graph.rotation[pos[1]]:
                f = d[0]
                alpha = self.te.alpha[f]
                for k in range(1, depth + 1):
                    t2 = alpha / 2**k if d[1] > 0 else alpha - alpha / 2**k
                    out.append((edge_pos(self.graph, self.te, f, t2), d))
        seen = set()
        uniq = []
        for cand in out:
            if cand[0] != pos and cand not in seen:
                seen.add(cand)
                uniq.append(cand)
        return uniq


def emb_minimize(
    phi: GraphMap,
    source_elastic: ElasticStructure,
    target_elastic: ElasticStructure,
    restarts: int = 50,
    seed: int = 0,
    depth: int = 4,
    max_passes: int = 40,
    stop_below: Fraction | None = None,
) -> tuple[PLMap, EnergyReport, DescentState]:
    """Heuristic descent for the embedding energy of a homotopy class.

    The result is always a sound upper bound: the witness is a PL map
    homotopic to the input (checked through the drag words) and its energy
    comes from the exact sweep.  Ties are broken by trying moves in a fixed
    order, so runs are reproducible for a given seed.
    """
    rng = random.Random(seed)
    base = DescentState(phi, source_elastic, target_elastic)

    def descend(state: DescentState) -> tuple[tuple, DescentState]:
        best = state.value_key()
        for _ in range(max_passes):
            improved = False
            for v in sorted(state.phi.source.vertices):
                while True:
                    gain = None
                    for cand, via in state.candidate_moves(v, depth):
                        trial = state.copy()
                        try:
                            trial.move_vertex(v, cand, via)
                        except GraphError:
                            continue
                        key = trial.value_key()
                        if key < best and (gain is None or key < gain[0]):
                            gain = (key, trial)
                    if gain is None:
                        break
                    best, state = gain
                    improved = True
                if stop_below is not None and best[0] < stop_below:
                    return best, state
            for e in sorted(state.phi.source.edges):
                while True:
                    gain = None
                    for w in state.time_moves(e):
                        trial = state.copy()
                        trial.weights[e] = w
                        key = trial.value_key()
                        if key < best and (gain is None or key < gain[0]):
                            gain = (key, trial)
                    if gain is None:
                        break
                    best, state = gain
                    improved = True
            if not improved:
                break
        return best, state

    best_key, best_state = descend(base.copy())
    for _ in range(restarts):
        if stop_below is not None and best_key[0] < stop_below:
            break
        trial = base.copy()
        for _k in range(rng.randrange(1, 4)):
            v = rng.choice(sorted(trial.phi.source.vertices))
            moves = trial.candidate_moves(v, depth)
            if not moves:
                continue
            cand, via = moves[rng.randrange(len(moves))]
            try:
                trial.move_vertex(v, cand, via)
            except GraphError:
                continue
        key, state = descend(trial)
        if key < best_key:
            best_key, best_state = key, state
    witness = best_state.build()
    report = emb_evaluate(witness)
    if not best_state.homotopic_to_original():
        raise GraphError("descent left the homotopy class; this is a bug")
    return witness, report, best_state
