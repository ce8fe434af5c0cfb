"""Weighted multi-curves, obstruction matrices and their eigenvalues.

For a virtual endomorphism, pulling a curve back through the covering and
pushing it forward through the map acts linearly on p-conductances
(conductance gamma = alpha^(1-p) adds under parallel join; a degree-d lift
multiplies it by d^(1-p)).  The induced nonnegative matrix on the
components of an invariant multi-curve detects annular obstructions: a
Perron eigenvalue >= 1 forces every iterate's p-energy to stay >= 1.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

import numpy as np

from .graphs import (
    Dart,
    GraphError,
    MultiCurve,
    RibbonGraph,
    canonical_loop,
    word_token,
)
from .maps import pullback_components
from .vend import VirtualEndomorphism

INF = float("inf")

Word = tuple  # canonical unoriented cyclic dart word


class ObstructionError(GraphError):
    pass


def p_harmonic_sum(values: Sequence, p) -> Fraction | float:
    """Parallel combination of p-lengths: ((sum v^(1-p)))^(1/(1-p)).

    p = oo gives the minimum; p = 2 is the harmonic sum (resistors in
    parallel); p = 1 is handled by the caller as a plain sum of weights.
    """
    vals = [Fraction(v) if not isinstance(v, float) else v for v in values]
    if not vals:
        raise ObstructionError("empty p-harmonic sum")
    if p == INF:
        return min(vals)
    p = Fraction(p)
    if p <= 1:
        raise ObstructionError("p-harmonic sum needs p in (1, oo]")
    if p.denominator == 1 and all(isinstance(v, Fraction) for v in vals):
        s = sum((v ** (1 - p.numerator) for v in vals), Fraction(0))
        root = _exact_root(1 / s, p.numerator - 1)
        if root is not None:
            return root
        return float(1 / s) ** (1.0 / (p.numerator - 1))
    s = sum(float(v) ** (1.0 - float(p)) for v in vals)
    return s ** (1.0 / (1.0 - float(p)))


def _exact_root(x: Fraction, k: int) -> Fraction | None:
    """k-th root of a positive rational if it is rational, else None."""
    if k == 1:
        return x
    num = round(x.numerator ** (1 / k))
    den = round(x.denominator ** (1 / k))
    for dn in (num - 1, num, num + 1):
        for dd in (den - 1, den, den + 1):
            if dn > 0 and dd > 0 and Fraction(dn) ** k == x.numerator and Fraction(dd) ** k == x.denominator:
                return Fraction(dn, dd)
    return None


class PConformalMultiCurve:
    """Multi-curve whose components carry p-lengths (or weights at p = 1).

    Conductances are the dual quantities that add under parallel joins:
    gamma = alpha^(1-p) for p > 1, the weight itself for p = 1.
    """

    def __init__(self, graph: RibbonGraph, p, components: Mapping[Word, Fraction]):
        self.graph = graph
        self.p = p if p == INF else Fraction(p)
        comp = {}
        for w, a in components.items():
            cw = canonical_loop(w)
            if not cw:
                continue
            a = Fraction(a)
            if a <= 0:
                raise ObstructionError("lengths and weights must be positive")
            if cw in comp:
                raise ObstructionError("duplicate component; join first")
            comp[cw] = a
        self.alpha: dict[Word, Fraction] = comp

    @property
    def support(self) -> MultiCurve:
        return MultiCurve(self.graph, list(self.alpha))

    def conductance(self, w: Word):
        a = self.alpha[canonical_loop(w)]
        if self.p == 1:
            return a
        if self.p == INF:
            raise ObstructionError("conductance is undefined at p = oo")
        if self.p.denominator == 1:
            return a ** (1 - self.p.numerator)
        return float(a) ** (1.0 - float(self.p))

    def is_empty(self) -> bool:
        return not self.alpha


def from_conductances(graph, p, gammas: Mapping[Word, Fraction]) -> PConformalMultiCurve:
    if p == 1:
        return PConformalMultiCurve(graph, 1, gammas)
    if p == INF:
        raise ObstructionError("cannot build from conductances at p = oo")
    p = Fraction(p)
    alphas = {}
    for w, g in gammas.items():
        if g == 0:
            continue
        if p.denominator == 1:
            a = _exact_root(1 / Fraction(g), p.numerator - 1)
            alphas[w] = a if a is not None else float(g) ** (1.0 / (1.0 - float(p)))
        else:
            alphas[w] = float(g) ** (1.0 / (1.0 - float(p)))
    return PConformalMultiCurve(graph, p, alphas)


def join_p(
    curve: PConformalMultiCurve,
    extra: Iterable[tuple[Word, Fraction]] = (),
    peripheral: Iterable[Word] = (),
) -> PConformalMultiCurve:
    """Drop trivial/peripheral components and merge parallel ones.

    Parallel components (equal canonical unoriented word) combine by the
    p-harmonic sum of lengths for p > 1 and by adding weights at p = 1.
    `peripheral` lists face classes to drop in spine contexts.
    """
    peripheral_set = {canonical_loop(w) for w in peripheral}
    groups: dict[Word, list[Fraction]] = {}
    for w, a in list(curve.alpha.items()) + list(extra):
        cw = canonical_loop(w)
        if not cw or cw in peripheral_set:
            continue
        groups.setdefault(cw, []).append(a)
    out = {}
    for cw, vals in groups.items():
        if len(vals) == 1:
            out[cw] = vals[0]
        elif curve.p == 1:
            out[cw] = sum(vals, Fraction(0))
        else:
            out[cw] = p_harmonic_sum(vals, curve.p)
    return PConformalMultiCurve(curve.graph, curve.p, out)


def pushpull(
    vend: VirtualEndomorphism,
    curve: PConformalMultiCurve,
    peripheral: Iterable[Word] = (),
) -> PConformalMultiCurve:
    """Pull back through the covering, push forward, and join.

    A component lifted with covering degree d gets p-length d * alpha
    (series law), so its conductance is scaled by d^(1-p); weights at
    p = 1 are carried through unchanged (the exponent 1 - p vanishes).
    """
    contributions: list[tuple[Word, Fraction]] = []
    for w, a in curve.alpha.items():
        for lifted, deg in pullback_components(vend.pi, w):
            image = vend.phi.word_image(lifted, cyclic=True)
            cw = canonical_loop(image)
            if not cw:
                continue
            if curve.p == 1:
                contributions.append((cw, a))
            else:
                contributions.append((cw, deg * a))
    empty = PConformalMultiCurve(curve.graph, curve.p, {})
    return join_p(empty, contributions, peripheral)


@dataclass
class ObstructionMatrix:
    components: tuple[Word, ...]
    entries: list[list]  # entries[i][j] = sum of deg^(1-p) over lifts of C_i parallel to C_j
    p: object

    def as_float(self) -> np.ndarray:
        return np.array([[float(x) for x in row] for row in self.entries], dtype=float)

    def __str__(self) -> str:
        rows = []
        for row in self.entries:
            rows.append("[" + ", ".join(str(x) for x in row) + "]")
        return "[" + "; ".join(rows) + "]"


def obstruction_matrix(
    vend: VirtualEndomorphism,
    curve: MultiCurve,
    p,
    peripheral: Iterable[Word] = (),
) -> ObstructionMatrix:
    """Matrix of deg^(1-p) sums tracking which lifts land on which components.

    Lifted components that push forward outside the given multi-curve (or
    onto a dropped peripheral class) are ignored.
    """
    comps = list(curve.components)
    index = {w: i for i, w in enumerate(comps)}
    peripheral_set = {canonical_loop(w) for w in peripheral}
    if p != INF:
        p = Fraction(p)
    exact = p != INF and p.denominator == 1
    zero = Fraction(0) if exact else 0.0
    entries = [[zero for _ in comps] for _ in comps]
    for i, w in enumerate(comps):
        for lifted, deg in pullback_components(vend.pi, w):
            image = canonical_loop(vend.phi.word_image(lifted, cyclic=True))
            if not image or image in peripheral_set or image not in index:
                continue
            j = index[image]
            if exact:
                entries[i][j] += Fraction(deg) ** (1 - p.numerator)
            else:
                entries[i][j] += float(deg) ** (1.0 - float(p))
    return ObstructionMatrix(tuple(comps), entries, p)


# -- Perron-Frobenius ---------------------------------------------------------


@dataclass
class PerronResult:
    low: Fraction
    high: Fraction
    eigenvector: list[Fraction] | None = None

    @property
    def value(self) -> float:
        return (float(self.low) + float(self.high)) / 2

    def certainly_ge_one(self) -> bool:
        return self.low >= 1

    def certainly_lt_one(self) -> bool:
        return self.high < 1


def _sccs(adj: list[list[bool]]) -> list[list[int]]:
    n = len(adj)
    order = []
    seen = [False] * n

    def dfs1(u):
        stack = [(u, 0)]
        seen[u] = True
        while stack:
            x, i = stack.pop()
            while i < n and not (adj[x][i] and not seen[i]):
                i += 1
            if i < n:
                stack.append((x, i + 1))
                seen[i] = True
                stack.append((i, 0))
            else:
                order.append(x)

    for u in range(n):
        if not seen[u]:
            dfs1(u)
    comp = [-1] * n
    c = 0
    for u in reversed(order):
        if comp[u] != -1:
            continue
        stack = [u]
        comp[u] = c
        while stack:
            x = stack.pop()
            for y in range(n):
                if adj[y][x] and comp[y] == -1:
                    comp[y] = c
                    stack.append(y)
        c += 1
    out = [[] for _ in range(c)]
    for u, cu in enumerate(comp):
        out[cu].append(u)
    return out


def perron_eigenvalue(matrix, tol: Fraction = Fraction(1, 10**9)) -> PerronResult:
    """Largest eigenvalue of a nonnegative matrix with a certified enclosure.

    Power iteration on each strongly connected diagonal block (shifted by
    the identity to kill periodicity) followed by exact Collatz-Wielandt
    bounds on rationalized vectors: for any positive x,
    min_i (Mx)_i/x_i <= lambda <= max_i (Mx)_i/x_i.
    """
    if isinstance(matrix, ObstructionMatrix):
        rows = matrix.entries
    else:
        rows = [list(r) for r in matrix]
    n = len(rows)
    if n == 0:
        return PerronResult(Fraction(0), Fraction(0), None)
    M = [[Fraction(x) if not isinstance(x, float) else Fraction(x).limit_denominator(10**12) for x in row] for row in rows]
    adj = [[M[i][j] > 0 for j in range(n)] for i in range(n)]
    best = PerronResult(Fraction(0), Fraction(0), None)
    for block in _sccs(adj):
        if len(block) == 1:
            i = block[0]
            v = M[i][i]
            if v >= best.low:
                vec = [Fraction(0)] * n
                vec[i] = Fraction(1)
                cand = PerronResult(v, v, vec)
                if v > best.high or best.eigenvector is None:
                    best = cand
            continue
        sub = [[M[i][j] for j in block] for i in block]
        k = len(block)
        x = np.ones(k)
        A = np.array([[float(v) for v in row] for row in sub]) + np.eye(k)
        for _ in range(5000):
            y = A @ x
            norm = y.max()
            if norm == 0:
                break
            x = y / norm
        # exact Collatz-Wielandt on the rationalized vector
        low, high = _cw_bounds(sub, x)
        for _ in range(60):
            if high - low <= tol:
                break
            x = (np.array([[float(v) for v in row] for row in sub]) + np.eye(k)) @ x
            m = x.max()
            if m > 0:
                x = x / m
            low, high = _cw_bounds(sub, x)
        vec = [Fraction(0)] * n
        for idx, i in enumerate(block):
            vec[i] = Fraction(float(x[idx])).limit_denominator(10**9)
        cand = PerronResult(low, high, vec)
        if cand.low > best.low or best.eigenvector is None:
            best = cand
    return best


def _cw_bounds(sub, x) -> tuple[Fraction, Fraction]:
    k = len(sub)
    xr = [max(Fraction(float(v)).limit_denominator(10**9), Fraction(1, 10**12)) for v in x]
    ratios = []
    for i in range(k):
        mx = sum((sub[i][j] * xr[j] for j in range(k)), Fraction(0))
        ratios.append(mx / xr[i])
    return min(ratios), max(ratios)


def certified_lambda_ge_one(matrix: ObstructionMatrix) -> list[Fraction] | None:
    """Exact certificate that lambda >= 1: a gamma > 0 with M^T gamma >= gamma.

    Works on the conductance side, where pushpull acts by gamma -> M^T gamma.
    Returns the certifying vector or None.
    """
    res = perron_eigenvalue(matrix)
    if res.high < 1:
        return None
    n = len(matrix.components)
    MT = [[Fraction(matrix.entries[j][i]) for j in range(n)] for i in range(n)]
    candidates = []
    if res.eigenvector is not None:
        candidates.append(res.eigenvector)
    candidates.append([Fraction(1)] * n)
    for cand in candidates:
        for denom in (1, 2, 4, 16, 256):
            vec = [Fraction(round(v * denom), denom) for v in cand]
            if all(v >= 0 for v in vec) and any(v > 0 for v in vec):
                out = [
                    sum((MT[i][j] * vec[j] for j in range(n)), Fraction(0))
                    for i in range(n)
                ]
                support_ok = all(out[i] >= vec[i] for i in range(n))
                if support_ok:
                    return vec
    return None


# -- invariance ---------------------------------------------------------------


@dataclass
class InvarianceReport:
    forwards_invariant: bool
    back_invariant: bool
    totally_invariant: bool
    irreducible: bool
    sccs: tuple[tuple[Word, ...], ...]
    extra_targets: tuple[Word, ...]  # pushpull components outside the curve


def pushpull_component_map(
    vend: VirtualEndomorphism, curve: MultiCurve, peripheral: Iterable[Word] = ()
) -> dict[Word, list[Word]]:
    peripheral_set = {canonical_loop(w) for w in peripheral}
    out: dict[Word, list[Word]] = {}
    for w in curve.components:
        targets = []
        for lifted, _deg in pullback_components(vend.pi, w):
            image = canonical_loop(vend.phi.word_image(lifted, cyclic=True))
            if image and image not in peripheral_set:
                targets.append(image)
        out[w] = targets
    return out


def classify_invariance(
    vend: VirtualEndomorphism, curve: MultiCurve, peripheral: Iterable[Word] = ()
) -> InvarianceReport:
    comp_map = pushpull_component_map(vend, curve, peripheral)
    comps = list(curve.components)
    index = {w: i for i, w in enumerate(comps)}
    produced = {w for targets in comp_map.values() for w in targets}
    forwards = all(w in produced for w in comps)
    extra = tuple(sorted(set(w for w in produced if w not in index), key=lambda w: (len(w), w)))
    back = not extra
    totally = forwards and back
    n = len(comps)
    adj = [[False] * n for _ in range(n)]
    for w, targets in comp_map.items():
        for t in targets:
            if t in index:
                adj[index[w]][index[t]] = True
    sccs = _sccs(adj) if n else []
    strict = []
    for block in sccs:
        if len(block) > 1 or adj[block[0]][block[0]]:
            strict.append(tuple(comps[i] for i in block))
    irreducible = n > 0 and len(sccs) == 1 and (n > 1 or adj[0][0])
    return InvarianceReport(
        forwards_invariant=forwards,
        back_invariant=back,
        totally_invariant=totally,
        irreducible=irreducible,
        sccs=tuple(strict),
        extra_targets=extra,
    )


def saturate_back_invariant(
    vend: VirtualEndomorphism,
    curve: MultiCurve,
    peripheral: Iterable[Word] = (),
    component_cap: int = 64,
) -> MultiCurve:
    """Grow a forwards-invariant curve until it is back-invariant.

    Repeatedly adds the pushpull image components; for curves that lift to
    disjoint circles this stabilizes because a surface carries only finitely
    many disjoint isotopy classes.
    """
    support = set(curve.components)
    while True:
        mc = MultiCurve(vend.gamma0, sorted(support))
        comp_map = pushpull_component_map(vend, mc, peripheral)
        new = {w for targets in comp_map.values() for w in targets} - support
        if not new:
            return mc
        support |= new
        if len(support) > component_cap:
            raise ObstructionError(
                "pushpull support keeps growing; the input is unlikely to be simple"
            )


# -- Q(C) and p-obstructions ---------------------------------------------------


def lambda_at(vend, curve, p, peripheral=()) -> PerronResult:
    return perron_eigenvalue(obstruction_matrix(vend, curve, p, peripheral))


def q_of_curve(
    vend: VirtualEndomorphism,
    curve: MultiCurve,
    peripheral: Iterable[Word] = (),
    tol: float = 1e-6,
    p_max: float = 64.0,
):
    """The exponent where the obstruction eigenvalue crosses 1.

    lambda(M^p) is non-increasing in p (entries deg^(1-p)).  Returns the
    crossing point, or "AlwaysOne" when the degree-1 part alone keeps
    lambda at 1 for every p, or "NeverOne" when even lambda(M^1) < 1.
    """
    rep = classify_invariance(vend, curve, peripheral)
    if not rep.forwards_invariant:
        raise ObstructionError("Q(C) needs a forwards-invariant curve")
    m1 = obstruction_matrix(vend, curve, 1, peripheral)
    lam1 = perron_eigenvalue(m1)
    if lam1.high < 1:
        return "NeverOne"
    # degree-one sub-matrix: the limit of M^p as p -> oo
    comps = list(curve.components)
    index = {w: i for i, w in enumerate(comps)}
    n = len(comps)
    ones = [[Fraction(0)] * n for _ in range(n)]
    peripheral_set = {canonical_loop(w) for w in peripheral}
    for i, w in enumerate(comps):
        for lifted, deg in pullback_components(vend.pi, w):
            if deg != 1:
                continue
            image = canonical_loop(vend.phi.word_image(lifted, cyclic=True))
            if image and image not in peripheral_set and image in index:
                ones[i][index[image]] += 1
    if perron_eigenvalue(ones).low >= 1:
        return "AlwaysOne"

    def lam(p: float) -> float:
        return perron_eigenvalue(
            obstruction_matrix(vend, curve, Fraction(p).limit_denominator(10**6), peripheral)
        ).value

    lo, hi = 1.0, float(p_max)
    if lam(hi) > 1:
        return float(p_max)
    while hi - lo > tol:
        mid = (lo + hi) / 2
        if lam(mid) >= 1:
            lo = mid
        else:
            hi = mid
    return (lo + hi) / 2


def check_p_obstruction(
    vend: VirtualEndomorphism,
    curve: PConformalMultiCurve,
    peripheral: Iterable[Word] = (),
):
    """Does the identity-marking map from the curve into its pushpull image
    have p-energy at most 1?

    On conductances the test is monotone: the pushpull must not lose
    conductance on any component.  Returns (bool, energy value).
    """
    if curve.is_empty():
        return False, None
    support = curve.support
    rep = classify_invariance(vend, support, peripheral)
    if not rep.forwards_invariant:
        raise ObstructionError("support must be forwards-invariant")
    image = pushpull(vend, curve, peripheral)
    worst = None
    for w, a in curve.alpha.items():
        if w not in image.alpha:
            return False, None
        if curve.p == 1:
            ratio = Fraction(image.alpha[w]) / a
        else:
            ratio = Fraction(image.conductance(w)) / Fraction(curve.conductance(w)) \
                if not isinstance(image.conductance(w), float) and not isinstance(curve.conductance(w), float) \
                else float(image.conductance(w)) / float(curve.conductance(w))
        if worst is None or ratio < worst:
            worst = ratio
    if curve.p == 1:
        energy = 1 if worst >= 1 else math.ceil(1 / float(worst))
        return worst >= 1, energy
    energy = float(worst) ** (-1.0 / float(curve.p))
    return worst >= 1, energy
