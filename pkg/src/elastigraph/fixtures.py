"""Built-in example endomorphisms, written in the description-file format.

theta:        degree-2 endomorphism of the theta graph (three edges between
              two vertices); the classic spine picture for a quadratic
              rational map with three marked points.
rabbit15/25:  degree-2 endomorphisms of a five-petal rose; identical maps,
              rotation systems differing by the 1/5 vs 2/5 petal order.
loop-doubling: degree-2 self-cover of a circle.
obstructed-k2d2: degree-4 endomorphism of a two-petal rose carrying a curve
              with two parallel degree-2 preimages, so the p = 2
              obstruction matrix is [1].
"""
from __future__ import annotations

from fractions import Fraction

from .fileformat import Workspace, parse_workspace
from .graphs import MultiCurve
from .maps import GraphMap
from .vend import VirtualEndomorphism, validate_vend

THETA = """
[graph theta0]
vertex u rotation: b+ c+ a+
vertex v rotation: a- c- b-
edge a u v length 1
edge b u v length 1
edge c u v length 1

[graph theta1]
vertex u0 rotation: b0+ c0+ a0+
vertex u1 rotation: b1+ c1+ a1+
vertex v0 rotation: a0- c1- b0-
vertex v1 rotation: a1- c0- b1-
edge a0 u0 v0 length 1
edge a1 u1 v1 length 1
edge b0 u0 v0 length 1
edge b1 u1 v1 length 1
edge c0 u0 v1 length 1
edge c1 u1 v0 length 1

[map theta_pi from theta1 to theta0]
vertex u0 -> u
vertex u1 -> u
vertex v0 -> v
vertex v1 -> v
edge a0 -> a
edge a1 -> a
edge b0 -> b
edge b1 -> b
edge c0 -> c
edge c1 -> c

[map theta_phi from theta1 to theta0]
vertex u0 -> u
vertex u1 -> v
vertex v0 -> v
vertex v1 -> u
edge a0 -> b
edge a1 -> a-
edge b0 -> c
edge b1 -> c-
edge c0 -> .
edge c1 -> .

[vend theta theta0 theta1 theta_pi theta_phi]
tree: c
"""


def _rose5(name: str, petal_order: list[int], lengths: dict[int, str]) -> str:
    rot = " ".join(f"x{j}- x{j}+" for j in petal_order)
    lines = [f"[graph {name}]", f"vertex o rotation: {rot}"]
    for j in range(1, 6):
        lines.append(f"edge x{j} o o length {lengths[j]}")
    return "\n".join(lines)


def _rabbit(name: str, petal_order: list[int]) -> str:
    # petal lengths grow by 9/8 so peripheral classes already contract at level 1
    lengths = {j: f"{9 ** j}/{8 ** j}" for j in range(1, 6)}
    g0 = _rose5(f"{name}0", petal_order, lengths)
    parts = [g0, f"[graph {name}1]"]
    # fiber vertices A (over the basepoint) and B (its partner)
    rot_a, rot_b = [], []
    for j in petal_order:
        if j == 1:
            rot_a.extend(["e1b-", "e1a+"])
            rot_b.extend(["e1a-", "e1b+"])
        else:
            rot_a.extend([f"g{j}-", f"g{j}+"])
            rot_b.extend([f"h{j}-", f"h{j}+"])
    parts.append("vertex A rotation: " + " ".join(rot_a))
    parts.append("vertex B rotation: " + " ".join(rot_b))
    parts.append("edge e1a A B length 9/8")
    parts.append("edge e1b B A length 9/8")
    for j in range(2, 6):
        parts.append(f"edge g{j} A A length {lengths[j]}")
        parts.append(f"edge h{j} B B length {lengths[j]}")
    parts.append(f"[map {name}_pi from {name}1 to {name}0]")
    parts.append("vertex A -> o")
    parts.append("vertex B -> o")
    parts.append("edge e1a -> x1")
    parts.append("edge e1b -> x1")
    for j in range(2, 6):
        parts.append(f"edge g{j} -> x{j}")
        parts.append(f"edge h{j} -> x{j}")
    parts.append(f"[map {name}_phi from {name}1 to {name}0]")
    parts.append("vertex A -> o")
    parts.append("vertex B -> o")
    parts.append("edge e1a -> .")
    parts.append("edge e1b -> x5")
    for j in range(2, 6):
        parts.append(f"edge g{j} -> x{j - 1}")
        parts.append(f"edge h{j} -> .")
    parts.append(f"[vend {name} {name}0 {name}1 {name}_pi {name}_phi]")
    return "\n".join(parts)


RABBIT15 = _rabbit("rabbit15", [1, 2, 3, 4, 5])
RABBIT25 = _rabbit("rabbit25", [5, 3, 1, 4, 2])

LOOP_DOUBLING = """
[graph loop0]
vertex w rotation: a- a+
edge a w w length 1

[graph loop1]
vertex p0 rotation: a1- a0+
vertex p1 rotation: a0- a1+
edge a0 p0 p1 length 1
edge a1 p1 p0 length 1

[map loop_pi from loop1 to loop0]
vertex p0 -> w
vertex p1 -> w
edge a0 -> a
edge a1 -> a

[map loop_phi from loop1 to loop0]
vertex p0 -> w
vertex p1 -> w
edge a0 -> .
edge a1 -> a

[vend loop-doubling loop0 loop1 loop_pi loop_phi]
"""

# Degree-4 endomorphism of the four-point pillowcase spine (two vertices,
# two-edge horizontal and vertical circles), modeling doubling on the torus
# quotient.  The horizontal curve a1.a2 has two preimage components, each
# covering with degree 2 and pushing forward parallel to itself, so the
# p = 2 obstruction matrix is [2 * 2^(1-2)] = [1].
OBSTRUCTED_K2D2 = """
[graph obs0]
vertex V1 rotation: a1+ b1+ a2- b2-
vertex V2 rotation: a2+ b1- a1- b2+
edge a1 V1 V2 length 1
edge a2 V2 V1 length 1
edge b1 V1 V2 length 1
edge b2 V2 V1 length 1

[graph obs1]
vertex r0 rotation: v03- h00+ v00+ h03-
vertex r1 rotation: v13+ h01+ v12- h00-
vertex r2 rotation: v13- h02+ v10+ h01-
vertex r3 rotation: v03+ h03+ v02- h02-
vertex r4 rotation: v01- h10+ v02+ h13-
vertex r5 rotation: v11+ h11+ v10- h10-
vertex r6 rotation: v11- h12+ v12+ h11-
vertex r7 rotation: v01+ h13+ v00- h12-
edge h00 r0 r1 length 1
edge h01 r1 r2 length 1
edge h02 r2 r3 length 1
edge h03 r3 r0 length 1
edge h10 r4 r5 length 1
edge h11 r5 r6 length 1
edge h12 r6 r7 length 1
edge h13 r7 r4 length 1
edge v00 r0 r7 length 1
edge v01 r7 r4 length 1
edge v02 r4 r3 length 1
edge v03 r3 r0 length 1
edge v10 r2 r5 length 1
edge v11 r5 r6 length 1
edge v12 r6 r1 length 1
edge v13 r1 r2 length 1

[map obs_pi from obs1 to obs0]
vertex r0 -> V1
vertex r1 -> V2
vertex r2 -> V1
vertex r3 -> V2
vertex r4 -> V1
vertex r5 -> V2
vertex r6 -> V1
vertex r7 -> V2
edge h00 -> a1+
edge h01 -> a2+
edge h02 -> a1+
edge h03 -> a2+
edge h10 -> a1+
edge h11 -> a2+
edge h12 -> a1+
edge h13 -> a2+
edge v00 -> b1+
edge v01 -> b2+
edge v02 -> b1+
edge v03 -> b2+
edge v10 -> b1+
edge v11 -> b2+
edge v12 -> b1+
edge v13 -> b2+

[map obs_phi from obs1 to obs0]
vertex r0 -> V1
vertex r1 -> V1
vertex r2 -> V2
vertex r3 -> V2
vertex r4 -> V2
vertex r5 -> V2
vertex r6 -> V1
vertex r7 -> V1
edge h00 -> .
edge h01 -> a1+
edge h02 -> .
edge h03 -> a2+
edge h10 -> .
edge h11 -> a1-
edge h12 -> .
edge h13 -> a2-
edge v00 -> .
edge v01 -> b1+
edge v02 -> .
edge v03 -> b2+
edge v10 -> .
edge v11 -> b1-
edge v12 -> .
edge v13 -> b2-

[vend obstructed-k2d2 obs0 obs1 obs_pi obs_phi]
"""

FIXTURE_TEXTS: dict[str, str] = {
    "theta": THETA,
    "rabbit15": RABBIT15,
    "rabbit25": RABBIT25,
    "loop-doubling": LOOP_DOUBLING,
    "obstructed-k2d2": OBSTRUCTED_K2D2,
}


def fixture_names() -> list[str]:
    return sorted(FIXTURE_TEXTS)


def fixture_workspace(name: str) -> Workspace:
    if name not in FIXTURE_TEXTS:
        raise KeyError(f"unknown fixture {name!r} (have {', '.join(fixture_names())})")
    return parse_workspace(FIXTURE_TEXTS[name])


def resolve_map(ws: Workspace, name: str) -> GraphMap:
    md = ws.maps[name]
    src, _ = ws.graphs[md.source]
    dst, _ = ws.graphs[md.target]
    return GraphMap(src, dst, md.vertex_image, md.edge_image)


def resolve_vend(ws: Workspace, name: str, require_ribbon: bool = True) -> VirtualEndomorphism:
    vd = ws.vends[name]
    g0, e0 = ws.graphs[vd.graph0]
    g1, _ = ws.graphs[vd.graph1]
    pi = resolve_map(ws, vd.pi)
    phi = resolve_map(ws, vd.phi)
    return validate_vend(
        g0, g1, pi, phi, e0,
        name=name,
        require_ribbon=require_ribbon,
        preferred_tree=vd.tree,
    )


def load_fixture(name: str, require_ribbon: bool = True) -> VirtualEndomorphism:
    ws = fixture_workspace(name)
    return resolve_vend(ws, name, require_ribbon=require_ribbon)
