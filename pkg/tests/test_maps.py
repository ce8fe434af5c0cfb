import random
from fractions import Fraction

import pytest

from elastigraph.fileformat import parse_workspace
from elastigraph.fixtures import THETA, fixture_workspace, resolve_map
from elastigraph.graphs import (
    EdgePath,
    ElasticStructure,
    GraphError,
    MultiCurve,
    RibbonGraph,
    extremal_length,
)
from elastigraph.maps import (
    Covering,
    GraphMap,
    compose,
    fold_words,
    identity_map,
    is_ribbon_map,
    lift_path,
    pi1_surjective,
    pullback_components,
    pullback_cover,
    pullback_curve,
    pushforward_curve,
    spanning_tree,
    subdivide_to_edge_maps,
    validate_covering,
)


@pytest.fixture(scope="module")
def theta():
    ws = parse_workspace(THETA)
    g0, e0 = ws.graphs["theta0"]
    g1, e1 = ws.graphs["theta1"]
    pi = resolve_map(ws, "theta_pi")
    phi = resolve_map(ws, "theta_phi")
    return g0, e0, g1, e1, pi, phi


def rose(n, interleaved=False):
    """Rose with n petals; petal darts adjacent unless interleaved."""
    edges = {f"p{i}": ("w", "w") for i in range(n)}
    if interleaved:
        rot = [(f"p{i}", 1) for i in range(n)] + [(f"p{i}", -1) for i in range(n)]
    else:
        rot = []
        for i in range(n):
            rot += [(f"p{i}", -1), (f"p{i}", 1)]
    g = RibbonGraph(["w"], edges, {"w": rot})
    return g, ElasticStructure(g, {e: 1 for e in edges})


class TestValidateCovering:
    def test_identity_is_degree_one(self, theta):
        g0 = theta[0]
        cov = validate_covering(identity_map(g0))
        assert cov.degree() == 1

    def test_theta_pi_is_degree_two(self, theta):
        *_, pi, phi = theta
        cov = validate_covering(pi)
        assert cov.degree() == 2

    def test_collapsing_map_rejected(self, theta):
        *_, pi, phi = theta
        with pytest.raises(GraphError, match="single edge"):
            validate_covering(phi)  # phi collapses the c lifts


class TestLiftPath:
    def test_trivial_path(self, theta):
        g0, _, g1, _, pi, _ = theta
        cov = validate_covering(pi)
        p = EdgePath(g0, (), basepoint="u")
        assert lift_path(cov, p, "u0").steps == ()

    def test_loop_lift_switches_fiber(self, theta):
        g0, _, g1, _, pi, _ = theta
        cov = validate_covering(pi)
        # a then c-bar is a loop at u downstairs; its lift at u0 ends at u1
        p = EdgePath(g0, (("a", 1), ("c", -1)))
        lifted = lift_path(cov, p, "u0")
        assert lifted.endpoint == "u1"

    def test_square_of_loop_closes(self, theta):
        g0, _, g1, _, pi, _ = theta
        cov = validate_covering(pi)
        w = (("a", 1), ("c", -1)) * 2
        lifted = lift_path(cov, EdgePath(g0, w), "u0")
        assert lifted.endpoint == "u0"

    def test_projection_recovers_path(self, theta):
        g0, _, g1, _, pi, _ = theta
        cov = validate_covering(pi)
        w = (("a", 1), ("b", -1), ("c", 1))
        lifted = cov.lift_word(w, "u0")
        assert tuple(cov.dart_image(d) for d in lifted) == w

    def test_wrong_fiber_start_rejected(self, theta):
        g0, _, g1, _, pi, _ = theta
        cov = validate_covering(pi)
        with pytest.raises(GraphError):
            lift_path(cov, EdgePath(g0, (("a", 1),)), "v0")


class TestPullbackCurve:
    def test_degree_one_identity(self, theta):
        g0 = theta[0]
        cov = validate_covering(identity_map(g0))
        c = MultiCurve(g0, [(("a", 1), ("b", -1))])
        assert pullback_curve(cov, c) == c

    def test_loop_under_own_double_cover(self):
        ws = fixture_workspace("loop-doubling")
        g0, e0 = ws.graphs["loop0"]
        g1, e1 = ws.graphs["loop1"]
        cov = validate_covering(resolve_map(ws, "loop_pi"))
        c = MultiCurve(g0, [(("a", 1),)])
        up = pullback_curve(cov, c)
        assert len(up) == 1 and len(up.components[0]) == 2
        assert extremal_length(up, cov.pullback_elastic(e0)) == 2 * extremal_length(
            c, e0
        )

    def test_el_doubles_for_theta_curve(self, theta):
        g0, e0, g1, e1, pi, _ = theta
        cov = validate_covering(pi)
        c = MultiCurve(g0, [(("a", 1), ("b", -1))])
        up = pullback_curve(cov, c)
        assert sum(up.nc.values()) == 2 * sum(c.nc.values())
        assert extremal_length(up, cov.pullback_elastic(e0)) == 2 * extremal_length(
            c, e0
        )

    def test_el_scaling_random(self, theta):
        g0, e0, g1, e1, pi, _ = theta
        cov = validate_covering(pi)
        from elastigraph.graphs import enumerate_curves

        for c in enumerate_curves(g0, 4, 2):
            up = pullback_curve(cov, c)
            assert extremal_length(
                up, cov.pullback_elastic(e0)
            ) == 2 * extremal_length(c, e0)


class TestPushforward:
    def test_identity(self, theta):
        g0 = theta[0]
        c = MultiCurve(g0, [(("a", 1), ("b", -1))])
        assert pushforward_curve(identity_map(g0), c) == c

    def test_null_homotopic_dropped(self, theta):
        g0, _, g1, _, pi, phi = theta
        # maps to c . c-bar which is trivial
        c = MultiCurve(g1, [(("b0", 1), ("c1", -1), ("b1", 1), ("c0", -1))])
        assert pushforward_curve(phi, c).is_empty()

    def test_theta_phi_on_lifted_loop(self, theta):
        g0, _, g1, _, pi, phi = theta
        c = MultiCurve(g1, [(("a0", 1), ("b0", -1))])
        out = pushforward_curve(phi, c)
        assert out == MultiCurve(g0, [(("b", 1), ("c", -1))])


class TestPullbackCover:
    def test_identity_base_copies_pi(self, theta):
        g0, e0, g1, e1, pi, _ = theta
        cov = validate_covering(pi)
        pb = pullback_cover(cov, identity_map(g0), e0)
        assert pb.projection.degree() == 2
        assert len(pb.graph.edges) == len(g1.edges)

    def test_collapse_map_gives_disjoint_fibers(self, theta):
        g0, e0, g1, e1, pi, _ = theta
        cov = validate_covering(pi)
        # constant map from a single loop to the vertex u
        loop = RibbonGraph(["z"], {"l": ("z", "z")}, {"z": [("l", -1), ("l", 1)]})
        g = GraphMap(loop, g0, {"z": "u"}, {"l": ()})
        pb = pullback_cover(cov, g, ElasticStructure(loop, {"l": 1}))
        assert len(pb.graph.components()) == 2
        assert len(pb.graph.edges) == 2

    def test_degree3_self_cover_subdivided(self):
        ws = fixture_workspace("loop-doubling")
        g0, e0 = ws.graphs["loop0"]
        cov = validate_covering(resolve_map(ws, "loop_pi"))
        tripler = GraphMap(g0, g0, {"w": "w"}, {"a": (("a", 1),) * 3})
        g2, el2 = subdivide_to_edge_maps(tripler, e0)
        assert len(g2.source.edges) == 3
        assert el2.total_length == 1
        pb = pullback_cover(cov, g2, el2)
        assert pb.projection.degree() == 2
        assert len(pb.graph.edges) == 6
        assert pb.graph.is_connected()

    def test_square_commutes_exactly(self, theta):
        g0, e0, g1, e1, pi, phi = theta
        cov = validate_covering(pi)
        pb = pullback_cover(cov, phi, e1)
        for e in pb.graph.edges:
            left = pb.lifted.word_image(pb.projection.map.edge_image[e] and ())
            # pi . lifted == phi . projection, unreduced, edge by edge
            lifted_path = pb.lifted.edge_image[e]
            down = tuple(cov.dart_image(d) for d in lifted_path)
            proj_e = pb.projection.map.edge_image[e][0][0]
            assert down == phi.edge_image[proj_e]

    def test_projection_is_length_preserving(self, theta):
        g0, e0, g1, e1, pi, phi = theta
        cov = validate_covering(pi)
        pb = pullback_cover(cov, phi, e1)
        for e in pb.graph.edges:
            proj_e = pb.projection.map.edge_image[e][0][0]
            assert pb.elastic.alpha[e] == e1.alpha[proj_e]


class TestPi1Surjective:
    def test_identity_on_rose(self):
        g, _ = rose(2)
        ok, res = pi1_surjective(identity_map(g))
        assert ok and res.is_whole_group

    def test_ab_b_generates(self):
        g, _ = rose(2)
        m = GraphMap(
            g,
            g,
            {"w": "w"},
            {"p0": (("p0", 1), ("p1", 1)), "p1": (("p1", 1),)},
        )
        ok, _ = pi1_surjective(m)
        assert ok

    def test_a_squared_b_fails(self):
        g, _ = rose(2)
        m = GraphMap(
            g,
            g,
            {"w": "w"},
            {"p0": (("p0", 1), ("p0", 1)), "p1": (("p1", 1),)},
        )
        ok, res = pi1_surjective(m)
        assert not ok

    def test_theta_phi_surjective(self, theta):
        *_, phi = theta
        ok, _ = pi1_surjective(phi)
        assert ok

    def test_independent_of_tree_choice(self, theta):
        *_, phi = theta
        rng = random.Random(1)
        baseline, _ = pi1_surjective(phi)
        edges1 = list(phi.source.edges)
        edges0 = list(phi.target.edges)
        for _ in range(8):
            rng.shuffle(edges1)
            rng.shuffle(edges0)
            t1 = spanning_tree(phi.source, order=edges1)
            t0 = spanning_tree(phi.target, order=edges0)
            ok, _ = pi1_surjective(phi, source_tree=t1, target_tree=t0)
            assert ok == baseline

    def test_folding_oracle_membership(self):
        # fold {ab, b}: core should be the full rose; {a^2, b}: should not
        res = fold_words([[("a", 1), ("b", 1)], [("b", 1)]], ["a", "b"])
        assert res.is_whole_group and res.rank == 2
        res = fold_words([[("a", 1), ("a", 1)], [("b", 1)]], ["a", "b"])
        assert not res.is_whole_group


class TestRibbonMap:
    def test_identity_is_ribbon(self, theta):
        g0 = theta[0]
        v = is_ribbon_map(identity_map(g0))
        assert v.ok is True

    def test_theta_phi_is_ribbon(self, theta):
        *_, phi = theta
        v = is_ribbon_map(phi)
        assert v.ok is True
        assert v.witness is not None
        assert len(v.witness["c"]) == 2  # two strands over edge c

    def test_interleaved_swap_is_not_ribbon(self):
        g, _ = rose(2, interleaved=True)
        m = GraphMap(
            g, g, {"w": "w"}, {"p0": (("p1", 1),), "p1": (("p0", 1),)}
        )
        v = is_ribbon_map(m)
        assert v.ok is False

    def test_adjacent_swap_is_ribbon(self):
        g, _ = rose(2, interleaved=False)
        m = GraphMap(
            g, g, {"w": "w"}, {"p0": (("p1", 1),), "p1": (("p0", 1),)}
        )
        assert is_ribbon_map(m).ok is True

    def test_budget_unknown(self, theta):
        *_, phi = theta
        v = is_ribbon_map(phi, budget=1)
        assert v.ok is None
