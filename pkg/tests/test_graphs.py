import json
import math
import random

import pytest

from outerspacekit.graphs import (
    InvalidPointError,
    MarkedMetricGraph,
    MetricGraph,
    minimal_model,
    point_from_dict,
    point_to_dict,
    random_point,
    rose,
    tighten_path,
    validate_point,
)
from outerspacekit.metric import distance, points_equal
from outerspacekit.whitehead import is_primitive
from outerspacekit.words import Automorphism, CyclicWord, Word, all_whitehead_moves

from .conftest import DUMBBELL_DICT, THETA_DICT


def C(text):
    return CyclicWord.parse(text)


class TestValidate:
    def test_standard_rose(self):
        assert validate_point(rose(2)).valid

    def test_bad_volume(self):
        p = rose(2, [0.5, 0.25])
        report = validate_point(p)
        assert not report.valid
        assert any("volume" in s for s in report.problems)

    def test_theta(self, theta_point):
        assert validate_point(theta_point).valid

    def test_valence_two_rejected(self):
        # subdivide one rose petal: middle vertex has valence 2
        g = MetricGraph(2, ["e1", "e2", "e3"], [(0, 1), (1, 0), (0, 0)],
                        [0.25, 0.25, 0.5])
        p = MarkedMetricGraph(g, 0, [(1, 2), (3,)])
        report = validate_point(p)
        assert not report.valid
        assert any("valence" in s for s in report.problems)

    def test_bad_marking_not_basis(self):
        g = MetricGraph(1, ["e1", "e2"], [(0, 0), (0, 0)], [0.5, 0.5])
        p = MarkedMetricGraph(g, 0, [(1,), (1,)])
        report = validate_point(p)
        assert not report.valid
        assert any("basis" in s for s in report.problems)


class TestTighten:
    def test_backtrack(self):
        g = rose(2).graph
        assert tighten_path(g, (1, -1)) == ()

    def test_inner_backtrack(self, theta_point):
        g = theta_point.graph
        assert tighten_path(g, (1, -2, 2, -3)) == (1, -3)

    def test_immersed_unchanged(self, theta_point):
        g = theta_point.graph
        assert tighten_path(g, (1, -2)) == (1, -2)

    def test_broken_incidence(self, theta_point):
        g = theta_point.graph
        with pytest.raises(ValueError):
            tighten_path(g, (1, 2))


class TestLoopLength:
    def test_two_petals(self):
        assert rose(2).loop_length(C("ab")) == 1.0

    def test_reduction_before_measuring(self):
        assert rose(2).loop_length(Word.make((1, 2, -2, 1))) == 1.0

    def test_nielsen_power_example(self):
        R = rose(2)
        for m in (1, 2, 5):
            psi = Automorphism(2, [Word((1,)), Word(tuple([1] * m + [2]))])
            psi.inverse()
            assert R.act(psi).loop_length(C("b")) == pytest.approx((m + 1) / 2, abs=1e-12)

    def test_conjugation_inversion_invariance(self):
        rng = random.Random(9)
        p = random_point(2, 3, 2, 0.2)
        for _ in range(50):
            letters = [rng.choice([1, -1, 2, -2]) for _ in range(rng.randint(1, 6))]
            w = Word.make(letters)
            if not w:
                continue
            conj = Word.make([rng.choice([1, -1, 2, -2]) for _ in range(3)])
            assert p.loop_length(w) == pytest.approx(
                p.loop_length(conj * w * conj.inverse()), abs=1e-12
            )
            assert p.loop_length(w) == pytest.approx(p.loop_length(w.inverse()), abs=1e-12)

    def test_positive(self):
        p = random_point(3, 5, 3, 0.4)
        for text in ("a", "b", "c", "abC"):
            assert p.loop_length(C(text)) > 0

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            rose(2).loop_length(CyclicWord(()))


class TestCandidates:
    def test_rank2_rose(self):
        cands = rose(2).candidates()
        assert {str(c.conjugacy_class) for c in cands} == {"a", "b", "ab", "aB"}

    def test_theta(self, theta_point):
        cands = theta_point.candidates()
        assert len(cands) == 3
        assert all(c.kind == "embedded" for c in cands)

    def test_rank3_rose(self):
        cands = rose(3).candidates()
        kinds = [c.kind for c in cands]
        assert kinds.count("embedded") == 3
        assert kinds.count("figure-eight") == 6
        assert kinds.count("barbell") == 0

    def test_dumbbell_has_barbells(self, dumbbell_point):
        cands = dumbbell_point.candidates()
        kinds = [c.kind for c in cands]
        assert kinds.count("embedded") == 2
        assert kinds.count("barbell") == 2
        assert kinds.count("figure-eight") == 0

    def test_path_length_matches_class_length(self, dumbbell_point):
        for p in (rose(2), rose(3), dumbbell_point):
            for c in p.candidates():
                assert c.length == pytest.approx(
                    p.loop_length(c.conjugacy_class), abs=1e-12
                )

    def test_shapes_reverify(self, dumbbell_point, theta_point):
        for p in (rose(2), rose(3), theta_point, dumbbell_point):
            g = p.graph
            for c in p.candidates():
                path = c.path
                # closed immersed loop
                assert g.init_of(path[0]) == g.term_of(path[-1])
                assert tighten_path(g, path) == path
                assert path[0] != -path[-1]
                visits = [g.init_of(h) for h in path]
                if c.kind == "embedded":
                    assert len(set(visits)) == len(visits)
                elif c.kind == "figure-eight":
                    # exactly one vertex visited twice
                    dup = [v for v in set(visits) if visits.count(v) == 2]
                    assert len(dup) == 1 and len(visits) == len(set(visits)) + 1
                else:  # barbell: bar crossed twice, circles once
                    counts = {}
                    for h in path:
                        counts[abs(h)] = counts.get(abs(h), 0) + 1
                    assert sorted(counts.values()).count(2) == 1

    def test_candidates_primitive(self, theta_point, dumbbell_point):
        for p in (rose(2), rose(3), theta_point, dumbbell_point):
            for c in p.candidates():
                assert is_primitive(c.conjugacy_class, p.rank), c


class TestAct:
    def test_identity(self):
        p = rose(2)
        assert points_equal(p, p.act(Automorphism.identity(2)))

    def test_isometric(self):
        x = random_point(2, 1, 2, 0.3)
        y = random_point(2, 2, 2, 0.3)
        phi = Automorphism.from_strings(2, "ab", "a")
        phi.inverse()
        assert distance(x.act(phi), y.act(phi)).value == pytest.approx(
            distance(x, y).value, abs=1e-12
        )

    def test_right_action(self):
        rng = random.Random(4)
        moves = list(all_whitehead_moves(2))
        for _ in range(10):
            p = random_point(2, rng.randint(0, 99), 2, 0.3)
            phi = rng.choice(moves).automorphism(2)
            psi = rng.choice(moves).automorphism(2)
            lhs = p.act(phi).act(psi)
            rhs = p.act(phi.compose(psi))
            assert points_equal(lhs, rhs)

    def test_action_identity_on_lengths(self):
        p = rose(2)
        phi = Automorphism.from_strings(2, "ab", "a")
        phi.inverse()
        q = p.act(phi)
        for text in ("a", "b", "ab", "aB", "abb"):
            w = C(text)
            assert q.loop_length(w) == pytest.approx(
                p.loop_length(phi.apply_cyclic(w)), abs=1e-12
            )

    def test_unverified_rejected(self):
        with pytest.raises(ValueError):
            rose(2).act(Automorphism.from_strings(2, "ab", "a"))


class TestMinimalModel:
    def test_rose_unchanged(self):
        p = rose(2)
        assert points_equal(p, minimal_model(p))

    def test_theta_collapse(self, theta_point):
        k = minimal_model(theta_point)
        assert k.graph.n_edges == 2
        assert sorted(k.graph.lengths) == [0.5, 0.5]
        assert validate_point(k).valid

    def test_distance_bound(self):
        for seed in range(6):
            p = random_point(2, seed, 2, 0.5)
            k = minimal_model(p)
            assert distance(p, k).value <= math.log(3 * 2 - 3) + 1e-9
        p = point_from_dict(THETA_DICT)
        assert distance(p, minimal_model(p)).value <= math.log(3) + 1e-9

    def test_dumbbell_loop_longest_collapses_bar(self, dumbbell_point):
        k = minimal_model(dumbbell_point)
        assert k.graph.n_edges == 2 and k.graph.n_vertices == 1
        assert validate_point(k).valid

    def test_dumbbell_bar_longest_is_kept(self):
        data = dict(DUMBBELL_DICT)
        data["edges"] = [
            {"id": "p", "from": "u", "to": "u", "length": 0.25},
            {"id": "bar", "from": "u", "to": "v", "length": 0.5},
            {"id": "q", "from": "v", "to": "v", "length": 0.25},
        ]
        p = point_from_dict(data)
        k = minimal_model(p)
        assert k.graph.n_edges == 3  # separating longest edge survives
        assert points_equal(p, k)


class TestRandomPoint:
    def test_degenerate_is_standard_rose(self):
        assert points_equal(random_point(2, 7, 0, 0.0), rose(2))

    def test_deterministic(self):
        a = random_point(2, 13, 4, 0.5)
        b = random_point(2, 13, 4, 0.5)
        assert a.graph.lengths == b.graph.lengths
        assert a.gen_loops == b.gen_loops

    def test_always_valid(self):
        for seed in range(8):
            assert validate_point(random_point(2, seed, 3, 0.6)).valid

    def test_jitter_bounds(self):
        with pytest.raises(ValueError):
            random_point(2, 0, 0, 1.5)


class TestFileFormat:
    def test_round_trip(self, theta_point):
        d = point_to_dict(theta_point)
        q = point_from_dict(json.loads(json.dumps(d)))
        assert points_equal(theta_point, q)

    def test_volume_not_renormalized(self):
        bad = dict(THETA_DICT)
        bad["edges"] = [dict(e, length="1/2") for e in THETA_DICT["edges"]]
        with pytest.raises(InvalidPointError):
            point_from_dict(bad)

    def test_rational_lengths(self, theta_point):
        assert theta_point.graph.lengths == (1 / 3, 1 / 3, 1 / 3)

    def test_unknown_edge_in_marking(self):
        bad = dict(THETA_DICT)
        bad["marking"] = {"x": ["zzz"], "y": ["e2", "~e3"]}
        with pytest.raises(ValueError):
            point_from_dict(bad)
