import math
import random

import pytest

from outerspacekit.axes import (
    Axis,
    BALL_HEADER,
    MORSE_HEADER,
    ball_sample_record,
    contraction_experiment,
    detour_path,
    divergence_check,
    length_profile,
    max_projection_diameter,
    probe_experiment,
    project,
    tree_inequality_probe,
    two_axis_report,
    write_csv,
    _random_composite,
)
from outerspacekit.graphs import random_point, rose
from outerspacekit.metric import distance
from outerspacekit.traintrack import legality_report
from outerspacekit.words import Automorphism, CyclicWord

GOLDEN = (1 + math.sqrt(5)) / 2


def C(text):
    return CyclicWord.parse(text)


class TestAxisPoints:
    def test_base_point(self, golden_axis):
        assert golden_axis.point(0) is golden_axis.base

    def test_unit_translation(self, golden_axis):
        d = distance(golden_axis.point(0), golden_axis.point(1)).value
        assert d == pytest.approx(math.log(GOLDEN), abs=1e-9)

    def test_translation_additivity(self, golden_axis):
        for k in range(0, 7):
            d = distance(golden_axis.point(-2), golden_axis.point(-2 + k)).value
            assert d == pytest.approx(k * golden_axis.step, abs=1e-9 * max(k, 1))

    def test_action_identity(self, golden_axis):
        rng = random.Random(0)
        for _ in range(10):
            m = rng.randint(-4, 4)
            letters = [rng.choice([1, -1, 2, -2]) for _ in range(rng.randint(1, 5))]
            alpha = CyclicWord.make(letters)
            if not alpha:
                continue
            lhs = golden_axis.point(m).loop_length(alpha)
            rhs = golden_axis.base.loop_length(golden_axis.power(m).apply_cyclic(alpha))
            assert lhs == pytest.approx(rhs, abs=1e-12)

    def test_mu_from_backward(self, golden_axis):
        assert golden_axis.mu == pytest.approx(GOLDEN, abs=1e-9)

    def test_mu_estimated_without_backward(self, golden_tt):
        ax = Axis(golden_tt)
        assert ax.estimate_mu() == pytest.approx(GOLDEN, rel=0.1)


class TestLengthProfile:
    def test_golden_profile_of_x(self, golden_axis):
        prof = length_profile(C("a"), golden_axis, (-3, 3))
        vals = dict(prof.values)
        assert vals[-1] == pytest.approx(0.3819660, abs=1e-6)
        assert vals[0] == pytest.approx(0.6180340, abs=1e-6)
        assert vals[1] == pytest.approx(1.0, abs=1e-9)
        assert prof.min_set == (-1,)
        assert not prof.min_at_boundary

    def test_conjugation_invariance(self, golden_axis):
        rng = random.Random(5)
        for _ in range(5):
            letters = [rng.choice([1, -1, 2, -2]) for _ in range(rng.randint(1, 4))]
            alpha = CyclicWord.make(letters)
            if not alpha:
                continue
            conj = [rng.choice([1, -1, 2, -2]) for _ in range(2)]
            beta = CyclicWord.make(conj + list(alpha.letters) + [-l for l in reversed(conj)])
            pa = length_profile(alpha, golden_axis, (-3, 3))
            pb = length_profile(beta, golden_axis, (-3, 3))
            assert [v for (_, v) in pa.values] == pytest.approx(
                [v for (_, v) in pb.values], abs=1e-12
            )

    def test_tail_slopes(self, golden_axis):
        for text in ("a", "b"):
            prof = length_profile(C(text), golden_axis, (-8, 8))
            assert prof.right_slope == pytest.approx(math.log(GOLDEN), rel=0.1)
            assert prof.left_slope == pytest.approx(math.log(GOLDEN), rel=0.1)

    def test_boundary_flag(self, golden_axis):
        prof = length_profile(C("a"), golden_axis, (-1, 3))
        assert prof.min_at_boundary


class TestProjection:
    def test_axis_point_projects_to_itself(self, golden_axis):
        pr = project(golden_axis.point(5), golden_axis)
        assert pr.argmin == (5,)
        assert pr.value <= 1e-9

    def test_standard_rose(self, golden_axis):
        pr = project(rose(2), golden_axis)
        assert pr.argmin == (0,)
        lx = golden_axis.base.graph.lengths[0]
        assert pr.value == pytest.approx(math.log(lx / 0.5), abs=1e-9)

    def test_equivariance(self, golden_axis):
        phi = golden_axis.phi
        for seed in range(5):
            X = random_point(2, seed, 2, 0.3)
            a = project(X, golden_axis).argmin
            b = project(X.act(phi), golden_axis).argmin
            assert tuple(m + 1 for m in a) == b

    def test_candidate_min_sets_uniformly_close(self, golden_axis):
        # min sets of the candidates of a common point stay within a bound
        diams = []
        for seed in range(25):
            X = random_point(2, seed, 2, 0.35)
            mins = []
            for c in X.candidates():
                prof = length_profile(c.conjugacy_class, golden_axis, (-8, 8))
                mins.extend(prof.min_set)
            diams.append(max(mins) - min(mins))
        first = max(diams[:12])
        both = max(diams)
        assert both <= first + 1  # non-growth under sample doubling


class TestProbe:
    def test_on_axis_pair_delta1_zero(self, golden_axis):
        X = golden_axis.point(4)
        Y = golden_axis.point(1)
        probe = tree_inequality_probe(X, Y, golden_axis)
        assert probe.delta1 == pytest.approx(0.0, abs=1e-9)

    def test_probe_experiment_deterministic(self, golden_axis):
        a = probe_experiment(golden_axis, 5, seed=1)
        b = probe_experiment(golden_axis, 5, seed=1)
        assert [r.row() for r in a] == [r.row() for r in b]
        assert all(r.sep > 3 for r in a)


class TestContraction:
    def test_deterministic_csv(self, golden_axis):
        r1 = contraction_experiment(golden_axis, 8, seed=7)
        r2 = contraction_experiment(golden_axis, 8, seed=7)
        assert write_csv(BALL_HEADER, [r.row() for r in r1]) == write_csv(
            BALL_HEADER, [r.row() for r in r2]
        )

    def test_on_axis_sample_skipped(self, golden_axis):
        rec = ball_sample_record(golden_axis, golden_axis.point(3), seed=0, sample=0)
        assert rec.skipped and rec.reason == "r=0"
        assert rec.n_ball_points == 0

    def test_morse_mode(self, golden_axis):
        recs = contraction_experiment(golden_axis, 3, seed=2, mode="morse")
        assert len(recs) == 3
        assert all(r.max_off_axis >= 0 for r in recs)
        text = write_csv(MORSE_HEADER, [r.row() for r in recs])
        assert text.splitlines()[0] == ",".join(MORSE_HEADER)

    def test_bad_mode(self, golden_axis):
        with pytest.raises(ValueError):
            contraction_experiment(golden_axis, 1, 0, mode="nope")


class TestDivergence:
    def test_bound_formula_vacuous(self, golden_axis):
        path = detour_path(golden_axis, 4.0, seed=1)
        rep = divergence_check(path, golden_axis, 4.0, d_emp=0.5, c_emp=(5 - 3 - 0.5) / 4)
        assert rep.b_prime == pytest.approx(5.0, abs=1e-12)
        assert rep.bound == pytest.approx(16 / 10 - 2, abs=1e-12)
        assert rep.vacuous

    def test_path_through_ball_detected(self, golden_axis):
        k = max(1, math.ceil(2.0 / golden_axis.step))
        path = [golden_axis.point(m) for m in range(-k, k + 1)]
        rep = divergence_check(path, golden_axis, 2.0, d_emp=0.4, c_emp=0.0)
        assert not rep.avoids_ball

    def test_endpoints_too_close(self, golden_axis):
        path = [golden_axis.point(-1), golden_axis.point(1)]
        with pytest.raises(ValueError):
            divergence_check(path, golden_axis, 4.0, d_emp=0.4, c_emp=0.0)

    def test_sampled_detour_satisfies(self, golden_axis):
        path = detour_path(golden_axis, 2.0, seed=0)
        rep = divergence_check(path, golden_axis, 2.0, d_emp=0.5, c_emp=0.1)
        assert rep.avoids_ball and rep.satisfied


class TestTwoAxis:
    def test_same_axis_parallel(self, golden_axis):
        rep = two_axis_report(golden_axis, golden_axis, window=4)
        assert rep.parallel

    def test_translate_bounded(self, golden_axis):
        rng = random.Random(3)
        psi = _random_composite(2, rng, 4)
        axB = golden_axis.translate(psi)
        rep = two_axis_report(golden_axis, axB, window=6)
        assert not rep.parallel
        assert rep.diam <= rep.diam_half + golden_axis.step + 1e-9

    def test_translate_is_axis(self, golden_axis):
        rng = random.Random(1)
        psi = _random_composite(2, rng, 3)
        axB = golden_axis.translate(psi)
        d = distance(axB.point(0), axB.point(1)).value
        assert d == pytest.approx(golden_axis.step, abs=1e-9)


class TestLegalityAlongAxis:
    def test_leg_nondecreasing_beyond_onset(self, golden_axis, golden_tt):
        phi = golden_axis.phi
        for c in rose(2).candidates():
            legs = []
            w = c.conjugacy_class
            for m in range(0, 10):
                legs.append(legality_report(w, golden_tt).leg)
                w = phi.apply_cyclic(w)
            onset = next((i for i, v in enumerate(legs) if v > 0), None)
            if onset is None:
                continue
            tail = legs[onset:]
            assert all(b >= a - 1e-9 for a, b in zip(tail, tail[1:]))


class TestShortLoopProjection:
    def test_shared_short_loop_projects_close(self, golden_axis):
        # two points sharing a very short loop project near each other
        bound = 1 / (3 * 2 - 3)
        diams = []
        for seed in range(4):
            rng = random.Random(seed)
            eps = 0.05
            x = rose(2, [eps, 1 - eps])
            psi = _random_composite(2, rng, 1)
            y = x.act(psi)
            if y.loop_length(C("a")) > bound or x.loop_length(C("a")) > bound:
                continue
            tx = project(x, golden_axis).argmin[0]
            ty = project(y, golden_axis).argmin[0]
            diams.append(abs(tx - ty))
        assert diams and max(diams) <= 3
