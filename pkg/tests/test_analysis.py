import math

import numpy as np
import pytest

from forel.analysis import (CONVERGED_TO_PURE, CONVERGING_TO_FACE, INTERIOR_RECURRENT, UNDETERMINED,
                            coupling_drift, coupling_lower_bound, coupling_series, coupling_weights,
                            divergence_check, face_mass, fenchel_coupling, make_reference,
                            max_deviation, recurrence_stats, regret, regret_bound, regret_margin,
                            support_classification)
from forel.dynamics import ForelSystem, Trajectory, integrate, make_regularizers
from forel.equilibrium import EquilibriumReport, max_support_equilibrium
from forel.game import GameSpec, cycle_game, matching_pennies, uniform_profile
from forel.regularizer import entropic, omega

MP = matching_pennies()
DOMINANT = np.array([[1.0, 2.0], [0.0, 1.0]])
EMBEDDED = np.array([[1.0, -1.0, 10.0], [-1.0, 1.0, 10.0], [-10.0, -10.0, 0.0]])


def start(game, regs, x):
    return ForelSystem(game, regs).preimage(x)


class TestCoupling:
    def test_values_at_zero(self):
        ref = make_reference(MP, uniform_profile(MP))
        regs = make_regularizers(MP, "entropic")
        assert fenchel_coupling(MP, regs, ref, np.zeros(4)) == pytest.approx(2 * math.log(2), abs=1e-15)
        regs = make_regularizers(MP, "euclidean")
        assert fenchel_coupling(MP, regs, ref, np.zeros(4)) == pytest.approx(-0.5, abs=1e-15)

    def test_weighted_cycle(self):
        g = cycle_game()
        ref = make_reference(g, uniform_profile(g), weights=[2, 1, 1])
        G = fenchel_coupling(g, "entropic", ref, np.zeros(6))
        assert G == pytest.approx(sum(w * math.log(2) for w in (2, 1, 1)), abs=1e-14)

    def test_weights_undo_scale(self):
        g = cycle_game(scale=[1, 2, 3], offset=[0, 1, -1])
        np.testing.assert_allclose(coupling_weights(g), [1, 1 / 2, 1 / 3])

    def test_lower_bound(self):
        rng = np.random.default_rng(0)
        ref = make_reference(MP, uniform_profile(MP))
        for kind in ("entropic", "euclidean"):
            regs = make_regularizers(MP, kind)
            G = fenchel_coupling(MP, regs, ref, rng.normal(scale=5, size=(500, 4)))
            assert np.all(G >= coupling_lower_bound(regs, ref) - 1e-12)

    def test_drift_zero_in_pennies(self):
        rng = np.random.default_rng(1)
        ref = make_reference(MP, uniform_profile(MP))
        for kind in ("entropic", "euclidean"):
            d = coupling_drift(MP, kind, ref, rng.normal(scale=3, size=(100, 4)))
            assert np.max(np.abs(d)) <= 1e-12

    def test_drift_negative_dominant(self):
        g = GameSpec.zero_sum(DOMINANT)
        ref = make_reference(g, max_support_equilibrium(DOMINANT))
        rng = np.random.default_rng(2)
        d = coupling_drift(g, "entropic", ref, rng.normal(size=(100, 4)))
        assert np.all(d < 0)

    def test_drift_zero_at_reference(self):
        g = cycle_game(scale=[1, 2, 3])
        y = np.array([0.3, -0.1, 0.2, 0.5, -1.0, 0.0])
        x = ForelSystem(g, "entropic").choice(y)
        assert coupling_drift(g, "entropic", make_reference(g, x), y) == pytest.approx(0, abs=1e-15)

    def test_drift_is_time_derivative(self):
        g = GameSpec.zero_sum(DOMINANT)
        ref = make_reference(g, max_support_equilibrium(DOMINANT))
        tr = integrate(g, "entropic", start(g, "entropic", [[0.3, 0.7], [0.6, 0.4]]), 2.0, 1e-4)
        G = coupling_series(tr, ref)
        dG = np.gradient(G, tr.times)[1:-1]
        np.testing.assert_allclose(dG, coupling_drift(g, "entropic", ref, tr.y)[1:-1], atol=1e-7)

    def test_weighted_conservation_short(self):
        g = cycle_game(scale=[1, 2, 3], offset=[0, 1, -1])
        ref = make_reference(g, uniform_profile(g), coupling_weights(g))
        y0 = start(g, "entropic", [[0.7, 0.3], [0.4, 0.6], [0.55, 0.45]])
        tr = integrate(g, "entropic", y0, 5.0, 1e-3)
        assert max_deviation(coupling_series(tr, ref)) <= 1e-10


class TestRegret:
    def test_pinned_at_equilibrium(self):
        tr = integrate(MP, "entropic", np.zeros(4), 3.0, 1e-2)
        for i in (0, 1):
            t, R = regret(tr, i)
            assert t[0] > 0
            np.testing.assert_array_equal(R, 0.0)

    def test_single_decision_maker_quadrature(self):
        v = np.array([1.0, 3.0, 2.0])
        g = GameSpec.normal_form([v])
        tr = integrate(g, "entropic", np.zeros(3), 5.0, 1e-3)
        t, R = regret(tr, 0)
        # independent trapezoid time-average of the played strategy
        xbar = np.cumsum(0.5 * np.diff(tr.times)[:, None] * (tr.x[1:] + tr.x[:-1]), axis=0) / t[:, None]
        np.testing.assert_allclose(R, v.max() - xbar @ v, atol=1e-6)

    def test_bound_from_zero_scores(self):
        rng = np.random.default_rng(3)
        for kind in ("entropic", "euclidean"):
            regs = make_regularizers(MP, kind)
            assert regret_bound(regs[0], np.zeros(2)) == pytest.approx(omega(regs[0]), abs=1e-15)
            tr = integrate(MP, kind, np.r_[0.0, 0.0, rng.normal(size=2)], 20.0, 1e-3, sample_every=10)
            # player 1 starts at y = 0
            t, R = regret(tr, 0)
            assert np.all(t * R <= omega(regs[0]) + 1e-9)

    @pytest.mark.parametrize("kind", ["entropic", "euclidean"])
    def test_bound_with_initial_scores(self, kind):
        regs = make_regularizers(MP, kind)
        y0 = start(MP, kind, [[0.9, 0.1], [0.5, 0.5]])
        tr = integrate(MP, kind, y0, 50.0, 1e-3, sample_every=10)
        for i in (0, 1):
            t, R = regret(tr, i)
            assert np.all(t * R <= regret_bound(regs[i], y0[2 * i:2 * i + 2]) + 1e-9)

    def test_skewed_start_exceeds_omega(self):
        # the start-independent bound Omega only holds from y0 = 0
        y0 = start(MP, "entropic", [[0.9, 0.1], [0.5, 0.5]])
        tr = integrate(MP, "entropic", y0, 10.0, 1e-3, sample_every=10)
        t, R = regret(tr, 0)
        assert np.max(t * R) > math.log(2) + 0.5
        assert regret_margin(tr, 1.0)[0] < 0

    def test_needs_payoff_integral(self):
        tr = integrate(MP, "entropic", np.zeros(4), 1.0, 1e-2)
        bare = Trajectory(tr.game, tr.regs, tr.times, tr.y, tr.x, tr.cum_v, None, {})
        with pytest.raises(ValueError):
            regret(bare, 0)


class TestDivergence:
    def test_zero_at_origin(self):
        assert abs(divergence_check(MP, "entropic", np.zeros(2))) <= 1e-8

    def test_random_points(self):
        rng = np.random.default_rng(4)
        vals = [divergence_check(MP, "entropic", z) for z in rng.uniform(-3, 3, size=(100, 2))]
        assert max(abs(v) for v in vals) <= 1e-5

    def test_skipped_at_kink(self):
        # Euclidean: x_1 = (1, 0) exactly at z_1 = 1, the edge of the active set
        assert divergence_check(MP, "euclidean", np.array([1.0, 0.0])) is None
        v = divergence_check(MP, "euclidean", np.array([0.3, -0.2]))
        assert v is not None and abs(v) <= 1e-8

    def test_no_self_dependence_in_polymatrix_games(self):
        # v_i never depends on x_i, so every reduced coordinate's own partial vanishes
        rng = np.random.default_rng(5)
        coordination = GameSpec.polymatrix([2, 2], [(0, 1, [[2, 0], [0, 1]], [[2, 0], [0, 1]])])
        vals = [divergence_check(coordination, "entropic", z) for z in rng.uniform(-3, 3, size=(20, 2))]
        assert max(abs(v) for v in vals) <= 1e-8


class TestRecurrence:
    def test_stationary(self):
        tr = integrate(MP, "entropic", np.zeros(4), 3.0, 1e-2)
        rep = recurrence_stats(tr, 1e-2, 1.0)
        assert rep.first_return_time == pytest.approx(tr.times[tr.times > 1.0][0])
        assert rep.min_distance_after_burn_in == 0.0
        assert rep.n_returns == 1  # never leaves, so never re-arms

    def test_synthetic_visits(self):
        t = np.linspace(0, 10, 11)
        d = np.array([0, 0.5, 0.001, 0.001, 0.015, 0.001, 0.05, 0.005, 0.5, 0.002, 0.5])
        xs = np.stack([d, np.zeros_like(d)], axis=1)
        rep = recurrence_stats((t, xs), 0.01, 1.0)
        # visit at 2; 0.015 < 2 eps keeps it disarmed; re-armed at 6 -> visit at 7; again at 9
        assert rep.first_return_time == 2.0 and rep.n_returns == 3

    def test_boundary_game_never_returns(self):
        g = GameSpec.zero_sum(DOMINANT)
        tr = integrate(g, "entropic", start(g, "entropic", [[0.4, 0.6], [0.5, 0.5]]), 50.0, 1e-3,
                       sample_every=10)
        rep = recurrence_stats(tr, 1e-3, 1.0)
        assert rep.first_return_time is None and rep.n_returns == 0
        assert rep.min_distance_after_burn_in > 1e-3

    def test_burn_in_past_end(self):
        tr = integrate(MP, "entropic", np.zeros(4), 1.0, 1e-2)
        with pytest.raises(ValueError):
            recurrence_stats(tr, 1e-2, 2.0)


class TestClassification:
    def test_pennies_interior(self):
        tr = integrate(MP, "entropic", start(MP, "entropic", [[0.8, 0.2], [0.5, 0.5]]), 5.0, 1e-3)
        cls = support_classification(tr, max_support_equilibrium(MP.edges[0].u_ij))
        assert cls.verdict == INTERIOR_RECURRENT

    def test_dominant_pure(self):
        g = GameSpec.zero_sum(DOMINANT)
        tr = integrate(g, "entropic", start(g, "entropic", [[0.4, 0.6], [0.5, 0.5]]), 200.0, 1e-3,
                       sample_every=100)
        cls = support_classification(tr, max_support_equilibrium(DOMINANT))
        assert cls.verdict == CONVERGED_TO_PURE and cls.final_face_mass <= 1e-2

    def test_embedded_face(self):
        g = GameSpec.zero_sum(EMBEDDED)
        rep = max_support_equilibrium(EMBEDDED)
        x0 = [[0.2, 0.3, 0.5], [0.3, 0.3, 0.4]]
        tr = integrate(g, "entropic", start(g, "entropic", x0), 300.0, 1e-3, sample_every=100)
        cls = support_classification(tr, rep)
        assert cls.verdict == CONVERGING_TO_FACE
        assert [len(s) for s in cls.support] == [2, 2]
        assert cls.final_face_mass <= 1e-2

    def test_non_monotone_tail(self):
        g = GameSpec.zero_sum(DOMINANT)
        rep = max_support_equilibrium(DOMINANT)
        t = np.linspace(0, 1, 20)
        x = np.tile([0.9, 0.1, 0.9, 0.1], (20, 1))
        x[-1] = [0.8, 0.2, 0.9, 0.1]
        tr = Trajectory(g, make_regularizers(g, "entropic"), t, np.zeros_like(x), x, np.zeros_like(x),
                        np.zeros((20, 2)), {})
        assert support_classification(tr, rep).verdict == UNDETERMINED

    def test_face_mass(self):
        g = GameSpec.zero_sum(EMBEDDED)
        m = face_mass(g, [[0.2, 0.3, 0.5], [0.3, 0.3, 0.4]], [[0, 1], [0, 1]])
        assert m == pytest.approx(0.9)
