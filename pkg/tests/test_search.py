import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from wirerecon.datagen import make_shape, random_prism
from wirerecon.mlp import FeatureOrderMismatch, Network
from wirerecon.search import (
    Fitness,
    GaConfig,
    HillClimbSchedule,
    Individual,
    UnsupportedSketchError,
    baseline,
    coordinate_descent,
    crossover,
    evolve,
    fitness_of,
    hill_climb,
    mutate,
    plateau_generation,
    reconstruct,
)
from wirerecon.wireframe import Wireframe, enumerate_corners, normalize, project


class StubRng:
    """Replays fixed angles and uniform draws."""

    def __init__(self, angles=(), draws=()):
        self.angles = list(angles)
        self.draws = list(draws)

    def uniform(self, lo, hi):
        a = self.angles.pop(0) if len(self.angles) > 1 else self.angles[0]
        assert lo <= a < hi
        return a

    def random(self, n=None):
        return np.asarray(self.draws.pop(0))


@pytest.fixture
def prism_sketch():
    return normalize(project(random_prism(5)))[0]


class TestFitness:
    def test_no_corners_scores_zero(self, random_net):
        tri = Wireframe(np.array([[0, 0], [1, 0], [0, 1]], float), np.array([[0, 1], [1, 2], [2, 0]]))
        assert fitness_of(tri, [], random_net, [0.3, 0.1, -0.2]) == 0.0

    def test_is_sum_of_corner_outputs(self, random_net, prism_sketch):
        z = np.linspace(-0.3, 0.4, 6)
        F = Fitness(prism_sketch, random_net)
        per_corner = [fitness_of(prism_sketch, [c], random_net, z) for c in enumerate_corners(prism_sketch)]
        assert F(z) == pytest.approx(sum(per_corner), rel=1e-12)
        assert F(z) >= 0.0

    def test_batch_matches_single(self, random_net, prism_sketch):
        z = np.random.default_rng(0).normal(size=(4, 6))
        F = Fitness(prism_sketch, random_net)
        np.testing.assert_allclose(F(z), [F(row) for row in z], rtol=1e-13)
        assert F.evaluations == 8

    @settings(max_examples=100)
    @given(arrays(float, 6, elements=st.floats(-1, 1)), st.floats(-10, 10))
    def test_shift_and_negation_invariant(self, z, k):
        net = Network(*[np.random.default_rng(1).normal(0, 0.5, s) for s in [(5, 16), 5, (1, 5), 1]], np.zeros(16), np.ones(16))
        w = normalize(project(random_prism(5)))[0]
        F = Fitness(w, net)
        base = F(z)
        assert F(z + k) == pytest.approx(base, abs=1e-12)
        assert F(-z) == base

    def test_rejects_foreign_network(self, random_net, prism_sketch):
        other = Network(random_net.w1, random_net.b1, random_net.w2, random_net.b2, random_net.mean, random_net.std, "other")
        with pytest.raises(FeatureOrderMismatch):
            Fitness(prism_sketch, other)


class TestOperators:
    def test_crossover_vertical_line(self, unit_square):
        a, b = Individual([1.0, 2.0, 3.0, 4.0]), Individual([-1.0, -2.0, -3.0, -4.0])
        # direction pi/2 points up through (0.5, 0.5): the left half is x < 0.5
        child = crossover(a, b, unit_square, StubRng([math.pi / 2]))
        assert child.depths.tolist() == [1.0, -2.0, -3.0, 4.0]

    def test_crossover_horizontal_line(self, unit_square):
        a, b = Individual([1.0, 2.0, 3.0, 4.0]), Individual([-1.0, -2.0, -3.0, -4.0])
        child = crossover(a, b, unit_square, StubRng([0.0]))
        assert child.depths.tolist() == [-1.0, -2.0, 3.0, 4.0]

    def test_identical_parents(self, unit_square):
        a = Individual([0.1, 0.2, 0.3, 0.4])
        child = crossover(a, a, unit_square, np.random.default_rng(0))
        assert child.depths.tolist() == a.depths.tolist()

    def test_collinear_falls_back_to_fitter(self):
        line = Wireframe(np.array([[0, 0], [1, 0], [2, 0]], float), np.array([[0, 1], [1, 2]]))
        a, b = Individual([1.0, 1.0, 1.0], 0.5), Individual([2.0, 2.0, 2.0], 0.2)
        assert crossover(a, b, line, StubRng([0.0])) is b
        assert crossover(b, a, line, StubRng([0.0])) is b

    def test_crossover_takes_each_depth_from_a_parent(self, prism_sketch):
        rng = np.random.default_rng(3)
        a, b = Individual(rng.normal(size=6)), Individual(rng.normal(size=6))
        for _ in range(20):
            c = crossover(a, b, prism_sketch, rng).depths
            assert np.all((c == a.depths) | (c == b.depths))

    def test_mutation_mask(self):
        out = mutate(Individual([0.3, -0.2]), StubRng(draws=[[0.1, 0.9]]))
        assert out.depths.tolist() == [-0.3, -0.2]

    def test_mutation_fixed_point_and_involution(self):
        rng = np.random.default_rng(0)
        assert mutate(Individual(np.zeros(5)), rng).depths.tolist() == [0.0] * 5
        z = Individual(rng.normal(size=5))
        draws = rng.random(5)
        once = mutate(z, StubRng(draws=[draws]))
        twice = mutate(once, StubRng(draws=[draws]))
        np.testing.assert_array_equal(twice.depths, z.depths)
        assert np.all(np.abs(once.depths) == np.abs(z.depths))


class TestEvolve:
    def test_history_monotone(self, trained_net, prism_sketch):
        best, history = evolve(prism_sketch, trained_net, GaConfig(population=40, generations=25, seed=1))
        assert len(history) == 26
        assert all(b <= a for a, b in zip(history, history[1:]))
        assert best.fitness == history[-1]

    def test_deterministic(self, trained_net, prism_sketch):
        cfg = GaConfig(population=30, generations=10, seed=4)
        a, ha = evolve(prism_sketch, trained_net, cfg)
        b, hb = evolve(prism_sketch, trained_net, cfg)
        np.testing.assert_array_equal(a.depths, b.depths)
        assert ha == hb

    @pytest.mark.parametrize("pop, gens", [(10, 3), (50, 7)])
    def test_evaluation_count(self, trained_net, prism_sketch, pop, gens):
        F = Fitness(prism_sketch, trained_net)
        evolve(prism_sketch, trained_net, GaConfig(population=pop, generations=gens), fitness=F)
        assert F.evaluations == pop + gens * pop // 2

    def test_flat_fixed_point(self, trained_net, prism_sketch):
        best, history = evolve(prism_sketch, trained_net, GaConfig(population=20, generations=5, init_range=0.0, mutation_rate=0.0))
        assert best.depths.tolist() == [0.0] * 6
        assert len(set(history)) == 1

    @pytest.mark.parametrize("kwargs", [{"population": 3}, {"population": 0}, {"generations": 0}, {"mutation_rate": 1.5}])
    def test_config_validation(self, kwargs):
        with pytest.raises(ValueError):
            GaConfig(**kwargs)

    def test_plateau(self):
        assert plateau_generation([3.0, 2.0, 1.0, 1.0, 1.0]) == 2
        assert plateau_generation([1.0]) == 0


def bowl(center):
    def F(z):
        return ((np.asarray(z) - center) ** 2).sum(axis=-1)

    return F


class TestHillClimb:
    def test_minimum_stays_put(self):
        c = np.array([0.2, -0.1, 0.05])
        z, f, _ = coordinate_descent(bowl(c), c, HillClimbSchedule())
        np.testing.assert_array_equal(z, c)
        assert f == 0.0

    def test_finds_bowl_minimum(self):
        c = np.array([0.37, -0.81, 0.123])
        z, _, evals = coordinate_descent(bowl(c), np.zeros(3), HillClimbSchedule())
        np.testing.assert_allclose(z, c, atol=1e-4)
        assert evals <= 20000

    def test_budget(self):
        _, _, evals = coordinate_descent(bowl(np.full(4, 5.0)), np.zeros(4), HillClimbSchedule(max_evals=31))
        assert evals <= 31

    @settings(max_examples=10, deadline=None)
    @given(arrays(float, 6, elements=st.floats(-1, 1)))
    def test_never_worse(self, start):
        net = Network(*[np.random.default_rng(2).normal(0, 0.5, s) for s in [(4, 16), 4, (1, 4), 1]], np.zeros(16), np.ones(16))
        w = normalize(project(random_prism(1)))[0]
        z = hill_climb(w, net, start, HillClimbSchedule(max_evals=400))
        F = Fitness(w, net)
        assert F(z) <= F(start)


class TestReconstruct:
    def test_triangle_rejected(self, trained_net):
        tri = Wireframe(np.array([[0, 0], [1, 0], [0, 1]], float), np.array([[0, 1], [1, 2], [2, 0]]))
        with pytest.raises(UnsupportedSketchError):
            reconstruct(tri, trained_net, GaConfig(population=4, generations=1))

    def test_deterministic_and_shaped(self, trained_net):
        w = make_shape("box", 2)
        cfg = GaConfig(population=40, generations=10, seed=3, hill_climb=HillClimbSchedule(max_evals=500))
        out1, r1 = reconstruct(project(w), trained_net, cfg)
        out2, r2 = reconstruct(project(w), trained_net, cfg)
        np.testing.assert_array_equal(out1.depths, out2.depths)
        np.testing.assert_array_equal(out1.vertices, w.vertices)
        assert r1.final_fitness == r2.final_fitness <= r1.ga_fitness
        assert r1.generations == 10 and len(r1.history) == 11

    def test_prism_reaches_target_fitness(self, trained_net):
        w = random_prism(11)
        _, report = reconstruct(project(w), trained_net, GaConfig(population=200, generations=80, seed=0), w.depths)
        assert report.final_fitness <= 1.1 * report.target_fitness

    def test_baseline_from_flat(self, trained_net):
        w = make_shape("box", 1)
        out, f = baseline(project(w), trained_net, HillClimbSchedule(max_evals=300))
        assert out.depths.shape == (8,) and f >= 0.0
