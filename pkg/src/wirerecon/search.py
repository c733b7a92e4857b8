"""Genetic search over vertex depths, scored by the summed corner network output.

Lower fitness is better. The genetic operators follow a simple recipe:
the better half of the population survives unchanged, the other half is
refilled by line-partition crossover between random survivors, and an
offspring is occasionally mutated by negating a random subset of its depths.
A coordinate-descent hill climber polishes the winner.
"""

from __future__ import annotations

import json
import time
from dataclasses import asdict, dataclass, field, replace
from typing import Any, Sequence

import numpy as np

from .features import FEATURE_ORDER, CornerGeometry
from .mlp import FeatureOrderMismatch, Network
from .wireframe import Corner, Wireframe, denormalize, enumerate_corners, normalize, project

MAX_SPLIT_RETRIES = 8


class UnsupportedSketchError(ValueError):
    """The sketch has no corner, so the network gives no fitness signal."""


@dataclass(frozen=True, eq=False)
class Individual:
    depths: np.ndarray
    fitness: float | None = None

    def __post_init__(self) -> None:
        d = np.array(self.depths, dtype=float, copy=True).reshape(-1)
        if not np.all(np.isfinite(d)):
            raise ValueError("depths must be finite")
        d.setflags(write=False)
        object.__setattr__(self, "depths", d)


@dataclass(frozen=True)
class HillClimbSchedule:
    initial_step: float = 0.1
    min_step: float = 1e-4
    max_evals: int = 20000


@dataclass(frozen=True)
class GaConfig:
    population: int = 500
    generations: int = 300
    mutation_rate: float = 0.25
    init_range: float = 1.0
    seed: int = 0
    hill_climb: HillClimbSchedule = field(default_factory=HillClimbSchedule)
    stop_below: float | None = None  # optional early exit; off by default

    def __post_init__(self) -> None:
        if self.population < 2 or self.population % 2:
            raise ValueError("population must be even and at least 2")
        if self.generations < 1:
            raise ValueError("need at least one generation")
        if not 0.0 <= self.mutation_rate <= 1.0:
            raise ValueError("mutation rate must lie in [0, 1]")


class Fitness:
    """Summed network output over the sketch's corners, for one or many depth vectors."""

    def __init__(self, w: Wireframe, net: Network, corners: Sequence[Corner] | None = None):
        if net.feature_order != FEATURE_ORDER:
            raise FeatureOrderMismatch(f"network expects {net.feature_order!r}, extractor produces {FEATURE_ORDER!r}")
        self.sketch = w
        self.net = net
        self.geometry = CornerGeometry(w, enumerate_corners(w) if corners is None else corners)
        self.evaluations = 0

    def __call__(self, depths: np.ndarray) -> np.ndarray | float:
        z = np.asarray(depths, dtype=float)
        self.evaluations += int(np.prod(z.shape[:-1], dtype=np.int64))
        if len(self.geometry) == 0:
            out = np.zeros(z.shape[:-1])
        else:
            out = np.abs(self.net.predict(self.geometry.features(z))).sum(axis=-1)
        return float(out) if z.ndim == 1 else out


def fitness_of(w: Wireframe, corners: Sequence[Corner], net: Network, z: Sequence[float] | np.ndarray) -> float:
    return Fitness(w, net, corners)(np.asarray(z, dtype=float))


def _side_mask(points: np.ndarray, centroid: np.ndarray, angle: float) -> np.ndarray:
    dx, dy = np.cos(angle), np.sin(angle)
    rel = points - centroid
    return dx * rel[:, 1] - dy * rel[:, 0] > 0.0


def crossover(parent_a: Individual, parent_b: Individual, w: Wireframe, rng) -> Individual:
    """Cut the sketch with a random line through its centroid and splice the parents.

    Vertices strictly left of the directed line take ``parent_a``'s depth, the
    rest take ``parent_b``'s. Lines that leave every vertex on one side are
    redrawn up to 8 times; after that the fitter parent is copied.
    """
    a, b = parent_a.depths, parent_b.depths
    if len(a) != w.n_vertices or len(b) != w.n_vertices:
        raise ValueError("parent size does not match the sketch")
    centroid = w.vertices.mean(axis=0)
    for _ in range(1 + MAX_SPLIT_RETRIES):
        mask = _side_mask(w.vertices, centroid, rng.uniform(0.0, np.pi))
        if mask.any() and not mask.all():
            return Individual(np.where(mask, a, b))
    fa = np.inf if parent_a.fitness is None else parent_a.fitness
    fb = np.inf if parent_b.fitness is None else parent_b.fitness
    return parent_b if fb < fa else parent_a


def mutate(ind: Individual, rng) -> Individual:
    """Negate each depth independently with probability 0.5."""
    flip = rng.random(len(ind.depths)) < 0.5
    return Individual(np.where(flip, -ind.depths, ind.depths))


def evolve(
    w: Wireframe,
    net: Network,
    cfg: GaConfig,
    corners: Sequence[Corner] | None = None,
    fitness: Fitness | None = None,
) -> tuple[Individual, list[float]]:
    """Run the genetic search; returns the best individual and the best fitness per generation.

    ``history[0]`` scores the random initial population, ``history[g]`` the
    population after ``g`` rounds of reproduction. Each generation draws its
    random numbers from its own child of ``SeedSequence(cfg.seed)``, so the
    result depends only on the seed and not on how fitness is evaluated.
    """
    F = fitness or Fitness(w, net, corners)
    n, half = w.n_vertices, cfg.population // 2
    streams = np.random.SeedSequence(cfg.seed).spawn(cfg.generations + 1)

    rng = np.random.default_rng(streams[0])
    pop = rng.uniform(-cfg.init_range, cfg.init_range, (cfg.population, n))
    fit = np.asarray(F(pop))
    history = [float(fit.min())]

    centroid = w.vertices.mean(axis=0)
    for gen in range(1, cfg.generations + 1):
        rng = np.random.default_rng(streams[gen])
        order = np.argsort(fit, kind="stable")[:half]
        survivors, surv_fit = pop[order], fit[order]
        children = np.empty((cfg.population - half, n))
        for k in range(len(children)):
            ia, ib = rng.integers(0, half, 2)
            child = _splice(survivors[ia], survivors[ib], surv_fit[ia], surv_fit[ib], w.vertices, centroid, rng)
            if rng.random() < cfg.mutation_rate:
                child = np.where(rng.random(n) < 0.5, -child, child)
            children[k] = child
        child_fit = np.asarray(F(children))
        pop = np.vstack([survivors, children])
        fit = np.concatenate([surv_fit, child_fit])
        history.append(float(fit.min()))
        if cfg.stop_below is not None and history[-1] < cfg.stop_below:
            break

    best = int(np.argmin(fit))
    return Individual(pop[best], float(fit[best])), history


def _splice(a, b, fa, fb, points, centroid, rng) -> np.ndarray:
    # array-level twin of crossover(), kept in step with it
    for _ in range(1 + MAX_SPLIT_RETRIES):
        mask = _side_mask(points, centroid, rng.uniform(0.0, np.pi))
        if mask.any() and not mask.all():
            return np.where(mask, a, b)
    return (b if fb < fa else a).copy()


def coordinate_descent(F, start: np.ndarray, schedule: HillClimbSchedule) -> tuple[np.ndarray, float, int]:
    z = np.array(start, dtype=float)
    f = F(z)
    evals = 1
    step = schedule.initial_step
    while step >= schedule.min_step and evals < schedule.max_evals:
        moved = False
        for i in range(len(z)):
            cand = np.tile(z, (2, 1))
            cand[0, i] += step
            cand[1, i] -= step
            fc = F(cand)
            evals += 2
            j = int(np.argmin(fc))
            if fc[j] < f:
                z, f, moved = cand[j], float(fc[j]), True
            if evals >= schedule.max_evals:
                break
        if not moved:
            step /= 2.0
    return z, f, evals


def hill_climb(
    w: Wireframe,
    net: Network,
    start: Sequence[float] | np.ndarray,
    schedule: HillClimbSchedule | None = None,
    corners: Sequence[Corner] | None = None,
) -> np.ndarray:
    """Coordinate descent on depths with step halving; never increases fitness.

    Each sweep tries ``z_i + step`` and ``z_i - step`` for every vertex in turn
    and keeps the better one if it strictly lowers fitness. A sweep without
    any accepted move halves the step. Stops below ``min_step`` or when the
    evaluation budget runs out.
    """
    return coordinate_descent(Fitness(w, net, corners), np.asarray(start, dtype=float), schedule or HillClimbSchedule())[0]


# --------------------------------------------------------------------------
# end-to-end reconstruction
# --------------------------------------------------------------------------


@dataclass
class Report:
    final_fitness: float
    ga_fitness: float
    history: list[float]
    generations: int
    population: int
    seed: int
    mutation_rate: float
    plateau_generation: int
    hill_climb_evals: int
    wall_time_ms: float | None
    target_fitness: float | None = None
    config: dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1, sort_keys=True) + "\n"


def plateau_generation(history: Sequence[float]) -> int:
    """First generation at which the best fitness reached its final value."""
    final = history[-1]
    return next(g for g, f in enumerate(history) if f <= final)


def prepare(w: Wireframe, net: Network):
    """Normalize a sketch and build its fitness; raises for cornerless sketches."""
    norm, rec = normalize(project(w))
    corners = enumerate_corners(norm)
    if not corners:
        raise UnsupportedSketchError("sketch has no vertex of degree >= 3, so nothing can be scored")
    return norm, rec, Fitness(norm, net, corners)


def reconstruct(
    w: Wireframe,
    net: Network,
    cfg: GaConfig | None = None,
    target_depths: Sequence[float] | np.ndarray | None = None,
) -> tuple[Wireframe, Report]:
    """Normalize, evolve, polish with the hill climber and map depths back to sketch units.

    ``target_depths`` (in the sketch's own units) is optional; when given the
    report also scores the true shape. All fitness values refer to the
    normalized sketch.
    """
    cfg = cfg or GaConfig()
    t0 = time.perf_counter()
    norm, rec, F = prepare(w, net)
    best, history = evolve(norm, net, cfg, fitness=F)
    z, final, evals = coordinate_descent(F, best.depths, cfg.hill_climb)
    out = denormalize(norm.with_depths(z), rec)
    target = None
    if target_depths is not None:
        target = float(F(np.asarray(target_depths, dtype=float) * rec.scale))
    report = Report(
        final_fitness=float(final),
        ga_fitness=float(best.fitness),
        history=history,
        generations=len(history) - 1,
        population=cfg.population,
        seed=cfg.seed,
        mutation_rate=cfg.mutation_rate,
        plateau_generation=plateau_generation(history),
        hill_climb_evals=evals,
        wall_time_ms=(time.perf_counter() - t0) * 1000.0,
        target_fitness=target,
        config=asdict(cfg),
    )
    return out, report


def baseline(w: Wireframe, net: Network, schedule: HillClimbSchedule | None = None) -> tuple[Wireframe, float]:
    """Hill climbing alone, starting from the flat drawing (all depths zero)."""
    norm, rec, F = prepare(w, net)
    z, f, _ = coordinate_descent(F, np.zeros(norm.n_vertices), schedule or HillClimbSchedule())
    return denormalize(norm.with_depths(z), rec), f


def with_seed(cfg: GaConfig, seed: int) -> GaConfig:
    return replace(cfg, seed=seed)
