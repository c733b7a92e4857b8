"""Reconstruction benchmark over generated target shapes.

Produces a per-shape table (success rate, plateau generation, final versus
target fitness, wall time) and the data behind a population-size comparison
against the zero-start hill-climbing baseline.
"""

from __future__ import annotations

import time
from dataclasses import asdict, dataclass, field, replace
from typing import Any, Sequence

import numpy as np

from .datagen import SHAPES, make_shape
from .mlp import Network
from .search import GaConfig, HillClimbSchedule, baseline, reconstruct
from .wireframe import aligned_depth_error, normalize


@dataclass
class BenchmarkConfig:
    shapes: Sequence[str] = SHAPES
    repeats: int = 3
    population: int = 500
    generations: int = 200
    mutation_rate: float = 0.25
    init_range: float = 1.0
    hill_climb: HillClimbSchedule = field(default_factory=HillClimbSchedule)
    sweep_shape: str = "prism_on_box"
    sweep_populations: Sequence[int] = (250, 500, 1000, 2000)
    threshold: float = 0.1
    seed: int = 0
    timing: bool = True

    def to_dict(self) -> dict[str, Any]:
        d = asdict(self)
        d["shapes"] = list(self.shapes)
        d["sweep_populations"] = list(self.sweep_populations)
        return d


@dataclass
class ShapeRow:
    shape: str
    runs: int
    success_rate: float
    mean_plateau_generation: float
    mean_final_fitness: float
    mean_target_fitness: float
    mean_rms: float
    wall_time_ms: float | None


@dataclass
class BenchmarkResult:
    config: dict[str, Any]
    rows: list[ShapeRow] = field(default_factory=list)
    # population -> per-run final fitness / GA history
    sweep_final: dict[int, list[float]] = field(default_factory=dict)
    sweep_history: dict[int, list[list[float]]] = field(default_factory=dict)
    baseline_fitness: float = float("nan")

    def table(self) -> str:
        head = f"{'shape':<14}{'runs':>5}{'success':>9}{'plateau':>9}{'final F':>10}{'target F':>10}{'rms':>8}{'ms':>10}"
        lines = [head, "-" * len(head)]
        for r in self.rows:
            ms = "-" if r.wall_time_ms is None else f"{r.wall_time_ms:.0f}"
            lines.append(
                f"{r.shape:<14}{r.runs:>5}{r.success_rate:>9.2f}{r.mean_plateau_generation:>9.1f}"
                f"{r.mean_final_fitness:>10.4f}{r.mean_target_fitness:>10.4f}{r.mean_rms:>8.3f}{ms:>10}"
            )
        lines.append("")
        lines.append(f"population sweep on {self.config['sweep_shape']} ({self.config['generations']} generations)")
        lines.append(f"  hill-climb baseline (zero start): {self.baseline_fitness:.4f}")
        for pop, finals in self.sweep_final.items():
            lines.append(f"  GA pop {pop:>5}: median final {float(np.median(finals)):.4f}")
        return "\n".join(lines) + "\n"

    def to_dict(self) -> dict[str, Any]:
        return {
            "config": self.config,
            "rows": [asdict(r) for r in self.rows],
            "baseline_fitness": self.baseline_fitness,
            "sweep_final": {str(k): v for k, v in self.sweep_final.items()},
        }

    def series(self) -> dict[str, Any]:
        """Median best-fitness-per-generation curves, one per population, plus the flat baseline."""
        curves = {str(p): np.median(np.array(h), axis=0).tolist() for p, h in self.sweep_history.items()}
        n = max((len(c) for c in curves.values()), default=0)
        return {
            "shape": self.config["sweep_shape"],
            "generation": list(range(n)),
            "ga_median_best": curves,
            "hill_climb_baseline": [self.baseline_fitness] * n,
        }


def _shape_seed(seed: int, index: int) -> int:
    return seed * 1000 + index


def run_benchmark(net: Network, cfg: BenchmarkConfig | None = None) -> BenchmarkResult:
    cfg = cfg or BenchmarkConfig()
    result = BenchmarkResult(cfg.to_dict())
    base = GaConfig(
        population=cfg.population,
        generations=cfg.generations,
        mutation_rate=cfg.mutation_rate,
        init_range=cfg.init_range,
        hill_climb=cfg.hill_climb,
    )

    for index, kind in enumerate(cfg.shapes):
        target = make_shape(kind, _shape_seed(cfg.seed, index))
        norm_target, rec = normalize(target)
        finals, targets, rms_all, plateaus, wins = [], [], [], [], 0
        t0 = time.perf_counter()
        for r in range(cfg.repeats):
            out, report = reconstruct(target, net, replace(base, seed=cfg.seed + r), target_depths=target.depths)
            rms, _ = aligned_depth_error(out.depths * rec.scale, norm_target.depths)
            wins += rms <= cfg.threshold
            finals.append(report.final_fitness)
            targets.append(report.target_fitness)
            rms_all.append(rms)
            plateaus.append(report.plateau_generation)
        elapsed = (time.perf_counter() - t0) * 1000.0 / cfg.repeats
        result.rows.append(ShapeRow(
            kind, cfg.repeats, wins / cfg.repeats, float(np.mean(plateaus)), float(np.mean(finals)),
            float(np.mean(targets)), float(np.mean(rms_all)), elapsed if cfg.timing else None,
        ))

    sweep_target = make_shape(cfg.sweep_shape, _shape_seed(cfg.seed, len(SHAPES)))
    result.baseline_fitness = baseline(sweep_target, net, base.hill_climb)[1]
    for pop in cfg.sweep_populations:
        finals, hists = [], []
        for r in range(cfg.repeats):
            _, report = reconstruct(sweep_target, net, replace(base, population=pop, seed=cfg.seed + r))
            finals.append(report.final_fitness)
            hists.append(report.history)
        result.sweep_final[pop] = finals
        result.sweep_history[pop] = hists
    return result
