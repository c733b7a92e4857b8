"""Command-line interface: ``wirerecon <subcommand> [flags]``.

Exit status is 0 on success, 2 for usage errors, 3 for bad input files and
4 for failures while running.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import asdict
from pathlib import Path
from typing import Any, Sequence

from . import datagen, mlp, search
from .benchmark import BenchmarkConfig, run_benchmark
from .features import DegenerateCornerError
from .wireframe import (
    WireframeError,
    aligned_depth_error,
    dump_wireframe,
    export_obj,
    normalize,
    parse_wireframe,
    project,
)

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_INPUT = 3
EXIT_RUNTIME = 4

log = logging.getLogger("wirerecon")


class InputError(Exception):
    pass


def _read(path: str | None, what: str) -> str:
    if not path:
        raise InputError(f"missing {what} path")
    try:
        return Path(path).read_text()
    except OSError as exc:
        raise InputError(f"cannot read {what} {path!r}: {exc.strerror}") from exc


def _write(path: str, text: str) -> None:
    p = Path(path)
    if p.parent and not p.parent.exists():
        p.parent.mkdir(parents=True)
    p.write_text(text)


def _load_model(path: str) -> mlp.Network:
    try:
        return mlp.load_model(_read(path, "model"))
    except mlp.ModelFormatError as exc:
        raise InputError(f"{path}: {exc}") from exc


def _load_wireframe(path: str, what: str):
    try:
        return parse_wireframe(_read(path, what))
    except WireframeError as exc:
        raise InputError(f"{path}: {type(exc).__name__}: {exc}") from exc


def _emit(args, text: str) -> None:
    if not args.quiet:
        print(text)


def _ga_config(args) -> search.GaConfig:
    return search.GaConfig(
        population=args.pop,
        generations=args.gens,
        mutation_rate=args.mutation_rate,
        init_range=args.init_range,
        seed=args.seed,
        hill_climb=search.HillClimbSchedule(args.hc_step, args.hc_min_step, args.hc_evals),
    )


# --------------------------------------------------------------------------
# subcommands
# --------------------------------------------------------------------------


def cmd_gen_data(args) -> int:
    grid = datagen.displacement_grid(args.grid)
    gen = datagen.build_training_set(args.prisms, grid, args.seed)
    _write(args.out, datagen.dump_dataset(gen))
    _emit(args, f"rows {len(gen.data)}\ndiscarded {gen.discarded}")
    return EXIT_OK


def cmd_train(args) -> int:
    try:
        data, header = datagen.load_dataset(_read(args.data, "dataset"))
    except datagen.DatasetFormatError as exc:
        raise InputError(f"{args.data}: {exc}") from exc
    cfg = mlp.TrainConfig(args.hidden, args.max_epochs, args.val_fraction, args.patience, args.seed)
    result = mlp.fit(data, cfg)
    config = {"train": asdict(cfg), "dataset": header}
    _write(args.out, mlp.save_model(result.network, config))
    _emit(
        args,
        f"train_mse {result.train_mse[result.best_epoch]:.6g}\n"
        f"val_mse {result.best_val_mse:.6g}\n"
        f"best_epoch {result.best_epoch}\n"
        f"stop_epoch {result.stop_epoch} ({result.stop_reason})",
    )
    return EXIT_OK


def cmd_reconstruct(args) -> int:
    sketch = _load_wireframe(args.sketch, "sketch")
    net = _load_model(args.model)
    cfg = _ga_config(args)
    out, report = search.reconstruct(sketch, net, cfg, target_depths=sketch.depths)
    if args.no_timing:
        report.wall_time_ms = None
    meta = {"config": report.config, "final_fitness": report.final_fitness, "model": args.model, "sketch": args.sketch}
    _write(args.out, dump_wireframe(out, meta))
    report_path = args.report or str(Path(args.out).with_suffix(".report.json"))
    _write(report_path, report.to_json())
    if args.obj:
        _write(args.obj, export_obj(out))
    summary = f"final_fitness {report.final_fitness:.6g}\nplateau_generation {report.plateau_generation}"
    if report.target_fitness is not None:
        summary += f"\ntarget_fitness {report.target_fitness:.6g}"
    _emit(args, summary)
    return EXIT_OK


def cmd_evaluate(args) -> int:
    cand = _load_wireframe(args.candidate, "candidate")
    target = _load_wireframe(args.target, "target")
    if cand.n_vertices != target.n_vertices:
        raise InputError(f"vertex counts differ: candidate {cand.n_vertices}, target {target.n_vertices}")
    if cand.depths is None or target.depths is None:
        raise InputError("both candidate and target need depths")
    norm, rec = normalize(target)
    rms, negated = aligned_depth_error(cand.depths * rec.scale, norm.depths)
    result: dict[str, Any] = {
        "rms": rms,
        "negated": negated,
        "threshold": args.threshold,
        "success": bool(rms <= args.threshold),
        "candidate": args.candidate,
        "target": args.target,
    }
    if args.model:
        net = _load_model(args.model)
        F = search.Fitness(project(norm), net)
        result["candidate_fitness"] = F(cand.depths * rec.scale)
        result["target_fitness"] = F(norm.depths)
    text = json.dumps(result, indent=1, sort_keys=True) + "\n"
    if args.out:
        _write(args.out, text)
    _emit(args, text.rstrip())
    return EXIT_OK


def cmd_benchmark(args) -> int:
    net = _load_model(args.model)
    cfg = BenchmarkConfig(
        shapes=tuple(args.shapes),
        repeats=args.repeats,
        population=args.pop,
        generations=args.gens,
        mutation_rate=args.mutation_rate,
        init_range=args.init_range,
        hill_climb=search.HillClimbSchedule(args.hc_step, args.hc_min_step, args.hc_evals),
        sweep_shape=args.sweep_shape,
        sweep_populations=tuple(args.sweep_pops),
        threshold=args.threshold,
        seed=args.seed,
        timing=not args.no_timing,
    )
    result = run_benchmark(net, cfg)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    table = result.table()
    (out / "table.txt").write_text(table)
    if args.no_timing:
        result.config["timing"] = False
    (out / "table.json").write_text(json.dumps(result.to_dict(), indent=1, sort_keys=True) + "\n")
    (out / "series.json").write_text(json.dumps(result.series(), indent=1, sort_keys=True) + "\n")
    _emit(args, table.rstrip())
    return EXIT_OK


def cmd_export_obj(args) -> int:
    w = _load_wireframe(args.input, "wireframe")
    if w.depths is None:
        raise InputError(f"{args.input}: wireframe has no depths to export")
    _write(args.out, f"# exported from {Path(args.input).name}\n" + export_obj(w))
    return EXIT_OK


# --------------------------------------------------------------------------
# argument parsing
# --------------------------------------------------------------------------


def _int_list(text: str) -> list[int]:
    try:
        return [int(t) for t in text.split(",") if t]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from exc


def _shape_list(text: str) -> list[str]:
    kinds = [t for t in text.split(",") if t]
    bad = [k for k in kinds if k not in datagen.SHAPES]
    if bad:
        raise argparse.ArgumentTypeError(f"unknown shapes {bad}; choose from {', '.join(datagen.SHAPES)}")
    return kinds


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--quiet", action="store_true")

    ga = argparse.ArgumentParser(add_help=False)
    ga.add_argument("--pop", type=int, default=500)
    ga.add_argument("--gens", type=int, default=300)
    ga.add_argument("--mutation-rate", type=float, default=0.25)
    ga.add_argument("--init-range", type=float, default=1.0)
    ga.add_argument("--hc-step", type=float, default=0.1)
    ga.add_argument("--hc-min-step", type=float, default=1e-4)
    ga.add_argument("--hc-evals", type=int, default=20000)
    ga.add_argument("--no-timing", action="store_true", help="record wall time as null so reports are reproducible byte for byte")

    p = argparse.ArgumentParser(prog="wirerecon", description="Reconstruct 3D wireframes from 2D line drawings.")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("gen-data", parents=[common], help="generate the displaced-prism training set")
    s.add_argument("--prisms", type=int, default=1000)
    s.add_argument("--grid", type=int, default=21)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_gen_data)

    s = sub.add_parser("train", parents=[common], help="train the corner network")
    s.add_argument("--data", required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--hidden", type=int, default=24)
    s.add_argument("--max-epochs", type=int, default=1000)
    s.add_argument("--patience", type=int, default=20)
    s.add_argument("--val-fraction", type=float, default=0.1)
    s.set_defaults(func=cmd_train)

    s = sub.add_parser("reconstruct", parents=[common, ga], help="assign depths to a sketch")
    s.add_argument("--sketch", required=True)
    s.add_argument("--model", required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--report")
    s.add_argument("--obj")
    s.set_defaults(func=cmd_reconstruct)

    s = sub.add_parser("evaluate", parents=[common], help="compare a reconstruction with its target")
    s.add_argument("--candidate", required=True)
    s.add_argument("--target", required=True)
    s.add_argument("--model")
    s.add_argument("--threshold", type=float, default=0.1)
    s.add_argument("--out")
    s.set_defaults(func=cmd_evaluate)

    s = sub.add_parser("benchmark", parents=[common, ga], help="reconstruct generated shapes and compare populations")
    s.add_argument("--model", required=True)
    s.add_argument("--out", required=True, help="output directory")
    s.add_argument("--repeats", type=int, default=3)
    s.add_argument("--shapes", type=_shape_list, default=list(datagen.SHAPES))
    s.add_argument("--sweep-shape", choices=datagen.SHAPES, default="prism_on_box")
    s.add_argument("--sweep-pops", type=_int_list, default=[250, 500, 1000, 2000])
    s.add_argument("--threshold", type=float, default=0.1)
    s.set_defaults(func=cmd_benchmark, gens=200)

    s = sub.add_parser("export-obj", parents=[common], help="write a depth-annotated wireframe as OBJ")
    s.add_argument("--in", dest="input", required=True)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_export_obj)
    return p


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    logging.basicConfig(level=logging.WARNING if args.quiet else logging.INFO, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (search.UnsupportedSketchError, WireframeError, DegenerateCornerError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except ValueError as exc:
        # invalid flag values (odd population, even grid size, ...)
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (mlp.TrainingError, RuntimeError, OSError, FloatingPointError) as exc:
        print(f"failed: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
