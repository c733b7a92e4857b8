"""Synthetic shapes and the displaced-corner training set.

Training data comes only from randomly oriented unit triangular prisms. Each
prism corner is featurized against the prism's projection with the apex
depth shifted by every value on a symmetric grid; the target is the absolute
shift.
"""

from __future__ import annotations

import io
import json
import logging
from dataclasses import dataclass
from itertools import product
from typing import Any

import numpy as np

from .features import FEATURE_ORDER, N_FEATURES, CornerGeometry
from .mlp import TrainingSet
from .wireframe import Wireframe, WireframeError, enumerate_corners, normalize

logger = logging.getLogger(__name__)

GRID_LIMIT = 0.45
MIN_PROJECTED_EDGE = 1e-6

PRISM_EDGES = ((0, 1), (1, 2), (0, 2), (3, 4), (4, 5), (3, 5), (0, 3), (1, 4), (2, 5))


def random_rotation(rng: np.random.Generator) -> np.ndarray:
    """Rotation matrix uniform over SO(3), via a uniformly sampled unit quaternion."""
    u1, u2, u3 = rng.random(3)
    a, b = np.sqrt(1.0 - u1), np.sqrt(u1)
    x, y = a * np.sin(2 * np.pi * u2), a * np.cos(2 * np.pi * u2)
    z, w = b * np.sin(2 * np.pi * u3), b * np.cos(2 * np.pi * u3)
    return np.array([
        [1 - 2 * (y * y + z * z), 2 * (x * y - z * w), 2 * (x * z + y * w)],
        [2 * (x * y + z * w), 1 - 2 * (x * x + z * z), 2 * (y * z - x * w)],
        [2 * (x * z - y * w), 2 * (y * z + x * w), 1 - 2 * (x * x + y * y)],
    ])


def unit_prism_points() -> np.ndarray:
    """Equilateral side-1 triangle extruded by length 1 along z, centroid at the origin."""
    r = 1.0 / np.sqrt(3.0)
    ang = np.pi / 2 + 2 * np.pi * np.arange(3) / 3
    tri = np.column_stack([r * np.cos(ang), r * np.sin(ang)])
    return np.vstack([np.column_stack([tri, np.full(3, -0.5)]), np.column_stack([tri, np.full(3, 0.5)])])


def random_prism(seed: int | np.random.Generator) -> Wireframe:
    rng = np.random.default_rng(seed)
    pts = unit_prism_points() @ random_rotation(rng).T
    return Wireframe(pts[:, :2], np.array(PRISM_EDGES), pts[:, 2])


def displacement_grid(n_per_corner: int = 21) -> np.ndarray:
    """``n`` evenly spaced depth offsets on [-0.45, 0.45]; ``n`` odd so 0 is included."""
    if isinstance(n_per_corner, bool) or not isinstance(n_per_corner, (int, np.integer)):
        raise ValueError("grid size must be an integer")
    if n_per_corner < 1 or n_per_corner % 2 == 0:
        raise ValueError(f"grid size must be a positive odd integer, got {n_per_corner}")
    g = np.linspace(-GRID_LIMIT, GRID_LIMIT, n_per_corner)
    # exact antisymmetry, so x and -x give bit-identical |x| and the midpoint is exactly 0
    return (g - g[::-1]) / 2.0


@dataclass
class GeneratedData:
    data: TrainingSet
    discarded: int
    seed: int
    n_prisms: int
    grid: np.ndarray

    @property
    def rows_per_prism(self) -> int:
        return 6 * len(self.grid)


def _min_projected_edge(w: Wireframe) -> float:
    seg = w.vertices[w.edges[:, 0]] - w.vertices[w.edges[:, 1]]
    return float(np.min(np.hypot(seg[:, 0], seg[:, 1])))


def prism_rows(prism: Wireframe, grid: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Feature rows and targets for one prism, ordered by corner then grid value."""
    corners = enumerate_corners(prism)
    feats, targets = [], []
    for corner in corners:
        geom = CornerGeometry(prism, [corner])
        z = np.tile(prism.depths, (len(grid), 1))
        z[:, corner.apex] += grid
        feats.append(geom.features(z)[:, 0, :])
        targets.append(np.abs(grid))
    return np.concatenate(feats), np.concatenate(targets)


def build_training_set(n_prisms: int, grid: np.ndarray | None = None, seed: int = 0) -> GeneratedData:
    """``n_prisms * 6 * len(grid)`` rows; degenerate projections are redrawn and counted."""
    if n_prisms < 1:
        raise ValueError("need at least one prism")
    grid = displacement_grid() if grid is None else np.asarray(grid, dtype=float)
    rng = np.random.default_rng(seed)
    feats, targets, groups = [], [], []
    discarded = 0
    while len(feats) < n_prisms:
        try:
            prism = random_prism(rng)
        except WireframeError:
            discarded += 1
            continue
        if _min_projected_edge(prism) < MIN_PROJECTED_EDGE:
            discarded += 1
            continue
        f, t = prism_rows(normalize(prism)[0], grid)
        if not np.all(np.isfinite(f)):
            discarded += 1
            continue
        groups.append(np.full(len(t), len(feats)))
        feats.append(f)
        targets.append(t)
    if discarded:
        logger.info("discarded %d degenerate prisms", discarded)
    data = TrainingSet(np.concatenate(feats), np.concatenate(targets), np.concatenate(groups))
    return GeneratedData(data, discarded, seed, n_prisms, grid)


# --------------------------------------------------------------------------
# dataset files
# --------------------------------------------------------------------------


def dump_dataset(gen: GeneratedData) -> str:
    header = {
        "feature_order": FEATURE_ORDER,
        "seed": gen.seed,
        "prisms": gen.n_prisms,
        "grid": len(gen.grid),
        "rows_per_prism": gen.rows_per_prism,
        "discarded": gen.discarded,
    }
    buf = io.StringIO()
    rows = np.column_stack([gen.data.features, gen.data.targets])
    np.savetxt(buf, rows, fmt="%.17g", delimiter=",", header=json.dumps(header, sort_keys=True), comments="# ")
    return buf.getvalue()


class DatasetFormatError(ValueError):
    pass


def load_dataset(text: str) -> tuple[TrainingSet, dict[str, Any]]:
    first, _, body = text.partition("\n")
    if not first.startswith("# "):
        raise DatasetFormatError("missing dataset header line")
    try:
        header = json.loads(first[2:])
    except json.JSONDecodeError as exc:
        raise DatasetFormatError(f"bad dataset header: {exc}") from exc
    if header.get("feature_order") != FEATURE_ORDER:
        raise DatasetFormatError(f"dataset feature order {header.get('feature_order')!r} does not match {FEATURE_ORDER!r}")
    try:
        rows = np.loadtxt(io.StringIO(body), delimiter=",", ndmin=2)
    except ValueError as exc:
        raise DatasetFormatError(f"bad dataset row: {exc}") from exc
    if rows.shape[1] != N_FEATURES + 1:
        raise DatasetFormatError(f"expected {N_FEATURES + 1} columns, got {rows.shape[1]}")
    per = int(header.get("rows_per_prism") or 1)
    groups = np.arange(len(rows)) // per
    try:
        data = TrainingSet(rows[:, :N_FEATURES], rows[:, N_FEATURES], groups)
    except ValueError as exc:
        raise DatasetFormatError(str(exc)) from exc
    return data, header


# --------------------------------------------------------------------------
# benchmark shapes
# --------------------------------------------------------------------------


def _cube_union(cells: list[tuple[int, int, int]]) -> tuple[np.ndarray, list[tuple[int, int]]]:
    """Vertices and deduplicated edges of the union of unit-cube wireframes."""
    index: dict[tuple[int, int, int], int] = {}
    edges: set[tuple[int, int]] = set()

    def vid(p):
        if p not in index:
            index[p] = len(index)
        return index[p]

    for cx, cy, cz in cells:
        corners = [(cx + dx, cy + dy, cz + dz) for dx, dy, dz in product((0, 1), repeat=3)]
        for p in corners:
            for axis in range(3):
                if p[axis] == (cx, cy, cz)[axis]:
                    q = list(p)
                    q[axis] += 1
                    i, j = vid(p), vid(tuple(q))
                    edges.add((min(i, j), max(i, j)))
    pts = np.array(sorted(index, key=index.get), dtype=float)
    return pts, sorted(edges)


def _house() -> tuple[np.ndarray, list[tuple[int, int]]]:
    pts, edges = _cube_union([(0, 0, 0)])
    h = np.sqrt(3.0) / 2.0
    n = len(pts)
    ridge = np.array([[0.5, 0.0, 1.0 + h], [0.5, 1.0, 1.0 + h]])
    top = {tuple(p): k for k, p in enumerate(pts.tolist()) if p[2] == 1.0}
    extra = [(n, n + 1)]
    for y, r in ((0.0, n), (1.0, n + 1)):
        extra += [(top[(0.0, y, 1.0)], r), (top[(1.0, y, 1.0)], r)]
    return np.vstack([pts, ridge]), edges + extra


SHAPES = ("prism", "box", "l_boxes", "prism_on_box")


def shape_points(kind: str) -> tuple[np.ndarray, list[tuple[int, int]]]:
    if kind == "prism":
        return unit_prism_points(), list(PRISM_EDGES)
    if kind == "box":
        return _cube_union([(0, 0, 0)])
    if kind == "l_boxes":
        return _cube_union([(0, 0, 0), (1, 0, 0), (0, 1, 0)])
    if kind == "prism_on_box":
        return _house()
    raise ValueError(f"unknown shape {kind!r}; choose from {', '.join(SHAPES)}")


def make_shape(kind: str, seed: int, min_edge_fraction: float = 0.15, max_tries: int = 1000) -> Wireframe:
    """A randomly oriented target shape whose drawing has no badly foreshortened edge.

    Orientations where some projected edge is shorter than ``min_edge_fraction``
    of the longest one, or where two vertices nearly overlap, are redrawn.
    """
    pts, edges = shape_points(kind)
    pts = pts - pts.mean(axis=0)
    e = np.array(edges)
    rng = np.random.default_rng(seed)
    for _ in range(max_tries):
        p = pts @ random_rotation(rng).T
        seg = p[e[:, 0], :2] - p[e[:, 1], :2]
        lengths = np.hypot(seg[:, 0], seg[:, 1])
        longest = lengths.max()
        d = np.linalg.norm(p[:, None, :2] - p[None, :, :2], axis=-1)
        d[np.diag_indices(len(p))] = np.inf
        if lengths.min() >= min_edge_fraction * longest and d.min() >= min_edge_fraction * longest:
            return Wireframe(p[:, :2], e, p[:, 2])
    raise RuntimeError(f"could not find a clean orientation for {kind!r}")
