"""Wireframe graph model, orthographic projection, corners and depth metrics.

A wireframe is a set of 2D sketch-plane vertices joined by straight edges,
optionally carrying one depth (z) per vertex. The sketch and every candidate
reconstruction share the same instance shape; only ``depths`` differs.
"""

from __future__ import annotations

import json
import math
from collections import deque
from dataclasses import dataclass
from itertools import combinations
from typing import Any, Sequence

import numpy as np

COINCIDENT_TOL = 1e-9


class WireframeError(ValueError):
    """Base class for invalid wireframe input."""


class MalformedWireframeError(WireframeError):
    pass


class DanglingEdgeError(WireframeError):
    pass


class SelfLoopError(WireframeError):
    pass


class DuplicateEdgeError(WireframeError):
    pass


class DisconnectedWireframeError(WireframeError):
    pass


class CoincidentVerticesError(WireframeError):
    pass


class DegenerateWireframeError(WireframeError):
    pass


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Wireframe:
    """Vertex positions ``(n, 2)``, edges ``(m, 2)`` and optional depths ``(n,)``.

    Construction validates the graph: in-range distinct edge endpoints, no
    duplicate edges, connectivity, and no coincident 2D vertices. Arrays are
    stored read-only so instances can be shared freely.
    """

    vertices: np.ndarray
    edges: np.ndarray
    depths: np.ndarray | None = None

    def __post_init__(self) -> None:
        verts = np.asarray(self.vertices, dtype=float)
        if verts.size == 0:
            verts = verts.reshape(0, 2)
        if verts.ndim != 2 or verts.shape[1] != 2:
            raise MalformedWireframeError(f"vertices must have shape (n, 2), got {verts.shape}")
        if not np.all(np.isfinite(verts)):
            raise MalformedWireframeError("vertex coordinates must be finite")

        edges = np.asarray(self.edges)
        if edges.size == 0:
            edges = np.zeros((0, 2), dtype=np.int64)
        if edges.ndim != 2 or edges.shape[1] != 2:
            raise MalformedWireframeError(f"edges must have shape (m, 2), got {edges.shape}")
        if not np.issubdtype(edges.dtype, np.integer):
            raise MalformedWireframeError("edge indices must be integers")
        edges = edges.astype(np.int64)

        n = len(verts)
        for i, j in edges:
            if not (0 <= i < n and 0 <= j < n):
                raise DanglingEdgeError(f"edge ({i}, {j}) references a vertex outside 0..{n - 1}")
            if i == j:
                raise SelfLoopError(f"edge ({i}, {j}) joins a vertex to itself")
        seen: set[tuple[int, int]] = set()
        for i, j in edges:
            key = (min(i, j), max(i, j))
            if key in seen:
                raise DuplicateEdgeError(f"duplicate edge {key}")
            seen.add(key)

        if self.depths is not None:
            depths = np.asarray(self.depths, dtype=float).reshape(-1)
            if len(depths) != n:
                raise MalformedWireframeError(f"expected {n} depths, got {len(depths)}")
            if not np.all(np.isfinite(depths)):
                raise MalformedWireframeError("depths must be finite")
            object.__setattr__(self, "depths", _frozen(depths))

        object.__setattr__(self, "vertices", _frozen(verts))
        object.__setattr__(self, "edges", _frozen(edges))
        _check_connected(n, edges)
        _check_separation(verts, edges)

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    def neighbors(self) -> list[list[int]]:
        adj: list[list[int]] = [[] for _ in range(self.n_vertices)]
        for i, j in self.edges:
            adj[i].append(int(j))
            adj[j].append(int(i))
        return adj

    def degrees(self) -> np.ndarray:
        return np.bincount(self.edges.reshape(-1), minlength=self.n_vertices)

    def with_depths(self, depths: Sequence[float] | np.ndarray | None) -> Wireframe:
        return Wireframe(self.vertices, self.edges, depths)

    def points3d(self) -> np.ndarray:
        if self.depths is None:
            raise MalformedWireframeError("wireframe has no depths")
        return np.column_stack([self.vertices, self.depths])


def _check_connected(n: int, edges: np.ndarray) -> None:
    if n <= 1:
        return
    adj: list[list[int]] = [[] for _ in range(n)]
    for i, j in edges:
        adj[i].append(j)
        adj[j].append(i)
    seen = {0}
    queue = deque([0])
    while queue:
        for nb in adj[queue.popleft()]:
            if nb not in seen:
                seen.add(nb)
                queue.append(nb)
    if len(seen) != n:
        raise DisconnectedWireframeError(f"graph is disconnected: {len(seen)} of {n} vertices reachable from vertex 0")


def _check_separation(verts: np.ndarray, edges: np.ndarray) -> None:
    if len(verts) < 2:
        return
    # tolerance is relative to the sketch scale (longest edge) so it means 1e-9 after normalization
    scale = 1.0
    if len(edges):
        scale = float(np.max(np.linalg.norm(verts[edges[:, 0]] - verts[edges[:, 1]], axis=1)))
    tol = COINCIDENT_TOL * max(scale, np.finfo(float).tiny)
    diff = verts[:, None, :] - verts[None, :, :]
    dist = np.sqrt(np.sum(diff * diff, axis=-1))
    dist[np.diag_indices(len(verts))] = np.inf
    i, j = np.unravel_index(np.argmin(dist), dist.shape)
    if dist[i, j] <= tol:
        raise CoincidentVerticesError(f"vertices {min(i, j)} and {max(i, j)} coincide in 2D")


# --------------------------------------------------------------------------
# file I/O
# --------------------------------------------------------------------------


def parse_wireframe(text: str) -> Wireframe:
    """Parse the JSON wireframe format.

    ``{"vertices": [{"x": .., "y": .., "z": ..}, ...], "edges": [[i, j], ...]}``
    with ``z`` optional but all-or-none. Unknown top-level keys are ignored.
    """
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise MalformedWireframeError(f"invalid JSON: {exc}") from exc
    if not isinstance(doc, dict) or "vertices" not in doc or "edges" not in doc:
        raise MalformedWireframeError("expected an object with 'vertices' and 'edges'")
    raw_v, raw_e = doc["vertices"], doc["edges"]
    if not isinstance(raw_v, list) or not isinstance(raw_e, list):
        raise MalformedWireframeError("'vertices' and 'edges' must be lists")

    xy: list[tuple[float, float]] = []
    zs: list[float] = []
    for k, rec in enumerate(raw_v):
        if not isinstance(rec, dict) or "x" not in rec or "y" not in rec:
            raise MalformedWireframeError(f"vertex {k} must be an object with 'x' and 'y'")
        xy.append((_number(rec["x"], k), _number(rec["y"], k)))
        if "z" in rec:
            zs.append(_number(rec["z"], k))
    if zs and len(zs) != len(xy):
        raise MalformedWireframeError("either every vertex or no vertex may carry 'z'")

    edges: list[tuple[int, int]] = []
    for k, e in enumerate(raw_e):
        if (
            not isinstance(e, list)
            or len(e) != 2
            or not all(isinstance(i, int) and not isinstance(i, bool) for i in e)
        ):
            raise MalformedWireframeError(f"edge {k} must be a list of two integers")
        edges.append((e[0], e[1]))

    return Wireframe(
        np.array(xy, dtype=float).reshape(-1, 2),
        np.array(edges, dtype=np.int64).reshape(-1, 2),
        np.array(zs) if zs else None,
    )


def _number(v: Any, k: int) -> float:
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise MalformedWireframeError(f"vertex {k} has a non-numeric coordinate")
    return float(v)


def wireframe_to_dict(w: Wireframe) -> dict[str, Any]:
    verts = []
    for k, (x, y) in enumerate(w.vertices.tolist()):
        rec = {"x": x, "y": y}
        if w.depths is not None:
            rec["z"] = float(w.depths[k])
        verts.append(rec)
    return {"vertices": verts, "edges": w.edges.tolist()}


def dump_wireframe(w: Wireframe, meta: dict[str, Any] | None = None) -> str:
    doc = wireframe_to_dict(w)
    if meta is not None:
        doc["meta"] = meta
    return json.dumps(doc, indent=1, sort_keys=True) + "\n"


def _fmt(x: float) -> str:
    s = repr(float(x))
    return s[:-2] if s.endswith(".0") else s


def export_obj(w: Wireframe) -> str:
    """Wavefront OBJ text: ``v x y z`` per vertex, ``l i j`` (1-based) per edge."""
    if w.depths is None:
        raise MalformedWireframeError("OBJ export needs depths")
    lines = [f"v {_fmt(x)} {_fmt(y)} {_fmt(z)}" for (x, y), z in zip(w.vertices.tolist(), w.depths.tolist())]
    lines += [f"l {i + 1} {j + 1}" for i, j in w.edges.tolist()]
    return "\n".join(lines) + "\n"


def parse_obj(text: str) -> Wireframe:
    """Read back the ``v``/``l`` subset written by :func:`export_obj`."""
    pts: list[list[float]] = []
    edges: list[tuple[int, int]] = []
    for lineno, line in enumerate(text.splitlines(), 1):
        parts = line.split()
        if not parts or parts[0].startswith("#"):
            continue
        try:
            if parts[0] == "v":
                pts.append([float(p) for p in parts[1:4]])
            elif parts[0] == "l":
                idx = [int(p.split("/")[0]) - 1 for p in parts[1:]]
                edges.extend(zip(idx[:-1], idx[1:]))
        except ValueError as exc:
            raise MalformedWireframeError(f"line {lineno}: {exc}") from exc
    if any(len(p) != 3 for p in pts):
        raise MalformedWireframeError("every 'v' line needs three coordinates")
    arr = np.array(pts, dtype=float).reshape(-1, 3)
    return Wireframe(arr[:, :2], np.array(edges, dtype=np.int64).reshape(-1, 2), arr[:, 2])


# --------------------------------------------------------------------------
# geometry
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class ScaleRecord:
    shift: tuple[float, float]
    scale: float


def normalize(w: Wireframe) -> tuple[Wireframe, ScaleRecord]:
    """Center on the vertex centroid and scale so the longest projected edge is 1.

    Depths are scaled by the same factor but not shifted.
    """
    if w.n_edges == 0:
        raise DegenerateWireframeError("cannot normalize a wireframe without edges")
    shift = w.vertices.mean(axis=0)
    seg = w.vertices[w.edges[:, 0]] - w.vertices[w.edges[:, 1]]
    longest = float(np.max(np.hypot(seg[:, 0], seg[:, 1])))
    if longest <= 0.0:
        raise DegenerateWireframeError("all vertices coincide")
    scale = 1.0 / longest
    depths = None if w.depths is None else w.depths * scale
    rec = ScaleRecord((float(shift[0]), float(shift[1])), scale)
    return Wireframe((w.vertices - shift) * scale, w.edges, depths), rec


def denormalize(w: Wireframe, rec: ScaleRecord) -> Wireframe:
    depths = None if w.depths is None else w.depths / rec.scale
    return Wireframe(w.vertices / rec.scale + np.asarray(rec.shift), w.edges, depths)


def apply_scale(depths: np.ndarray, rec: ScaleRecord) -> np.ndarray:
    """Bring raw depths into the frame produced by :func:`normalize`."""
    return np.asarray(depths, dtype=float) * rec.scale


def project(w: Wireframe) -> Wireframe:
    """Orthographic projection: drop the depth coordinate."""
    return Wireframe(w.vertices, w.edges, None)


@dataclass(frozen=True)
class Corner:
    """A vertex with three incident edges, ends in canonical order (a, b, c)."""

    apex: int
    edge_ends: tuple[int, int, int]


def enumerate_corners(w: Wireframe) -> list[Corner]:
    """One corner per 3-combination of incident edges at every vertex of degree >= 3."""
    from .features import canonical_edge_order

    corners = []
    for apex, nbrs in enumerate(w.neighbors()):
        if len(nbrs) < 3:
            continue
        for triple in combinations(sorted(nbrs), 3):
            corners.append(Corner(apex, canonical_edge_order(w, apex, triple)))
    return corners


def aligned_depth_error(candidate: Sequence[float] | np.ndarray, target: Sequence[float] | np.ndarray) -> tuple[float, bool]:
    """RMS depth error modulo a global z-shift and a global depth reflection.

    Returns ``(rms, negated)`` where ``negated`` tells whether the reflected
    candidate matched better.
    """
    c = np.asarray(candidate, dtype=float)
    t = np.asarray(target, dtype=float)
    if c.shape != t.shape:
        raise ValueError(f"depth vectors differ in length: {c.shape} vs {t.shape}")
    t0 = t - t.mean()
    errs = []
    for s in (1.0, -1.0):
        sc = s * c
        d = (sc - sc.mean()) - t0
        errs.append(math.sqrt(float(np.mean(d * d))))
    return (errs[1], True) if errs[1] < errs[0] else (errs[0], False)
