"""Per-corner geometric features.

Every corner yields 16 numbers: three 3D angles, the three projected angles,
three 3D length ratios, three projected length ratios, the parallelepiped
volume spanned by the three 3D edges and the three projected parallelogram
areas. Edge pairs are always taken in the order (ab, ac, bc).
"""

from __future__ import annotations

import functools
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .wireframe import Corner, Wireframe

FEATURE_ORDER = "angles3d:ab,ac,bc|angles2d:ab,ac,bc|ratios3d:B/A,C/A,C/B|ratios2d:b/a,c/a,c/b|volume|areas2d:ab,ac,bc;v1"
FEATURE_NAMES = (
    "angle3d_ab", "angle3d_ac", "angle3d_bc",
    "angle2d_ab", "angle2d_ac", "angle2d_bc",
    "ratio3d_BA", "ratio3d_CA", "ratio3d_CB",
    "ratio2d_ba", "ratio2d_ca", "ratio2d_cb",
    "volume",
    "area2d_ab", "area2d_ac", "area2d_bc",
)
N_FEATURES = 16
RATIO_CLAMP = 10.0
MIN_EDGE = 1e-9
_TIE_RTOL = 1e-9
_PAIRS = ((0, 1), (0, 2), (1, 2))


class DegenerateCornerError(ValueError):
    """A projected corner edge is too short for its angles to be defined."""


@dataclass(frozen=True)
class FeatureVector:
    angles_3d: tuple[float, float, float]
    angles_2d: tuple[float, float, float]
    ratios_3d: tuple[float, float, float]
    ratios_2d: tuple[float, float, float]
    volume: float
    areas_2d: tuple[float, float, float]

    def as_array(self) -> np.ndarray:
        return np.array(
            [*self.angles_3d, *self.angles_2d, *self.ratios_3d, *self.ratios_2d, self.volume, *self.areas_2d]
        )

    @classmethod
    def from_array(cls, a: Sequence[float]) -> FeatureVector:
        a = [float(v) for v in a]
        if len(a) != N_FEATURES:
            raise ValueError(f"expected {N_FEATURES} values, got {len(a)}")
        return cls(tuple(a[0:3]), tuple(a[3:6]), tuple(a[6:9]), tuple(a[9:12]), a[12], tuple(a[13:16]))


def canonical_edge_order(w: Wireframe, apex: int, ends: Sequence[int]) -> tuple[int, int, int]:
    """Order corner edges by decreasing projected length, ties by endpoint index."""
    p = w.vertices[apex]
    length = {int(e): float(np.hypot(*(w.vertices[e] - p))) for e in ends}

    def cmp(i: int, j: int) -> int:
        li, lj = length[i], length[j]
        if abs(li - lj) > _TIE_RTOL * max(li, lj):
            return -1 if li > lj else 1
        return (i > j) - (i < j)

    a, b, c = sorted(length, key=functools.cmp_to_key(cmp))
    return a, b, c


def _pair_features(ex, ey, ez):
    """Angles, clamped ratios, volume for edge components of shape (..., 3)."""
    lengths = np.sqrt(ex * ex + ey * ey + ez * ez)
    angles = []
    for i, j in _PAIRS:
        dot = ex[..., i] * ex[..., j] + ey[..., i] * ey[..., j] + ez[..., i] * ez[..., j]
        cos = np.clip(dot / (lengths[..., i] * lengths[..., j]), -1.0, 1.0)
        angles.append(np.arccos(cos))
    ratios = [np.minimum(lengths[..., j] / lengths[..., i], RATIO_CLAMP) for i, j in _PAIRS]
    # scalar triple product a . (b x c)
    triple = (
        ex[..., 0] * (ey[..., 1] * ez[..., 2] - ez[..., 1] * ey[..., 2])
        - ey[..., 0] * (ex[..., 1] * ez[..., 2] - ez[..., 1] * ex[..., 2])
        + ez[..., 0] * (ex[..., 1] * ey[..., 2] - ey[..., 1] * ex[..., 2])
    )
    return np.stack(angles, axis=-1), np.stack(ratios, axis=-1), np.abs(triple)


class CornerGeometry:
    """Precomputed 2D corner data for a sketch; evaluates features for many depth vectors at once.

    The projected half of each feature vector never changes during a search,
    so it is computed once here and only the depth-dependent half is redone
    per call.
    """

    def __init__(self, w: Wireframe, corners: Sequence[Corner]):
        self.n_vertices = w.n_vertices
        self.corners = list(corners)
        k = len(self.corners)
        self.apex = np.array([c.apex for c in self.corners], dtype=np.int64).reshape(k)
        self.ends = np.array([c.edge_ends for c in self.corners], dtype=np.int64).reshape(k, 3)
        e2 = w.vertices[self.ends] - w.vertices[self.apex][:, None, :]
        self.ex = e2[..., 0]
        self.ey = e2[..., 1]
        lengths = np.hypot(self.ex, self.ey)
        if k and lengths.min() <= MIN_EDGE:
            bad = int(np.argmin(lengths.min(axis=1)))
            raise DegenerateCornerError(f"corner at vertex {self.apex[bad]} has a projected edge shorter than {MIN_EDGE}")
        ang2, rat2, _ = _pair_features(self.ex, self.ey, np.zeros_like(self.ex))
        # near-ties in length are ordered by index, which can leave a ratio a hair above 1
        rat2 = np.minimum(rat2, 1.0)
        area2 = np.stack([np.abs(self.ex[:, i] * self.ey[:, j] - self.ey[:, i] * self.ex[:, j]) for i, j in _PAIRS], axis=-1)
        self.static = np.concatenate([ang2, rat2], axis=-1)
        self.area2 = area2

    def __len__(self) -> int:
        return len(self.corners)

    def features(self, depths: np.ndarray) -> np.ndarray:
        """Feature tensor of shape ``(..., n_corners, 16)`` for depths of shape ``(..., n_vertices)``."""
        z = np.asarray(depths, dtype=float)
        if z.shape[-1] != self.n_vertices:
            raise ValueError(f"expected {self.n_vertices} depths, got {z.shape[-1]}")
        dz = z[..., self.ends] - z[..., self.apex, None]
        batch = dz.shape[:-2]
        ex = np.broadcast_to(self.ex, dz.shape)
        ey = np.broadcast_to(self.ey, dz.shape)
        ang3, rat3, vol = _pair_features(ex, ey, dz)
        static = np.broadcast_to(self.static, batch + self.static.shape)
        area2 = np.broadcast_to(self.area2, batch + self.area2.shape)
        return np.concatenate(
            [ang3, static[..., 0:3], rat3, static[..., 3:6], vol[..., None], area2], axis=-1
        )


def compute_features(w: Wireframe, corner: Corner, depths: Sequence[float] | np.ndarray) -> FeatureVector:
    vec = CornerGeometry(w, [corner]).features(np.asarray(depths, dtype=float))[0]
    if not np.all(np.isfinite(vec)):
        raise DegenerateCornerError("non-finite feature value")
    return FeatureVector.from_array(vec)
