"""Brute-force reference computations written without numpy or package internals."""

import math


def _sub(p, q):
    return [a - b for a, b in zip(p, q)]


def _dot(u, v):
    return sum(a * b for a, b in zip(u, v))


def _norm(u):
    return math.sqrt(_dot(u, u))


def _angle(u, v):
    c = _dot(u, v) / (_norm(u) * _norm(v))
    return math.acos(max(-1.0, min(1.0, c)))


def corner_order(xy, apex, ends):
    """Ends sorted by decreasing projected length, ties by index."""
    lengths = {e: math.hypot(xy[e][0] - xy[apex][0], xy[e][1] - xy[apex][1]) for e in ends}
    return sorted(ends, key=lambda e: (-round(lengths[e], 12), e))


def corner_features(xy, z, apex, ends):
    """The 16 corner features, ends assumed already ordered (a, b, c)."""
    e2 = [_sub(xy[e], xy[apex]) for e in ends]
    e3 = [[u[0], u[1], z[e] - z[apex]] for u, e in zip(e2, ends)]
    pairs = [(0, 1), (0, 2), (1, 2)]
    ang3 = [_angle(e3[i], e3[j]) for i, j in pairs]
    ang2 = [_angle(e2[i], e2[j]) for i, j in pairs]
    L3 = [_norm(u) for u in e3]
    L2 = [_norm(u) for u in e2]
    rat3 = [min(L3[j] / L3[i], 10.0) for i, j in pairs]
    rat2 = [L2[j] / L2[i] for i, j in pairs]
    a, b, c = e3
    det = (
        a[0] * (b[1] * c[2] - b[2] * c[1])
        - a[1] * (b[0] * c[2] - b[2] * c[0])
        + a[2] * (b[0] * c[1] - b[1] * c[0])
    )
    areas = [abs(e2[i][0] * e2[j][1] - e2[i][1] * e2[j][0]) for i, j in pairs]
    return ang3 + ang2 + rat3 + rat2 + [abs(det)] + areas


def mlp_output(w1, b1, w2, b2, mean, std, x):
    """Direct evaluation of the tanh network on one input row."""
    xs = [(xi - m) / s for xi, m, s in zip(x, mean, std)]
    hidden = [math.tanh(sum(wij * xj for wij, xj in zip(row, xs)) + bi) for row, bi in zip(w1, b1)]
    return sum(w * h for w, h in zip(w2[0], hidden)) + b2[0]


def aligned_rms(c, t):
    best = None
    for s in (1.0, -1.0):
        sc = [s * v for v in c]
        mc, mt = sum(sc) / len(sc), sum(t) / len(t)
        r = math.sqrt(sum(((a - mc) - (b - mt)) ** 2 for a, b in zip(sc, t)) / len(t))
        best = r if best is None else min(best, r)
    return best
