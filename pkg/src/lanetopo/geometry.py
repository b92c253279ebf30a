"""Geometric kernels: Bezier lanes, discrete Frechet distance, box IoU.

Lanes are Bezier curves given by an ordered set of 3D control points
(ego-centric ground frame, meters). Traffic elements are axis-aligned
2D boxes in pixels. Everything here is a pure function of its inputs.
"""

from __future__ import annotations

import numpy as np

__all__ = [
    "bezier_point",
    "sample_lane",
    "frechet_distance",
    "box_iou",
    "control_point_l1",
    "as_control_points",
    "as_box",
]


def as_control_points(ctrl) -> np.ndarray:
    """Coerce to a (M, 3) float array of control points, M >= 2, all finite."""
    pts = np.asarray(ctrl, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 3:
        raise ValueError(f"control points must have shape (M, 3), got {pts.shape}")
    if pts.shape[0] < 2:
        raise ValueError("a lane needs at least 2 control points")
    if not np.all(np.isfinite(pts)):
        raise ValueError("control points must be finite")
    return pts


def as_box(box) -> np.ndarray:
    """Coerce to a (4,) float array (x1, y1, x2, y2) with x1 < x2 and y1 < y2."""
    b = np.asarray(box, dtype=float).reshape(-1)
    if b.shape != (4,):
        raise ValueError(f"box must have 4 coordinates, got {b.shape}")
    if not np.all(np.isfinite(b)):
        raise ValueError("box coordinates must be finite")
    if not (b[0] < b[2] and b[1] < b[3]):
        raise ValueError(f"degenerate box {b.tolist()}: need x1 < x2 and y1 < y2")
    return b


def bezier_point(ctrl, t: float) -> np.ndarray:
    """Evaluate the degree-(M-1) Bezier curve at parameter ``t``.

    Uses de Casteljau's recurrence (repeated linear interpolation of the
    Bernstein form), which is exact at the endpoints: t=0 returns the
    first control point and t=1 the last.

    Parameters
    ----------
    ctrl : array_like, shape (M, 3)
        Control points, M >= 2.
    t : float
        Curve parameter in [0, 1].

    Returns
    -------
    np.ndarray, shape (3,)
    """
    pts = as_control_points(ctrl)
    if not (0.0 <= t <= 1.0):
        raise ValueError(f"parameter t={t} outside [0, 1]")
    b = pts.copy()
    n = b.shape[0]
    for step in range(1, n):
        b[: n - step] = (1.0 - t) * b[: n - step] + t * b[1 : n - step + 1]
    return b[0]


def sample_lane(ctrl, num_points: int) -> np.ndarray:
    """Sample the lane at uniform parameters t = k/(P-1), k = 0..P-1.

    The first/last samples equal the first/last control points exactly.
    Returns a (P, 3) polyline.
    """
    pts = as_control_points(ctrl)
    if num_points < 2:
        raise ValueError(f"need at least 2 sample points, got {num_points}")
    ts = np.arange(num_points, dtype=float) / (num_points - 1)
    return np.stack([bezier_point(pts, t) for t in ts])


def frechet_distance(a, b) -> float:
    """Discrete Frechet distance between two 3D polylines.

    Dynamic program over the coupling lattice: the minimax leash length
    over all monotone couplings of the two point sequences. Symmetric,
    and zero iff the sequences are identical.
    """
    pa = np.atleast_2d(np.asarray(a, dtype=float))
    pb = np.atleast_2d(np.asarray(b, dtype=float))
    if pa.size == 0 or pb.size == 0:
        raise ValueError("polylines must contain at least one point")
    # pairwise distances, (len(a), len(b))
    diff = pa[:, None, :] - pb[None, :, :]
    dist = np.sqrt(np.sum(diff * diff, axis=2))
    p, q = dist.shape
    dp = np.empty_like(dist)
    dp[0, 0] = dist[0, 0]
    for i in range(1, p):
        dp[i, 0] = max(dp[i - 1, 0], dist[i, 0])
    for j in range(1, q):
        dp[0, j] = max(dp[0, j - 1], dist[0, j])
    for i in range(1, p):
        for j in range(1, q):
            dp[i, j] = max(min(dp[i - 1, j], dp[i - 1, j - 1], dp[i, j - 1]), dist[i, j])
    return float(dp[-1, -1])


def box_iou(a, b) -> float:
    """Intersection-over-union of two axis-aligned boxes, in [0, 1]."""
    ba = as_box(a)
    bb = as_box(b)
    ix = max(0.0, min(ba[2], bb[2]) - max(ba[0], bb[0]))
    iy = max(0.0, min(ba[3], bb[3]) - max(ba[1], bb[1]))
    inter = ix * iy
    if inter == 0.0:
        return 0.0
    area_a = (ba[2] - ba[0]) * (ba[3] - ba[1])
    area_b = (bb[2] - bb[0]) * (bb[3] - bb[1])
    return float(inter / (area_a + area_b - inter))


def control_point_l1(a, b) -> float:
    """Mean absolute coordinate difference over all M x 3 entries."""
    pa = as_control_points(a)
    pb = as_control_points(b)
    if pa.shape != pb.shape:
        raise ValueError(f"control point counts differ: {pa.shape[0]} vs {pb.shape[0]}")
    return float(np.mean(np.abs(pa - pb)))
