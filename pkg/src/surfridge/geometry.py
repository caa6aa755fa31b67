"""Point clouds, distance functions, Hausdorff distance and dilations.

Point clouds are plain ``(n, D)`` float arrays; :func:`check_points`
validates them. Known manifolds used as ground truth are described by the
small :class:`Circle`, :class:`Segments` and :class:`PointSet` classes.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components
from scipy.spatial import cKDTree


def check_points(points, dim=None, allow_empty=False, name="points"):
    """Validate a point cloud and return it as a C-contiguous float array.

    Parameters
    ----------
    points : array-like of shape (n, D)
        Coordinates, one point per row. A 1-D input is read as one point.
    dim : int, optional
        Required dimension ``D``.
    allow_empty : bool, default=False
        Whether ``n == 0`` is accepted.

    Returns
    -------
    ndarray of shape (n, D)
    """
    arr = np.asarray(points, dtype=float)
    if arr.ndim == 1:
        arr = arr.reshape(1, -1)
    if arr.ndim != 2:
        raise ValueError(f"{name} must be a 2-D array, got shape {arr.shape}")
    if arr.shape[1] < 1:
        raise ValueError(f"{name} must have dimension >= 1")
    if not allow_empty and arr.shape[0] == 0:
        raise ValueError(f"{name} is empty")
    if dim is not None and arr.shape[1] != dim:
        raise ValueError(f"{name} has dimension {arr.shape[1]}, expected {dim}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains NaN or infinite coordinates")
    return np.ascontiguousarray(arr)


def _check_vector(x, dim=None, name="x"):
    x = np.asarray(x, dtype=float)
    if x.ndim != 1:
        raise ValueError(f"{name} must be a 1-D vector, got shape {x.shape}")
    if dim is not None and x.shape[0] != dim:
        raise ValueError(f"{name} has dimension {x.shape[0]}, expected {dim}")
    if not np.all(np.isfinite(x)):
        raise ValueError(f"{name} contains NaN or infinite coordinates")
    return x


def nearest_distances(X, A):
    """Distance from every row of ``X`` to the finite set ``A``."""
    X = check_points(X, allow_empty=True, name="X")
    A = check_points(A, dim=X.shape[1], name="A")
    if X.shape[0] == 0:
        return np.empty(0)
    dist, _ = cKDTree(A).query(X, k=1)
    return np.asarray(dist, dtype=float)


def distance_to_set(x, A):
    """Euclidean distance from the point ``x`` to the finite set ``A``."""
    A = check_points(A, name="A")
    x = _check_vector(x, dim=A.shape[1])
    return float(np.sqrt(np.min(np.sum((A - x) ** 2, axis=1))))


def hausdorff(A, B):
    """Hausdorff distance between two finite point sets.

    Exact: each directed part is a nearest-neighbour query on a k-d tree,
    which returns the same Euclidean distances as a full pairwise scan.
    """
    A = check_points(A, name="A")
    B = check_points(B, name="B")
    if A.shape[1] != B.shape[1]:
        raise ValueError(
            f"dimension mismatch: A has D={A.shape[1]}, B has D={B.shape[1]}")
    return float(max(nearest_distances(A, B).max(),
                     nearest_distances(B, A).max()))


def dilation_components(A, eps):
    """Number of connected pieces of the union of ``eps``-balls around ``A``.

    Two balls overlap when their centres are at most ``2 * eps`` apart.
    """
    A = check_points(A, name="A")
    if not eps > 0:
        raise ValueError("eps must be positive")
    n = A.shape[0]
    pairs = cKDTree(A).query_pairs(2.0 * eps, output_type="ndarray")
    graph = coo_matrix((np.ones(len(pairs)), (pairs[:, 0], pairs[:, 1])),
                       shape=(n, n))
    n_components, _ = connected_components(graph, directed=False)
    return int(n_components)


# ---------------------------------------------------------------------------
# Known manifolds


@dataclass(frozen=True)
class Circle:
    """Circle of given radius, lying in the plane of the first two axes
    through ``center``."""

    center: tuple
    radius: float

    def __post_init__(self):
        center = tuple(float(c) for c in np.atleast_1d(self.center))
        if len(center) < 2:
            raise ValueError("circle needs a center of dimension >= 2")
        if not np.all(np.isfinite(center)):
            raise ValueError("circle center must be finite")
        if not (np.isfinite(self.radius) and self.radius > 0):
            raise ValueError("circle radius must be positive")
        object.__setattr__(self, "center", center)
        object.__setattr__(self, "radius", float(self.radius))

    @property
    def dim(self):
        return len(self.center)

    @property
    def length(self):
        return 2.0 * np.pi * self.radius

    def distances(self, X):
        X = check_points(X, dim=self.dim, allow_empty=True, name="X")
        rel = X - np.asarray(self.center)
        in_plane = np.hypot(rel[:, 0], rel[:, 1])
        off_plane = np.sum(rel[:, 2:] ** 2, axis=1)
        return np.sqrt((in_plane - self.radius) ** 2 + off_plane)

    def points_at(self, angles):
        angles = np.asarray(angles, dtype=float)
        pts = np.tile(np.asarray(self.center), (angles.size, 1))
        pts[:, 0] += self.radius * np.cos(angles)
        pts[:, 1] += self.radius * np.sin(angles)
        return pts

    def probes(self, count):
        """``count`` points at equal arclength spacing, starting at angle 0."""
        return self.points_at(2.0 * np.pi * np.arange(count) / count)

    def bounds(self):
        c = np.asarray(self.center)
        pad = np.zeros(self.dim)
        pad[:2] = self.radius
        return c - pad, c + pad

    def to_dict(self):
        return {"kind": "circle", "center": list(self.center),
                "radius": self.radius}


@dataclass(frozen=True)
class Segments:
    """Finite union of straight line segments."""

    segments: tuple = field(default=())

    def __post_init__(self):
        segs = np.asarray(self.segments, dtype=float)
        if segs.ndim != 3 or segs.shape[1] != 2 or segs.shape[0] == 0:
            raise ValueError("segments must have shape (k, 2, D) with k >= 1")
        if not np.all(np.isfinite(segs)):
            raise ValueError("segment endpoints must be finite")
        if np.any(np.all(segs[:, 0] == segs[:, 1], axis=1)):
            raise ValueError("each segment needs two distinct endpoints")
        object.__setattr__(
            self, "segments",
            tuple((tuple(s[0]), tuple(s[1])) for s in segs.tolist()))

    @property
    def array(self):
        return np.asarray(self.segments, dtype=float)

    @property
    def dim(self):
        return self.array.shape[2]

    @property
    def lengths(self):
        segs = self.array
        return np.linalg.norm(segs[:, 1] - segs[:, 0], axis=1)

    @property
    def length(self):
        return float(self.lengths.sum())

    def distances(self, X):
        X = check_points(X, dim=self.dim, allow_empty=True, name="X")
        segs = self.array
        a, b = segs[:, 0], segs[:, 1]
        ab = b - a
        rel = X[:, None, :] - a[None, :, :]
        t = np.sum(rel * ab[None], axis=2) / np.sum(ab * ab, axis=1)
        t = np.clip(t, 0.0, 1.0)
        foot = a[None] + t[:, :, None] * ab[None]
        dist = np.sqrt(np.sum((X[:, None, :] - foot) ** 2, axis=2))
        return dist.min(axis=1)

    def points_at(self, s):
        """Points at arclength positions ``s`` along the concatenated
        segments."""
        s = np.asarray(s, dtype=float)
        segs = self.array
        ends = np.cumsum(self.lengths)
        starts = ends - self.lengths
        idx = np.searchsorted(ends, s, side="left")
        idx = np.clip(idx, 0, len(segs) - 1)
        frac = (s - starts[idx]) / self.lengths[idx]
        frac = np.clip(frac, 0.0, 1.0)
        a, b = segs[idx, 0], segs[idx, 1]
        return a + frac[:, None] * (b - a)

    def probes(self, count):
        """``count`` points at equal arclength spacing over the union,
        including both extreme endpoints."""
        return self.points_at(np.linspace(0.0, self.length, count))

    def bounds(self):
        segs = self.array.reshape(-1, self.dim)
        return segs.min(axis=0), segs.max(axis=0)

    def to_dict(self):
        return {"kind": "segments",
                "segments": [[list(a), list(b)] for a, b in self.segments]}


@dataclass(frozen=True, eq=False)
class PointSet:
    """A finite set of points used as a reference set."""

    points: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "points", check_points(self.points))

    @property
    def dim(self):
        return self.points.shape[1]

    def distances(self, X):
        return nearest_distances(X, self.points)

    def probes(self, count):
        return self.points

    def bounds(self):
        return self.points.min(axis=0), self.points.max(axis=0)

    def to_dict(self):
        return {"kind": "point-set", "points": self.points.tolist()}


def manifold_from_dict(desc):
    kind = desc.get("kind")
    if kind == "circle":
        return Circle(desc["center"], desc["radius"])
    if kind == "segments":
        return Segments(desc["segments"])
    if kind == "point-set":
        return PointSet(np.asarray(desc["points"], dtype=float))
    raise ValueError(f"unknown manifold kind: {kind!r}")


def distance_to_manifold(x, M):
    """Distance from one point to a known manifold."""
    x = _check_vector(x, dim=M.dim)
    return float(M.distances(x[None, :])[0])


def hausdorff_to_manifold(A, M, probe_count=1000):
    """Hausdorff distance between a finite set and a known manifold.

    The manifold side is discretised by ``probe_count`` deterministic
    probes (all points, for a :class:`PointSet`).
    """
    if probe_count < 2:
        raise ValueError("probe_count must be at least 2")
    A = check_points(A, dim=M.dim, name="A")
    probes = M.probes(probe_count)
    return float(max(M.distances(A).max(), nearest_distances(probes, A).max()))
