"""Synthetic samples from the hidden-manifold model: uniform clutter on a
box mixed with manifold points blurred by isotropic Gaussian noise.

Randomness: point ``i`` of a sample with seed ``s`` is drawn from its own
PCG64 stream seeded by ``numpy.random.SeedSequence(s, spawn_key=(i,))``.
Per point the draws are, in order: one uniform deciding signal versus
clutter; then either ``D`` uniforms (clutter) or the manifold draws
followed by ``D`` standard normals (signal).
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .geometry import Circle, Segments, manifold_from_dict

GENERATOR = "numpy PCG64, SeedSequence(seed, spawn_key=(index,)) per point"

DEFAULT_WEB = (
    ((1.0, 1.0), (5.0, 5.0)),
    ((5.0, 5.0), (9.0, 2.0)),
    ((5.0, 5.0), (4.0, 9.0)),
    ((4.0, 9.0), (9.0, 8.0)),
    ((5.0, 5.0), (9.0, 8.0)),
    ((1.0, 6.0), (4.0, 9.0)),
    ((1.0, 6.0), (5.0, 5.0)),
)


def cosine_weight(circle, a):
    """Unnormalised density ``1 + a cos(theta)`` on a circle, as a function
    of points."""
    def weight(points):
        rel = np.asarray(points, dtype=float) - np.asarray(circle.center)
        return 1.0 + a * np.cos(np.arctan2(rel[:, 1], rel[:, 0]))
    return weight


@dataclass(frozen=True)
class HiddenManifoldModel:
    """Parameters of the clutter-plus-blurred-manifold distribution.

    ``box`` is a sequence of per-axis ``(low, high)`` intervals; by default
    the manifold's bounding box padded by ``max(4 sigma, 1)``.
    ``weight_a`` selects the circle weight ``1 + a cos(theta)`` (0 is
    uniform); segment unions always use uniform arclength weight.
    """

    manifold: object
    sigma: float
    eta: float = 1.0
    box: Optional[tuple] = None
    seed: int = 0
    weight_a: float = 0.0

    def __post_init__(self):
        if not self.sigma >= 0:
            raise ValueError("sigma must be nonnegative")
        if not 0 <= self.eta <= 1:
            raise ValueError("eta must lie in [0, 1]")
        if not 0 <= self.weight_a < 1:
            raise ValueError("weight_a must lie in [0, 1)")
        if self.weight_a and not isinstance(self.manifold, Circle):
            raise ValueError("a nonuniform weight is only defined for circles")
        if not isinstance(self.manifold, (Circle, Segments)):
            raise ValueError("manifold must be a Circle or Segments")
        lo, hi = self.manifold.bounds()
        if self.box is None:
            pad = max(4.0 * self.sigma, 1.0)
            box = tuple((float(a) - pad, float(b) + pad) for a, b in zip(lo, hi))
        else:
            box = tuple((float(a), float(b)) for a, b in self.box)
            if len(box) != self.manifold.dim:
                raise ValueError("box needs one interval per dimension")
            if any(b < a for a, b in box):
                raise ValueError("box intervals must have low <= high")
            if any(a > l - self.sigma or b < h + self.sigma
                   for (a, b), l, h in zip(box, lo, hi)):
                raise ValueError("box must contain the sigma-neighbourhood of the manifold")
        if self.eta < 1 and any(b <= a for a, b in box):
            raise ValueError("clutter needs a box with positive volume")
        object.__setattr__(self, "box", box)
        object.__setattr__(self, "seed", int(self.seed))

    @property
    def dim(self):
        return self.manifold.dim

    def to_dict(self):
        return {"manifold": self.manifold.to_dict(), "sigma": self.sigma,
                "eta": self.eta, "box": [list(b) for b in self.box],
                "seed": self.seed, "weight_a": self.weight_a,
                "generator": GENERATOR}

    @classmethod
    def from_dict(cls, desc):
        return cls(manifold=manifold_from_dict(desc["manifold"]),
                   sigma=desc["sigma"], eta=desc["eta"],
                   box=tuple(tuple(b) for b in desc["box"]),
                   seed=desc["seed"], weight_a=desc.get("weight_a", 0.0))

    def weight(self):
        """Weight function for :func:`surfridge.density.manifold_oracle`."""
        if self.weight_a and isinstance(self.manifold, Circle):
            return cosine_weight(self.manifold, self.weight_a)
        return None


def _manifold_point(model, rng):
    M = model.manifold
    if isinstance(M, Circle):
        a = model.weight_a
        while True:
            theta = 2.0 * np.pi * rng.random()
            if a == 0 or rng.random() * (1.0 + a) <= 1.0 + a * np.cos(theta):
                return M.points_at([theta])[0]
    return M.points_at([M.length * rng.random()])[0]


def sample_point(model, index):
    """Point ``index`` of the sample stream of ``model``.

    Returns ``(x, is_signal)``.
    """
    rng = np.random.Generator(np.random.PCG64(
        np.random.SeedSequence(model.seed, spawn_key=(int(index),))))
    signal = rng.random() < model.eta
    if not signal:
        lo = np.array([b[0] for b in model.box])
        hi = np.array([b[1] for b in model.box])
        return lo + (hi - lo) * rng.random(model.dim), False
    z = _manifold_point(model, rng)
    return z + model.sigma * rng.standard_normal(model.dim), True


def sample(model, n, return_labels=False):
    """Draw ``n`` points; point ``i`` depends only on the seed and ``i``.

    With ``return_labels`` also returns a boolean array marking signal
    (manifold) points.
    """
    if not (isinstance(n, (int, np.integer)) and n >= 1):
        raise ValueError("n must be a positive integer")
    X = np.empty((n, model.dim))
    labels = np.empty(n, dtype=bool)
    for i in range(n):
        X[i], labels[i] = sample_point(model, i)
    return (X, labels) if return_labels else X


def cosmic_web(seed, n, segment_layout=DEFAULT_WEB, sigma=0.2, clutter_frac=0.1,
               box=((0.0, 10.0), (0.0, 10.0))):
    """Sample from a stylised web of intersecting segments with uniform
    clutter. Returns the points and the ground-truth :class:`Segments`."""
    if segment_layout is None or len(segment_layout) == 0:
        raise ValueError("segment_layout must be nonempty")
    M = Segments(segment_layout)
    model = HiddenManifoldModel(manifold=M, sigma=sigma, eta=1.0 - clutter_frac,
                                box=box, seed=seed)
    return sample(model, n), M
