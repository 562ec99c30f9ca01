"""Sampling of the stationary Poisson k-flat process restricted to flats
hitting a centered ball.

A flat hits the ball of radius R iff the offset of its direction space in
the orthogonal complement lies in the (d-k)-ball of radius R, so the
number of hitting flats is Poisson with mean t kappa_{d-k} R^(d-k), the
directions follow the model's direction law, and the offsets are uniform
in that (d-k)-ball.
"""

from dataclasses import dataclass

import numpy as np

from .closedform import ModelParams, Window, unit_ball_volume
from .geometry import AffineFlat, orthonormal_complement_batch

@dataclass(frozen=True)
class SampleRegion:
    """Centered ball whose hitting flats are generated.  For proximity
    computations the radius must cover circumradius(K_rho) + delta/2 so no
    contributing flat is missed."""

    enclosing_radius: float

    def __post_init__(self):
        if self.enclosing_radius <= 0:
            raise ValueError("enclosing radius must be positive")

@dataclass
class FlatProcessSample:
    """One realization of the restricted flat process, stored as stacked
    arrays: bases (n, d, k) and anchors (n, d), each flat canonical.  The
    rejected_parallel_pairs counter is incremented by consumers that drop
    near-parallel pairs; a nonzero tally flags a direction model violating
    the general-position assumption."""

    bases: np.ndarray
    anchors: np.ndarray
    region: SampleRegion
    params: ModelParams
    rejected_parallel_pairs: int = 0

    def __len__(self):
        return self.bases.shape[0]

    def __getitem__(self, index) -> AffineFlat:
        return AffineFlat(self.params.d, self.params.k,
                          self.bases[index].copy(), self.anchors[index].copy())

    def flats(self):
        for index in range(len(self)):
            yield self[index]

    def anchor_norms(self):
        """Distances of the flats to the origin (canonical anchors)."""
        return np.linalg.norm(self.anchors, axis=1)

def hitting_mean(R: float, params: ModelParams) -> float:
    """Mean number of flats hitting the centered R-ball:
    t kappa_{d-k} R^(d-k)."""
    if R <= 0:
        raise ValueError("R must be positive")
    m = params.d - params.k
    return params.t * unit_ball_volume(m) * R ** m

def enclosing_radius_for_proximity(window: Window, delta: float) -> float:
    """Smallest safe simulation radius for pairs with midpoint in the
    scaled window and distance <= delta, with a tiny safety factor."""
    if delta < 0:
        raise ValueError("delta must be nonnegative")
    return (window.circumradius() + delta / 2.0) * (1.0 + 1e-9)

def sample_process(region: SampleRegion, params: ModelParams, rng) -> FlatProcessSample:
    """Draw one realization of the process restricted to flats hitting the
    region: Poisson count, directions from the direction model, offsets
    uniform in the (d-k)-ball of the region radius inside each direction's
    orthogonal complement."""
    d, k = params.d, params.k
    R = region.enclosing_radius
    n = int(rng.poisson(hitting_mean(R, params)))
    if n == 0:
        return FlatProcessSample(np.empty((0, d, k)), np.empty((0, d)),
                                 region, params)
    bases = params.sample_directions(rng, n)
    comp = orthonormal_complement_batch(bases)  # (n, d, d-k)
    m = d - k
    direction = rng.standard_normal((n, m))
    direction /= np.linalg.norm(direction, axis=1, keepdims=True)
    radius = R * rng.random(n) ** (1.0 / m)
    offsets = direction * radius[:, None]
    anchors = np.einsum("ndm,nm->nd", comp, offsets)
    # one projection pass removes the O(1e-16) residual along the basis
    anchors -= np.einsum("ndk,nk->nd", bases,
                         np.einsum("ndk,nd->nk", bases, anchors))
    return FlatProcessSample(np.ascontiguousarray(bases),
                             np.ascontiguousarray(anchors), region, params)
