"""Pair statistics of a flat sample: the proximity count, the ordered
point process of inter-flat distances, order statistics around zero and
around a positive level, and the disjoint shell counts."""

from dataclasses import dataclass

import numpy as np

from ._paircore import pair_records
from .closedform import Window
from .geometry import GENERAL_POSITION_TOL
from .process import FlatProcessSample


class RegionTooSmallError(ValueError):
    """Raised when the sample's region cannot contain every flat that may
    contribute to the requested statistic (silent undercounts forbidden)."""


@dataclass(frozen=True)
class DistanceRecord:
    """One unordered flat pair: indices (first < second), their distance
    and the midpoint of the closest points."""

    first_index: int
    second_index: int
    distance: float
    midpoint: np.ndarray


@dataclass(frozen=True)
class OrderedDistances:
    """Qualifying pair records sorted by distance ascending, truncated at
    u_max; array-backed with a record view per element."""

    first_index: np.ndarray
    second_index: np.ndarray
    distance: np.ndarray
    midpoint: np.ndarray
    u_max: float

    def __len__(self):
        return self.distance.size

    def __getitem__(self, index) -> DistanceRecord:
        return DistanceRecord(int(self.first_index[index]),
                              int(self.second_index[index]),
                              float(self.distance[index]),
                              self.midpoint[index].copy())

    def records(self):
        for index in range(len(self)):
            yield self[index]

    def count_within(self, delta: float) -> int:
        if delta > self.u_max:
            raise ValueError("delta exceeds the truncation bound")
        return int(np.searchsorted(self.distance, delta, side="right"))

    def csv_rows(self, rep_id=0):
        for rec in self.records():
            yield [rep_id, rec.first_index, rec.second_index, rec.distance,
                   *rec.midpoint.tolist()]


def _qualifying_pairs(sample: FlatProcessSample, window: Window, u_max: float,
                      det_tol: float):
    """Pairs in general position with distance <= u_max and midpoint in the
    scaled window.  A contributing flat sits within circumradius + u_max/2
    of the origin, so a region below that would silently undercount; that
    is rejected up front rather than inferred from the observed pairs."""
    required = window.circumradius() + u_max / 2.0
    if not np.isfinite(required) or \
            required > sample.region.enclosing_radius * (1.0 + 1e-9):
        raise RegionTooSmallError(
            f"region radius {sample.region.enclosing_radius:g} cannot cover "
            f"every flat contributing up to distance {u_max:g} "
            f"(needs {required:g})")
    i, j, dist, mid, rejected = pair_records(
        np.ascontiguousarray(sample.bases, dtype=float),
        np.ascontiguousarray(sample.anchors, dtype=float), det_tol, u_max)
    sample.rejected_parallel_pairs += rejected
    inside = window.contains(mid) if dist.size else np.zeros(0, dtype=bool)
    i, j, dist, mid = i[inside], j[inside], dist[inside], mid[inside]
    if dist.size:
        norms = np.linalg.norm(sample.anchors, axis=1)
        bound = sample.region.enclosing_radius * (1.0 + 1e-9)
        if np.max(norms[i]) > bound or np.max(norms[j]) > bound:
            raise AssertionError("sampled flat outside its own region")
    return i, j, dist, mid


def proximity_count(sample: FlatProcessSample, window: Window, delta: float,
                    det_tol: float = GENERAL_POSITION_TOL) -> int:
    """Number of unordered general-position pairs with distance <= delta
    and midpoint in the scaled window."""
    if delta < 0:
        raise ValueError("delta must be nonnegative")
    i, _, _, _ = _qualifying_pairs(sample, window, delta, det_tol)
    return int(i.size)


def distance_point_process(sample: FlatProcessSample, window: Window,
                           u_max: float,
                           det_tol: float = GENERAL_POSITION_TOL) -> OrderedDistances:
    """All qualifying records with distance <= u_max, sorted ascending
    (ties broken by pair indices for determinism)."""
    if u_max < 0:
        raise ValueError("u_max must be nonnegative")
    i, j, dist, mid = _qualifying_pairs(sample, window, u_max, det_tol)
    order = np.lexsort((j, i, dist))
    return OrderedDistances(i[order], j[order], dist[order], mid[order],
                            float(u_max))


def mth_smallest(ordered: OrderedDistances, m: int):
    """The m-th smallest distance, or None if fewer than m records were
    observed below the truncation bound."""
    if m < 1:
        raise ValueError("m must be >= 1")
    if len(ordered) < m:
        return None
    return float(ordered.distance[m - 1])


def around_sigma(ordered: OrderedDistances, sigma: float, m: int):
    """(m-th record above sigma, m-th record below sigma counting
    downward); either side None when absent."""
    if m < 1:
        raise ValueError("m must be >= 1")
    split = int(np.searchsorted(ordered.distance, sigma, side="right"))
    above = ordered.distance[split:]
    below = ordered.distance[:split][ordered.distance[:split] < sigma]
    up = float(above[m - 1]) if above.size >= m else None
    down = float(below[below.size - m]) if below.size >= m else None
    return up, down


def shell_counts(sample: FlatProcessSample, r: float, n_max: int,
                 det_tol: float = GENERAL_POSITION_TOL):
    """Counts S_1..S_n_max of pairs with midpoint in the centered r-ball
    and distance in (a_n, b_n], a_n = 2(3n-1)r, b_n = 6nr.

    A pair counted by shell n necessarily has both flats at distance to
    the origin within ((3n-2)r, (3n+1)r] (triangle inequality through the
    midpoint), so the shells are computed from disjoint flat subsets; the
    equivalence with the brute-force double loop is covered by tests.
    """
    if n_max < 0:
        raise ValueError("n_max must be nonnegative")
    if r <= 0:
        raise ValueError("r must be positive")
    counts = np.zeros(n_max, dtype=np.int64)
    if n_max == 0:
        return counts
    b_last = 6.0 * n_max * r
    needed = b_last / 2.0 + r
    if sample.region.enclosing_radius < needed / (1.0 + 1e-9):
        raise RegionTooSmallError(
            f"region radius {sample.region.enclosing_radius:g} < b_n/2 + r "
            f"= {needed:g} for n_max={n_max}")
    window = Window.ball(r)
    norms = np.linalg.norm(sample.anchors, axis=1)
    used = np.zeros(len(sample), dtype=bool)
    for n in range(1, n_max + 1):
        a_n, b_n = 2.0 * (3 * n - 1) * r, 6.0 * n * r
        subset = np.nonzero((norms > (3 * n - 2) * r) & (norms <= (3 * n + 1) * r))[0]
        if used[subset].any():
            raise AssertionError("flat assigned to two shell statistics")
        used[subset] = True
        if subset.size < 2:
            continue
        i, j, dist, mid, rejected = pair_records(
            np.ascontiguousarray(sample.bases[subset]),
            np.ascontiguousarray(sample.anchors[subset]), det_tol, b_n)
        sample.rejected_parallel_pairs += rejected
        hit = (dist > a_n) & window.contains(mid) if dist.size else np.zeros(0, dtype=bool)
        counts[n - 1] = int(np.count_nonzero(hit))
    return counts
