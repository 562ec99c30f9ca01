"""Linear-algebraic operations on k-dimensional affine subspaces (k-flats) of R^d.

A flat is kept in canonical form: an orthonormal basis of its direction
space plus the foot point of the origin as anchor (anchor orthogonal to
every basis column).  All operations are pure; instances are safe to share
across threads.
"""

from dataclasses import dataclass

import numpy as np

# Default tolerance on the subspace determinant below which a pair of
# flats is treated as parallel (not in general position).
GENERAL_POSITION_TOL = 1e-9

_CANONICAL_TOL = 1e-10


class DegenerateBasisError(ValueError):
    """Raised when a spanning matrix is numerically rank deficient."""


class ParallelFlatsError(ValueError):
    """Raised when two flats are not in general position, so the closest
    pair of points (and hence distance/midpoint) is not unique."""


@dataclass(frozen=True, eq=False)
class AffineFlat:
    """A k-flat M + anchor in R^d with orthonormal basis of the direction
    space M and anchor = foot point of the origin (anchor in M-perp)."""

    dim_ambient: int
    dim_flat: int
    basis: np.ndarray   # (d, k), orthonormal columns
    anchor: np.ndarray  # (d,), orthogonal to every basis column

    def __post_init__(self):
        d, k = self.dim_ambient, self.dim_flat
        if not (1 <= k and 2 * k < d):
            raise ValueError(f"need 1 <= k < d/2, got k={k}, d={d}")
        if self.basis.shape != (d, k) or self.anchor.shape != (d,):
            raise ValueError("basis/anchor shape mismatch")
        gram = self.basis.T @ self.basis
        if np.max(np.abs(gram - np.eye(k))) > _CANONICAL_TOL:
            raise ValueError("basis columns not orthonormal")
        if np.max(np.abs(self.basis.T @ self.anchor)) > _CANONICAL_TOL:
            raise ValueError("anchor not orthogonal to direction space")

    def translated(self, v):
        """The same direction space anchored at (a point of) self + v."""
        return canonicalize(self.basis, self.anchor + np.asarray(v, dtype=float))

    def distance_to_origin(self):
        return float(np.linalg.norm(self.anchor))


@dataclass(frozen=True, eq=False)
class ClosestPair:
    """The unique closest points of two flats in general position."""

    point_on_first: np.ndarray
    point_on_second: np.ndarray
    distance: float
    midpoint: np.ndarray


def canonicalize(basis, any_point) -> AffineFlat:
    """Build the canonical flat through ``any_point`` with direction space
    spanned by the columns of ``basis`` (need not be orthonormal)."""
    basis = np.asarray(basis, dtype=float)
    if basis.ndim == 1:
        basis = basis[:, None]
    any_point = np.asarray(any_point, dtype=float)
    d, k = basis.shape
    q, r = np.linalg.qr(basis)
    diag = np.abs(np.diag(r))
    scale = max(1.0, float(np.max(np.abs(basis))))
    if np.any(diag <= 1e-12 * scale):
        raise DegenerateBasisError("spanning columns are linearly dependent")
    q = q * np.sign(np.diag(r))
    anchor = any_point - q @ (q.T @ any_point)
    # one re-projection pass keeps the canonical-form residual at the
    # 1e-16 level even for ill-conditioned input bases
    anchor = anchor - q @ (q.T @ anchor)
    return AffineFlat(d, k, q, anchor)


def subspace_determinant(first: AffineFlat, second: AffineFlat) -> float:
    """Volume of the parallelepiped spanned by orthonormal bases of the two
    direction spaces: sqrt(det(I - G^T G)) with G the matrix of inner
    products.  0 for parallel, 1 for orthogonal subspaces; anchors ignored."""
    if first.dim_ambient != second.dim_ambient:
        raise ValueError("ambient dimensions differ")
    g = first.basis.T @ second.basis
    k = first.dim_flat
    det = np.linalg.det(np.eye(k) - g.T @ g)
    return float(np.sqrt(max(det, 0.0)))


def general_position(first: AffineFlat, second: AffineFlat,
                     tol: float = GENERAL_POSITION_TOL) -> bool:
    """True iff the direction spaces meet only at 0 (within tolerance)."""
    return subspace_determinant(first, second) > tol


def closest_points(first: AffineFlat, second: AffineFlat,
                   tol: float = GENERAL_POSITION_TOL) -> ClosestPair:
    """Unique minimizing pair of points on two flats in general position.

    Solves the normal equations of min over (alpha, beta) of
    |anchor_1 + B_1 alpha - anchor_2 - B_2 beta|^2; the 2k x 2k system is
    reduced to the k x k SPD system (I - G^T G) beta = G^T c1 - c2.
    """
    if first.dim_ambient != second.dim_ambient:
        raise ValueError("ambient dimensions differ")
    if not general_position(first, second, tol):
        raise ParallelFlatsError(
            "flats share a direction: closest pair not unique")
    g = first.basis.T @ second.basis
    diff = second.anchor - first.anchor
    c1 = first.basis.T @ diff
    c2 = second.basis.T @ diff
    k = first.dim_flat
    beta = np.linalg.solve(np.eye(k) - g.T @ g, g.T @ c1 - c2)
    alpha = c1 + g @ beta
    x = first.anchor + first.basis @ alpha
    y = second.anchor + second.basis @ beta
    delta = x - y
    return ClosestPair(
        point_on_first=x,
        point_on_second=y,
        distance=float(np.linalg.norm(delta)),
        midpoint=0.5 * (x + y),
    )


def haar_basis_batch(rng, n, d, k):
    """Stack of n orthonormal (d, k) bases whose spans are Haar distributed
    on the Grassmannian (QR of independent standard Gaussian matrices)."""
    g = rng.standard_normal((n, d, k))
    q, r = np.linalg.qr(g)
    diag = np.einsum("nii->ni", r)
    bad = np.nonzero(np.any(np.abs(diag) < 1e-12, axis=1))[0]
    while bad.size:  # measure-zero rank deficiency: resample
        g2 = rng.standard_normal((bad.size, d, k))
        q2, r2 = np.linalg.qr(g2)
        q[bad], r[bad] = q2, r2
        diag = np.einsum("nii->ni", r)
        bad = np.nonzero(np.any(np.abs(diag) < 1e-12, axis=1))[0]
    return q * np.sign(diag)[:, None, :]


def haar_grassmannian_sample(d: int, k: int, rng) -> AffineFlat:
    """A flat through the origin with Haar-distributed direction space."""
    basis = haar_basis_batch(rng, 1, d, k)[0]
    return AffineFlat(d, k, basis, np.zeros(d))


def orthonormal_complement_batch(bases):
    """For a stack of (d, m) matrices with orthonormal columns, return the
    (d, d - m) orthonormal complements (batched full QR)."""
    bases = np.asarray(bases, dtype=float)
    n, d, m = bases.shape
    q, _ = np.linalg.qr(bases, mode="complete")
    # Q's first m columns span col(bases); the rest span the complement.
    return q[:, :, m:]
