"""Closed-form and semi-exact evaluation of the model's theory quantities.

Covers unit-ball volumes, the mean subspace determinant of Haar subspace
pairs, the expected proximity count, chord-power integrals, the
slice-square integral I(K), the large-window variance limit, the beta
rate constants of the two extreme-value limits, limiting tail
probabilities, and shell means.
"""

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy import integrate

from .geometry import haar_basis_batch


@dataclass(frozen=True)
class Window:
    """Convex observation body: a centered ball or axis-aligned box,
    together with the dilation scale rho >= 1 applied to it."""

    shape: str                        # "ball" or "box"
    radius: float = 0.0               # ball only
    halfwidths: tuple = ()            # box only
    scale: float = 1.0

    def __post_init__(self):
        if self.shape == "ball":
            if self.radius <= 0:
                raise ValueError("ball radius must be positive")
        elif self.shape == "box":
            if not self.halfwidths or any(a <= 0 for a in self.halfwidths):
                raise ValueError("box halfwidths must be positive")
        else:
            raise ValueError(f"unsupported window shape {self.shape!r}")
        if self.scale <= 0:
            raise ValueError("scale must be positive")

    @classmethod
    def ball(cls, radius, scale=1.0):
        return cls(shape="ball", radius=float(radius), scale=float(scale))

    @classmethod
    def box(cls, halfwidths, scale=1.0):
        return cls(shape="box", halfwidths=tuple(float(a) for a in halfwidths),
                   scale=float(scale))

    def with_scale(self, rho):
        return replace(self, scale=float(rho))

    @property
    def dim(self):
        return len(self.halfwidths) if self.shape == "box" else None

    def volume(self, d):
        """d-volume of the scaled body."""
        return self.base_volume(d) * self.scale ** d

    def base_volume(self, d):
        """d-volume at scale 1."""
        if self.shape == "ball":
            return unit_ball_volume(d) * self.radius ** d
        if len(self.halfwidths) != d:
            raise ValueError("box dimension mismatch")
        return float(np.prod([2.0 * a for a in self.halfwidths]))

    def circumradius(self):
        """Circumradius of the scaled body."""
        return self.base_circumradius() * self.scale

    def base_circumradius(self):
        if self.shape == "ball":
            return self.radius
        return math.sqrt(sum(a * a for a in self.halfwidths))

    def diameter(self):
        return 2.0 * self.circumradius()

    def contains(self, points):
        """Vectorized membership test for an (n, d) array of points."""
        points = np.atleast_2d(points)
        if self.shape == "ball":
            return np.einsum("ni,ni->n", points, points) <= (self.radius * self.scale) ** 2
        hw = np.asarray(self.halfwidths) * self.scale
        return np.all(np.abs(points) <= hw, axis=1)


@dataclass(frozen=True)
class ModelParams:
    """Process and functional parameters: ambient dimension d, flat
    dimension k with 1 <= k < d/2, intensity t per unit (d-k)-volume,
    distance threshold delta, and the direction model.

    ``direction_model`` is "isotropic" or an object with a method
    ``sample(rng, n) -> (n, d, k) orthonormal bases``.  Custom models must
    be non-atomic: two independent draws share a direction with
    probability zero, otherwise parallel flats occur at positive rate
    (consumers tally such rejections as a health metric).
    """

    d: int
    k: int
    t: float = 1.0
    delta: float = 1.0
    direction_model: object = "isotropic"

    def __post_init__(self):
        if not (1 <= self.k and 2 * self.k < self.d):
            raise ValueError(
                f"requires 1 <= k < d/2 so flats almost surely do not "
                f"intersect; got k={self.k}, d={self.d}")
        if self.t <= 0:
            raise ValueError("intensity t must be positive")
        if self.delta < 0:
            raise ValueError("delta must be nonnegative")

    @property
    def isotropic(self):
        return isinstance(self.direction_model, str) and self.direction_model == "isotropic"

    def sample_directions(self, rng, n):
        if self.isotropic:
            return haar_basis_batch(rng, n, self.d, self.k)
        return np.asarray(self.direction_model.sample(rng, n), dtype=float)


def unit_ball_volume(n: int) -> float:
    """kappa_n = pi^(n/2) / Gamma(n/2 + 1), the volume of the unit n-ball."""
    if n < 0:
        raise ValueError("dimension must be nonnegative")
    return math.pi ** (n / 2.0) / math.gamma(n / 2.0 + 1.0)


def _mean_chi(nu):
    # E chi_nu = sqrt(2) Gamma((nu+1)/2) / Gamma(nu/2)
    return math.sqrt(2.0) * math.exp(math.lgamma((nu + 1) / 2.0) - math.lgamma(nu / 2.0))


def psi(d: int, k: int) -> float:
    """Mean subspace determinant E[M, L] of two independent Haar-distributed
    k-dimensional subspaces of R^d, i.e. the exact value of the double
    Grassmannian integral of the parallelepiped determinant.

    Via the QR decomposition of Gaussian matrices (whose Q factor is Haar
    and independent of R), [M, L] = vol([A B]) / (vol(A) vol(B)) for
    Gaussian A, B, and the parallelepiped volumes factor into independent
    chi variables, giving

        psi(d, k) = prod_{i=0}^{k-1} E chi_{d-k-i} / E chi_{d-i}.

    Examples: psi(3, 1) = pi/4, psi(5, 2) = 1/2.  Note this differs from
    the classical constant kappa_k kappa_{d-k} / (binom(d,k) kappa_d),
    which is the mean *projection* determinant; see
    mean_projection_determinant.
    """
    _check_dims(d, k)
    val = 1.0
    for i in range(k):
        val *= _mean_chi(d - k - i) / _mean_chi(d - i)
    return val


# The double Grassmannian integral and its Monte Carlo oracle agree on
# psi(); keep the canonical name as an alias for callers thinking in terms
# of the integral.
mean_subspace_determinant = psi


def mean_projection_determinant(d: int, k: int) -> float:
    """kappa_k kappa_{d-k} / (binom(d,k) kappa_d): the mean of the modulus
    of det(B_M^T B_L) (product of principal cosines) over independent Haar
    k-subspace pairs.  This is NOT the parallelepiped determinant mean
    psi(d, k); the two coincide only for d = 2."""
    _check_dims(d, k, allow_large_k=True)
    return unit_ball_volume(k) * unit_ball_volume(d - k) / (
        math.comb(d, k) * unit_ball_volume(d))


def _check_dims(d, k, allow_large_k=False):
    if k < 1 or (k >= d if allow_large_k else 2 * k >= d):
        raise ValueError(f"invalid subspace dimensions d={d}, k={k}")


def double_determinant_integral(params: ModelParams, mc_budget: int = 100_000,
                                rng=None):
    """The double direction integral of [M, L] under the model's direction
    law.  Isotropic: exact (psi).  Custom: Monte Carlo over independent
    direction pairs.  Returns (value, standard_error)."""
    if params.isotropic:
        return psi(params.d, params.k), 0.0
    if rng is None:
        rng = np.random.default_rng(0)
    a = params.sample_directions(rng, mc_budget)
    b = params.sample_directions(rng, mc_budget)
    g = np.einsum("ndi,ndj->nij", a, b)
    eye = np.eye(params.k)
    dets = np.sqrt(np.clip(np.linalg.det(eye - np.einsum("nij,nil->njl", g, g)),
                           0.0, None))
    return float(dets.mean()), float(dets.std(ddof=1) / math.sqrt(mc_budget))


def expected_proximity(params: ModelParams, window: Window, **mc_kwargs) -> float:
    """Expected number of unordered flat pairs with distance <= delta and
    midpoint in the scaled window:

        (t^2/2) kappa_{d-2k} delta^(d-2k) V_d(K_rho) * E[M, L].
    """
    d, k = params.d, params.k
    det_mean, _ = double_determinant_integral(params, **mc_kwargs)
    return (0.5 * params.t ** 2 * unit_ball_volume(d - 2 * k)
            * params.delta ** (d - 2 * k) * window.volume(d) * det_mean)


def chord_power_integral_ball(d: int, p: float, r: float = 1.0) -> float:
    """Order-p chord-power integral of the d-ball of radius r under the
    invariant line measure normalized as Haar probability on directions
    times Lebesgue on the orthogonal complement:

        J_p(B_r) = 2^p (d-1) kappa_{d-1} r^(d-1+p) * (1/2) B((d-1)/2, p/2 + 1).
    """
    if d < 2:
        raise ValueError("need d >= 2")
    if p <= 0 or r <= 0:
        raise ValueError("need p > 0 and r > 0")
    log_beta = (math.lgamma((d - 1) / 2.0) + math.lgamma(p / 2.0 + 1.0)
                - math.lgamma((d - 1) / 2.0 + p / 2.0 + 1.0))
    return (2.0 ** p * (d - 1) * unit_ball_volume(d - 1)
            * r ** (d - 1 + p) * 0.5 * math.exp(log_beta))


def chord_power_integral_ball_quad(d: int, p: float, r: float = 1.0) -> float:
    """Independent evaluation of J_p(B_r) by adaptive quadrature of the
    radial chord integrand 2^p (r^2 - s^2)^(p/2) (d-1) kappa_{d-1} s^(d-2)."""
    if d < 2:
        raise ValueError("need d >= 2")
    c = (d - 1) * unit_ball_volume(d - 1)

    def integrand(s):
        return 2.0 ** p * (r * r - s * s) ** (p / 2.0) * c * s ** (d - 2)

    val, _ = integrate.quad(integrand, 0.0, r, epsabs=1e-13, epsrel=1e-12)
    return val


def _box_chord_lengths(halfwidths, directions, offsets):
    """Chord lengths of the box |x_i| <= a_i along lines offset + s*u
    (slab method, vectorized).  Zero for lines missing the box."""
    hw = np.asarray(halfwidths)
    with np.errstate(divide="ignore", invalid="ignore"):
        t_lo = (-hw - offsets) / directions
        t_hi = (hw - offsets) / directions
    near = np.minimum(t_lo, t_hi)
    far = np.maximum(t_lo, t_hi)
    # axes with u_i == 0: inside the slab -> (-inf, inf), else empty
    zero = directions == 0.0
    inside = np.abs(offsets) <= hw
    near = np.where(zero, np.where(inside, -np.inf, np.inf), near)
    far = np.where(zero, np.where(inside, np.inf, -np.inf), far)
    enter = near.max(axis=1)
    exit_ = far.min(axis=1)
    return np.maximum(exit_ - enter, 0.0)


def chord_power_integral_box_mc(halfwidths, p: float, d: int,
                                n_samples: int = 2_000_000, rng=None):
    """Monte Carlo estimate of J_p for a centered box: Haar directions u on
    the sphere, offsets uniform in the circumdisk of the box's shadow in
    u-perp, exact slab chord lengths.  Returns (value, standard_error)."""
    if rng is None:
        rng = np.random.default_rng(0)
    hw = np.asarray(halfwidths, dtype=float)
    if hw.shape != (d,):
        raise ValueError("halfwidths dimension mismatch")
    circ = math.sqrt(float(np.sum(hw * hw)))
    disk_vol = unit_ball_volume(d - 1) * circ ** (d - 1)
    total = 0.0
    total_sq = 0.0
    done = 0
    chunk = 200_000
    while done < n_samples:
        n = min(chunk, n_samples - done)
        u = rng.standard_normal((n, d))
        u /= np.linalg.norm(u, axis=1, keepdims=True)
        # uniform offset in the (d-1)-circumdisk inside u-perp
        g = rng.standard_normal((n, d))
        g -= np.einsum("ni,ni->n", g, u)[:, None] * u
        g /= np.linalg.norm(g, axis=1, keepdims=True)
        rad = circ * rng.random(n) ** (1.0 / (d - 1))
        y = g * rad[:, None]
        vals = disk_vol * _box_chord_lengths(hw, u, y) ** p
        total += float(vals.sum())
        total_sq += float((vals * vals).sum())
        done += n
    mean = total / n_samples
    var = max(total_sq / n_samples - mean * mean, 0.0)
    return mean, math.sqrt(var / n_samples)


def script_I(window: Window, d: int, k: int, mc_samples: int = 2_000_000,
             rng=None) -> float:
    """I(K) = (kappa_k / (k+1)) psi(d,k)^2 J_{k+1}(K) for the isotropic
    model, via the chord-power route.  Ball windows use the closed Beta
    form of J_{k+1}; boxes use Monte Carlo chord quadrature.  Uses the
    window at scale 1 (the variance limit normalizes the scale out)."""
    factor = unit_ball_volume(k) / (k + 1) * psi(d, k) ** 2
    if window.shape == "ball":
        return factor * chord_power_integral_ball(d, k + 1, window.radius)
    j, _ = chord_power_integral_box_mc(window.halfwidths, k + 1, d,
                                       n_samples=mc_samples, rng=rng)
    return factor * j


def script_I_direct(window: Window, d: int, k: int, mc_samples: int = 500_000,
                    rng=None) -> float:
    """Independent evaluation of I(K) straight from its definition
    psi^2 * int_G int_{M-perp} V_k(K cap (M+y))^2 dy nu(dM).

    Ball windows reduce by rotation invariance to a 1-d radial integral
    evaluated adaptively; boxes use Monte Carlo over Haar directions and
    offsets with exact (k=1) or rejection-estimated slice volumes."""
    psi2 = psi(d, k) ** 2
    if window.shape == "ball":
        r = window.radius
        kk = unit_ball_volume(k) ** 2
        shell = (d - k) * unit_ball_volume(d - k)

        def integrand(s):
            return kk * (r * r - s * s) ** k * shell * s ** (d - k - 1)

        val, _ = integrate.quad(integrand, 0.0, r, epsabs=1e-13, epsrel=1e-12)
        return psi2 * val
    if k != 1:
        raise NotImplementedError("direct box route implemented for k = 1")
    if rng is None:
        rng = np.random.default_rng(0)
    j, _ = chord_power_integral_box_mc(window.halfwidths, 2, d,
                                       n_samples=mc_samples, rng=rng)
    return psi2 * j


def asymptotic_variance_limit(params: ModelParams, window: Window,
                              method: str = "chord", **kwargs) -> float:
    """Limit of Var pi / rho^(d+k) for growing windows K_rho:

        t^3 kappa_{d-2k}^2 delta^(2(d-2k)) I(K).
    """
    d, k = params.d, params.k
    evaluate = script_I if method == "chord" else script_I_direct
    return (params.t ** 3 * unit_ball_volume(d - 2 * k) ** 2
            * params.delta ** (2 * (d - 2 * k)) * evaluate(window, d, k, **kwargs))


def beta_small(params: ModelParams, window: Window, **mc_kwargs) -> float:
    """Rate constant of the small-distance limit law:
    (t^2/2) kappa_{d-2k} V_d(K) E[M,L], with K at scale 1."""
    d, k = params.d, params.k
    det_mean, _ = double_determinant_integral(params, **mc_kwargs)
    return (0.5 * params.t ** 2 * unit_ball_volume(d - 2 * k)
            * window.base_volume(d) * det_mean)


def beta_sigma(params: ModelParams, window: Window, sigma: float,
               **mc_kwargs) -> float:
    """Intensity of the homogeneous limit process of distances around
    sigma > 0: (t^2/2) (d-2k) kappa_{d-2k} sigma^(d-2k-1) V_d(K) E[M,L]."""
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    d, k = params.d, params.k
    return beta_small(params, window, **mc_kwargs) * (d - 2 * k) * sigma ** (d - 2 * k - 1)


def limiting_tail_small(m: int, u: float, beta: float, d: int, k: int) -> float:
    """Limit of P(rho^(d/(d-2k)) D_m > u): the Poisson tail
    exp(-beta u^(d-2k)) sum_{i<m} (beta u^(d-2k))^i / i!."""
    if m < 1:
        raise ValueError("m must be >= 1")
    if u < 0:
        raise ValueError("u must be nonnegative")
    lam = beta * u ** (d - 2 * k)
    return _poisson_cdf(m - 1, lam)


def limiting_tail_sigma(m: int, u: float, beta: float) -> float:
    """Common limit of P(rho^d (Dbar_m - sigma) > u) and
    P(-rho^d (Dunder_m - sigma) > u): exp(-beta u) sum_{i<m} (beta u)^i / i!."""
    if m < 1:
        raise ValueError("m must be >= 1")
    if u < 0:
        raise ValueError("u must be nonnegative")
    return _poisson_cdf(m - 1, beta * u)


def _poisson_cdf(n, lam):
    term = math.exp(-lam)
    total = term
    for i in range(1, n + 1):
        term *= lam / i
        total += term
    return min(total, 1.0)


def shell_bounds(n: int, r: float):
    """Distance bounds (a_n, b_n) = (2(3n-1)r, 6nr) of the n-th shell."""
    if n < 1:
        raise ValueError("shell index must be >= 1")
    return 2.0 * (3 * n - 1) * r, 6.0 * n * r


def shell_mean(n: int, r: float, params: ModelParams, **mc_kwargs) -> float:
    """Expected shell count E S_n = c_1 (b_n^(d-2k) - a_n^(d-2k)) with
    c_1 the expected proximity of the r-ball at threshold 1."""
    a, b = shell_bounds(n, r)
    d, k = params.d, params.k
    c1 = expected_proximity(replace(params, delta=1.0), Window.ball(r), **mc_kwargs)
    return c1 * (b ** (d - 2 * k) - a ** (d - 2 * k))
