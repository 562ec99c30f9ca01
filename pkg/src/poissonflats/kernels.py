"""Quadrature oracle for the chaos-decomposition quantities of the
proximity count.

The proximity functional decomposes as mean + first-order + second-order
stochastic integral with kernels f1 (an integral over flats meeting a
given one) and f2 (half the pair indicator), so that

    Var pi = ||f1||^2 + 2 ||f2||^2,         2 ||f2||^2 = E pi.

This module evaluates f1 pointwise by Monte Carlo, the L2 norm ||f1||^2 by
stratified Monte Carlo over the kernel's compact support, the finite-scale
variance from the identity above, and the closed-form Kolmogorov-distance
bound for the normal approximation.
"""

import math
import warnings
from dataclasses import dataclass, replace

import numpy as np

from .closedform import (ModelParams, Window, expected_proximity,
                         unit_ball_volume, _box_chord_lengths)
from .geometry import AffineFlat

_DEGENERATE_DET = 1e-14


@dataclass(frozen=True)
class KernelContext:
    """Model, window (at its evaluation scale) and quadrature budgets:
    ``grassmann_budget`` joint direction/offset samples per f1 evaluation,
    ``offset_budget`` outer points for the L2-norm integral."""

    params: ModelParams
    window: Window
    grassmann_budget: int = 4096
    offset_budget: int = 16384

    def __post_init__(self):
        if self.grassmann_budget < 1000 or self.offset_budget < 1000:
            raise ValueError("quadrature budgets must be >= 1e3")


@dataclass(frozen=True)
class VarianceQuadrature:
    """Finite-scale variance estimate: value = f1_sq + f2_term with the
    Monte Carlo error carried entirely by the f1 term."""

    value: float
    stderr: float
    f1_sq: float
    f1_sq_stderr: float
    f2_term: float


def slice_volume(window: Window, direction, offset, rng=None,
                 mc_samples: int = 20_000) -> float:
    """k-volume of (scaled window) intersected with (direction space +
    offset), for an offset in the orthogonal complement of the direction
    space.  Balls are exact; box slices with k = 1 use exact chord
    lengths, higher k falls back to Monte Carlo over the slice plane."""
    value, _ = slice_volume_err(window, direction, offset, rng=rng,
                                mc_samples=mc_samples)
    return value


def slice_volume_err(window: Window, direction, offset, rng=None,
                     mc_samples: int = 20_000):
    """(value, standard_error) version of slice_volume; the error is zero
    on the exact paths."""
    basis = direction.basis if isinstance(direction, AffineFlat) else np.asarray(direction, dtype=float)
    if basis.ndim == 1:
        basis = basis[:, None]
    d, k = basis.shape
    offset = np.asarray(offset, dtype=float)
    if window.shape == "ball":
        radius = window.radius * window.scale
        s2 = float(offset @ offset)
        return unit_ball_volume(k) * max(radius * radius - s2, 0.0) ** (k / 2.0), 0.0
    hw = np.asarray(window.halfwidths) * window.scale
    if k == 1:
        chord = _box_chord_lengths(hw, basis[:, 0][None, :], offset[None, :])
        return float(chord[0]), 0.0
    if rng is None:
        rng = np.random.default_rng(0)
    # slice lies inside the box circumball: parameter radius bound
    bound = float(np.sqrt(np.sum(hw * hw))) + float(np.linalg.norm(offset))
    z = rng.standard_normal((mc_samples, k))
    z /= np.linalg.norm(z, axis=1, keepdims=True)
    z *= bound * rng.random(mc_samples)[:, None] ** (1.0 / k)
    points = offset[None, :] + z @ basis.T
    inside = np.all(np.abs(points) <= hw, axis=1)
    cell = unit_ball_volume(k) * bound ** k
    frac = inside.mean()
    se = cell * float(inside.std()) / math.sqrt(mc_samples)
    return cell * float(frac), se


def _slice_volumes(window: Window, bases, offsets, rng):
    """Vectorized slice volumes for stacks of directions/offsets."""
    d = bases.shape[1]
    k = bases.shape[2]
    if window.shape == "ball":
        radius = window.radius * window.scale
        s2 = np.einsum("nd,nd->n", offsets, offsets)
        return unit_ball_volume(k) * np.clip(radius * radius - s2, 0.0, None) ** (k / 2.0)
    hw = np.asarray(window.halfwidths) * window.scale
    if k == 1:
        return _box_chord_lengths(hw, bases[:, :, 0], offsets)
    vals = np.empty(bases.shape[0])
    for idx in range(bases.shape[0]):
        vals[idx] = slice_volume(window, bases[idx], offsets[idx], rng=rng,
                                 mc_samples=64)
    return vals


def _subspace_dets(bases_a, bases_b):
    k = bases_a.shape[2]
    if k == 1:
        g = np.einsum("nd,nd->n", bases_a[:, :, 0], bases_b[:, :, 0])
        return np.sqrt(np.clip(1.0 - g * g, 0.0, None))
    g = np.einsum("ndi,ndj->nij", bases_a, bases_b)
    s = np.eye(k) - np.einsum("nca,ncb->nab", g, g)
    return np.sqrt(np.clip(np.linalg.det(s), 0.0, None))


def _project_out(span, vectors):
    """Components of ``vectors`` orthogonal to the (full-rank, generally
    non-orthonormal) column spans; batched normal equations."""
    gram = np.einsum("ndi,ndj->nij", span, span)
    rhs = np.einsum("ndi,nd->ni", span, vectors)
    z = np.linalg.solve(gram, rhs[:, :, None])[:, :, 0]
    return vectors - np.einsum("ndi,ni->nd", span, z)


def _f1_terms(bases, offsets, ctx: KernelContext, rng):
    """Per-sample integrand terms [M,L] kappa_m delta^m V_k(slice) for one
    joint (direction, complement-offset) draw per row; the caller averages
    and multiplies by the intensity t."""
    params = ctx.params
    d, k = params.d, params.k
    m2 = d - 2 * k
    n = bases.shape[0]
    partners = params.sample_directions(rng, n)
    dets = _subspace_dets(bases, partners)
    bad = np.nonzero(dets < _DEGENERATE_DET)[0]
    rounds = 0
    while bad.size:  # near-parallel partner draw: resample (measure zero)
        rounds += 1
        if rounds > 100:
            raise RuntimeError(
                "direction model keeps producing partners parallel to the "
                "evaluation flat; the sampler must be non-atomic")
        partners[bad] = params.sample_directions(rng, bad.size)
        dets[bad] = _subspace_dets(bases[bad], partners[bad])
        bad = bad[dets[bad] < _DEGENERATE_DET]
    span = np.concatenate([bases, partners], axis=2)
    raw = rng.standard_normal((n, d))
    perp = _project_out(span, raw)
    norms = np.linalg.norm(perp, axis=1, keepdims=True)
    direction = perp / norms
    radii = params.delta * rng.random(n) ** (1.0 / m2)
    x = direction * radii[:, None]
    slice_vals = _slice_volumes(ctx.window, bases, offsets + 0.5 * x, rng)
    ball_factor = unit_ball_volume(m2) * params.delta ** m2
    return dets * ball_factor * slice_vals


def f1_eval(flat: AffineFlat, ctx: KernelContext, rng) -> float:
    """Monte Carlo value of the first-order kernel at a flat."""
    value, _ = f1_eval_err(flat, ctx, rng)
    return value


def f1_eval_err(flat: AffineFlat, ctx: KernelContext, rng):
    """(value, standard_error) of the first-order kernel at a flat:
    t * E[ [M,L] kappa_{d-2k} delta^(d-2k) V_k((K - y - x/2) cap M) ] over
    Haar partner directions L and x uniform in the delta-ball of the
    orthogonal complement of M + L."""
    if ctx.params.delta == 0.0:
        return 0.0, 0.0
    n = ctx.grassmann_budget
    bases = np.broadcast_to(flat.basis, (n, *flat.basis.shape))
    offsets = np.broadcast_to(flat.anchor, (n, flat.anchor.size))
    terms = _f1_terms(np.ascontiguousarray(bases),
                      np.ascontiguousarray(offsets), ctx, rng)
    t = ctx.params.t
    return (t * float(terms.mean()),
            t * float(terms.std(ddof=1)) / math.sqrt(n))


def f1_support_radius(ctx: KernelContext) -> float:
    """f1 vanishes for flats farther than circumradius(K) + delta/2 from
    the origin (empty slice for every partner draw)."""
    return ctx.window.circumradius() + ctx.params.delta / 2.0


def f1_sq_norm(ctx: KernelContext, seed=0, n_strata: int = 32,
               inner_samples=None):
    """(value, standard_error) for ||f1||^2 = t int int f1(M+y)^2 dy nu(dM),
    by Monte Carlo stratified over the offset radius, with an unbiased
    split-batch estimator for the square of the inner Monte Carlo mean."""
    params = ctx.params
    d, k = params.d, params.k
    if params.delta == 0.0:
        return 0.0, 0.0
    m1 = d - k
    y_max = f1_support_radius(ctx)
    if inner_samples is None:
        inner_samples = max(64, ctx.grassmann_budget // 16)
    if inner_samples % 2:
        inner_samples += 1
    n_outer = max(ctx.offset_budget // n_strata, 8)
    shell_volume = unit_ball_volume(m1) * y_max ** m1 / n_strata
    entropy = tuple(seed) if isinstance(seed, (tuple, list)) else (seed,)
    total = 0.0
    var_total = 0.0
    for stratum in range(n_strata):
        rng = np.random.default_rng(np.random.SeedSequence((*entropy, stratum)))
        directions = params.sample_directions(rng, n_outer)
        raw = rng.standard_normal((n_outer, d))
        perp = _project_out(directions, raw)
        perp /= np.linalg.norm(perp, axis=1, keepdims=True)
        radii = y_max * ((stratum + rng.random(n_outer)) / n_strata) ** (1.0 / m1)
        offsets = perp * radii[:, None]
        rep_bases = np.repeat(directions, inner_samples, axis=0)
        rep_offsets = np.repeat(offsets, inner_samples, axis=0)
        terms = _f1_terms(rep_bases, rep_offsets, ctx, rng)
        terms = terms.reshape(n_outer, inner_samples) * params.t
        half = inner_samples // 2
        prod = terms[:, :half].mean(axis=1) * terms[:, half:].mean(axis=1)
        total += shell_volume * float(prod.mean())
        var_total += shell_volume ** 2 * float(prod.var(ddof=1)) / n_outer
    return params.t * total, params.t * math.sqrt(var_total)


def variance_finite_rho(ctx: KernelContext, seed=0, **kwargs) -> VarianceQuadrature:
    """Finite-scale variance of the proximity count via the kernel-norm
    identity; the second-order term equals the expected proximity exactly."""
    f2_term = expected_proximity(ctx.params, ctx.window)
    f1_sq, f1_err = f1_sq_norm(ctx, seed=seed, **kwargs)
    value = f1_sq + f2_term
    if value > 0 and f1_err > 0.05 * value:
        warnings.warn(
            f"variance quadrature stderr {f1_err:.3g} exceeds 5% of the "
            f"estimate {value:.3g}; increase the budgets", RuntimeWarning)
    return VarianceQuadrature(value=value, stderr=f1_err, f1_sq=f1_sq,
                              f1_sq_stderr=f1_err, f2_term=f2_term)


def kernel_bound_constant(params: ModelParams, window: Window) -> float:
    """Closed upper-bound constant C = t kappa_k kappa_{d-2k} delta^(d-2k)
    (diam K / 2)^k for the base (scale-1) window: f1 <= C rho^k and the
    measure of partners pairing with a fixed flat is <= C rho^k."""
    d, k = params.d, params.k
    return (params.t * unit_ball_volume(k) * unit_ball_volume(d - 2 * k)
            * params.delta ** (d - 2 * k) * window.base_circumradius() ** k)


def clt_bound(ctx: KernelContext, rho: float, variance=None, seed=0) -> float:
    """Kolmogorov-distance bound for the standardized proximity count at
    window scale rho: 1088 (sqrt(M11) + sqrt(M12) + sqrt(M22)) / Var, with
    the M terms replaced by their closed upper bounds built from the
    constant C and the hitting measure of the scaled window's circumball
    dilated by delta."""
    params = ctx.params
    d, k = params.d, params.k
    window_rho = ctx.window.with_scale(rho)
    c = kernel_bound_constant(params, ctx.window)
    theta = (params.t * unit_ball_volume(d - k)
             * (window_rho.circumradius() + params.delta) ** (d - k))
    crk = c * rho ** k
    m11 = crk ** 4 * theta
    m12 = 2.0 * crk ** 4 * theta + crk ** 3 * theta
    m22 = 3.0 * crk ** 3 * theta + 6.0 * crk ** 2 * theta + 0.5 * crk * theta
    if variance is None:
        variance = variance_finite_rho(replace(ctx, window=window_rho),
                                       seed=seed).value
    return 1088.0 * (math.sqrt(m11) + math.sqrt(m12) + math.sqrt(m22)) / variance
