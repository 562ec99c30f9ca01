import math
import warnings

import numpy as np
import pytest

from oracles import random_flat
from poissonflats.closedform import (ModelParams, Window, expected_proximity,
                                     asymptotic_variance_limit,
                                     unit_ball_volume)
from poissonflats.geometry import canonicalize, closest_points, haar_basis_batch
from poissonflats.kernels import (KernelContext, clt_bound, f1_eval,
                                  f1_eval_err, f1_support_radius,
                                  kernel_bound_constant, slice_volume,
                                  slice_volume_err, variance_finite_rho)


def _line(direction, point=(0, 0, 0)):
    return canonicalize(np.asarray(direction, dtype=float),
                        np.asarray(point, dtype=float))


class TestSliceVolume:
    def test_ball_diameter(self):
        window = Window.ball(1.0)
        assert slice_volume(window, _line([1, 0, 0]), np.zeros(3)) == pytest.approx(2.0)

    def test_ball_tangent(self):
        window = Window.ball(1.0)
        assert slice_volume(window, _line([1, 0, 0]), np.array([0, 0, 1.0])) == 0.0

    def test_ball_offset_chord(self):
        window = Window.ball(1.0)
        value = slice_volume(window, _line([1, 0, 0]), np.array([0, 0.6, 0.0]))
        assert value == pytest.approx(1.6, abs=1e-12)

    def test_ball_scale(self):
        window = Window.ball(1.0, scale=2.0)
        assert slice_volume(window, _line([1, 0, 0]), np.zeros(3)) == pytest.approx(4.0)

    def test_ball_k2(self):
        window = Window.ball(1.0)
        basis = np.eye(5)[:, :2]
        offset = np.zeros(5)
        offset[2] = 0.5
        assert slice_volume(window, basis, offset) == pytest.approx(
            math.pi * (1 - 0.25), abs=1e-12)

    def test_box_chord_exact(self):
        window = Window.box((1.0, 1.0, 1.0))
        assert slice_volume(window, _line([1, 0, 0]), np.array([0, 0.5, 0.0])) == \
            pytest.approx(2.0, abs=1e-12)
        diag = np.array([1.0, 1.0, 0.0]) / math.sqrt(2)
        assert slice_volume(window, _line(diag), np.zeros(3)) == pytest.approx(
            2 * math.sqrt(2), abs=1e-12)

    def test_box_plane_mc(self):
        window = Window.box((1.0, 1.0, 1.0, 1.0, 1.0))
        basis = np.eye(5)[:, :2]
        offset = np.zeros(5)
        offset[2] = 0.5
        value, se = slice_volume_err(window, basis, offset,
                                     rng=np.random.default_rng(3),
                                     mc_samples=200_000)
        assert se > 0
        assert abs(value - 4.0) <= 3.0 * se


class TestF1:
    def test_far_flat_vanishes(self):
        ctx = KernelContext(ModelParams(3, 1), Window.ball(1.0),
                            grassmann_budget=2000)
        far = _line([1, 0, 0], [0, 0, 10.0])
        assert f1_eval(far, ctx, np.random.default_rng(0)) == 0.0

    def test_support_radius(self):
        ctx = KernelContext(ModelParams(3, 1, delta=0.4), Window.ball(1.0, scale=2.0))
        assert f1_support_radius(ctx) == pytest.approx(2.2)

    def test_small_delta_limit(self):
        # f1 / (kappa_1 delta) -> t V_1(K cap E) psi as delta -> 0 for a
        # line through the center of the unit ball
        delta = 0.01
        ctx = KernelContext(ModelParams(3, 1, delta=delta), Window.ball(1.0),
                            grassmann_budget=200_000)
        flat = _line([1, 0, 0])
        value, se = f1_eval_err(flat, ctx, np.random.default_rng(7))
        normalized = value / (unit_ball_volume(1) * delta)
        limit = 2.0 * (math.pi / 4)
        assert abs(normalized - limit) <= 4.0 * se / (2 * delta) + 0.02

    def test_uniform_bound_holds(self):
        # f1 <= t kappa_k kappa_{d-2k} delta^(d-2k) (diam K_rho / 2)^k
        params = ModelParams(3, 1, t=1.3, delta=0.8)
        window = Window.ball(1.0, scale=2.0)
        ctx = KernelContext(params, window, grassmann_budget=4096)
        bound = (params.t * unit_ball_volume(1) * unit_ball_volume(1)
                 * params.delta * window.circumradius())
        rng = np.random.default_rng(8)
        for seed in range(10):
            flat = random_flat(np.random.default_rng(seed), 3, 1)
            value = f1_eval(flat, ctx, rng)
            assert value <= bound * (1 + 1e-12)

    def test_scaling_relation(self):
        # f1 at (rho K, delta) at M + y equals rho^(d-k) f1 at (K, delta/rho)
        # at M + y/rho
        rho = 2.5
        d, k = 3, 1
        rng = np.random.default_rng(9)
        params = ModelParams(d, k, delta=0.7)
        big = KernelContext(params, Window.ball(1.0, scale=rho),
                            grassmann_budget=300_000)
        small = KernelContext(ModelParams(d, k, delta=0.7 / rho),
                              Window.ball(1.0), grassmann_budget=300_000)
        for seed in (11, 12, 13):
            flat_rng = np.random.default_rng(seed)
            basis = haar_basis_batch(flat_rng, 1, d, k)[0]
            direction = flat_rng.standard_normal(d)
            direction -= basis[:, 0] * (basis[:, 0] @ direction)
            direction /= np.linalg.norm(direction)
            radius = flat_rng.random() * f1_support_radius(big)
            flat_big = canonicalize(basis, direction * radius)
            flat_small = canonicalize(basis, direction * radius / rho)
            v_big, se_big = f1_eval_err(flat_big, big, rng)
            v_small, se_small = f1_eval_err(flat_small, small, rng)
            combined = math.hypot(se_big, rho ** (d - k) * se_small)
            assert abs(v_big - rho ** (d - k) * v_small) <= 5.0 * combined + 1e-12

    def test_pair_support_measure_bound(self):
        # Theta-mass of partners pairing with a fixed flat is <= C rho^k
        params = ModelParams(3, 1, delta=0.6)
        window = Window.ball(1.0, scale=2.0)
        rho = window.scale
        flat = _line([1, 0, 0], [0, 0.5, 0.3])
        reach = window.circumradius() + params.delta
        n = 6000
        rng = np.random.default_rng(10)
        bases = haar_basis_batch(rng, n, 3, 1)
        raw = rng.standard_normal((n, 3))
        raw -= np.einsum("ni,ni->n", raw, bases[:, :, 0])[:, None] * bases[:, :, 0]
        raw /= np.linalg.norm(raw, axis=1, keepdims=True)
        anchors = raw * (reach * np.sqrt(rng.random(n)))[:, None]
        hits = 0
        for idx in range(n):
            partner = canonicalize(bases[idx], anchors[idx])
            try:
                pair = closest_points(flat, partner)
            except Exception:
                continue
            if pair.distance <= params.delta and bool(
                    window.contains(pair.midpoint)[0]):
                hits += 1
        mass = (params.t * unit_ball_volume(2) * reach ** 2) * hits / n
        se = (params.t * unit_ball_volume(2) * reach ** 2) * math.sqrt(
            hits) / n
        bound = kernel_bound_constant(params, window) * rho
        assert mass <= bound + 3.0 * se


class TestVarianceFiniteRho:
    def test_zero_delta(self):
        ctx = KernelContext(ModelParams(3, 1, delta=0.0), Window.ball(1.0))
        quad = variance_finite_rho(ctx, seed=1)
        assert quad.value == 0.0 and quad.stderr == 0.0

    def test_f2_term_is_expected_proximity(self):
        params = ModelParams(3, 1, t=1.4, delta=0.6)
        window = Window.ball(1.0, scale=1.5)
        ctx = KernelContext(params, window, grassmann_budget=1024,
                            offset_budget=1024)
        quad = variance_finite_rho(ctx, seed=2)
        assert quad.f2_term == expected_proximity(params, window)
        assert quad.value == quad.f1_sq + quad.f2_term
        assert quad.value >= quad.f2_term

    def test_normalized_variance_approaches_limit(self):
        params = ModelParams(3, 1)
        ctx = KernelContext(params, Window.ball(1.0, scale=8.0),
                            grassmann_budget=4096, offset_budget=8192)
        quad = variance_finite_rho(ctx, seed=3)
        limit = asymptotic_variance_limit(params, Window.ball(1.0))
        normalized = quad.value / 8.0 ** 4
        assert abs(normalized - limit) <= 0.05 * limit
        assert quad.stderr / quad.value < 0.02

    def test_deterministic_given_seed(self):
        ctx = KernelContext(ModelParams(3, 1), Window.ball(1.0),
                            grassmann_budget=1024, offset_budget=1024)
        a = variance_finite_rho(ctx, seed=5)
        b = variance_finite_rho(ctx, seed=5)
        assert a.value == b.value and a.stderr == b.stderr

    def test_budget_floor_enforced(self):
        with pytest.raises(ValueError):
            KernelContext(ModelParams(3, 1), Window.ball(1.0),
                          grassmann_budget=10)

    def test_budget_exceeded_warning(self, monkeypatch):
        from poissonflats import kernels

        ctx = KernelContext(ModelParams(3, 1), Window.ball(1.0))
        monkeypatch.setattr(kernels, "f1_sq_norm",
                            lambda *a, **kw: (10.0, 5.0))
        with pytest.warns(RuntimeWarning, match="stderr"):
            kernels.variance_finite_rho(ctx, seed=0)


class TestCltBound:
    def test_positive_and_rate(self):
        params = ModelParams(3, 1)
        ctx = KernelContext(params, Window.ball(1.0), grassmann_budget=1024,
                            offset_budget=2048)
        rhos = [1.0, 2.0, 4.0, 8.0, 16.0]
        bounds = [clt_bound(ctx, rho, seed=6) for rho in rhos]
        assert all(math.isfinite(b) and b > 0 for b in bounds)
        scaled = [b * rho ** ((params.d - params.k) / 2.0)
                  for b, rho in zip(bounds, rhos)]
        assert max(scaled) / min(scaled) < 3.0
        assert bounds[-1] < bounds[-2] < bounds[-3]

    def test_reuses_supplied_variance(self):
        ctx = KernelContext(ModelParams(3, 1), Window.ball(1.0))
        value = clt_bound(ctx, 1.0, variance=16.0)
        assert clt_bound(ctx, 1.0, variance=8.0) == pytest.approx(2 * value)
