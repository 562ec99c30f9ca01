import math

import numpy as np
import pytest
from scipy import stats

from poissonflats.closedform import ModelParams, Window, unit_ball_volume
from poissonflats.process import (SampleRegion, enclosing_radius_for_proximity,
                                  hitting_mean, sample_process)


class TestHittingMean:
    def test_d3_unit(self):
        assert hitting_mean(1.0, ModelParams(3, 1)) == pytest.approx(math.pi, rel=1e-13)

    def test_radius_power(self):
        params = ModelParams(5, 2)
        assert hitting_mean(2.0, params) == pytest.approx(
            2 ** 3 * hitting_mean(1.0, params), rel=1e-13)

    def test_intensity_linear(self):
        assert hitting_mean(1.5, ModelParams(3, 1, t=2.5)) == pytest.approx(
            2.5 * hitting_mean(1.5, ModelParams(3, 1, t=1.0)), rel=1e-13)


class TestEnclosingRadius:
    def test_scaled_ball(self):
        window = Window.ball(1.0, scale=2.0)
        assert enclosing_radius_for_proximity(window, 1.0) == pytest.approx(
            2.5 * (1 + 1e-9), rel=1e-15)

    def test_cube_circumradius(self):
        window = Window.box((1.0, 1.0, 1.0))
        assert enclosing_radius_for_proximity(window, 0.0) == pytest.approx(
            math.sqrt(3.0) * (1 + 1e-9), rel=1e-12)

    def test_linear_in_delta(self):
        window = Window.ball(1.0)
        r1 = enclosing_radius_for_proximity(window, 1.0)
        r2 = enclosing_radius_for_proximity(window, 3.0)
        assert (r2 - r1) == pytest.approx(1.0 * (1 + 1e-9), rel=1e-9)


class TestSampleProcess:
    def test_count_matches_hitting_mean(self):
        params = ModelParams(3, 1)
        region = SampleRegion(1.2)
        rng = np.random.default_rng(10)
        reps = 10_000
        counts = np.array([len(sample_process(region, params, rng))
                           for _ in range(reps)])
        mean = hitting_mean(1.2, params)
        se = counts.std(ddof=1) / math.sqrt(reps)
        assert abs(counts.mean() - mean) <= 3.0 * se

    @pytest.mark.parametrize("d,k", [(3, 1), (5, 2)])
    def test_anchors_canonical_and_inside(self, d, k):
        params = ModelParams(d, k)
        region = SampleRegion(2.0)
        rng = np.random.default_rng(11)
        sample = sample_process(region, params, rng)
        assert len(sample) > 0
        residual = np.einsum("ndk,nd->nk", sample.bases, sample.anchors)
        assert np.max(np.abs(residual)) < 1e-10
        assert np.all(sample.anchor_norms() <= 2.0 + 1e-12)
        gram = np.einsum("ndi,ndj->nij", sample.bases, sample.bases)
        assert np.max(np.abs(gram - np.eye(k))) < 1e-10

    def test_anchor_norm_distribution(self):
        # polar decomposition of the uniform ball law: P(|a| <= s) = (s/R)^(d-k)
        params = ModelParams(3, 1)
        region = SampleRegion(1.5)
        rng = np.random.default_rng(12)
        norms = []
        while len(norms) < 100_000:
            norms.extend(sample_process(region, params, rng).anchor_norms())
        norms = np.asarray(norms[:100_000])
        stat = stats.kstest(norms, lambda s: (s / 1.5) ** 2).statistic
        assert stat < 0.01

    def test_deterministic_given_seed(self):
        params = ModelParams(4, 1, t=1.3)
        region = SampleRegion(1.7)
        one = sample_process(region, params, np.random.default_rng(99))
        two = sample_process(region, params, np.random.default_rng(99))
        assert np.array_equal(one.bases, two.bases)
        assert np.array_equal(one.anchors, two.anchors)

    def test_direction_isotropy_two_sample(self):
        params = ModelParams(3, 1)
        region = SampleRegion(1.0)
        rng = np.random.default_rng(13)
        dirs = []
        while len(dirs) < 100_000:
            dirs.extend(sample_process(region, params, rng).bases[:, :, 0])
        dirs = np.asarray(dirs[:100_000])
        rotation = np.linalg.qr(np.random.default_rng(14).standard_normal((3, 3)))[0]
        reference = np.array([1.0, 0.0, 0.0])
        dets = np.sqrt(np.clip(1.0 - (dirs @ reference) ** 2, 0, None))
        dets_rot = np.sqrt(np.clip(1.0 - (dirs @ rotation.T @ reference) ** 2, 0, None))
        assert stats.ks_2samp(dets, dets_rot).statistic < 0.01

    def test_empty_region_possible(self):
        params = ModelParams(3, 1, t=1e-6)
        sample = sample_process(SampleRegion(0.1), params, np.random.default_rng(1))
        assert len(sample) == 0
        assert sample.bases.shape == (0, 3, 1)
