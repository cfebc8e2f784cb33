import numpy as np
import pytest

from ovdkit import Box, DegenerateBoxError, FeatureMap, RoiAlignConfig, roi_align


def ramp_map(h=16, w=16):
    """f(x, y) = x at every cell, one channel."""
    return FeatureMap(np.tile(np.arange(w, dtype=np.float32), (h, 1))[None])


class TestRoiAlign:
    def test_constant_map_exact(self):
        fm = FeatureMap(np.full((4, 10, 10), 0.375, dtype=np.float32), stride=2.0)
        out = roi_align(fm, Box(1.3, 2.7, 15.9, 18.2))
        assert out.shape == (4, 7, 7)
        assert np.abs(out - 0.375).max() <= 1e-6

    @pytest.mark.parametrize("samples", [1, 2, 3])
    def test_ramp_closed_form_single_bin(self, samples):
        # aligned, stride 1, P=1: the output is the mean of the sample x
        # coordinates, which sits at the roi center minus the half-cell offset
        fm = ramp_map()
        roi = Box(2.0, 3.0, 9.0, 7.5)
        cfg = RoiAlignConfig(output_size=1, sampling_ratio=samples)
        expected = (roi.x1 + roi.x2) / 2.0 - 0.5
        out = roi_align(fm, roi, cfg)
        assert out[0, 0, 0] == pytest.approx(expected, abs=1e-5)

    def test_ramp_closed_form_multi_bin(self):
        fm = ramp_map()
        roi = Box(2.0, 3.0, 12.0, 10.0)
        cfg = RoiAlignConfig(output_size=4, sampling_ratio=2)
        x1m = roi.x1 - 0.5
        bin_w = (roi.x2 - roi.x1) / 4
        out = roi_align(fm, roi, cfg)
        for bx in range(4):
            expected = x1m + bin_w * (bx + 0.5)
            assert out[0, :, bx] == pytest.approx(np.full(4, expected), abs=1e-5)

    def test_translation_equivariance(self):
        rng = np.random.default_rng(13)
        for _ in range(100):
            h, w = 14, 14
            big = rng.random((2, h, w + 1), dtype=np.float32)
            base = FeatureMap(big[:, :, :w].copy())
            shifted = FeatureMap(big[:, :, 1:].copy())  # content moved one cell left
            x1 = rng.uniform(2.0, 6.0)
            y1 = rng.uniform(2.0, 6.0)
            roi = Box(x1, y1, x1 + rng.uniform(2.0, 5.0), y1 + rng.uniform(2.0, 5.0))
            moved = Box(roi.x1 - 1.0, roi.y1, roi.x2 - 1.0, roi.y2)
            a = roi_align(shifted, moved, RoiAlignConfig(output_size=3))
            b = roi_align(base, roi, RoiAlignConfig(output_size=3))
            assert np.abs(a - b).max() <= 1e-6

    def test_linearity(self):
        rng = np.random.default_rng(17)
        f = rng.standard_normal((3, 9, 9)).astype(np.float32)
        g = rng.standard_normal((3, 9, 9)).astype(np.float32)
        alpha, beta = 0.7, -1.3
        roi = Box(1.0, 1.0, 7.5, 8.0)
        combo = roi_align(FeatureMap((alpha * f + beta * g).astype(np.float32)), roi)
        parts = alpha * roi_align(FeatureMap(f), roi) + beta * roi_align(FeatureMap(g), roi)
        assert np.abs(combo - parts).max() <= 1e-5

    def test_output_within_map_range(self):
        rng = np.random.default_rng(19)
        fm = FeatureMap(rng.random((2, 6, 6), dtype=np.float32))
        for _ in range(50):
            x1 = rng.uniform(-2, 5)
            y1 = rng.uniform(-2, 5)
            roi = Box(x1, y1, x1 + rng.uniform(0.5, 8), y1 + rng.uniform(0.5, 8))
            out = roi_align(fm, roi, RoiAlignConfig(output_size=5))
            assert out.min() >= fm.data.min() - 1e-6
            assert out.max() <= fm.data.max() + 1e-6

    def test_zero_area_roi_raises(self):
        fm = ramp_map()
        with pytest.raises(DegenerateBoxError):
            roi_align(fm, Box(3, 3, 3, 8))

    def test_stride_divides_coordinates(self):
        # a roi in image coordinates lands on the same cells when the map
        # stride scales both the map and the roi
        rng = np.random.default_rng(23)
        data = rng.random((1, 8, 8), dtype=np.float32)
        fine = FeatureMap(data, stride=1.0)
        coarse = FeatureMap(data, stride=4.0)
        roi = Box(2.0, 2.0, 6.0, 6.0)
        roi4 = Box(8.0, 8.0, 24.0, 24.0)
        a = roi_align(fine, roi)
        b = roi_align(coarse, roi4)
        assert np.array_equal(a, b)

    def test_config_validation(self):
        with pytest.raises(ValueError):
            RoiAlignConfig(output_size=0)
        with pytest.raises(ValueError):
            RoiAlignConfig(sampling_ratio=0)
