import io

import numpy as np
import pytest
from PIL import Image

from colorconcept.imaging import (GRID, NormalizedImage, WindowMask,
                                  center_window, center_windows, mask_to_png,
                                  normalize_image, segment_figure,
                                  srgb_array_to_lab)


def _png_bytes(arr):
    buf = io.BytesIO()
    Image.fromarray(arr.astype(np.uint8), "RGB").save(buf, format="PNG")
    return buf.getvalue()


def _solid_lab(lab_triple):
    grid = np.empty((GRID, GRID, 3))
    grid[:] = lab_triple
    return NormalizedImage(lab=grid)


class TestNormalize:
    def test_rescales_any_aspect_ratio(self):
        arr = np.random.default_rng(0).integers(0, 256, size=(300, 500, 3))
        img = normalize_image(_png_bytes(arr))
        assert img.lab.shape == (100, 100, 3)

    def test_uniform_white(self):
        img = normalize_image(_png_bytes(np.full((100, 100, 3), 255)))
        assert np.all(np.abs(img.lab[..., 0] - 100.0) < 0.1)
        assert np.all(np.abs(img.lab[..., 1:]) < 0.1)

    def test_single_pixel_extends_constant(self):
        img = normalize_image(_png_bytes(np.array([[[255, 0, 0]]])))
        assert np.ptp(img.lab.reshape(-1, 3), axis=0).max() == 0.0
        assert abs(img.lab[0, 0, 0] - 53.24) < 0.2

    def test_decode_failure(self):
        with pytest.raises(ValueError, match="decode"):
            normalize_image(b"definitely not an image")

    def test_vector_conversion_matches_scalar(self):
        from colorconcept.color import Rgb8, srgb_to_lab
        rng = np.random.default_rng(1)
        rgb = rng.integers(0, 256, size=(17, 3))
        lab = srgb_array_to_lab(rgb)
        for row, expected in zip(rgb, lab):
            got = srgb_to_lab(Rgb8(*[int(v) for v in row]))
            assert abs(got.L - expected[0]) < 1e-9
            assert abs(got.a - expected[1]) < 1e-9
            assert abs(got.b - expected[2]) < 1e-9


class TestCenterWindows:
    @pytest.mark.parametrize("percent,pixels", [
        (20, 45 * 45), (40, 63 * 63), (60, 77 * 77), (80, 89 * 89), (100, 10000),
    ])
    def test_window_sizes(self, percent, pixels):
        assert int(center_window(percent).mask.sum()) == pixels

    def test_area_within_two_points_of_nominal(self):
        for p in (20, 40, 60, 80, 100):
            frac = center_window(p).mask.mean()
            assert abs(frac - p / 100.0) <= 0.02

    def test_nested(self):
        masks = [center_window(p).mask for p in (20, 40, 60, 80, 100)]
        for inner, outer in zip(masks, masks[1:]):
            assert np.all(outer[inner])

    def test_rejects_other_percent(self):
        with pytest.raises(ValueError):
            center_window(50)

    def test_kinds(self):
        assert set(center_windows()) == {"w20", "w40", "w60", "w80", "w100"}


class TestSegmentation:
    def _disk_image(self):
        yy, xx = np.mgrid[0:GRID, 0:GRID]
        disk = (yy - 49.5) ** 2 + (xx - 49.5) ** 2 <= 30**2
        lab = np.empty((GRID, GRID, 3))
        lab[disk] = (50.0, 50.0, 0.0)
        lab[~disk] = (95.0, 0.0, 0.0)
        return NormalizedImage(lab=lab), disk

    def test_disk_recovered(self):
        img, disk = self._disk_image()
        mask = segment_figure(img).mask
        iou = (mask & disk).sum() / (mask | disk).sum()
        assert iou >= 0.8

    def test_uniform_falls_back_to_full_frame(self):
        mask = segment_figure(_solid_lab((60.0, 10.0, -30.0))).mask
        assert mask.all()

    def test_square_excludes_background(self):
        sq = np.zeros((GRID, GRID), dtype=bool)
        sq[30:70, 30:70] = True
        lab = np.empty((GRID, GRID, 3))
        lab[sq] = (20.0, 5.0, 5.0)
        lab[~sq] = (80.0, 0.0, 0.0)
        mask = segment_figure(NormalizedImage(lab=lab)).mask
        background_kept = (mask & ~sq).sum() / (~sq).sum()
        assert background_kept <= 0.10

    def test_deterministic(self):
        img, _ = self._disk_image()
        a = segment_figure(img, iterations=120).mask
        b = segment_figure(img, iterations=120).mask
        np.testing.assert_array_equal(a, b)

    def test_always_nonempty(self):
        img, _ = self._disk_image()
        assert segment_figure(img, iterations=5).mask.any()

    def test_works_on_small_grids(self):
        lab = np.zeros((10, 10, 3))
        lab[..., 0] = 90.0
        lab[3:7, 3:7, 0] = 20.0
        mask = segment_figure(lab, iterations=60).mask
        assert mask.shape == (10, 10)
        assert mask.any()


class TestMaskTypes:
    def test_mask_must_be_nonempty(self):
        with pytest.raises(ValueError):
            WindowMask(kind="w20", mask=np.zeros((GRID, GRID), dtype=bool))

    def test_unknown_kind(self):
        with pytest.raises(ValueError):
            WindowMask(kind="w33", mask=np.ones((GRID, GRID), dtype=bool))

    def test_png_export(self, tmp_path):
        path = tmp_path / "mask.png"
        mask_to_png(center_window(20), path)
        arr = np.asarray(Image.open(path))
        assert set(np.unique(arr)) == {0, 255}
        assert (arr == 255).sum() == 45 * 45

    def test_grid_shape_enforced(self):
        with pytest.raises(ValueError):
            NormalizedImage(lab=np.zeros((50, 100, 3)))
