import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from hipmetrics import (
    Frame,
    FrameError,
    ImageGeometry,
    LandmarkId,
    LandmarkSet,
    MetadataError,
    Point2,
    native_to_network,
    network_to_native,
    pixels_to_mm,
)
from hipmetrics.geometry import classify

from conftest import identity_geometry, make_landmarks


class TestFrameMapping:
    def test_identity_mapping(self):
        g = identity_geometry()
        assert native_to_network(Point2(0, 0), g) == Point2(0, 0)

    def test_affine_example(self):
        g = ImageGeometry(native_width=200, native_height=1024,
                          pixel_spacing_x=1.0, pixel_spacing_y=1.0,
                          resize_scale=0.5, pad_left=128, pad_top=0)
        assert native_to_network(Point2(100, 200), g) == Point2(178.0, 100.0)

    def test_roundtrip_1000_random_points(self):
        rng = np.random.default_rng(7)
        for _ in range(1000):
            w, h = int(rng.integers(50, 1000)), int(rng.integers(50, 1000))
            g = ImageGeometry.fit_to_network(w, h, 0.3, 0.3)
            p = Point2(float(rng.uniform(0, w - 1e-9)), float(rng.uniform(0, h - 1e-9)))
            q = network_to_native(native_to_network(p, g), g)
            assert abs(q.x - p.x) < 1e-9 and abs(q.y - p.y) < 1e-9

    def test_roundtrip_forward_composition(self):
        # the other composition order, starting from content-region points
        rng = np.random.default_rng(8)
        for _ in range(200):
            w, h = int(rng.integers(50, 1000)), int(rng.integers(50, 1000))
            g = ImageGeometry.fit_to_network(w, h, 0.3, 0.3)
            native = Point2(float(rng.uniform(0, w - 1)), float(rng.uniform(0, h - 1)))
            q = native_to_network(native, g)
            back = native_to_network(network_to_native(q, g), g)
            assert abs(back.x - q.x) < 1e-9 and abs(back.y - q.y) < 1e-9

    def test_out_of_bounds_native(self):
        g = identity_geometry(512)
        with pytest.raises(FrameError):
            native_to_network(Point2(512, 10), g)
        with pytest.raises(FrameError):
            native_to_network(Point2(-1, 10), g)

    def test_padding_region_has_no_preimage(self):
        g = ImageGeometry.fit_to_network(400, 512, 0.5, 0.5)
        # pad_left = (512 - 400) / 2 = 56
        with pytest.raises(FrameError):
            network_to_native(Point2(10.0, 256.0), g)

    def test_network_input_must_be_inside_frame(self):
        g = identity_geometry()
        with pytest.raises(FrameError):
            network_to_native(Point2(600, 0), g)


class TestPixelsToMm:
    def test_scalar(self):
        assert pixels_to_mm(10, identity_geometry(spacing=1.0)) == 10.0

    def test_displacement_anisotropic_path(self):
        g = identity_geometry(spacing=0.5)
        assert pixels_to_mm((3, 4), g) == pytest.approx(2.5)

    def test_zero(self):
        assert pixels_to_mm(0, identity_geometry()) == 0.0

    def test_network_frame_divides_by_scale(self):
        g = ImageGeometry(native_width=1024, native_height=1024,
                          pixel_spacing_x=0.5, pixel_spacing_y=0.5,
                          resize_scale=0.5)
        assert pixels_to_mm(10, g, Frame.NETWORK512) == pytest.approx(10.0)

    def test_scalar_with_anisotropic_spacing_rejected(self):
        g = ImageGeometry(native_width=100, native_height=100,
                          pixel_spacing_x=0.5, pixel_spacing_y=0.6,
                          resize_scale=1.0)
        with pytest.raises(MetadataError):
            pixels_to_mm(5, g)
        # displacement form is fine
        assert pixels_to_mm((3, 4), g) == pytest.approx(math.hypot(1.5, 2.4))

    @given(st.floats(min_value=0, max_value=1e6),
           st.floats(min_value=1e-3, max_value=100))
    def test_homogeneous(self, d, c):
        g = identity_geometry(spacing=0.37)
        assert pixels_to_mm(c * d, g) == pytest.approx(c * pixels_to_mm(d, g), rel=1e-12)


class TestThresholdFlags:
    @given(st.floats(min_value=0, max_value=180),
           st.floats(min_value=0, max_value=180))
    def test_flags_are_pure_functions_of_angles(self, alpha, lce):
        pair = classify(alpha, lce)
        assert pair.cam_positive == (alpha > 65.0)
        assert pair.pincer_positive == (lce > 40.0)

    def test_boundary_is_negative(self):
        assert classify(65.0, 40.0).cam_positive is False
        assert classify(65.0, 40.0).pincer_positive is False
        assert classify(65.0 + 1e-9, 40.0 + 1e-9).cam_positive is True
        assert classify(65.0 + 1e-9, 40.0 + 1e-9).pincer_positive is True


class TestValidation:
    def test_landmark_set_requires_all_four(self):
        with pytest.raises(FrameError, match="LCP"):
            LandmarkSet(points={
                LandmarkId.FHC: Point2(1, 1),
                LandmarkId.NA: Point2(2, 2),
                LandmarkId.LAE: Point2(3, 3),
            }, frame=Frame.NATIVE)

    def test_landmark_set_rejects_non_finite(self):
        with pytest.raises(FrameError):
            make_landmarks(fhc=(float("nan"), 1.0))

    def test_landmark_set_rejects_negative(self):
        with pytest.raises(FrameError):
            make_landmarks(na=(-5.0, 10.0))

    def test_geometry_rejects_bad_spacing(self):
        with pytest.raises(MetadataError):
            ImageGeometry(native_width=100, native_height=100,
                          pixel_spacing_x=0.0, pixel_spacing_y=1.0,
                          resize_scale=1.0)

    def test_geometry_rejects_bad_scale(self):
        with pytest.raises(MetadataError):
            ImageGeometry(native_width=100, native_height=100,
                          pixel_spacing_x=1.0, pixel_spacing_y=1.0,
                          resize_scale=-2.0)

    def test_angle_pair_range(self):
        with pytest.raises(ValueError):
            classify(181.0, 10.0)
