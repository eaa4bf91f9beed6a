import math

import numpy as np
import pytest

from lenslesshsi.analysis import autocorr_resolution
from lenslesshsi.core import FilterFunction, HyperspectralCube, Psf, SystemModel, forward
from lenslesshsi.simkit import (
    FINE_FILTER_SPEC,
    BarGroup,
    FilterArraySpec,
    add_gaussian_noise,
    filter_center_wavelengths,
    generate_diffuser_psf,
    generate_filter_function,
    generate_lens_psf,
    make_point_scene,
    make_resolution_target,
    simulate_measurement,
)


class TestDiffuserPsf:
    def test_deterministic(self):
        np.testing.assert_array_equal(generate_diffuser_psf(3).data, generate_diffuser_psf(3).data)

    def test_seeds_differ(self):
        assert not np.array_equal(generate_diffuser_psf(1).data, generate_diffuser_psf(2).data)

    def test_unit_sum_nonnegative(self):
        h = generate_diffuser_psf(0, (40, 48)).data
        assert h.shape == (40, 48)
        assert h.sum() == pytest.approx(1.0, abs=1e-9)
        assert h.min() >= 0

    def test_full_frame_support(self):
        h = generate_diffuser_psf(0).data
        # Energy is spread, not concentrated in one super-pixel.
        quads = [h[:32, :32].sum(), h[:32, 32:].sum(), h[32:, :32].sum(), h[32:, 32:].sum()]
        assert min(quads) > 0.05

    def test_autocorr_width_in_range(self):
        width = autocorr_resolution(generate_diffuser_psf(0, (64, 64), 1.5))
        assert 1.0 <= width <= 4.0

    def test_autocorr_width_seed_invariant(self):
        widths = [autocorr_resolution(generate_diffuser_psf(s, (64, 64), 1.5)) for s in range(12)]
        assert max(widths) - min(widths) <= 2.0
        assert all(abs(w - np.median(widths)) <= 1.0 for w in widths)

    def test_wider_feature_wider_autocorr(self):
        w1 = autocorr_resolution(generate_diffuser_psf(0, feature_px=1.5))
        w2 = autocorr_resolution(generate_diffuser_psf(0, feature_px=3.0))
        assert w2 > w1

    @pytest.mark.parametrize("kwargs", [{"shape": (1, 1)}, {"feature_px": 0.5}])
    def test_rejects_bad_args(self, kwargs):
        with pytest.raises(ValueError):
            generate_diffuser_psf(0, **kwargs)


class TestLensPsf:
    def test_high_na_delta(self):
        h = generate_lens_psf("high_na", (9, 9)).data
        assert np.count_nonzero(h) == 1
        assert h[4, 4] == 1.0

    def test_hyphenated_kind(self):
        np.testing.assert_array_equal(generate_lens_psf("high-na", (5, 5)).data,
                                      generate_lens_psf("high_na", (5, 5)).data)

    def test_low_na_fwhm(self):
        h = generate_lens_psf("low_na", (33, 33), 8).data
        assert h.sum() == pytest.approx(1.0, abs=1e-9)
        row = h[16] / h.max()
        above = np.nonzero(row >= 0.5)[0]
        # Interpolate the two half-maximum crossings.
        lo, hi = above[0], above[-1]
        left = lo - (row[lo] - 0.5) / (row[lo] - row[lo - 1])
        right = hi + (row[hi] - 0.5) / (row[hi] - row[hi + 1])
        assert right - left == pytest.approx(8.0, abs=1.0)
        assert np.count_nonzero(h >= 0.5 * h.max()) == pytest.approx(math.pi * 16, rel=0.2)

    def test_unknown_kind(self):
        with pytest.raises(ValueError):
            generate_lens_psf("fisheye")


class TestFilter:
    def test_single_filter_constant(self):
        spec = FilterArraySpec(grid=(1, 1), filter_px=1, peak_transmittance=0.8)
        f = generate_filter_function((5, 7), spec)
        np.testing.assert_allclose(f.data, 0.8, rtol=0, atol=1e-15)

    def test_two_by_two_lattice(self):
        spec = FilterArraySpec(grid=(2, 2), filter_px=1, bandwidth_nm=5.0)
        f = generate_filter_function((4, 4), spec).data
        for c in range(4):
            r, q = divmod(c, 2)
            own = np.zeros((4, 4), dtype=bool)
            own[r::2, q::2] = True
            np.testing.assert_allclose(f[c][own], 1.0)
            assert (f[c][~own] < 1.0).all()
        assert (f.sum(axis=0) >= 1.0).all()

    def test_filter_px_blocks(self):
        spec = FilterArraySpec(grid=(2, 2), filter_px=3)
        f = generate_filter_function((12, 12), spec).data
        assert np.argmax(f[:, 0:3, 0:3], axis=0).tolist() == [[0] * 3] * 3
        assert np.argmax(f[:, 0:3, 3:6], axis=0).tolist() == [[1] * 3] * 3
        assert np.argmax(f[:, 6:9, 6:9], axis=0).tolist() == [[0] * 3] * 3

    def test_fine_grid_spacing(self):
        centers = filter_center_wavelengths(FINE_FILTER_SPEC)
        assert centers.size == 64
        np.testing.assert_allclose(np.diff(centers), (898 - 386) / 63)
        assert np.diff(centers)[0] == pytest.approx(8.13, abs=0.005)

    def test_range(self):
        f = generate_filter_function((16, 16), FilterArraySpec(peak_transmittance=0.6)).data
        assert f.min() >= 0 and f.max() <= 0.6 + 1e-15

    def test_k_mismatch(self):
        with pytest.raises(ValueError):
            generate_filter_function((8, 8), FilterArraySpec(), wavelengths_nm=[500.0, 600.0])

    def test_truncated_tile(self):
        f = generate_filter_function((10, 10), FilterArraySpec())
        assert f.data.shape == (16, 10, 10)
        assert f.superpixel_px == 16


class TestScenes:
    def test_empty_points(self):
        assert not make_point_scene((4, 5), [], n_lambda=3).data.any()

    def test_single_point(self):
        data = make_point_scene((4, 5), [(4, 1, 2, 0.5)], n_lambda=3).data
        assert np.count_nonzero(data) == 1
        assert data[2, 1, 4] == 0.5

    def test_colocated_channels(self, rng):
        model = SystemModel(Psf(rng.random((3, 3))), FilterFunction(rng.random((2, 6, 6))))
        both = make_point_scene((6, 6), [(2, 3, 0, 1.0), (2, 3, 1, 1.0)], n_lambda=2)
        one = make_point_scene((6, 6), [(2, 3, 0, 1.0)], n_lambda=2)
        two = make_point_scene((6, 6), [(2, 3, 1, 1.0)], n_lambda=2)
        assert np.count_nonzero(both.data) == 2
        b = forward(model, both).data
        assert not np.allclose(b, forward(model, one).data)
        assert not np.allclose(b, forward(model, two).data)
        np.testing.assert_allclose(b, forward(model, one).data + forward(model, two).data,
                                   atol=1e-14)

    @pytest.mark.parametrize("pt", [(5, 0, 0, 1.0), (0, -1, 0, 1.0), (0, 0, 3, 1.0),
                                    (0, 0, 0, 0.0)])
    def test_point_errors(self, pt):
        with pytest.raises(ValueError):
            make_point_scene((4, 5), [pt], n_lambda=3)

    def test_bar_group(self):
        data = make_resolution_target((12, 12), [((1, 1), 2, 0)], n_lambda=3).data
        assert not data[1:].any()
        row = data[0, 3]
        np.testing.assert_array_equal(row, [0, 1, 1, 0, 0, 1, 1, 0, 0, 1, 1, 0])
        assert data[0, 1:11].any(axis=1).all()
        assert not data[0, 0].any() and not data[0, 11].any()

    def test_broadband(self):
        k = 4
        bb = make_resolution_target((12, 12), [((1, 1), 2, None)], n_lambda=k).data
        single = make_resolution_target((12, 12), [((1, 1), 2, 0)], n_lambda=k).data[0]
        for c in range(k):
            np.testing.assert_array_equal(bb[c], single)
        np.testing.assert_array_equal(bb.sum(axis=0), k * single)

    def test_horizontal(self):
        g = BarGroup((0, 0), 1, 0, orientation="horizontal")
        data = make_resolution_target((5, 5), [g], n_lambda=1).data[0]
        np.testing.assert_array_equal(data[:, 0], [1, 0, 1, 0, 1])
        assert g.bar_centers() == [0.0, 2.0, 4.0]

    def test_overlap(self):
        with pytest.raises(ValueError, match="overlap"):
            make_resolution_target((20, 20), [((0, 0), 2, 0), ((5, 5), 2, 1)], n_lambda=2)

    def test_out_of_frame(self):
        with pytest.raises(ValueError):
            make_resolution_target((8, 8), [((0, 0), 2, 0)], n_lambda=1)

    def test_wavelengths_attached(self):
        cube = make_resolution_target((12, 12), [((1, 1), 2, 1)], wavelengths_nm=[500, 600])
        np.testing.assert_array_equal(cube.wavelengths_nm, [500.0, 600.0])


class TestNoise:
    def test_zero_variance(self, rng):
        b = rng.random((6, 6))
        np.testing.assert_array_equal(add_gaussian_noise(b, 0.0, 1).data, b)

    def test_sample_variance(self):
        clean = np.zeros((256, 256))
        noisy = add_gaussian_noise(clean, 1e-5, 42).data
        assert np.var(noisy - clean) == pytest.approx(1e-5, rel=0.1)

    def test_deterministic(self, rng):
        b = rng.random((8, 8))
        np.testing.assert_array_equal(add_gaussian_noise(b, 1e-3, 5).data,
                                      add_gaussian_noise(b, 1e-3, 5).data)

    def test_negative_kept(self):
        noisy = add_gaussian_noise(np.zeros((32, 32)), 1.0, 0).data
        assert noisy.min() < 0

    def test_negative_variance(self):
        with pytest.raises(ValueError):
            add_gaussian_noise(np.zeros((2, 2)), -1e-5, 0)

    def test_simulate_normalizes(self, small_model, rng):
        scene = rng.random(small_model.cube_shape)
        meas, truth = simulate_measurement(small_model, HyperspectralCube(scene), 0.0, 0)
        assert meas.data.max() == pytest.approx(1.0)
        np.testing.assert_allclose(forward(small_model, truth).data, meas.data, atol=1e-14)
