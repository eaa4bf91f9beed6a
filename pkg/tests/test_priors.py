import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from lenslesshsi.core import HyperspectralCube
from lenslesshsi.priors import (
    TvWeights,
    nuclear_value,
    project_nonneg,
    prox_nuclear,
    prox_tv3d,
    tv3d_value,
)

from oracles import exact_tv_prox, tv3d_loop, tv_prox_objective

AXIS_WEIGHTS = (1.0, 1.0, 1.0)  # (λ, y, x)


def step_signal(height=1.0, at=4):
    v = np.zeros((1, 8, 1))
    v[0, at:, 0] = height
    return v


class TestTvValue:
    def test_constant(self):
        assert tv3d_value(np.full((3, 4, 5), 2.5)) == 0.0

    def test_single_difference(self):
        v = np.array([0.0, 3.0]).reshape(1, 1, 2)
        assert tv3d_value(v, TvWeights(1, 1, 1)) == 3.0

    def test_matches_loop(self, rng):
        v = rng.standard_normal((3, 4, 4))
        w = TvWeights(0.7, 1.3, 2.1)
        assert tv3d_value(v, w) == pytest.approx(tv3d_loop(v, 0.7, 1.3, 2.1), rel=1e-13)

    def test_accepts_cube(self, rng):
        v = rng.random((2, 3, 3))
        assert tv3d_value(HyperspectralCube(v)) == tv3d_value(v)

    def test_weights_validated(self):
        with pytest.raises(ValueError):
            TvWeights(-1, 0, 0)


class TestProxTv:
    def test_gamma_zero_identity(self, rng):
        v = rng.standard_normal((3, 5, 6))
        np.testing.assert_array_equal(prox_tv3d(v, None, 0.0), v)

    @pytest.mark.parametrize("gamma", [0.1, 1.0, 100.0])
    def test_constant_fixed(self, gamma):
        v = np.full((3, 5, 7), 1.25)
        np.testing.assert_allclose(prox_tv3d(v, None, gamma), v, rtol=0, atol=1e-14)

    def test_negative_gamma(self):
        with pytest.raises(ValueError):
            prox_tv3d(np.zeros((1, 2, 2)), None, -1.0)

    def test_returns_cube_for_cube(self, rng):
        cube = HyperspectralCube(rng.random((2, 4, 4)), [500.0, 600.0])
        out = prox_tv3d(cube, None, 0.1)
        assert isinstance(out, HyperspectralCube)
        np.testing.assert_array_equal(out.wavelengths_nm, cube.wavelengths_nm)

    def test_oracle_converges(self):
        v = step_signal()
        _, gap = exact_tv_prox(v, AXIS_WEIGHTS, 0.01)
        assert gap < 1e-8

    @pytest.mark.parametrize("at", [3, 4])
    def test_step_matches_exact_prox(self, at):
        # The parallel split is approximate: on a unit step, the sup-norm
        # error is ~0.75·gamma and the relative objective excess ~1.25·gamma.
        gamma = 5e-4
        v = step_signal(at=at)
        exact, gap = exact_tv_prox(v, AXIS_WEIGHTS, gamma)
        approx = prox_tv3d(v, TvWeights(), gamma)
        assert gap < 1e-8
        assert np.abs(approx - exact).max() <= 2e-2
        obj_exact = tv_prox_objective(exact, v, AXIS_WEIGHTS, gamma)
        obj_approx = tv_prox_objective(approx, v, AXIS_WEIGHTS, gamma)
        assert obj_approx <= obj_exact * (1 + 1e-3)

    def test_step_sup_error_at_larger_gamma(self):
        gamma = 0.02
        v = step_signal()
        exact, _ = exact_tv_prox(v, AXIS_WEIGHTS, gamma)
        assert np.abs(prox_tv3d(v, None, gamma) - exact).max() <= 2e-2

    def test_large_gamma_moves_toward_mean(self, rng):
        v = rng.standard_normal((1, 8, 1))
        mean = v.mean()
        exact, _ = exact_tv_prox(v, AXIS_WEIGHTS, 1e3)
        np.testing.assert_allclose(exact, mean, atol=1e-6)
        dists = [np.abs(prox_tv3d(v, None, g) - mean).max() for g in (0.0, 0.1, 1.0, 10.0)]
        assert all(b <= a + 1e-12 for a, b in zip(dists, dists[1:]))
        assert dists[-1] < dists[0]

    @settings(max_examples=20, deadline=None)
    @given(seed=st.integers(0, 2**31), gamma=st.floats(0.0, 5.0))
    def test_preserves_mean_and_does_not_raise_tv(self, seed, gamma):
        v = np.random.default_rng(seed).standard_normal((3, 4, 5))
        u = prox_tv3d(v, None, gamma)
        assert u.mean() == pytest.approx(v.mean(), abs=1e-12)
        assert tv3d_value(u) <= tv3d_value(v) + 1e-9

    def test_weighted_axis_only(self, rng):
        v = rng.standard_normal((4, 5, 5))
        u = prox_tv3d(v, TvWeights(0, 0, 1), 0.5)
        # No spatial smoothing: pixel means over λ untouched.
        np.testing.assert_allclose(u.mean(axis=0), v.mean(axis=0), atol=1e-12)

    def test_random_cube_near_exact_objective(self, rng):
        v = rng.standard_normal((3, 4, 4))
        gamma = 1e-4
        exact, gap = exact_tv_prox(v, AXIS_WEIGHTS, gamma)
        approx = prox_tv3d(v, None, gamma)
        oe = tv_prox_objective(exact, v, AXIS_WEIGHTS, gamma)
        oa = tv_prox_objective(approx, v, AXIS_WEIGHTS, gamma)
        assert oa <= oe * (1 + 1e-3)


def rank_one_cube(rng, shape=(3, 4, 5)):
    a = rng.standard_normal(shape[1:])
    s = rng.standard_normal(shape[0])
    return s[:, None, None] * a[None], np.linalg.norm(a) * np.linalg.norm(s)


class TestNuclear:
    def test_zero(self):
        assert nuclear_value(np.zeros((3, 2, 2))) == 0.0

    def test_rank_one(self, rng):
        v, sigma = rank_one_cube(rng)
        assert nuclear_value(v) == pytest.approx(sigma, rel=1e-12)

    def test_matches_svd(self, rng):
        v = rng.standard_normal((3, 4, 4))
        mat = np.stack([v[c].ravel() for c in range(3)], axis=1)
        expected = np.linalg.svd(mat, compute_uv=False).sum()
        assert nuclear_value(v) == pytest.approx(expected, rel=1e-10)

    def test_prox_gamma_zero(self, rng):
        v = rng.standard_normal((3, 4, 4))
        np.testing.assert_array_equal(prox_nuclear(v, 0.0), v)

    def test_prox_full_shrinkage(self, rng):
        v, sigma = rank_one_cube(rng)
        assert not np.any(prox_nuclear(v, sigma * 1.01))

    def test_prox_shrinks_singular_values(self, rng):
        v = rng.standard_normal((4, 5, 5))
        mat = lambda c: np.stack([c[k].ravel() for k in range(c.shape[0])], axis=1)
        s_in = np.linalg.svd(mat(v), compute_uv=False)
        s_out = np.linalg.svd(mat(prox_nuclear(v, 0.1)), compute_uv=False)
        np.testing.assert_allclose(s_out, np.maximum(s_in - 0.1, 0), atol=1e-9)

    def test_prox_decrease_amount(self, rng):
        v = rng.standard_normal((4, 3, 3))
        s = np.linalg.svd(np.stack([v[k].ravel() for k in range(4)], 1), compute_uv=False)
        gamma = float(np.median(s))
        drop = nuclear_value(v) - nuclear_value(prox_nuclear(v, gamma))
        surviving = s > gamma
        expected = gamma * surviving.sum() + s[~surviving].sum()
        assert drop == pytest.approx(expected, rel=1e-10)

    def test_negative_gamma(self):
        with pytest.raises(ValueError):
            prox_nuclear(np.zeros((1, 1, 1)), -0.1)

    @settings(max_examples=20, deadline=None)
    @given(seed=st.integers(0, 2**31), gamma=st.floats(0.0, 3.0))
    def test_prox_reduces_objective(self, seed, gamma):
        v = np.random.default_rng(seed).standard_normal((3, 3, 4))
        u = prox_nuclear(v, gamma)
        assert 0.5 * np.sum((u - v) ** 2) + gamma * nuclear_value(u) <= \
            gamma * nuclear_value(v) + 1e-9


class TestNonneg:
    def test_all_negative(self):
        assert not project_nonneg(-np.ones((2, 2, 2))).any()

    def test_nonnegative_unchanged(self, rng):
        v = rng.random((2, 3, 3))
        np.testing.assert_array_equal(project_nonneg(v), v)

    def test_mixed_matches_loop(self, rng):
        v = rng.standard_normal((2, 3, 4))
        expected = np.empty_like(v)
        for idx in np.ndindex(v.shape):
            expected[idx] = v[idx] if v[idx] > 0 else 0.0
        np.testing.assert_array_equal(project_nonneg(v), expected)

    @settings(max_examples=20, deadline=None)
    @given(seed=st.integers(0, 2**31))
    def test_idempotent_and_objective(self, seed):
        v = np.random.default_rng(seed).standard_normal((2, 3, 3))
        p = project_nonneg(v)
        np.testing.assert_array_equal(project_nonneg(p), p)
        # Among non-negative points the projection is closest to v.
        q = np.abs(v)
        assert np.sum((p - v) ** 2) <= np.sum((q - v) ** 2)
