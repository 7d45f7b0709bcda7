"""Unit and property tests for the grid-level 1-D numerics."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dosenhance.grids import (
    EnergyGrid,
    Spectrum,
    cosine_distance,
    fft_magnitude,
    first_diff,
    fourier_cosine_distance,
    gaussian_smooth,
    mae,
    second_diff,
    trapz_integral,
)


def grid(n=64, e_min=-5.0, e_max=5.0):
    return EnergyGrid(e_min, e_max, n)


def dft_magnitudes_oracle(values):
    """Straight-line one-sided DFT magnitudes, independent of numpy.fft."""
    n = len(values)
    mags = []
    for k in range(n // 2 + 1):
        re = sum(values[j] * math.cos(-2.0 * math.pi * k * j / n) for j in range(n))
        im = sum(values[j] * math.sin(-2.0 * math.pi * k * j / n) for j in range(n))
        mags.append(math.hypot(re, im))
    return np.array(mags)


class TestEnergyGrid:
    def test_points_follow_spacing(self):
        g = grid(101)
        e = g.energies()
        np.testing.assert_array_equal(e, g.e_min + np.arange(101) * g.spacing)
        assert e[0] == g.e_min
        assert abs(e[-1] - g.e_max) < 1e-12

    def test_invalid_grids_rejected(self):
        with pytest.raises(ValueError):
            EnergyGrid(5.0, -5.0, 64)
        with pytest.raises(ValueError):
            EnergyGrid(-5.0, 5.0, 7)

    def test_spectrum_rejects_nan_and_bad_length(self):
        g = grid(16)
        with pytest.raises(ValueError, match="invalid spectrum"):
            Spectrum(g, np.full(16, np.nan))
        with pytest.raises(ValueError, match="invalid spectrum"):
            Spectrum(g, np.zeros(15))


class TestGaussianSmooth:
    def test_constant_preserved(self):
        s = Spectrum(grid(64), np.full(64, 3.7))
        for sigma in (0.5, 2.0, 8.0):
            np.testing.assert_allclose(gaussian_smooth(s, sigma).values, 3.7, rtol=1e-12)

    def test_impulse_is_truncated_kernel(self):
        # Oracle: evaluate the kernel directly and renormalize.
        n, sigma = 64, 2.0
        v = np.zeros(n)
        v[n // 2] = 1.0
        out = gaussian_smooth(Spectrum(grid(n), v), sigma).values
        d = np.arange(n) - n // 2
        expected = np.exp(-(d.astype(float) ** 2) / (2.0 * sigma**2))
        expected[np.abs(d) > math.ceil(6 * sigma)] = 0.0
        expected /= expected.sum()
        np.testing.assert_allclose(out, expected, atol=1e-15)
        assert out.sum() == pytest.approx(1.0, abs=1e-12)

    def test_semigroup_twice_sigma2_vs_once_sigma2sqrt2(self):
        # Gaussian semigroup: checked away from the truncation edges.
        n = 256
        rng = np.random.default_rng(3)
        v = np.exp(-np.linspace(-5, 5, n) ** 2) + 0.1 * rng.uniform(size=n)
        s = Spectrum(grid(n), v)
        twice = gaussian_smooth(gaussian_smooth(s, 2.0), 2.0).values
        once = gaussian_smooth(s, 2.0 * math.sqrt(2.0)).values
        margin = 24
        np.testing.assert_allclose(twice[margin:-margin], once[margin:-margin], atol=1e-6)

    def test_rejects_nonpositive_sigma(self):
        s = Spectrum(grid(16), np.ones(16))
        with pytest.raises(ValueError):
            gaussian_smooth(s, 0.0)

    @given(
        data=st.lists(st.floats(0.0, 10.0), min_size=8, max_size=200),
        sigma_frac=st.floats(0.02, 1.0),
    )
    @settings(max_examples=80, deadline=None)
    def test_trapz_integral_preserved(self, data, sigma_frac):
        n = len(data)
        s = Spectrum(EnergyGrid(-5.0, 5.0, n), np.array(data))
        sigma = max(1e-3, sigma_frac * n / 8.0)
        smoothed = gaussian_smooth(s, sigma)
        before, after = trapz_integral(s), trapz_integral(smoothed)
        assert abs(after - before) <= 1e-6 * abs(before) + 1e-9


class TestFiniteDifferences:
    def test_first_diff_linear_exact(self):
        g = grid(101)
        e = g.energies()
        d = first_diff(Spectrum(g, 1.7 * e + 0.3)).values
        np.testing.assert_allclose(d, 1.7, atol=1e-12)

    def test_first_diff_constant_zero(self):
        d = first_diff(Spectrum(grid(64), np.full(64, 2.0))).values
        np.testing.assert_array_equal(d, 0.0)

    def test_first_diff_quadratic_exact_interior(self):
        # Central differences are exact for quadratics; oracle is 2E.
        g = EnergyGrid(-5.0, 5.0, 101)
        e = g.energies()
        d = first_diff(Spectrum(g, e**2)).values
        np.testing.assert_allclose(d[1:-1], 2.0 * e[1:-1], atol=1e-12)

    def test_second_diff_quadratic_in_bins(self):
        n = 64
        v = np.arange(n, dtype=float) ** 2
        out = second_diff(Spectrum(grid(n), v)).values
        np.testing.assert_allclose(out[1:-1], 2.0, atol=1e-10)
        assert out[0] == 0.0 and out[-1] == 0.0

    def test_second_diff_linear_zero(self):
        g = grid(64)
        out = second_diff(Spectrum(g, 3.0 * g.energies() - 1.0)).values
        np.testing.assert_allclose(out, 0.0, atol=1e-12)

    def test_second_diff_scaled_matches_analytic(self):
        g = EnergyGrid(-5.0, 5.0, 1001)  # spacing 0.01 <= 0.02
        e = g.energies()
        out = second_diff(Spectrum(g, np.sin(e)), scaled=True).values
        np.testing.assert_allclose(out[1:-1], -np.sin(e)[1:-1], atol=1e-3)

    @given(
        a=st.floats(-5, 5),
        b=st.floats(-5, 5),
        seed=st.integers(0, 2**31 - 1),
    )
    @settings(max_examples=40, deadline=None)
    def test_diff_operators_linear(self, a, b, seed):
        rng = np.random.default_rng(seed)
        g = grid(32)
        x, y = rng.normal(size=32), rng.normal(size=32)
        for op in (first_diff, second_diff):
            combined = op(Spectrum(g, a * x + b * y)).values
            parts = a * op(Spectrum(g, x)).values + b * op(Spectrum(g, y)).values
            np.testing.assert_allclose(combined, parts, atol=1e-9)


class TestTrapz:
    def test_constant_one(self):
        assert trapz_integral(Spectrum(grid(64), np.ones(64))) == pytest.approx(10.0)

    def test_zero(self):
        assert trapz_integral(Spectrum(grid(64), np.zeros(64))) == 0.0

    def test_odd_linear(self):
        g = grid(64)
        assert trapz_integral(Spectrum(g, g.energies())) == pytest.approx(0.0, abs=1e-12)


class TestCosineDistance:
    def test_identical_nonzero(self):
        assert cosine_distance([1.0, 2.0, 3.0], [1.0, 2.0, 3.0]) == pytest.approx(0.0, abs=1e-15)

    def test_orthogonal(self):
        assert cosine_distance([1.0, 0.0], [0.0, 1.0]) == pytest.approx(1.0)

    def test_45_degrees(self):
        assert cosine_distance([1.0, 0.0], [1.0, 1.0]) == pytest.approx(1.0 - 1.0 / math.sqrt(2.0))

    def test_zero_norm_returns_one(self):
        assert cosine_distance([0.0, 0.0], [1.0, 2.0]) == 1.0

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            cosine_distance([1.0], [1.0, 2.0])

    @given(
        seed=st.integers(0, 2**31 - 1),
        scale=st.floats(1e-4, 1e4),
    )
    @settings(max_examples=60, deadline=None)
    def test_scale_invariance_and_symmetry(self, seed, scale):
        rng = np.random.default_rng(seed)
        p = rng.normal(size=24) + 2.0
        t = rng.normal(size=24)
        assert cosine_distance(p, p) == pytest.approx(0.0, abs=1e-12)
        assert cosine_distance(p, scale * p) == pytest.approx(0.0, abs=1e-9)
        assert cosine_distance(p, t) == pytest.approx(cosine_distance(t, p), abs=1e-14)


class TestFftMagnitude:
    def test_constant_all_dc(self):
        n, c = 32, 2.5
        m = fft_magnitude(np.full(n, c))
        assert m[0] == pytest.approx(c * n)
        np.testing.assert_allclose(m[1:], 0.0, atol=1e-10)

    def test_pure_cosine_single_bin(self):
        # DFT orthogonality oracle: cos at bin k folds to magnitude n/2 there.
        n, k = 64, 5
        x = np.cos(2.0 * np.pi * k * np.arange(n) / n)
        m = fft_magnitude(x)
        assert m[k] == pytest.approx(n / 2.0, rel=1e-12)
        others = np.delete(m, k)
        np.testing.assert_allclose(others, 0.0, atol=1e-9)

    def test_matches_straight_line_dft(self):
        rng = np.random.default_rng(11)
        x = rng.normal(size=16)
        np.testing.assert_allclose(fft_magnitude(x), dft_magnitudes_oracle(x), atol=1e-10)

    def test_too_short_rejected(self):
        with pytest.raises(ValueError):
            fft_magnitude(np.ones(4))

    @given(seed=st.integers(0, 2**31 - 1), shift=st.integers(-64, 64))
    @settings(max_examples=60, deadline=None)
    def test_circular_shift_invariance(self, seed, shift):
        rng = np.random.default_rng(seed)
        x = rng.normal(size=48)
        np.testing.assert_allclose(
            fft_magnitude(np.roll(x, shift)), fft_magnitude(x), atol=1e-9
        )


class TestFourierCosineDistance:
    def test_identical(self):
        x = np.random.default_rng(0).normal(size=32)
        assert fourier_cosine_distance(x, x) == pytest.approx(0.0, abs=1e-12)

    def test_shift_gives_zero(self):
        x = np.random.default_rng(1).normal(size=32)
        assert fourier_cosine_distance(x, np.roll(x, 7)) == pytest.approx(0.0, abs=1e-9)

    def test_impulse_vs_constant_composed_oracle(self):
        n = 16
        p = np.zeros(n)
        p[0] = 1.0
        t = np.full(n, 3.0)
        expected = 1.0 - float(
            np.dot(dft_magnitudes_oracle(p), dft_magnitudes_oracle(t))
            / (np.linalg.norm(dft_magnitudes_oracle(p)) * np.linalg.norm(dft_magnitudes_oracle(t)))
        )
        assert fourier_cosine_distance(p, t) == pytest.approx(expected, abs=1e-12)
        # impulse has flat magnitudes, so the value is 1 - 1/sqrt(n/2 + 1)
        assert expected == pytest.approx(1.0 - 1.0 / math.sqrt(n / 2 + 1))


class TestMae:
    def test_identical(self):
        assert mae([1.0, 2.0], [1.0, 2.0]) == 0.0

    def test_offset_by_one(self):
        x = np.arange(5.0)
        assert mae(x + 1.0, x) == pytest.approx(1.0)

    def test_mixed_signs(self):
        assert mae([0.0, 2.0], [1.0, 1.0]) == pytest.approx(1.0)

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            mae([1.0], [1.0, 2.0])
