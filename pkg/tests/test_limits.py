import json
import math

import numpy as np
import pytest

from dipolefield import (
    D_INF_PARALLEL,
    D_INF_RANDOM,
    DistributionCurve,
    NumericalError,
    OrientationMode,
    charfn_excluded,
    charfn_limit,
    charfn_single,
    default_grid,
    excluded_volume_curve,
    gaussian_asymptote,
    geometry_factor,
    invert_charfn,
    lorentzian_limit,
    shift_constant_parallel_closed_form,
)

PARALLEL = OrientationMode.PARALLEL_Z
RANDOM = OrientationMode.RANDOM_ISOTROPIC
G_C = shift_constant_parallel_closed_form()
GAMMA_P = math.pi * D_INF_PARALLEL


def wide_grid(half=100.0, points=4096):
    # extends past the single-contribution bound 2/epsilon of the smallest
    # epsilon used, so the edge-anchored tail estimate stays valid
    return np.linspace(G_C - half, G_C + half, points)


class TestDistributionCurve:
    def test_rejects_nonuniform_grid(self):
        g = np.array([0.0, 1.0, 3.0])
        with pytest.raises(ValueError, match="uniform"):
            DistributionCurve(g, np.ones(3))

    def test_rejects_shape_mismatch(self):
        with pytest.raises(ValueError, match="density"):
            DistributionCurve(np.linspace(0, 1, 5), np.ones(4))

    def test_clamps_noise_but_rejects_real_negatives(self):
        g = np.linspace(-1, 1, 5)
        curve = DistributionCurve(g, np.array([0.1, -5e-10, 0.2, 0.1, 0.05]))
        assert curve.density[1] == 0.0
        with pytest.raises(ValueError, match="floor"):
            DistributionCurve(g, np.array([0.1, -5e-8, 0.2, 0.1, 0.05]))

    def test_csv_round_trip(self):
        curve = lorentzian_limit(PARALLEL)
        back = DistributionCurve.from_csv_text(curve.to_csv_text())
        np.testing.assert_array_equal(back.g, curve.g)
        np.testing.assert_array_equal(back.density, curve.density)
        assert back.mode is PARALLEL
        assert back.epsilon == 0.0

    def test_json_round_trip(self):
        curve = gaussian_asymptote(2.0)
        back = DistributionCurve.from_json_dict(
            json.loads(json.dumps(curve.to_json_dict())))
        np.testing.assert_array_equal(back.g, curve.g)
        np.testing.assert_array_equal(back.density, curve.density)
        assert back.epsilon == 2.0

    def test_save_load(self, tmp_path):
        curve = lorentzian_limit(RANDOM)
        for name in ("c.csv", "c.json"):
            path = tmp_path / name
            curve.save(path)
            back = DistributionCurve.load(path)
            np.testing.assert_array_equal(back.g, curve.g)
            np.testing.assert_array_equal(back.density, curve.density)


class TestLorentzianLimit:
    def test_parallel_peak(self):
        curve = lorentzian_limit(PARALLEL)
        assert curve.peak_location() == pytest.approx(G_C, abs=curve.step)
        assert curve.peak_height() == pytest.approx(1.0 / (math.pi * GAMMA_P), rel=1e-4)

    def test_random_centered_with_paper_width(self):
        gamma_r = math.pi * D_INF_RANDOM
        assert gamma_r == pytest.approx(1.084, abs=1e-3)
        curve = lorentzian_limit(RANDOM)
        assert curve.peak_location() == pytest.approx(0.0, abs=curve.step)
        assert curve.peak_height() == pytest.approx(1.0 / (math.pi * gamma_r), rel=1e-4)

    def test_symmetry_about_center(self):
        grid = np.linspace(G_C - 10.0, G_C + 10.0, 2001)  # grid contains g_c
        curve = lorentzian_limit(PARALLEL, grid)
        np.testing.assert_allclose(curve.density, curve.density[::-1], rtol=1e-12)

    def test_normalization_with_tail_estimate(self):
        for mode in (PARALLEL, RANDOM):
            assert 0.99 <= lorentzian_limit(mode).normalization() <= 1.001


class TestCharfnLimit:
    def test_unit_at_zero(self):
        assert charfn_limit(0.0, PARALLEL) == pytest.approx(1.0 + 0.0j)

    def test_modulus_independent_of_center(self):
        k = np.linspace(-5, 5, 41)
        np.testing.assert_allclose(
            np.abs(charfn_limit(k, PARALLEL)),
            np.exp(-math.pi * D_INF_PARALLEL * np.abs(k)), rtol=1e-12)

    def test_inversion_matches_closed_form(self):
        curve = invert_charfn(lambda k: charfn_limit(k, PARALLEL),
                              default_grid(PARALLEL), mode=PARALLEL, epsilon=0.0)
        exact = lorentzian_limit(PARALLEL)
        assert np.max(np.abs(curve.density - exact.density)) < 1e-6


class TestCharfnExcluded:
    def test_unit_at_zero(self):
        for eps in (0.4, 1.0, 50.0):
            # epsilon scales the ~1e-13 quadrature residue of the correction
            assert charfn_excluded(0.0, eps, PARALLEL) == pytest.approx(1.0 + 0.0j, abs=1e-10)

    def test_tiny_epsilon_close_to_limit(self):
        a = charfn_excluded(1.0, 1e-3, PARALLEL)
        b = charfn_limit(1.0, PARALLEL)
        assert abs(a - b) / abs(b) < 0.01

    def test_large_epsilon_expansion(self):
        # log p~ -> -(2/5) k^2 / eps - (4/105) i k^3 / eps^2
        k = 1.0
        for eps in (100.0, 1000.0):
            log_p = (-math.pi * D_INF_PARALLEL * abs(k) - 1j * G_C * k
                     - eps * (charfn_single(k / eps, geometry_factor(PARALLEL)) - 1.0))
            assert log_p.real * eps == pytest.approx(-2.0 / 5.0, abs=1e-4)
            assert log_p.imag * eps ** 2 == pytest.approx(-4.0 / 105.0, abs=1e-4)

    def test_epsilon_guards(self):
        with pytest.raises(ValueError, match="epsilon"):
            charfn_excluded(1.0, 0.0, PARALLEL)
        with pytest.raises(ValueError, match="epsilon"):
            charfn_excluded(1.0, 2e6, PARALLEL)

    def test_hermitian_symmetry(self):
        for k in (0.3, 2.0):
            assert charfn_excluded(-k, 1.0, PARALLEL) == pytest.approx(
                np.conj(charfn_excluded(k, 1.0, PARALLEL)), abs=1e-12)


class TestInvertCharfn:
    def test_gaussian_known_pair(self):
        grid = np.linspace(-8.0, 8.0, 1001)
        curve = invert_charfn(lambda k: np.exp(-0.5 * np.asarray(k) ** 2), grid)
        assert curve.density[500] == pytest.approx(1.0 / math.sqrt(2.0 * math.pi), abs=1e-9)
        assert curve.mean() == pytest.approx(0.0, abs=1e-9)
        assert curve.variance() == pytest.approx(1.0, rel=1e-6)

    def test_rejects_unnormalized_charfn(self):
        with pytest.raises(ValueError, match="charfn"):
            invert_charfn(lambda k: 0.5 * np.exp(-np.abs(k)), np.linspace(-5, 5, 101))

    def test_slow_decay_raises(self):
        with pytest.raises(NumericalError, match="decay"):
            invert_charfn(lambda k: np.exp(-1e-9 * np.abs(k)),
                          np.linspace(-5, 5, 101))

    def test_truncated_grid_fails_normalization(self):
        with pytest.raises(NumericalError, match="normalization"):
            invert_charfn(lambda k: charfn_limit(k, PARALLEL),
                          np.linspace(-0.5, 0.5, 128))

    def test_meta_recorded(self):
        curve = excluded_volume_curve(1.0, PARALLEL)
        assert curve.mode is PARALLEL
        assert curve.epsilon == 1.0
        assert curve.tol == 1e-9


class TestGaussianAsymptote:
    def test_variance_scaling(self):
        assert gaussian_asymptote(0.8).variance() == pytest.approx(1.0, rel=1e-9)
        assert gaussian_asymptote(50.0).variance() == pytest.approx(0.016, rel=1e-9)

    def test_zero_mean(self):
        for eps in (0.5, 5.0, 50.0):
            assert gaussian_asymptote(eps).mean() == pytest.approx(0.0, abs=1e-12)

    def test_rejects_nonpositive(self):
        with pytest.raises(ValueError, match="epsilon"):
            gaussian_asymptote(0.0)


class TestExcludedVolumeFamily:
    def test_zero_epsilon_is_lorentzian(self):
        curve = excluded_volume_curve(0.0, PARALLEL)
        exact = lorentzian_limit(PARALLEL)
        np.testing.assert_allclose(curve.density, exact.density, rtol=1e-12)

    def test_vanishing_mean_for_positive_epsilon(self):
        for eps in (0.4, 1.0, 2.0):
            curve = excluded_volume_curve(eps, PARALLEL)
            assert abs(curve.mean()) < 1e-3

    def test_normalization_of_inverted_curves(self):
        for eps in (0.4, 2.0):
            total = excluded_volume_curve(eps, PARALLEL).normalization()
            assert 0.99 <= total <= 1.001

    def test_small_epsilon_converges_to_shifted_lorentzian(self):
        grid = wide_grid()
        exact = lorentzian_limit(PARALLEL, grid)
        window = np.abs(grid - G_C) <= 5.0
        dists = []
        for eps in (1.0, 0.3, 0.1, 0.03):
            curve = excluded_volume_curve(eps, PARALLEL, grid=grid)
            dists.append(float(np.max(np.abs(curve.density - exact.density)[window])))
        assert all(a > b for a, b in zip(dists, dists[1:]))

    def test_large_epsilon_converges_to_gaussian(self):
        grid = default_grid(PARALLEL)
        dists = []
        for eps in (10.0, 30.0, 100.0):
            curve = excluded_volume_curve(eps, PARALLEL, grid=grid)
            gauss = gaussian_asymptote(eps, grid=grid)
            dists.append(float(np.max(np.abs(curve.density - gauss.density))))
        assert all(a > b for a, b in zip(dists, dists[1:]))

    def test_scale_identity_reaches_limit(self):
        # N-fold convolution in Fourier space approaches the limit transform
        geo = geometry_factor(PARALLEL)
        n = 10_000
        for k in (0.5, 1.0, 2.0):
            p_n = charfn_single(k / n, geo) ** n
            assert abs(p_n - charfn_limit(k, PARALLEL)) < 0.01


def test_default_grid_shape():
    grid = default_grid(PARALLEL)
    assert grid.size == 2048
    assert grid[0] == pytest.approx(G_C - 12.0 * GAMMA_P)
    assert grid[-1] == pytest.approx(G_C + 12.0 * GAMMA_P)
