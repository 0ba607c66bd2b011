"""Acceptance suite: one criterion per test, one printed PASS/FAIL line each.

Run with ``pytest -s tests/test_acceptance.py -v`` to see the lines.
The Monte Carlo criteria use desk-scale protocols (minutes, not hours);
seeds are frozen so the suite is deterministic.
"""

import math
import time

import numpy as np
import pytest
from scipy.integrate import quad

from dipolefield import (
    D_INF_PARALLEL,
    D_INF_RANDOM,
    DistributionCurve,
    OrientationMode,
    SimulationSpec,
    charfn_single,
    compare,
    d_infinity,
    excluded_volume_curve,
    gaussian_asymptote,
    geometry_factor,
    geometry_factor_random,
    lorentzian_limit,
    run_simulation,
    shift_constant,
    shift_constant_parallel_closed_form,
    single_dipole_density,
)
from dipolefield.analytic import _charfn_step
from dipolefield.montecarlo import _draw_dipoles

PARALLEL = OrientationMode.PARALLEL_Z
RANDOM = OrientationMode.RANDOM_ISOTROPIC
GEO_P = geometry_factor(PARALLEL)
GEO_R = geometry_factor(RANDOM)
G_C = shift_constant_parallel_closed_form()

WORKERS = 2


class _Criterion:
    """Prints '<label>: PASS (notes)' after the block, or FAIL on the way out."""

    def __init__(self, label):
        self.label = label
        self.notes = []

    def note(self, text):
        self.notes.append(text)

    def __enter__(self):
        return self

    def __exit__(self, exc_type, exc, tb):
        verdict = "PASS" if exc_type is None else "FAIL"
        detail = f" ({'; '.join(self.notes)})" if self.notes else ""
        print(f"\n{self.label}: {verdict}{detail}", flush=True)
        return False


# ---------------------------------------------------------------------------
# shared heavy fixtures
# ---------------------------------------------------------------------------

@pytest.fixture(scope="module")
def lorentzian_parallel():
    return lorentzian_limit(PARALLEL)


@pytest.fixture(scope="module")
def hist_desk_scale():
    """Parallel mode, eps=0, N=1e4, M=2e5 (desk-scale version of the
    full-scale N=5e4, M=1e6 protocol)."""
    spec = SimulationSpec(mode=PARALLEL, n_dipoles=10_000, realizations=200_000,
                          epsilon=0.0, seed=20260810)
    return run_simulation(spec, workers=WORKERS)


@pytest.fixture(scope="module")
def excluded_family():
    """(eps, histogram, curve) triples for eps in {0.4, 1, 2}."""
    out = []
    for i, eps in enumerate((0.4, 1.0, 2.0)):
        spec = SimulationSpec(mode=PARALLEL, n_dipoles=10_000,
                              realizations=100_000, epsilon=eps, seed=101 + i)
        hist = run_simulation(spec, workers=WORKERS)
        curve = excluded_volume_curve(eps, PARALLEL)
        out.append((eps, hist, curve))
    return out


# ---------------------------------------------------------------------------
# criteria
# ---------------------------------------------------------------------------

def test_a1_constants(capsys):
    with _Criterion("A1 (constants)") as crit:
        start = time.perf_counter()
        d_inf = d_infinity(PARALLEL)
        g_c_quad = shift_constant(GEO_P, 3.0)
        width = math.pi * d_inf * 4.0 * math.pi / 3.0
        center = g_c_quad * 4.0 * math.pi / 3.0
        elapsed = time.perf_counter() - start

        assert abs(d_inf - 2.0 / (3.0 * math.sqrt(3.0))) < 1e-12
        assert abs(g_c_quad - G_C) < 1e-10
        assert abs(width - 5.065) < 5e-4     # 4 significant digits
        assert abs(center - 0.6692) < 5e-5   # 4 significant digits
        assert elapsed < 1.0
        crit.note(f"D_inf={d_inf:.12g}")
        crit.note(f"g_c={g_c_quad:.12g}")
        crit.note(f"coeffs {width:.4f}, {center:.4f} per C*rho")
        crit.note(f"{elapsed * 1e3:.0f} ms")

        from dipolefield.cli import main
        assert main(["constants", "--mode", "parallel"]) == 0
        out = capsys.readouterr().out
        assert "0.3849001794" in out and "0.1597693357" in out


def test_a2_desk_scale_lorentzian(hist_desk_scale, lorentzian_parallel):
    with _Criterion("A2 (desk-scale simulation vs shifted Lorentzian)") as crit:
        report = compare(hist_desk_scale, lorentzian_parallel,
                         threshold=5.0, chi2_band=(0.8, 1.3))
        assert report.max_z <= 5.0
        assert 0.8 <= report.chi2_per_dof <= 1.3
        assert report.passed
        crit.note(f"max_z={report.max_z:.2f}")
        crit.note(f"chi2/dof={report.chi2_per_dof:.3f} (dof={report.dof})")


def test_a3_shift_detectability(hist_desk_scale, lorentzian_parallel):
    with _Criterion("A3 (shift detectability)") as crit:
        shifted = lorentzian_parallel
        centered = DistributionCurve(
            shifted.g, np.interp(shifted.g + G_C, shifted.g, shifted.density),
            mode=PARALLEL, epsilon=0.0)
        report = compare(hist_desk_scale, centered,
                         threshold=5.0, chi2_band=(0.8, 1.3))
        assert not report.passed
        assert report.max_z > 5.0
        crit.note(f"centered model rejected, max_z={report.max_z:.2f}")


def test_a4_excluded_volume_family(excluded_family):
    with _Criterion("A4 (excluded-volume family vs inversion)") as crit:
        peaks = []
        for eps, hist, curve in excluded_family:
            report = compare(hist, curve, threshold=5.0, chi2_band=(0.8, 1.3))
            assert report.passed, f"eps={eps}: {report}"
            assert abs(hist.mean) <= 3.0 * hist.mean_standard_error
            peaks.append(float(hist.heights.max()))
            crit.note(f"eps={eps:g}: max_z={report.max_z:.2f}, "
                      f"mean={hist.mean:+.4f}")
        assert all(a < b for a, b in zip(peaks, peaks[1:]))
        crit.note("peak heights increase with eps")


def test_a5_small_epsilon_convergence():
    with _Criterion("A5 (eps -> 0 convergence to the shifted Lorentzian)") as crit:
        # grid reaches past the single-contribution bound 2/eps of eps=0.03
        grid = np.linspace(G_C - 100.0, G_C + 100.0, 4096)
        exact = lorentzian_limit(PARALLEL, grid)
        window = np.abs(grid - G_C) <= 5.0
        dists = []
        for eps in (1.0, 0.3, 0.1, 0.03):
            curve = excluded_volume_curve(eps, PARALLEL, grid=grid)
            dists.append(float(np.max(np.abs(curve.density - exact.density)[window])))
        assert all(a > b for a, b in zip(dists, dists[1:]))
        crit.note("sup distances " + " > ".join(f"{d:.4f}" for d in dists))


def test_a6_gaussian_limit():
    with _Criterion("A6 (eps = 50 Gaussian asymptote)") as crit:
        eps = 50.0
        grid = np.linspace(-3.0, 3.0 + 2.0 * G_C, 4096)
        curve = excluded_volume_curve(eps, PARALLEL, grid=grid)
        gauss = gaussian_asymptote(eps, grid=grid)
        peak = gauss.peak_height()
        sup = float(np.max(np.abs(curve.density - gauss.density)))
        var = curve.variance()
        target = 4.0 / (5.0 * eps)
        assert sup < 0.02 * peak
        assert abs(var - target) < 0.02 * target
        crit.note(f"sup distance {sup / peak:.2%} of peak")
        crit.note(f"variance {var:.6f} vs {target:.6f}")


def test_a7_charfn_expansion():
    with _Criterion("A7 (small-k expansion of the transform)") as crit:
        k = 1e-3
        p = charfn_single(k, GEO_P)
        slope_re = (1.0 - p.real) / k
        slope_im = -p.imag / k
        rel_re = abs(slope_re - math.pi * D_INF_PARALLEL) / (math.pi * D_INF_PARALLEL)
        rel_im = abs(slope_im - G_C) / G_C
        assert rel_re < 1e-3
        assert rel_im < 1e-3
        crit.note(f"(1-Re)/k off by {rel_re:.1e}")
        crit.note(f"-Im/k off by {rel_im:.1e}")


def test_a8_random_orientation():
    with _Criterion("A8 (random orientation)") as crit:
        for g in (10.0, -10.0):
            assert abs(geometry_factor_random(g) - 0.3450) < 5e-5
        crit.note(f"D(+-10)={geometry_factor_random(10.0):.6f}")
        spec = SimulationSpec(mode=RANDOM, n_dipoles=10_000, realizations=100_000,
                              epsilon=0.0, seed=300)
        hist = run_simulation(spec, workers=WORKERS)
        curve = lorentzian_limit(RANDOM)
        report = compare(hist, curve, threshold=5.0, chi2_band=(0.8, 1.3))
        assert report.passed
        crit.note(f"centered Lorentzian (Gamma={math.pi * D_INF_RANDOM:.4f}): "
                  f"max_z={report.max_z:.2f}")


def test_a9_property_suite():
    with _Criterion("A9 (invariant suite)") as crit:
        # normalization of P_11 for both modes
        for geo in (GEO_P, GEO_R):
            big = 1000.0
            val, _ = quad(lambda g: float(single_dipole_density(g, 1, geo)),
                          -big, big, points=[-2.0, -1.0, 0.0, 1.0, 2.0],
                          limit=800, epsabs=1e-12, epsrel=1e-12)
            assert abs(val + 2.0 * geo.d_infinity / big - 1.0) < 1e-8
        crit.note("normalization")

        # evenness of the random-mode geometry factor
        for g in (0.1, 0.5, 1.0, 1.9, 3.0):
            assert geometry_factor_random(-g) == pytest.approx(
                geometry_factor_random(g), abs=1e-14)
        crit.note("evenness")

        # g0-independence of the shift constant
        assert abs(shift_constant(GEO_P, 2.5) - shift_constant(GEO_P, 50.0)) < 1e-8
        crit.note("g0-independence")

        # bit-identical results for any worker count
        spec = SimulationSpec(mode=PARALLEL, n_dipoles=500, realizations=10_000,
                              seed=99)
        base = run_simulation(spec, workers=1)
        for workers in (2, 3):
            other = run_simulation(spec, workers=workers)
            assert np.array_equal(base.counts, other.counts)
            assert base.mean == other.mean and base.m2 == other.m2
        crit.note("determinism")

        # vanishing shell average of the bare angular factor
        for mode in (PARALLEL, RANDOM):
            s = SimulationSpec(mode=mode, n_dipoles=1000, realizations=1000, seed=7)
            _, d = _draw_dipoles(s, np.random.default_rng(123), 1000)
            d = d.ravel()
            assert abs(d.mean()) < 4.0 * d.std() / math.sqrt(d.size)
        crit.note("shell-average null")

        # step-transform closed form against oscillatory quadrature
        for geo in (GEO_P, GEO_R):
            a = 2.0 * geo.d_infinity
            for k in (0.1, 1.0, 10.0):
                direct = 2.0 * geo.d_infinity * quad(
                    lambda g: 1.0 / g ** 2, a, np.inf, weight="cos", wvar=k)[0]
                closed = float(_charfn_step(np.array([k]), geo.d_infinity)[0])
                assert abs(closed - direct) < 1e-8
        crit.note("step-transform closed form")
