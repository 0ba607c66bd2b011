"""Single-dipole field statistics.

The density of the reduced field of one dipole placed uniformly in a sphere
holding on average N dipoles factorizes as

    P_1N(g) = D(N g) / (N g^2),

where the geometry factor D(g) averages |d| over directions subject to
0 < d/g < 1.  Because |d| <= 2, D is constant (= D_inf) for |g| > 2, which
gives the density algebraic g^-2 tails: infinite variance, ill-defined mean.
This module evaluates D for both orientation modes, the resulting density,
its characteristic function, and the shift constant g_c (the symmetric-limits
first moment that survives despite the ill-defined mean).

Fourier convention throughout: forward transform integrates e^{-i k g},
the inverse carries e^{+i k g} / 2 pi.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.integrate import nquad, quad
from scipy.special import sici

from .errors import NumericalError
from .kernels import OrientationMode

__all__ = [
    "D_INF_PARALLEL",
    "D_INF_RANDOM",
    "GeometryFactor",
    "d_infinity",
    "geometry_factor",
    "geometry_factor_parallel",
    "geometry_factor_step",
    "geometry_factor_random",
    "geometry_factor_random_quadrature",
    "single_dipole_density",
    "charfn_single",
    "shift_constant",
    "shift_constant_parallel_closed_form",
    "limit_center",
]

_SQRT3 = math.sqrt(3.0)
_ASINH_SQRT3 = math.asinh(_SQRT3)

#: Tail value of the parallel-mode geometry factor, 2 / (3 sqrt 3).
D_INF_PARALLEL = 2.0 / (3.0 * _SQRT3)

#: Tail value of the random-orientation geometry factor,
#: 1/4 + sqrt(3)/24 * asinh(sqrt 3).
D_INF_RANDOM = 0.25 + _SQRT3 / 24.0 * _ASINH_SQRT3

# prefactor of the parallel closed form
_C3 = 1.0 / (3.0 * _SQRT3)
# density plateau of the random angular factor: d matches U * sqrt(1 + 3 V^2)
# in distribution (U, V independent uniform on [-1, 1]), whose density is
# constant asinh(sqrt 3) / (2 sqrt 3) for |d| <= 1.
_F_D_RANDOM_PLATEAU = _ASINH_SQRT3 / (2.0 * _SQRT3)


def d_infinity(mode: OrientationMode) -> float:
    """Asymptotic value D_inf of the geometry factor for ``mode``."""
    if mode is OrientationMode.PARALLEL_Z:
        return D_INF_PARALLEL
    if mode is OrientationMode.RANDOM_ISOTROPIC:
        return D_INF_RANDOM
    raise ValueError(f"unknown orientation mode: {mode!r}")


def geometry_factor_parallel(g):
    """Geometry factor of z-aligned dipoles.

    D(g) = (2 - (2 + g) sqrt(1 - g)) / (3 sqrt 3) for -2 < g < 1 and
    2 / (3 sqrt 3) otherwise; continuous, with a square-root kink at g = 1.
    """
    g = np.asarray(g, dtype=float)
    inner = (g > -2.0) & (g < 1.0)
    gi = np.where(inner, g, 0.0)
    d = np.where(inner, _C3 * (2.0 - (2.0 + gi) * np.sqrt(1.0 - gi)), 2.0 * _C3)
    return d if d.ndim else float(d)


def geometry_factor_step(g, d_infinity):
    """Step approximation: D_inf for |g| > 2 D_inf, else 0.

    The edge position 2 D_inf is fixed by normalization of the density
    D_inf / g^2 that the step generates.
    """
    if d_infinity <= 0.0:
        raise ValueError("d_infinity must be > 0")
    g = np.asarray(g, dtype=float)
    d = np.where(np.abs(g) > 2.0 * d_infinity, d_infinity, 0.0)
    return d if d.ndim else float(d)


def _geometry_factor_random_upper(g):
    """Closed form of the random-mode D on 1 <= |g| <= 2 (array input)."""
    g = np.abs(g)
    u = g * g - 1.0
    return (0.5 / _SQRT3) * (
        0.5 * _ASINH_SQRT3 * g * g
        - 0.5 * ((g * g - 0.5) * np.arcsinh(np.sqrt(u)) - 0.5 * g * np.sqrt(u))
    )


def geometry_factor_random(g):
    """Geometry factor of isotropically oriented dipoles (even in g).

    The angular factor has the same distribution as U sqrt(1 + 3 V^2) with
    U, V independent uniform on [-1, 1]: its density is flat for |d| <= 1,
    which makes D(g) exactly quadratic there and gives a closed form on
    1 < |g| < 2 as well.  ``geometry_factor_random_quadrature`` evaluates the
    defining angular average directly and is used to cross-check this form.
    """
    g = np.abs(np.asarray(g, dtype=float))
    plateau = 0.5 * _F_D_RANDOM_PLATEAU * g * g
    mid = np.where((g > 1.0) & (g < 2.0),
                   _geometry_factor_random_upper(np.where(g > 1.0, g, 1.5)),
                   0.0)
    d = np.where(g <= 1.0, plateau, np.where(g < 2.0, mid, D_INF_RANDOM))
    return d if d.ndim else float(d)


def _arc_average(mu1, mu2, g):
    """phi-average of d * 1(0 < d/g < 1) at fixed direction cosines.

    With d = a sin(phi) + b, a = sin(theta_1) sin(theta_2) >= 0 and
    b = -2 mu1 mu2, the admissible phi form arcs with closed-form measure
    and first moment, so only (mu1, mu2) are left to numerical quadrature.
    """
    a = math.sqrt(max(0.0, 1.0 - mu1 * mu1)) * math.sqrt(max(0.0, 1.0 - mu2 * mu2))
    b = -2.0 * mu1 * mu2
    if a <= 0.0:
        inside = (0.0 < b < g) if g > 0.0 else (g < b < 0.0)
        return abs(b) if inside else 0.0
    if g > 0.0:
        s1, s2 = -b / a, (g - b) / a
    else:
        s1, s2 = (g - b) / a, -b / a
    s1 = min(1.0, max(-1.0, s1))
    s2 = min(1.0, max(-1.0, s2))
    if s1 >= s2:
        return 0.0
    val = a * (math.sqrt(1.0 - s1 * s1) - math.sqrt(1.0 - s2 * s2)) \
        + b * (math.asin(s2) - math.asin(s1))
    return abs(val) / math.pi


def geometry_factor_random_quadrature(g, epsabs=1e-9):
    """Random-mode D(g) by deterministic quadrature of the angular average.

    Integrates the phi-reduced arc average over (mu1, mu2) in [-1, 1]^2 with
    the uniform-cosine measure.  Slow; intended as an independent route to
    validate :func:`geometry_factor_random`.

    Raises
    ------
    NumericalError
        If the quadrature error estimate exceeds the requested tolerance;
        the achieved estimate is attached.
    """
    g = float(g)
    if g == 0.0:
        return 0.0
    with warnings.catch_warnings():
        # kink curves in the integrand trip quadpack's roundoff warning;
        # convergence is judged from the returned error estimate instead
        warnings.simplefilter("ignore")
        opts = {"epsabs": epsabs, "epsrel": 1e-11, "limit": 200}
        val, err = nquad(lambda m2, m1: _arc_average(m1, m2, g),
                         [(-1.0, 1.0), (-1.0, 1.0)], opts=[opts, opts])
    val *= 0.25
    err *= 0.25
    if err > 1000.0 * epsabs:
        raise NumericalError(
            f"angular quadrature for D(g={g}) did not converge "
            f"(error estimate {err:.2e})",
            estimate=val, achieved=err)
    return val


@dataclass(frozen=True)
class GeometryFactor:
    """Geometry factor of one orientation mode.

    Attributes
    ----------
    mode : OrientationMode
    evaluator : callable mapping g -> D(g) >= 0
    d_infinity : asymptotic value, D(g) = d_infinity for |g| > 2
    """

    mode: OrientationMode
    evaluator: Callable
    d_infinity: float

    def __call__(self, g):
        return self.evaluator(g)


def geometry_factor(mode: OrientationMode) -> GeometryFactor:
    """Build the :class:`GeometryFactor` for an orientation mode."""
    if mode is OrientationMode.PARALLEL_Z:
        return GeometryFactor(mode, geometry_factor_parallel, D_INF_PARALLEL)
    if mode is OrientationMode.RANDOM_ISOTROPIC:
        return GeometryFactor(mode, geometry_factor_random, D_INF_RANDOM)
    raise ValueError(f"unknown orientation mode: {mode!r}")


# ---------------------------------------------------------------------------
# density D(g) / g^2, stable at g = 0
# ---------------------------------------------------------------------------

def _density_parallel(g):
    """D(g)/g^2 for the parallel mode; series below |g| = 1e-3 avoids the
    0/0 cancellation of the closed form (the limit at 0 is 1 / (4 sqrt 3))."""
    g = np.asarray(g, dtype=float)
    small = np.abs(g) < 1e-3
    gs = np.where(small, g, 0.0)
    series = _C3 * (0.75 + 0.25 * gs + (9.0 / 64.0) * gs * gs
                    + (3.0 / 32.0) * gs ** 3)
    gl = np.where(small, 1.0, g)
    direct = geometry_factor_parallel(gl) / (gl * gl)
    return np.where(small, series, direct)


def _density_random(g):
    """D(g)/g^2 for the random mode; exactly constant for |g| <= 1."""
    g = np.abs(np.asarray(g, dtype=float))
    out = np.full(g.shape, 0.5 * _F_D_RANDOM_PLATEAU)
    upper = g > 1.0
    gu = np.where(upper, g, 2.0)
    out = np.where(upper, geometry_factor_random(gu) / (gu * gu), out)
    return out


def _density(mode, g):
    if mode is OrientationMode.PARALLEL_Z:
        return _density_parallel(g)
    return _density_random(g)


def single_dipole_density(g, n_dipoles, geometry: GeometryFactor):
    """Density P_1N(g) = D(N g) / (N g^2) of one dipole among N.

    Satisfies the scaling P_1N(g) = N P_11(N g); the value at g = 0 is the
    finite analytic limit N D''(0) / 2.
    """
    if n_dipoles < 1:
        raise ValueError("n_dipoles must be >= 1")
    g = np.asarray(g, dtype=float)
    out = n_dipoles * _density(geometry.mode, n_dipoles * g)
    return out if out.ndim else float(out)


# ---------------------------------------------------------------------------
# characteristic function of P_11
# ---------------------------------------------------------------------------
#
# The transform is split into the step-approximation part, which has a closed
# form in terms of the sine integral, and a finite-support correction
#
#     corr(k) = int_{-2}^{2} e^{-i k g} (D(g) - D_step(g)) / g^2 dg,
#
# integrated segment by segment between the integrand's kinks with composite
# Gauss-Legendre rules.  Square-root kinks (at |g| = 1) are absorbed by the
# substitution g = +-(1 -+ u^2), after which every segment is smooth.

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(12)


def _composite_gl(lo, hi, nsub):
    """Nodes and weights of an nsub-panel composite 12-point GL rule."""
    edges = np.linspace(lo, hi, nsub + 1)
    mid = 0.5 * (edges[:-1] + edges[1:])[:, None]
    half = 0.5 * (edges[1:] - edges[:-1])[:, None]
    return (mid + half * _GL_NODES[None, :]).ravel(), \
        (half * _GL_WEIGHTS[None, :]).ravel()


def _parallel_segments():
    a = 2.0 * D_INF_PARALLEL

    def f_outer(g):
        return _density_parallel(g) - D_INF_PARALLEL / (g * g)

    def map_sqrt(u):
        # g = 1 - u^2 covers [a, 1]; sqrt(1 - g) = u is smooth here
        g = 1.0 - u * u
        f = (_C3 * (2.0 - (3.0 - u * u) * u) - D_INF_PARALLEL) / (g * g)
        return g, f * 2.0 * u

    segments = [
        # (u_lo, u_hi, max|dg/du|, node map u -> (g, f * jacobian))
        (-2.0, -a, 1.0, lambda u: (u, f_outer(u))),
        (-a, 0.0, 1.0, lambda u: (u, _density_parallel(u))),
        (0.0, a, 1.0, lambda u: (u, _density_parallel(u))),
        (0.0, math.sqrt(1.0 - a), 1.0, map_sqrt),
    ]
    # D equals D_inf on [1, 2]: that segment vanishes identically
    return segments


def _random_segments():
    a = 2.0 * D_INF_RANDOM
    c_half = 0.5 * _F_D_RANDOM_PLATEAU

    def f_outer(g):
        return c_half - D_INF_RANDOM / (g * g)

    def make_sqrt(sign):
        def map_sqrt(u):
            # g = sign (1 + u^2) covers 1 <= |g| <= 2
            g = sign * (1.0 + u * u)
            f = (_geometry_factor_random_upper(g) - D_INF_RANDOM) / (g * g)
            return g, f * 2.0 * u
        return map_sqrt

    return [
        (0.0, 1.0, 2.0, make_sqrt(-1.0)),
        (-1.0, -a, 1.0, lambda u: (u, f_outer(u))),
        (-a, 0.0, 1.0, lambda u: (u, np.full(u.shape, c_half))),
        (0.0, a, 1.0, lambda u: (u, np.full(u.shape, c_half))),
        (a, 1.0, 1.0, lambda u: (u, f_outer(u))),
        (0.0, 1.0, 2.0, make_sqrt(1.0)),
    ]


_SEGMENTS = {
    OrientationMode.PARALLEL_Z: _parallel_segments(),
    OrientationMode.RANDOM_ISOTROPIC: _random_segments(),
}


def _charfn_correction(mode, k):
    """Correction transform for an array of wavenumbers k."""
    out = np.zeros(k.shape, dtype=complex)
    kmax = float(np.abs(k).max()) if k.size else 0.0
    for u_lo, u_hi, rate, node_map in _SEGMENTS[mode]:
        # keep the phase change per GL panel below ~4 rad
        nsub = int(math.ceil((u_hi - u_lo) * rate * kmax / 4.0)) + 2
        u, w = _composite_gl(u_lo, u_hi, nsub)
        g, fj = node_map(u)
        out += np.exp(-1j * np.outer(k, g)) @ (w * fj)
    return out


def _charfn_step(k, d_inf):
    """Closed form of the step-approximation transform.

    Uses int_0^x (1 - cos t) / t^2 dt = Si(x) - (1 - cos x) / x, with the
    small-x series of the last term to avoid 0/0.
    """
    x = 2.0 * np.abs(k) * d_inf
    si, _ = sici(x)
    safe = np.where(x > 1e-8, x, 1.0)
    one_minus_cos = np.where(x > 1e-8, (1.0 - np.cos(safe)) / safe, x / 2.0)
    return 1.0 - 2.0 * np.abs(k) * d_inf * (0.5 * math.pi - (si - one_minus_cos))


def charfn_single(k, geometry: GeometryFactor):
    """Characteristic function of the single-dipole density P_11.

    Small-k behaviour: 1 - pi D_inf |k| - i k g_c + O(k^2).

    Parameters
    ----------
    k : array_like
        Real wavenumber conjugate to g (any magnitude).
    geometry : GeometryFactor

    Returns
    -------
    complex or complex ndarray.
    """
    k = np.asarray(k, dtype=float)
    if not np.all(np.isfinite(k)):
        raise ValueError("k must be finite")
    kv = np.atleast_1d(k)
    val = _charfn_step(kv, geometry.d_infinity) \
        + _charfn_correction(geometry.mode, kv)
    return val if k.ndim else complex(val[0])


# ---------------------------------------------------------------------------
# shift constant
# ---------------------------------------------------------------------------

def shift_constant(geometry: GeometryFactor, g0=3.0):
    """Symmetric-limits first moment g_c = int_{-g0}^{g0} g P_11(g) dg.

    Independent of g0 for any g0 > 2: the integrand equals D_inf / g there,
    so the outer contributions cancel in pairs.
    """
    g0 = float(g0)
    if g0 <= 2.0:
        raise ValueError("g0 must be > 2")
    mode = geometry.mode
    kinks = [p for p in (-2.0, -1.0, 0.0, 1.0, 2.0) if -g0 < p < g0]
    val, err = quad(lambda g: g * float(_density(mode, np.asarray(g))),
                    -g0, g0, points=kinks, limit=400,
                    epsabs=1e-13, epsrel=1e-13)
    if err > 1e-9:
        raise NumericalError(
            f"shift-constant quadrature error estimate {err:.2e} too large",
            estimate=val, achieved=err)
    return val


def shift_constant_parallel_closed_form():
    """Closed form of g_c for the parallel mode,
    (2/9) (3 + sqrt 3 log((sqrt 3 - 1)/(sqrt 3 + 1))) ~ 0.1598."""
    return (2.0 / 9.0) * (3.0 + _SQRT3 * math.log((_SQRT3 - 1.0) / (_SQRT3 + 1.0)))


def limit_center(mode: OrientationMode) -> float:
    """Center g_c of the limiting distribution: the parallel closed form, or
    exactly 0 for random orientation (D is even)."""
    if mode is OrientationMode.PARALLEL_Z:
        return shift_constant_parallel_closed_form()
    if mode is OrientationMode.RANDOM_ISOTROPIC:
        return 0.0
    raise ValueError(f"unknown orientation mode: {mode!r}")
