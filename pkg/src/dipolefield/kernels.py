"""Dipole field kernels.

The z-component of the field of a single point dipole at distance r and
direction angles (theta_1, theta_2, phi) from the probe is

    F_z = C r^-3 d,

where d is a dimensionless angular factor bounded by 2 in magnitude.  With
the typical spacing r0 = (3 / 4 pi rho)^(1/3) and field scale F0 = C r0^-3,
a dipole at cubed reduced radius x = (r/r0)^3 contributes the reduced field
g = d / x.  Everything here is pure and vectorized; directions are
parametrized by cosines, which are uniform under the isotropic measure.
"""

from __future__ import annotations

import enum
import math

import numpy as np

__all__ = [
    "OrientationMode",
    "angular_factor_parallel",
    "angular_factor_random",
    "reduced_field_contribution",
    "physical_field",
    "field_scale",
]


class OrientationMode(enum.Enum):
    """Orientation law of the dipole moments."""

    PARALLEL_Z = "parallel"
    RANDOM_ISOTROPIC = "random"

    @classmethod
    def parse(cls, name: str) -> "OrientationMode":
        for mode in cls:
            if name == mode.value or name == mode.name:
                return mode
        raise ValueError(
            f"mode must be one of {[m.value for m in cls]}, got {name!r}"
        )


def _check_interval(name, value, lo, hi, open_right=False):
    value = np.asarray(value, dtype=float)
    bad = (value < lo) | ((value >= hi) if open_right else (value > hi))
    if np.any(bad):
        hi_b = ")" if open_right else "]"
        raise ValueError(f"{name} must lie in [{lo}, {hi}{hi_b}")
    return value


def angular_factor_parallel(mu):
    """Angular factor d = 1 - 3 mu^2 for dipoles aligned with the z-axis.

    Parameters
    ----------
    mu : array_like
        Cosine of the polar angle of the dipole position, in [-1, 1].

    Returns
    -------
    float or ndarray in [-2, 1].
    """
    mu = _check_interval("mu", mu, -1.0, 1.0)
    d = 1.0 - 3.0 * mu * mu
    return d if d.ndim else float(d)


def angular_factor_random(mu1, mu2, phi):
    """Angular factor for an isotropically oriented dipole.

    d = sin(theta_1) sin(theta_2) sin(phi) - 2 cos(theta_1) cos(theta_2),
    with theta_1 the polar angle of the dipole position, theta_2 the angle
    between position and moment, and phi the rotation of the moment around
    the position axis.  Sines are the nonnegative roots sqrt(1 - mu^2); the
    sign is carried by phi.

    Parameters
    ----------
    mu1, mu2 : array_like
        Direction cosines in [-1, 1].
    phi : array_like
        Azimuth in [0, 2 pi).

    Returns
    -------
    float or ndarray in [-2, 2].
    """
    mu1 = _check_interval("mu1", mu1, -1.0, 1.0)
    mu2 = _check_interval("mu2", mu2, -1.0, 1.0)
    phi = _check_interval("phi", phi, 0.0, 2.0 * math.pi, open_right=True)
    sin1 = np.sqrt(1.0 - mu1 * mu1)
    sin2 = np.sqrt(1.0 - mu2 * mu2)
    d = sin1 * sin2 * np.sin(phi) - 2.0 * mu1 * mu2
    return d if d.ndim else float(d)


def reduced_field_contribution(x, d):
    """Reduced field g = d / x of one dipole at cubed reduced radius x > 0."""
    x = np.asarray(x, dtype=float)
    if np.any(x <= 0.0):
        raise ValueError("x must be > 0")
    g = np.asarray(d, dtype=float) / x
    return g if g.ndim else float(g)


def field_scale(dipole_strength, density):
    """Typical field F0 = C r0^-3 = C * 4 pi rho / 3 for number density rho."""
    if density <= 0.0:
        raise ValueError("density must be > 0")
    return dipole_strength * (4.0 * math.pi / 3.0) * density


def physical_field(g, dipole_strength, density):
    """Convert a reduced field g to physical units, F_z = g * F0."""
    f = np.asarray(g, dtype=float) * field_scale(dipole_strength, density)
    return f if f.ndim else float(f)
