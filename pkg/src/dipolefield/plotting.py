"""Figure rendering for curves, histograms and comparisons.

Matplotlib is imported lazily and driven through the Agg backend so figures
can be written next to the CSV/JSON outputs from headless runs.
"""

from __future__ import annotations

import math

__all__ = [
    "save_curve_figure",
    "save_histogram_figure",
    "save_comparison_figure",
]


def _figure():
    import matplotlib
    matplotlib.use("Agg", force=False)
    import matplotlib.pyplot as plt
    fig, ax = plt.subplots(figsize=(6.4, 4.2), constrained_layout=True)
    ax.set_xlabel("reduced field $g$")
    ax.set_ylabel("$P(g)$")
    ax.grid(alpha=0.3)
    return fig, ax


def _save(fig, path):
    fig.savefig(path, dpi=150)
    import matplotlib.pyplot as plt
    plt.close(fig)


def _curve_label(curve):
    parts = []
    if curve.mode is not None:
        parts.append(curve.mode.value)
    if curve.epsilon is not None:
        parts.append(f"$\\epsilon$={curve.epsilon:g}")
    return ", ".join(parts) or "curve"


def save_curve_figure(curves, path):
    """Render one or more density curves to an image file."""
    if not isinstance(curves, (list, tuple)):
        curves = [curves]
    fig, ax = _figure()
    for curve in curves:
        ax.plot(curve.g, curve.density, lw=1.5, label=_curve_label(curve))
    if len(curves) > 1 or curves[0].epsilon is not None:
        ax.legend()
    _save(fig, path)


def save_histogram_figure(histogram, path):
    """Render a field histogram (normalized heights) to an image file."""
    fig, ax = _figure()
    centers = 0.5 * (histogram.edges[:-1] + histogram.edges[1:])
    ax.step(centers, histogram.heights, where="mid", lw=1.0)
    if histogram.spec is not None:
        ax.set_title(
            f"{histogram.spec.mode.value}, $\\epsilon$={histogram.spec.epsilon:g}, "
            f"N={histogram.spec.n_dipoles}, M={histogram.spec.realizations}")
    _save(fig, path)


def save_comparison_figure(histogram, curve, path, report=None):
    """Overlay a histogram with the analytic curve it was compared against."""
    fig, ax = _figure()
    centers = 0.5 * (histogram.edges[:-1] + histogram.edges[1:])
    ax.step(centers, histogram.heights, where="mid", lw=1.0,
            label="simulation", color="C0")
    ax.plot(curve.g, curve.density, lw=1.5, label=_curve_label(curve), color="C1")
    ax.set_xlim(histogram.edges[0], histogram.edges[-1])
    if report is not None and math.isfinite(report.max_z):
        ax.set_title(f"{report.verdict}: max |z| = {report.max_z:.2f}, "
                     f"$\\chi^2$/dof = {report.chi2_per_dof:.3f}")
    ax.legend()
    _save(fig, path)
