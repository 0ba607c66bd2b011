"""Direct simulation of the summed dipole field.

Each realization places exactly ``n_dipoles`` dipoles uniformly in a
spherical shell around the probe and sums their reduced-field contributions
d/x.  The cubed reduced radius x = (r/r0)^3 is itself uniform for a uniform
spatial density, so an excluded core of epsilon mean dipoles turns the
radial draw into a uniform draw on (epsilon, n + epsilon].

Reproducibility contract: realizations are partitioned into fixed blocks of
``BLOCK_REALIZATIONS``; block i uses a counter-based Philox stream keyed by
(seed, i).  Results are therefore bit-identical for a given (seed, spec)
regardless of how many workers process the blocks.
"""

from __future__ import annotations

import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.integrate import cumulative_trapezoid

from ._io import SchemaError, atomic_write_text, fmt, split_csv
from .kernels import OrientationMode, angular_factor_parallel, angular_factor_random
from .limits import DistributionCurve

__all__ = [
    "SimulationSpec",
    "FieldHistogram",
    "ComparisonReport",
    "sample_realization",
    "run_simulation",
    "compare",
    "BLOCK_REALIZATIONS",
]

#: Realizations per RNG block; part of the reproducibility contract.
BLOCK_REALIZATIONS = 4096

# scalars drawn per chunk; keeps transient arrays around 16 MB
_CHUNK_SCALARS = 2_000_000

# histogram memory budget
_MAX_BINS = 8_388_608


@dataclass(frozen=True)
class SimulationSpec:
    """Full description of one Monte Carlo experiment."""

    mode: OrientationMode
    n_dipoles: int
    realizations: int
    epsilon: float = 0.0
    seed: int = 0
    g_min: float = -8.0
    g_max: float = 8.0
    bins: int = 401

    def __post_init__(self):
        if not isinstance(self.mode, OrientationMode):
            raise ValueError("mode must be an OrientationMode")
        if self.n_dipoles < 1:
            raise ValueError(f"n_dipoles must be >= 1, got {self.n_dipoles}")
        if self.realizations < 1:
            raise ValueError(f"realizations must be >= 1, got {self.realizations}")
        if self.epsilon < 0.0:
            raise ValueError(f"epsilon must be >= 0, got {self.epsilon}")
        if not 0 <= self.seed < 2 ** 64:
            raise ValueError("seed must fit in 64 bits")
        if not self.g_min < self.g_max:
            raise ValueError(f"g_min must be < g_max, got [{self.g_min}, {self.g_max}]")
        if self.bins < 2:
            raise ValueError(f"bins must be >= 2, got {self.bins}")
        if self.bins > _MAX_BINS:
            raise ValueError(
                f"bins={self.bins} exceeds the {_MAX_BINS} budget "
                f"({_MAX_BINS * 8 // 2**20} MiB of counts)")

    @property
    def edges(self) -> np.ndarray:
        return np.linspace(self.g_min, self.g_max, self.bins + 1)


def _draw_dipoles(spec: SimulationSpec, rng, count: int):
    """Draw positions and angular factors for ``count`` realizations.

    Returns (x, d) arrays of shape (count, n_dipoles).  Draw order is fixed:
    x, mu, then (mu2, phi) in random-orientation mode.  x is sampled on the
    half-open interval (epsilon, n + epsilon] so x = 0 never occurs.
    """
    shape = (count, spec.n_dipoles)
    x = spec.epsilon + spec.n_dipoles * (1.0 - rng.random(shape))
    mu = rng.uniform(-1.0, 1.0, shape)
    if spec.mode is OrientationMode.PARALLEL_Z:
        d = angular_factor_parallel(mu)
    else:
        mu2 = rng.uniform(-1.0, 1.0, shape)
        phi = rng.uniform(0.0, 2.0 * math.pi, shape)
        d = angular_factor_random(mu, mu2, phi)
    return x, d


def sample_realization(spec: SimulationSpec, rng) -> float:
    """One realization: the summed reduced field of n_dipoles dipoles."""
    x, d = _draw_dipoles(spec, rng, 1)
    return float(np.sum(d / x))


def _block_rng(seed: int, block: int):
    return np.random.Generator(
        np.random.Philox(key=np.array([seed, block], dtype=np.uint64)))


def _merge_moments(a, b):
    """Chan's parallel combination of (n, mean, m2) accumulators."""
    n_a, mean_a, m2_a = a
    n_b, mean_b, m2_b = b
    n = n_a + n_b
    if n == 0:
        return (0, 0.0, 0.0)
    delta = mean_b - mean_a
    mean = mean_a + delta * n_b / n
    m2 = m2_a + m2_b + delta * delta * n_a * n_b / n
    return (n, mean, m2)


def _run_block(spec: SimulationSpec, block: int):
    """Simulate one block of realizations; returns partial accumulators."""
    start = block * BLOCK_REALIZATIONS
    m = min(BLOCK_REALIZATIONS, spec.realizations - start)
    rng = _block_rng(spec.seed, block)
    counts = np.zeros(spec.bins, dtype=np.int64)
    under = over = 0
    moments = (0, 0.0, 0.0)
    chunk = max(1, _CHUNK_SCALARS // spec.n_dipoles)
    done = 0
    while done < m:
        c = min(chunk, m - done)
        x, d = _draw_dipoles(spec, rng, c)
        g = np.sum(d / x, axis=1)
        hist, _ = np.histogram(g, bins=spec.bins, range=(spec.g_min, spec.g_max))
        counts += hist
        under += int(np.count_nonzero(g < spec.g_min))
        over += int(np.count_nonzero(g > spec.g_max))
        mean_c = float(g.mean())
        m2_c = float(np.sum((g - mean_c) ** 2))
        moments = _merge_moments(moments, (c, mean_c, m2_c))
        done += c
    return counts, under, over, moments


@dataclass
class FieldHistogram:
    """Binned empirical distribution of the summed reduced field.

    ``mean``/``m2`` are streaming moments of all realizations (including
    those outside the binning range).  With no excluded volume the field
    distribution has algebraic tails and no finite variance, so the variance
    estimate never converges; ``variance_converged`` flags that.
    """

    edges: np.ndarray
    counts: np.ndarray
    underflow: int
    overflow: int
    realizations: int
    mean: float
    m2: float
    spec: Optional[SimulationSpec] = None

    def __post_init__(self):
        self.edges = np.asarray(self.edges, dtype=float)
        self.counts = np.asarray(self.counts, dtype=np.int64)
        if self.counts.size != self.edges.size - 1:
            raise ValueError("counts must have one entry per bin")
        total = int(self.counts.sum()) + self.underflow + self.overflow
        if total != self.realizations:
            raise ValueError(
                f"counts + underflow + overflow = {total} does not match "
                f"realizations = {self.realizations}")

    @property
    def bin_width(self) -> float:
        return float(self.edges[1] - self.edges[0])

    @property
    def heights(self) -> np.ndarray:
        """Normalized bin heights; integrate to the in-range fraction."""
        return self.counts / (self.realizations * self.bin_width)

    @property
    def variance(self) -> float:
        if self.realizations < 2:
            return math.nan
        return self.m2 / (self.realizations - 1)

    @property
    def variance_converged(self) -> bool:
        return self.spec is not None and self.spec.epsilon > 0.0

    @property
    def mean_standard_error(self) -> float:
        if self.realizations < 2:
            return math.nan
        return math.sqrt(self.variance / self.realizations)

    # -- interchange -------------------------------------------------------

    _COLUMNS = ("bin_left", "bin_right", "count", "normalized_height")

    def _meta(self) -> dict:
        meta = {
            "underflow": self.underflow,
            "overflow": self.overflow,
            "realizations": self.realizations,
            "mean": fmt(self.mean),
            "m2": fmt(self.m2),
        }
        if self.spec is not None:
            meta.update({
                "mode": self.spec.mode.value,
                "epsilon": fmt(self.spec.epsilon),
                "n_dipoles": self.spec.n_dipoles,
                "seed": self.spec.seed,
                "g_min": fmt(self.spec.g_min),
                "g_max": fmt(self.spec.g_max),
                "bins": self.spec.bins,
                "variance_converged": self.variance_converged,
            })
        return meta

    def to_csv_text(self) -> str:
        lines = ["# dipolefield histogram"]
        for key, value in self._meta().items():
            lines.append(f"# {key}={value}")
        lines.append(",".join(self._COLUMNS))
        heights = self.heights
        for i in range(self.counts.size):
            lines.append(f"{fmt(self.edges[i])},{fmt(self.edges[i + 1])},"
                         f"{int(self.counts[i])},{fmt(heights[i])}")
        return "\n".join(lines) + "\n"

    def to_json_dict(self) -> dict:
        return {
            "kind": "histogram",
            "meta": {k: (v if isinstance(v, (int, bool)) else str(v))
                     for k, v in self._meta().items()},
            "edges": [float(v) for v in self.edges],
            "counts": [int(v) for v in self.counts],
        }

    @classmethod
    def _from_parts(cls, meta, edges, counts):
        spec = None
        if "mode" in meta:
            spec = SimulationSpec(
                mode=OrientationMode.parse(str(meta["mode"])),
                n_dipoles=int(meta["n_dipoles"]),
                realizations=int(meta["realizations"]),
                epsilon=float(meta["epsilon"]),
                seed=int(meta["seed"]),
                g_min=float(meta["g_min"]),
                g_max=float(meta["g_max"]),
                bins=int(meta["bins"]),
            )
        try:
            return cls(
                edges=edges,
                counts=counts,
                underflow=int(meta["underflow"]),
                overflow=int(meta["overflow"]),
                realizations=int(meta["realizations"]),
                mean=float(meta["mean"]),
                m2=float(meta["m2"]),
                spec=spec,
            )
        except KeyError as exc:
            raise SchemaError(f"histogram metadata is missing {exc}") from None

    @classmethod
    def from_csv_text(cls, text: str) -> "FieldHistogram":
        meta, rows = split_csv(text, cls._COLUMNS)
        try:
            lefts = np.array([float(r[0]) for r in rows])
            rights = np.array([float(r[1]) for r in rows])
            counts = np.array([int(r[2]) for r in rows], dtype=np.int64)
        except ValueError as exc:
            raise SchemaError(f"non-numeric cell in histogram data: {exc}") from None
        edges = np.append(lefts, rights[-1])
        return cls._from_parts(meta, edges, counts)

    @classmethod
    def from_json_dict(cls, obj: dict) -> "FieldHistogram":
        if obj.get("kind") != "histogram":
            raise SchemaError("JSON object is not a histogram (kind != 'histogram')")
        return cls._from_parts(obj["meta"],
                               np.asarray(obj["edges"], dtype=float),
                               np.asarray(obj["counts"], dtype=np.int64))

    def save(self, path, fmt_name=None) -> None:
        fmt_name = fmt_name or ("json" if os.fspath(path).lower().endswith(".json") else "csv")
        if fmt_name == "json":
            atomic_write_text(path, json.dumps(self.to_json_dict()) + "\n")
        else:
            atomic_write_text(path, self.to_csv_text())

    @classmethod
    def load(cls, path) -> "FieldHistogram":
        with open(path) as fh:
            text = fh.read()
        if os.fspath(path).lower().endswith(".json") or text.lstrip().startswith("{"):
            return cls.from_json_dict(json.loads(text))
        return cls.from_csv_text(text)


def run_simulation(spec: SimulationSpec, workers: int = 1) -> FieldHistogram:
    """Accumulate ``spec.realizations`` independent realizations.

    Blocks are independent work units; partial histograms merge by summation
    and moments by Chan's formula, always folded in block order, so the
    result does not depend on ``workers``.
    """
    n_blocks = math.ceil(spec.realizations / BLOCK_REALIZATIONS)
    if workers > 1 and n_blocks > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_block, [spec] * n_blocks,
                                    range(n_blocks), chunksize=1))
    else:
        results = [_run_block(spec, b) for b in range(n_blocks)]

    counts = np.zeros(spec.bins, dtype=np.int64)
    under = over = 0
    moments = (0, 0.0, 0.0)
    for c, u, o, m in results:
        counts += c
        under += u
        over += o
        moments = _merge_moments(moments, m)
    n, mean, m2 = moments
    return FieldHistogram(
        edges=spec.edges, counts=counts, underflow=under, overflow=over,
        realizations=n, mean=mean, m2=m2, spec=spec)


# ---------------------------------------------------------------------------
# histogram vs analytic-curve comparison
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ComparisonReport:
    """Agreement metrics between an empirical histogram and a density curve.

    ``max_z`` is the largest per-bin deviation in units of the Poisson
    standard error sqrt(expected); bins with expected count below
    ``min_expected`` are excluded from z and chi-square (their number is
    reported).  PASS requires max_z <= threshold and chi2/dof inside the
    configured band.
    """

    sup_norm: float
    max_z: float
    chi2: float
    dof: int
    excluded_bins: int
    threshold: float
    chi2_band: tuple
    passed: bool

    @property
    def chi2_per_dof(self) -> float:
        return self.chi2 / self.dof if self.dof > 0 else math.nan

    @property
    def verdict(self) -> str:
        return "PASS" if self.passed else "FAIL"

    def to_json_dict(self) -> dict:
        return {
            "kind": "comparison",
            "sup_norm": self.sup_norm,
            "max_z": self.max_z,
            "chi2": self.chi2,
            "dof": self.dof,
            "chi2_per_dof": self.chi2_per_dof,
            "excluded_bins": self.excluded_bins,
            "threshold": self.threshold,
            "chi2_band": list(self.chi2_band),
            "verdict": self.verdict,
        }

    def to_csv_text(self) -> str:
        lines = ["# dipolefield report", "key,value"]
        for key, value in self.to_json_dict().items():
            if key == "kind":
                continue
            if key == "chi2_band":
                value = f"{value[0]}:{value[1]}"
            lines.append(f"{key},{value}")
        return "\n".join(lines) + "\n"

    def save(self, path, fmt_name=None) -> None:
        fmt_name = fmt_name or ("json" if os.fspath(path).lower().endswith(".json") else "csv")
        if fmt_name == "json":
            atomic_write_text(path, json.dumps(self.to_json_dict()) + "\n")
        else:
            atomic_write_text(path, self.to_csv_text())


def compare(histogram: FieldHistogram, curve: DistributionCurve,
            threshold: float = 5.0, chi2_band=(0.8, 1.3),
            min_expected: float = 10.0) -> ComparisonReport:
    """Quantify the agreement of a simulated histogram with a density curve.

    Expected bin counts come from the trapezoid cumulative of the curve, so
    the curve grid must be finer than the bins and must span the full
    binning range.
    """
    edges = histogram.edges
    if curve.step >= histogram.bin_width:
        raise ValueError(
            f"curve grid step {curve.step:.4g} must be finer than the "
            f"histogram bin width {histogram.bin_width:.4g}")
    if curve.g[0] > edges[0] or curve.g[-1] < edges[-1]:
        raise ValueError(
            f"curve support [{curve.g[0]:.4g}, {curve.g[-1]:.4g}] does not "
            f"cover the binning range [{edges[0]:.4g}, {edges[-1]:.4g}]")

    cdf = np.concatenate(([0.0], cumulative_trapezoid(curve.density, curve.g)))
    prob = np.diff(np.interp(edges, curve.g, cdf))
    m = histogram.realizations
    expected = m * prob

    heights = histogram.heights
    analytic_heights = prob / histogram.bin_width
    sup_norm = float(np.max(np.abs(heights - analytic_heights)))

    included = expected >= min_expected
    dof = int(np.count_nonzero(included))
    if dof > 0:
        resid = histogram.counts[included] - expected[included]
        z = resid / np.sqrt(expected[included])
        max_z = float(np.max(np.abs(z)))
        chi2 = float(np.sum(z * z))
    else:
        max_z = math.inf
        chi2 = math.inf
    chi2_per_dof = chi2 / dof if dof > 0 else math.inf
    passed = (dof > 0 and max_z <= threshold
              and chi2_band[0] <= chi2_per_dof <= chi2_band[1])
    return ComparisonReport(
        sup_norm=sup_norm, max_z=max_z, chi2=chi2, dof=dof,
        excluded_bins=int(histogram.counts.size - dof),
        threshold=float(threshold), chi2_band=tuple(chi2_band), passed=passed)
