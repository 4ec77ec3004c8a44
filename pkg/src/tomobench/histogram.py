"""Density-normalised histograms with a per-bin error model."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .states import DEFAULT_HBAR, StateSpec, tomogram_cdf, tomogram_pdf

DEFAULT_BIN_WIDTH = 0.075


@dataclass(frozen=True)
class BinSpec:
    """Uniform bins; bin ``i`` covers ``[anchor + width*i, anchor + width*(i+1))``."""

    width: float = DEFAULT_BIN_WIDTH
    anchor: float = 0.0

    def __post_init__(self):
        if not (self.width > 0 and math.isfinite(self.width)):
            raise ValueError("bin width must be positive")

    def index(self, x) -> np.ndarray:
        return np.floor((np.asarray(x, dtype=float) - self.anchor) / self.width).astype(np.int64)

    def centers(self, lo: int, hi: int) -> np.ndarray:
        """Centers of bins ``lo .. hi - 1``."""
        return self.anchor + self.width * (np.arange(lo, hi) + 0.5)

    def mirror_index(self, i):
        """Index of the bin holding ``-x`` for ``x`` in bin ``i`` (anchor 0 only)."""
        if self.anchor != 0.0:
            raise ValueError("mirroring requires anchor 0")
        return -np.asarray(i) - 1


def stat_error(h, n, b):
    """Poisson error of a histogram density: ``sqrt(h / (n b))``."""
    return np.sqrt(np.asarray(h, dtype=float) / (n * b))


def undersampling_error(h, b, d=1):
    """Error from washing out tomogram oscillations: ``h b sqrt(2 d) / pi``."""
    return np.asarray(h, dtype=float) * b * np.sqrt(2 * d) / np.pi


def optimal_bin_width(h, n, d=1, hbar=DEFAULT_HBAR) -> float:
    """Bin width minimising ``stat_error + undersampling_error``.

    ``h`` is the density in dimensionless (hbar-free) units; the minimiser
    ``(pi^2 / (8 h n d))^(1/3)`` is then scaled by ``sqrt(hbar)`` to quadrature
    units.
    """
    if not h > 0:
        raise ValueError("density must be positive; the error diverges at h = 0")
    if n < 1 or d < 1:
        raise ValueError("n and d must be >= 1")
    return math.sqrt(hbar) * (math.pi**2 / (8.0 * h * n * d)) ** (1.0 / 3.0)


def rule_of_thumb_widths(samples, n: int | None = None) -> dict:
    """Scott, Sturges and square-root bin widths.

    ``n`` is the sample count entering the rules; it defaults to
    ``len(samples)``.  Pass the per-phase count when ``samples`` pools several
    phases.
    """
    x = np.asarray(samples, dtype=float)
    if x.size < 2:
        raise ValueError("need at least two samples")
    n = x.size if n is None else int(n)
    spread = float(np.ptp(x))
    if spread == 0:
        raise ValueError("samples have zero range")
    sturges_bins = math.ceil(math.log2(n) + 1)
    return {
        "scott": 3.5 * float(x.std(ddof=1)) / n ** (1.0 / 3.0),
        "sturges_bins": sturges_bins,
        "sturges_width": spread / sturges_bins,
        "sqrt_width": spread / math.sqrt(n),
    }


@dataclass
class Histogram:
    """Binned density estimate of one tomogram slice.

    ``counts`` and ``total`` are ``None`` for histograms tabulated from an
    analytic tomogram rather than counted from samples.
    """

    spec: BinSpec
    theta: float
    start: int
    densities: np.ndarray
    counts: np.ndarray | None = None
    total: int | None = None
    fock_cutoff: int = 1

    @property
    def stop(self) -> int:
        return self.start + len(self.densities)

    @property
    def centers(self) -> np.ndarray:
        return self.spec.centers(self.start, self.stop)

    @property
    def stat_errors(self) -> np.ndarray:
        if self.total is None:
            return np.zeros_like(self.densities)
        return stat_error(self.densities, self.total, self.spec.width)

    @property
    def undersampling_errors(self) -> np.ndarray:
        return undersampling_error(self.densities, self.spec.width, self.fock_cutoff)

    def on_range(self, lo: int, hi: int) -> np.ndarray:
        """Densities of bins ``lo .. hi - 1``, zero outside the populated range."""
        out = np.zeros(hi - lo)
        a, b = max(lo, self.start), min(hi, self.stop)
        if a < b:
            out[a - lo:b - lo] = self.densities[a - self.start:b - self.start]
        return out

    def counts_on_range(self, lo: int, hi: int) -> np.ndarray:
        if self.counts is None:
            raise ValueError("analytic histogram has no counts")
        out = np.zeros(hi - lo, dtype=np.int64)
        a, b = max(lo, self.start), min(hi, self.stop)
        if a < b:
            out[a - lo:b - lo] = self.counts[a - self.start:b - self.start]
        return out

    def moment(self, n: int) -> float:
        return float(np.sum(self.spec.width * self.densities * self.centers**n))


def build_histogram(samples, spec: BinSpec | None = None, theta: float = 0.0, fock_cutoff: int = 1) -> Histogram:
    spec = spec or BinSpec()
    x = np.asarray(samples, dtype=float)
    if x.size == 0:
        raise ValueError("cannot histogram an empty sample")
    idx = spec.index(x)
    start = int(idx.min())
    counts = np.bincount(idx - start)
    densities = counts / (x.size * spec.width)
    return Histogram(spec, float(theta), start, densities, counts, int(x.size), fock_cutoff)


def analytic_histogram(state: StateSpec, theta: float, spec: BinSpec | None = None, half_width: float | None = None,
                       bin_average: bool = False) -> Histogram:
    """Noise-free histogram of an analytic tomogram.

    Densities are tomogram values at bin centers, or exact bin averages when
    ``bin_average`` is set.  Bins cover ``[-half_width, half_width]``, by
    default ``6 sqrt(hbar) (1 + |alpha|)``.
    """
    spec = spec or BinSpec()
    if half_width is None:
        half_width = 6.0 * math.sqrt(state.hbar) * (1.0 + abs(state.alpha))
    lo, hi = int(spec.index(-half_width)), int(spec.index(half_width)) + 1
    if bin_average:
        edges = spec.anchor + spec.width * np.arange(lo, hi + 1)
        densities = np.diff(tomogram_cdf(state, edges, theta)) / spec.width
    else:
        densities = tomogram_pdf(state, spec.centers(lo, hi), theta)
    return Histogram(spec, float(theta), lo, np.asarray(densities, dtype=float))


def mirrored_histogram(samples, spec: BinSpec | None = None, theta: float = 0.0, fock_cutoff: int = 1) -> Histogram:
    """Histogram of ``-X``, i.e. the estimate of ``w(-X, theta)``."""
    return build_histogram(-np.asarray(samples, dtype=float), spec, theta, fock_cutoff)


def histogram_table(h: Histogram) -> dict:
    """Columns of the per-phase histogram export."""
    return {
        "bin_center": h.centers,
        "density": h.densities,
        "stat_err": h.stat_errors,
        "und_err": h.undersampling_errors,
    }
