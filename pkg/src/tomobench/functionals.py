"""Purity and fidelity computed directly from tomogram histograms.

All integrals run in dimensionless quadrature units ``u = X / sqrt(hbar)``,
in which the overlap formula

    mu = (1/pi) int_0^inf r dr  iint cos((X + Y) r) P(X, Y) dX dY,
    P(X, Y) = int_0^pi w(X, theta) w(-Y, theta) dtheta

needs no extra hbar factor.  Histograms are rescaled on entry.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .histogram import BinSpec, Histogram, analytic_histogram, build_histogram
from .sampler import QuadratureDataset
from .states import TWO_PI, StateSpec, normalize_phase, tomogram_pdf

DEFAULT_R_MAX = 8.0
DEFAULT_R_STEP = 0.05
SATURATION_SLOPE = 1e-3
DEFAULT_CUTOFF = 3.0  # |X| window of the kernel grid, quadrature units


class InsufficientPhases(ValueError):
    pass


def dataset_histograms(dataset: QuadratureDataset, spec: BinSpec | None = None) -> list[Histogram]:
    spec = spec or BinSpec()
    return [build_histogram(b.samples, spec, b.theta) for b in dataset.blocks]


def analytic_histograms(state: StateSpec, phases, spec: BinSpec | None = None, half_width: float | None = None,
                        bin_average: bool = False) -> list[Histogram]:
    return [analytic_histogram(state, t, spec, half_width, bin_average) for t in phases]


def flip(h: Histogram) -> Histogram:
    """``h(-X)`` on the same grid (anchor 0)."""
    if h.spec.anchor != 0.0:
        raise ValueError("mirroring requires anchor 0")
    counts = None if h.counts is None else h.counts[::-1].copy()
    return Histogram(h.spec, h.theta, -h.stop, h.densities[::-1].copy(), counts, h.total, h.fock_cutoff)


def half_circles(slices: list[Histogram]) -> tuple[list[Histogram], list[Histogram]]:
    """Split slices into phases in [0, pi) and [pi, 2 pi), each sorted by phase."""
    first, second = [], []
    for h in slices:
        (first if normalize_phase(h.theta) < np.pi else second).append(h)
    key = lambda h: normalize_phase(h.theta)  # noqa: E731
    return sorted(first, key=key), sorted(second, key=key)


def _trapezoid_nodes(slices: list[Histogram]):
    """Nodes, weights and the largest step of a trapezoid over one half-circle.

    The last node is the first slice mirrored and advanced by pi, which closes
    the interval using ``w(X, t + pi) = w(-X, t)``.
    """
    if len(slices) < 3:
        raise InsufficientPhases(f"need at least 3 phases in a half-circle, got {len(slices)}")
    phi = np.array([normalize_phase(h.theta) for h in slices]) % np.pi
    nodes = list(slices) + [flip(slices[0])]
    phi = np.append(phi, phi[0] + np.pi)
    gaps = np.diff(phi)
    if np.any(gaps <= 0):
        raise ValueError("phases within a half-circle must be distinct")
    weights = np.zeros(len(nodes))
    weights[:-1] += gaps / 2
    weights[1:] += gaps / 2
    return nodes, weights, float(gaps.max())


def _grid(slices, cutoff):
    spec = slices[0].spec
    if spec.anchor != 0.0:
        raise ValueError("overlap kernels require bins anchored at 0")
    if any(h.spec != spec for h in slices):
        raise ValueError("all slices must share one bin grid")
    if cutoff is None:
        m = max(max(-h.start, h.stop) for h in slices)
    else:
        m = int(math.ceil(cutoff / spec.width - 1e-9))
    return spec, -m, m


def _shared_cutoff(slices, cutoff):
    """Cutoff covering every slice, so both half-circles share one grid."""
    if cutoff is not None:
        return cutoff
    spec = slices[0].spec
    return spec.width * max(max(-h.start, h.stop) for h in slices)


def _pair_matrix(f: Histogram, g: Histogram, lo: int, hi: int, unbiased: bool) -> np.ndarray:
    """Matrix of ``f(X_i) g(-Y_k)`` on the symmetric grid ``lo .. hi - 1``."""
    fx = f.on_range(lo, hi)
    gy = g.on_range(lo, hi)[::-1]
    out = np.outer(fx, gy)
    if unbiased and f is g and f.counts is not None and f.total > 1:
        # drop self-pairs: n_i n_k -> n_i (n_k - delta_ik), renormalised by N (N - 1)
        n = f.total
        b = f.spec.width
        counts = f.counts_on_range(lo, hi).astype(float)
        out = out * n / (n - 1)
        out[np.arange(hi - lo), np.arange(hi - lo)[::-1]] -= counts / (n * (n - 1) * b * b)
    return out


@dataclass
class OverlapKernel:
    """``P(X_i, Y_k)`` on a symmetric grid of dimensionless bin centers."""

    x: np.ndarray
    step: float
    values: np.ndarray
    error_bound: np.ndarray
    phases: np.ndarray
    max_phase_step: float

    @property
    def integral(self) -> float:
        return float(self.step**2 * self.values.sum())


def _amplitude_sq(slices: list[Histogram], hbar: float) -> float:
    means = [h.moment(1) / math.sqrt(hbar) for h in slices]
    return float(np.mean(np.square(means)))


def phase_error_bound(x, y, max_step: float, amplitude_sq: float):
    """Trapezoid-in-phase error of ``P``: ``step^3/12 * (8|alpha|^2/pi) exp(-X^2 - Y^2)``.

    For ``N`` equispaced phases over a closed half-circle this equals
    ``2 pi^2 |alpha|^2 / (3 (N - 1)^3) exp(-X^2 - Y^2)``.
    """
    return max_step**3 / 12 * (8 * amplitude_sq / np.pi) * np.exp(-np.square(x) - np.square(y))


def overlap_kernel(slices: list[Histogram], hbar: float, cutoff: float | None = None,
                   target: list[Histogram] | None = None, unbiased: bool = True,
                   amplitude_sq: float | None = None) -> OverlapKernel:
    """Trapezoid-in-phase kernel for one half-circle of slices.

    ``target`` optionally replaces the first factor ``w(X, theta)`` by slices of
    a reference tomogram at the same phases (fidelity).  Self-pair counts are
    removed when ``unbiased`` is set, which makes the kernel an unbiased
    estimate of the binned one.
    """
    spec, lo, hi = _grid(slices, cutoff)
    nodes, weights, max_step = _trapezoid_nodes(slices)
    first = nodes if target is None else _trapezoid_nodes(target)[0]
    P = np.zeros((hi - lo, hi - lo))
    for f, g, wt in zip(first, nodes, weights):
        if f is g or target is None:
            P += wt * _pair_matrix(g if f is g else f, g, lo, hi, unbiased and target is None)
        else:
            P += wt * _pair_matrix(f, g, lo, hi, False)
    root = math.sqrt(hbar)
    # densities scale by sqrt(hbar) twice, coordinates by 1/sqrt(hbar)
    P *= hbar
    x = spec.centers(lo, hi) / root
    if amplitude_sq is None:
        amplitude_sq = _amplitude_sq(slices, hbar)
    bound = phase_error_bound(x[:, None], x[None, :], max_step, amplitude_sq)
    return OverlapKernel(x, spec.width / root, P, bound,
                         np.array([normalize_phase(h.theta) for h in slices]), max_step)


@dataclass
class RadialIntegrand:
    r: np.ndarray
    J: np.ndarray
    err_kernel: np.ndarray
    err_grid: np.ndarray

    @property
    def rJ(self) -> np.ndarray:
        return self.r * self.J

    def cumulative(self) -> np.ndarray:
        """``(1/pi) int_0^R r J(r) dr`` for every grid point ``R``."""
        f = self.rJ
        steps = 0.5 * (f[1:] + f[:-1]) * np.diff(self.r)
        return np.concatenate([[0.0], np.cumsum(steps)]) / np.pi

    def calc_error(self) -> float:
        """Quadrature error budget of ``mu(R_max)``."""
        f = self.r * (self.err_kernel + self.err_grid)
        return float(np.sum(0.5 * (f[1:] + f[:-1]) * np.diff(self.r)))


def r_grid(r_max: float = DEFAULT_R_MAX, step: float = DEFAULT_R_STEP) -> np.ndarray:
    return np.linspace(0.0, r_max, int(round(r_max / step)) + 1)


def radial_integrand(kernel: OverlapKernel, r=None) -> RadialIntegrand:
    """``J(r) = iint cos((X + Y) r) P(X, Y)`` as a sum over grid points."""
    r = r_grid() if r is None else np.asarray(r, dtype=float)
    b = kernel.step
    arg = np.outer(r, kernel.x)
    c, s = np.cos(arg), np.sin(arg)
    P = kernel.values
    # cos(X r + Y r) = cos X r cos Y r - sin X r sin Y r
    J = b * b * (np.einsum("ri,ik,rk->r", c, P, c) - np.einsum("ri,ik,rk->r", s, P, s))
    kernel_total = b * b * float(kernel.error_bound.sum())
    err_kernel = kernel_total * np.exp(-(r**2) / 2)
    err_grid = b**4 / 12 * (2 + r**2) * float(np.abs(P).max())
    return RadialIntegrand(r, J, err_kernel, err_grid)


def radial_sine(kernel: OverlapKernel, r=None) -> np.ndarray:
    """``iint sin((X + Y) r) P(X, Y)``, the odd companion of ``J(r)``."""
    r = r_grid() if r is None else np.asarray(r, dtype=float)
    b = kernel.step
    arg = np.outer(r, kernel.x)
    c, s = np.cos(arg), np.sin(arg)
    P = kernel.values
    return b * b * (np.einsum("ri,ik,rk->r", s, P, c) + np.einsum("ri,ik,rk->r", c, P, s))


@dataclass
class HalfResult:
    value: float
    radial: RadialIntegrand = field(repr=False)
    kernel: OverlapKernel = field(repr=False)


@dataclass
class PurityResult:
    mu: float
    delta_mu_calc: float
    delta_mu_data: float | None
    r: np.ndarray = field(repr=False)
    mu_of_R: np.ndarray = field(repr=False)
    radial: RadialIntegrand = field(repr=False)
    saturated: bool
    halves: list = field(default_factory=list)

    @property
    def total_error(self) -> float:
        data = self.delta_mu_data or 0.0
        return math.hypot(self.delta_mu_calc, data)

    def mu_at(self, R: float) -> float:
        return float(np.interp(R, self.r, self.mu_of_R))

    def to_json(self) -> dict:
        return {
            "mu": self.mu,
            "delta_mu_calc": self.delta_mu_calc,
            "delta_mu_data": self.delta_mu_data,
            "total_error": self.total_error,
            "r_max": float(self.r[-1]),
            "saturated": self.saturated,
            "half_circle_values": [h.value for h in self.halves],
        }


def _is_saturated(r, mu_of_R, threshold):
    R = r[-1]
    window = r >= R - 1.0
    drop = abs(mu_of_R[-1] - mu_of_R[window][0]) / max(r[-1] - r[window][0], 1e-12)
    return bool(drop / max(abs(mu_of_R[-1]), 1e-12) <= threshold)


def _half_estimate(slices, hbar, r, cutoff, target=None, unbiased=True, amplitude_sq=None):
    kernel = overlap_kernel(slices, hbar, cutoff, target=target, unbiased=unbiased, amplitude_sq=amplitude_sq)
    radial = radial_integrand(kernel, r)
    return HalfResult(float(radial.cumulative()[-1]), radial, kernel)


def _combine(halves, r, threshold):
    if len(halves) == 2:
        a, b = halves
        J = 0.5 * (a.radial.J + b.radial.J)
        radial = RadialIntegrand(r, J, np.maximum(a.radial.err_kernel, b.radial.err_kernel),
                                 np.maximum(a.radial.err_grid, b.radial.err_grid))
    else:
        radial = halves[0].radial
    curve = radial.cumulative()
    return radial, curve, _is_saturated(r, curve, threshold)


def purity(slices: list[Histogram], hbar: float, r_max: float = DEFAULT_R_MAX, r_step: float = DEFAULT_R_STEP,
           cutoff: float | None = DEFAULT_CUTOFF, unbiased: bool = True, saturation_slope: float = SATURATION_SLOPE,
           amplitude_sq: float | None = None) -> PurityResult:
    """Purity from histograms at phases covering [0, pi) and optionally [pi, 2 pi).

    With both half-circles the estimate is the mean of the two half-circle
    values (the real part of the full-circle formula) and the data error is
    half their difference.
    """
    r = r_grid(r_max, r_step)
    cutoff = _shared_cutoff(slices, cutoff)
    first, second = half_circles(slices)
    usable = [h for h in (first, second) if len(h) >= 3]
    if not usable:
        raise InsufficientPhases("purity needs at least 3 phases within one half-circle")
    halves = [_half_estimate(h, hbar, r, cutoff, unbiased=unbiased, amplitude_sq=amplitude_sq) for h in usable]
    radial, curve, saturated = _combine(halves, r, saturation_slope)
    delta = purity_error_from_halves(halves) if len(halves) == 2 else None
    return PurityResult(float(curve[-1]), radial.calc_error(), delta, r, curve, radial, saturated, halves)


def purity_error_from_halves(halves) -> float:
    """Data error: ``(1/2pi) int r dr iint cos((X+Y) r) [P_first - P_second]``."""
    a, b = halves
    diff = OverlapKernel(a.kernel.x, a.kernel.step, a.kernel.values - b.kernel.values,
                         np.zeros_like(a.kernel.values), a.kernel.phases, a.kernel.max_phase_step)
    radial = radial_integrand(diff, a.radial.r)
    return float(radial.cumulative()[-1] / 2)


def purity_error(slices: list[Histogram], hbar: float, r_max: float = DEFAULT_R_MAX,
                 r_step: float = DEFAULT_R_STEP, cutoff: float | None = DEFAULT_CUTOFF, unbiased: bool = True) -> float:
    """Signed data error of the purity; needs both half-circles."""
    r = r_grid(r_max, r_step)
    cutoff = _shared_cutoff(slices, cutoff)
    first, second = half_circles(slices)
    if len(first) < 3 or len(second) < 3:
        raise InsufficientPhases("purity error needs at least 3 phases in each half-circle")
    halves = [_half_estimate(h, hbar, r, cutoff, unbiased=unbiased) for h in (first, second)]
    return purity_error_from_halves(halves)


def full_circle_imaginary_part(slices: list[Histogram], hbar: float, r_max: float = DEFAULT_R_MAX,
                               r_step: float = DEFAULT_R_STEP, cutoff: float | None = DEFAULT_CUTOFF) -> float:
    """Imaginary part of the full-circle purity integral with ``exp(-i (X+Y) r)``."""
    r = r_grid(r_max, r_step)
    cutoff = _shared_cutoff(slices, cutoff)
    first, second = half_circles(slices)
    total = 0.0
    for half in (first, second):
        kernel = overlap_kernel(half, hbar, cutoff, unbiased=False)
        sine = radial_sine(kernel, r)
        f = r * sine
        total += float(np.sum(0.5 * (f[1:] + f[:-1]) * np.diff(r)))
    return -total / (2 * np.pi)


@dataclass
class FidelityResult:
    """``F^2`` with its mirror error, quadrature error and sampling error."""

    value: float
    error: float | None
    calc_error: float
    halves: list = field(default_factory=list)
    stderr: float = 0.0

    @property
    def total_error(self) -> float:
        return math.hypot(self.error or 0.0, self.calc_error, self.stderr)

    def to_json(self) -> dict:
        return {"F2": self.value, "error": self.error, "calc_error": self.calc_error, "stderr": self.stderr,
                "total_error": self.total_error, "half_circle_values": [h.value for h in self.halves]}


def _response_matrix(x: np.ndarray, step: float, r: np.ndarray) -> np.ndarray:
    """``C`` with ``(1/pi) int_0^R r J(r) dr = sum C * P`` under the trapezoid rule in ``r``."""
    tw = np.zeros_like(r)
    tw[:-1] += np.diff(r) / 2
    tw[1:] += np.diff(r) / 2
    w = tw * r
    arg = np.outer(x, r)
    c, s = np.cos(arg), np.sin(arg)
    return step**2 / np.pi * ((c * w) @ c.T - (s * w) @ s.T)


def _fidelity_variance(half, target_slices, hbar, r, cutoff) -> float:
    """Multinomial sampling variance of one half-circle ``F^2``, which is linear in the data."""
    spec, lo, hi = _grid(half, cutoff)
    _, weights, _ = _trapezoid_nodes(half)
    targets = _trapezoid_nodes(target_slices)[0]
    C = _response_matrix(spec.centers(lo, hi) / math.sqrt(hbar), spec.width / math.sqrt(hbar), r)
    coef = np.zeros((len(half), hi - lo))
    for j, (f, wt) in enumerate(zip(targets, weights)):
        a = hbar * wt * (f.on_range(lo, hi) @ C)
        if j < len(half):
            coef[j] += a[::-1]  # data enters as h(-Y)
        else:
            coef[0] += a  # closing node is the first slice mirrored
    var = 0.0
    for h, c in zip(half, coef):
        if h.total is None:
            continue
        prob = spec.width * h.on_range(lo, hi)
        c = c / spec.width
        var += max(float(np.sum(c * c * prob) - np.sum(c * prob) ** 2), 0.0) / h.total
    return var


TargetTomogram = Callable[[np.ndarray, float], np.ndarray]


def _target_slices(target, slices):
    out = []
    for h in slices:
        x = h.centers
        dens = tomogram_pdf(target, x, h.theta) if isinstance(target, StateSpec) else np.asarray(target(x, h.theta))
        out.append(Histogram(h.spec, h.theta, h.start, np.asarray(dens, dtype=float)))
    return out


def fidelity_to_target(slices: list[Histogram], target: StateSpec | TargetTomogram, hbar: float,
                       r_max: float = DEFAULT_R_MAX, r_step: float = DEFAULT_R_STEP,
                       cutoff: float | None = DEFAULT_CUTOFF) -> FidelityResult:
    """Overlap ``<psi| rho |psi>`` of the measured state with a pure target.

    ``target`` is a StateSpec or a callable ``w(X, theta)`` in quadrature
    units; it is tabulated on the bins of each measured slice.
    """
    r = r_grid(r_max, r_step)
    cutoff = _shared_cutoff(slices, cutoff)
    first, second = half_circles(slices)
    halves, variances = [], []
    for half in (first, second):
        if len(half) < 3:
            continue
        spec, lo, hi = _grid(half, cutoff)
        grid_slices = [Histogram(spec, h.theta, lo, h.on_range(lo, hi), None, h.total) for h in half]
        target_slices = _target_slices(target, grid_slices)
        halves.append(_half_estimate(half, hbar, r, cutoff, target=target_slices))
        variances.append(_fidelity_variance(half, target_slices, hbar, r, cutoff))
    if not halves:
        raise InsufficientPhases("fidelity needs at least 3 phases within one half-circle")
    radial, curve, _ = _combine(halves, r, SATURATION_SLOPE)
    error = (halves[0].value - halves[1].value) / 2 if len(halves) == 2 else None
    stderr = math.sqrt(sum(variances)) / len(variances)
    return FidelityResult(float(curve[-1]), error, radial.calc_error(), halves, stderr)
