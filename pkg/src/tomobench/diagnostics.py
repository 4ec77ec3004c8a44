"""Data-driven error diagnostics based on the mirror property ``w(X, t) = w(-X, t + pi)``."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .histogram import BinSpec, Histogram, build_histogram, mirrored_histogram
from .sampler import QuadratureDataset
from .states import TWO_PI, normalize_phase

SYNTHETIC_PHASE_TOL = 1e-6
REAL_DATA_PHASE_TOL = 0.02


class MirrorUnavailable(LookupError):
    """The phase ``theta + pi`` needed for a mirror comparison is not in the dataset."""


def default_phase_tolerance(dataset: QuadratureDataset) -> float:
    return SYNTHETIC_PHASE_TOL if dataset.state is not None else REAL_DATA_PHASE_TOL


def _phase_distance(a, b):
    d = abs(normalize_phase(a) - normalize_phase(b))
    return min(d, TWO_PI - d)


@dataclass(frozen=True)
class PhasePairing:
    """Index pairs ``(i, j)`` of blocks with ``theta_j = theta_i + pi``, ``theta_i`` in [0, pi)."""

    pairs: tuple
    tolerance: float

    def __len__(self):
        return len(self.pairs)


def pair_phases(dataset: QuadratureDataset, tolerance: float | None = None) -> PhasePairing:
    tol = default_phase_tolerance(dataset) if tolerance is None else tolerance
    thetas = [normalize_phase(t) for t in dataset.phases]
    pairs = []
    for i, t in enumerate(thetas):
        if t >= np.pi - tol:
            continue
        best = min(range(len(thetas)), key=lambda j: _phase_distance(thetas[j], t + np.pi))
        if _phase_distance(thetas[best], t + np.pi) <= tol:
            pairs.append((i, best))
    return PhasePairing(tuple(pairs), tol)


def mirror_block(dataset: QuadratureDataset, theta: float, tolerance: float | None = None):
    tol = default_phase_tolerance(dataset) if tolerance is None else tolerance
    block = dataset.block_at(theta + np.pi, tol)
    if block is None:
        raise MirrorUnavailable(f"no data at phase {normalize_phase(theta + np.pi):.6f}")
    return block


def _block(dataset, theta, tol):
    block = dataset.block_at(theta, tol)
    if block is None:
        raise KeyError(f"no data at phase {theta:.6f}")
    return block


@dataclass(frozen=True)
class Shift:
    value: float
    stderr: float


def mirror_shift(dataset: QuadratureDataset, theta: float, tolerance: float | None = None) -> Shift:
    """Offset ``<X_theta> + <X_{theta+pi}>`` between a slice and its mirror."""
    tol = default_phase_tolerance(dataset) if tolerance is None else tolerance
    a = _block(dataset, theta, tol).samples
    b = mirror_block(dataset, theta, tol).samples
    se = np.sqrt(a.var(ddof=1) / a.size + b.var(ddof=1) / b.size)
    return Shift(float(a.mean() + b.mean()), float(se))


def predict_phase_shift(alpha: complex, theta: float, dtheta: float, hbar: float) -> float:
    """Second-order mirror shift when the mirror slice is measured at ``theta + pi + dtheta``."""
    a = complex(alpha)
    first = np.sqrt(2) * hbar * (a.real * np.sin(theta) - a.imag * np.cos(theta)) * dtheta
    second = hbar * (a.real * np.cos(theta) + a.imag * np.sin(theta)) * dtheta**2 / np.sqrt(2)
    return float(first + second)


def exact_phase_shift(alpha: complex, theta1: float, theta2: float, hbar: float) -> float:
    """Mirror shift of a coherent-like mean for slices actually taken at ``theta1`` and ``theta2``."""
    a = complex(alpha)
    return float(np.sqrt(2) * hbar * (a.real * (np.cos(theta1) + np.cos(theta2))
                                      + a.imag * (np.sin(theta1) + np.sin(theta2))))


@dataclass(frozen=True)
class Bhattacharyya:
    value: float
    quadrature_error: float


def _common_range(p1: Histogram, p2: Histogram):
    if p1.spec != p2.spec:
        raise ValueError("histograms are binned on different grids")
    return min(p1.start, p2.start), max(p1.stop, p2.stop)


def bhattacharyya(p1: Histogram, p2: Histogram) -> Bhattacharyya:
    """Overlap ``integral sqrt(p1 p2) dX`` of two histograms on the same grid.

    The attached error is the trapezoid remainder ``b^3/12 max|f''|`` with
    ``f = sqrt(p1 p2)`` differentiated by central differences.
    """
    lo, hi = _common_range(p1, p2)
    b = p1.spec.width
    f = np.sqrt(p1.on_range(lo, hi) * p2.on_range(lo, hi))
    value = float(np.clip(b * f.sum(), 0.0, 1.0))
    if f.size >= 3:
        f2 = np.abs(f[2:] - 2 * f[1:-1] + f[:-2]) / b**2
        err = b**3 / 12 * float(f2.max())
    else:
        err = 0.0
    return Bhattacharyya(value, err)


def mirror_pair_histograms(dataset: QuadratureDataset, theta: float, spec: BinSpec | None = None,
                           tolerance: float | None = None):
    """``h(X, theta)`` and ``h(-X, theta + pi)`` on a shared grid."""
    spec = spec or BinSpec()
    tol = default_phase_tolerance(dataset) if tolerance is None else tolerance
    a = _block(dataset, theta, tol)
    b = mirror_block(dataset, theta, tol)
    return build_histogram(a.samples, spec, a.theta), mirrored_histogram(b.samples, spec, b.theta)


def moment(h: Histogram, n: int) -> float:
    """``<X^n>`` from bin centers."""
    if n not in (1, 2, 3, 4):
        raise ValueError("moment order must be 1..4")
    return h.moment(n)


def moment_error(dataset: QuadratureDataset, theta: float, n: int, spec: BinSpec | None = None,
                 tolerance: float | None = None) -> float:
    """``integral |X|^n |h(X, theta) - h(-X, theta + pi)| dX``."""
    h1, h2 = mirror_pair_histograms(dataset, theta, spec, tolerance)
    lo, hi = _common_range(h1, h2)
    x = h1.spec.centers(lo, hi)
    diff = np.abs(h1.on_range(lo, hi) - h2.on_range(lo, hi))
    return float(h1.spec.width * np.sum(np.abs(x) ** n * diff))


@dataclass(frozen=True)
class Variance:
    """Variance estimate; ``error`` is the mirror difference, ``stderr`` the sampling error of ``value``."""

    value: float
    error: float
    theta_value: float
    mirror_value: float
    stderr: float = 0.0

    @property
    def total_error(self) -> float:
        return float(np.hypot(self.error, self.stderr))


def _variance(h: Histogram) -> float:
    return h.moment(2) - h.moment(1) ** 2


def variance_stderr(h: Histogram) -> float:
    """Sampling error ``sqrt((m4 - var^2) / N)`` of a histogram variance."""
    if h.total is None:
        return 0.0
    dx = h.centers - h.moment(1)
    var = float(np.sum(h.spec.width * h.densities * dx**2))
    m4 = float(np.sum(h.spec.width * h.densities * dx**4))
    return float(np.sqrt(max(m4 - var**2, 0.0) / h.total))


def variance_report(dataset: QuadratureDataset, theta: float, spec: BinSpec | None = None,
                    tolerance: float | None = None) -> Variance:
    """Variance of ``X_theta`` averaged over the slice and its mirror.

    The error is the absolute difference between the two estimates; the
    sampling error of their mean is attached separately.
    """
    h1, h2 = mirror_pair_histograms(dataset, theta, spec, tolerance)
    v1, v2 = _variance(h1), _variance(h2)
    se = 0.5 * float(np.hypot(variance_stderr(h1), variance_stderr(h2)))
    return Variance(0.5 * (v1 + v2), abs(v1 - v2), v1, v2, se)


@dataclass
class PairDiagnostics:
    theta: float
    mirror_theta: float
    shift: Shift
    bhattacharyya: Bhattacharyya


@dataclass
class MomentDiagnostics:
    theta: float
    n: int
    value: float
    error: float | None


@dataclass
class DiagnosticsReport:
    pairs: list = field(default_factory=list)
    fidelity_bound: float | None = None
    fidelity_bound_theta: float | None = None
    moments: list = field(default_factory=list)
    notes: list = field(default_factory=list)

    @property
    def reference_bhattacharyya(self) -> float | None:
        """Single-pair value at the smallest available phase (``theta = 0`` when present)."""
        if not self.pairs:
            return None
        return min(self.pairs, key=lambda p: p.theta).bhattacharyya.value

    def to_json(self) -> dict:
        return {
            "pairs": [
                {
                    "theta": p.theta,
                    "shift": p.shift.value,
                    "shift_se": p.shift.stderr,
                    "bhattacharyya": p.bhattacharyya.value,
                    "b_err": p.bhattacharyya.quadrature_error,
                }
                for p in self.pairs
            ],
            "fidelity_bound": self.fidelity_bound,
            "fidelity_bound_theta": self.fidelity_bound_theta,
            "reference_bhattacharyya": self.reference_bhattacharyya,
            "moments": [
                {"theta": m.theta, "n": m.n, "value": m.value, "error": m.error} for m in self.moments
            ],
            "notes": list(self.notes),
        }


@dataclass(frozen=True)
class FidelityBound:
    value: float
    theta: float


def fidelity_bound(dataset: QuadratureDataset, pairing: PhasePairing | None = None,
                   spec: BinSpec | None = None) -> FidelityBound:
    """Minimum mirror-pair Bhattacharyya coefficient, an upper bound on the half-circle fidelity."""
    pairing = pairing or pair_phases(dataset)
    if not pairing.pairs:
        raise MirrorUnavailable("no mirror pairs in dataset")
    spec = spec or BinSpec()
    best = None
    for i, j in pairing.pairs:
        a, b = dataset.blocks[i], dataset.blocks[j]
        coeff = bhattacharyya(build_histogram(a.samples, spec), mirrored_histogram(b.samples, spec)).value
        if best is None or coeff < best.value:
            best = FidelityBound(coeff, a.theta)
    return best


def diagnose(dataset: QuadratureDataset, spec: BinSpec | None = None, tolerance: float | None = None,
             moment_orders=(1, 2)) -> DiagnosticsReport:
    spec = spec or BinSpec()
    pairing = pair_phases(dataset, tolerance)
    report = DiagnosticsReport()
    for i, j in pairing.pairs:
        a, b = dataset.blocks[i], dataset.blocks[j]
        se = np.sqrt(a.samples.var(ddof=1) / a.samples.size + b.samples.var(ddof=1) / b.samples.size)
        shift = Shift(float(a.samples.mean() + b.samples.mean()), float(se))
        coeff = bhattacharyya(build_histogram(a.samples, spec), mirrored_histogram(b.samples, spec))
        report.pairs.append(PairDiagnostics(a.theta, b.theta, shift, coeff))
    if report.pairs:
        worst = min(report.pairs, key=lambda p: p.bhattacharyya.value)
        report.fidelity_bound = worst.bhattacharyya.value
        report.fidelity_bound_theta = worst.theta
    else:
        report.notes.append("mirror pairs unavailable")
    for block in dataset.blocks:
        h = build_histogram(block.samples, spec, block.theta)
        for n in moment_orders:
            try:
                err = moment_error(dataset, block.theta, n, spec, pairing.tolerance)
            except MirrorUnavailable:
                err = None
            report.moments.append(MomentDiagnostics(block.theta, n, moment(h, n), err))
    return report
