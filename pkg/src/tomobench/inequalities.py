"""Uncertainty and entropic relations evaluated on tomogram histograms.

Each check returns a :class:`CheckResult` comparing ``lhs +- err`` with
``rhs +- err``.  Data errors come from comparing a slice with its mirror
``w(-X, theta + pi)``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .diagnostics import MirrorUnavailable, default_phase_tolerance, variance_report
from .functionals import PurityResult
from .histogram import BinSpec, Histogram, build_histogram
from .sampler import QuadratureDataset
from .states import TWO_PI, normalize_phase

DEFAULT_BINNING_CORRECTION = 0.03  # for b = 0.075 and |X| <= 3
PURITY_BRANCH_POINT = 5.0 / 9.0


class Verdict(str, enum.Enum):
    SATISFIED = "satisfied"
    SATURATED = "saturated"
    VIOLATED = "violated"


@dataclass(frozen=True)
class CheckResult:
    name: str
    lhs: float
    lhs_err: float
    rhs: float
    rhs_err: float = 0.0

    @property
    def margin(self) -> float:
        return self.lhs - self.rhs

    @property
    def error(self) -> float:
        return math.hypot(self.lhs_err, self.rhs_err)

    @property
    def verdict(self) -> Verdict:
        if abs(self.margin) <= self.error:
            return Verdict.SATURATED
        return Verdict.SATISFIED if self.margin > 0 else Verdict.VIOLATED

    def to_json(self) -> dict:
        return {
            "name": self.name,
            "lhs": self.lhs,
            "lhs_err": self.lhs_err,
            "rhs": self.rhs,
            "rhs_err": self.rhs_err,
            "margin": self.margin,
            "error": self.error,
            "verdict": self.verdict.value,
        }


@dataclass(frozen=True)
class MomentPair:
    """Variances of ``X_theta`` and ``X_{theta + pi/2}`` with errors."""

    sigma_qq: float
    sigma_qq_err: float
    sigma_pp: float
    sigma_pp_err: float

    def __post_init__(self):
        if not (self.sigma_qq > 0 and self.sigma_pp > 0):
            raise ValueError("variances must be positive")

    @property
    def product(self) -> float:
        return self.sigma_qq * self.sigma_pp

    @property
    def product_err(self) -> float:
        return math.hypot(self.sigma_pp * self.sigma_qq_err, self.sigma_qq * self.sigma_pp_err)

    def to_json(self) -> dict:
        return {"sigma_qq": self.sigma_qq, "sigma_qq_err": self.sigma_qq_err,
                "sigma_pp": self.sigma_pp, "sigma_pp_err": self.sigma_pp_err}


def moment_pair(dataset: QuadratureDataset, theta: float = 0.0, spec: BinSpec | None = None,
                tolerance: float | None = None) -> MomentPair:
    """Variances at ``theta`` and ``theta + pi/2``; errors combine mirror difference and sampling error."""
    q = variance_report(dataset, theta, spec, tolerance)
    p = variance_report(dataset, theta + np.pi / 2, spec, tolerance)
    return MomentPair(q.value, q.total_error, p.value, p.total_error)


def heisenberg_check(m: MomentPair, hbar: float) -> CheckResult:
    return CheckResult("heisenberg", m.product, m.product_err, hbar**2 / 4)


def _phi_exact(mu):
    return 2.0 - math.sqrt(2.0 * mu - 1.0)


def _phi_approx(mu):
    return (4.0 + math.sqrt(16.0 + 9.0 * mu**2)) / (9.0 * mu)


@dataclass(frozen=True)
class PhiValue:
    value: float
    branch: str  # "exact" or "approximate"

    def __float__(self):
        return self.value


def purity_bound_phi(mu: float) -> PhiValue:
    """Purity-dependent factor ``Phi(mu)`` of the strengthened Heisenberg bound.

    Exact for ``mu >= 5/9``; below that the approximation
    ``(4 + sqrt(16 + 9 mu^2)) / (9 mu)``, good to about 4 %, is used.
    """
    if not (0.0 < mu <= 1.0):
        raise ValueError("purity must lie in (0, 1]")
    if mu >= PURITY_BRANCH_POINT:
        return PhiValue(_phi_exact(mu), "exact")
    return PhiValue(_phi_approx(mu), "approximate")


def _phi_slope(mu):
    if mu >= PURITY_BRANCH_POINT:
        return -1.0 / math.sqrt(2.0 * mu - 1.0)
    return 1.0 / math.sqrt(16.0 + 9.0 * mu**2) - _phi_approx(mu) / mu


def purity_heisenberg_check(m: MomentPair, pr: PurityResult | tuple, hbar: float) -> CheckResult:
    """``sigma_qq sigma_pp >= hbar^2 Phi^2(mu) / 4``.

    ``pr`` is a PurityResult or a ``(mu, error)`` pair; estimates above 1 are
    clamped to 1 before evaluating ``Phi``.
    """
    mu, err = (pr.mu, pr.total_error) if isinstance(pr, PurityResult) else pr
    mu = min(float(mu), 1.0)
    phi = purity_bound_phi(mu).value
    rhs = hbar**2 * phi**2 / 4
    rhs_err = hbar**2 * phi / 2 * abs(_phi_slope(mu)) * err
    return CheckResult("purity_heisenberg", m.product, m.product_err, rhs, rhs_err)


def state_extended_check(m1: MomentPair, m2: MomentPair, hbar: float) -> CheckResult:
    """``(sigma_qq^(1) sigma_pp^(2) + sigma_qq^(2) sigma_pp^(1)) / 2 >= hbar^2 / 4``."""
    lhs = 0.5 * (m1.sigma_qq * m2.sigma_pp + m2.sigma_qq * m1.sigma_pp)
    err = 0.5 * math.sqrt(
        (m2.sigma_pp * m1.sigma_qq_err) ** 2 + (m1.sigma_qq * m2.sigma_pp_err) ** 2
        + (m1.sigma_pp * m2.sigma_qq_err) ** 2 + (m2.sigma_qq * m1.sigma_pp_err) ** 2
    )
    return CheckResult("state_extended", lhs, err, hbar**2 / 4)


@dataclass(frozen=True)
class EntropyPoint:
    theta: float
    S: float


def shannon_entropy(h: Histogram) -> EntropyPoint:
    """Differential entropy ``-sum b h ln h`` in nats; empty bins contribute 0."""
    d = h.densities[h.densities > 0]
    return EntropyPoint(h.theta, float(-h.spec.width * np.sum(d * np.log(d))))


def shannon_stderr(h: Histogram) -> float:
    """Sampling error ``sqrt(Var[ln h(X)] / N)`` of the plug-in entropy."""
    if h.total is None:
        return 0.0
    d = h.densities[h.densities > 0]
    w = h.spec.width * d
    logs = np.log(d)
    var = float(np.sum(w * logs**2) - np.sum(w * logs) ** 2)
    return math.sqrt(max(var, 0.0) / h.total)


def entropic_bound(hbar: float, correction: float = 0.0) -> float:
    """``ln(pi hbar) + 1`` lowered by a bin-width correction."""
    return math.log(math.pi * hbar) + 1.0 - correction


def _block_histogram(dataset, theta, spec, tol):
    block = dataset.block_at(theta, tol)
    if block is None:
        return None
    return build_histogram(block.samples, spec, block.theta)


def _slice_pair(dataset, theta, spec, tol):
    """Histogram at ``theta`` and, if present, the one at ``theta + pi``."""
    h = _block_histogram(dataset, theta, spec, tol)
    if h is None:
        raise KeyError(f"no data at phase {normalize_phase(theta):.6f}")
    return h, _block_histogram(dataset, theta + np.pi, spec, tol)


def _mirror_estimate(f, h, mirror, stderr=None):
    """Mean of ``f`` over a slice and its mirror, with an error.

    The error is the absolute mirror difference, combined in quadrature with
    the sampling error of the mean when ``stderr`` is given.
    """
    a = f(h)
    if mirror is None:
        return a, None
    b = f(mirror)
    err = abs(a - b)
    if stderr is not None:
        err = math.hypot(err, 0.5 * math.hypot(stderr(h), stderr(mirror)))
    return 0.5 * (a + b), err


def shannon_pair_check(dataset: QuadratureDataset, theta: float, hbar: float,
                       correction: float = DEFAULT_BINNING_CORRECTION, spec: BinSpec | None = None,
                       tolerance: float | None = None) -> CheckResult:
    """``S(theta) + S(theta + pi/2) >= ln(pi hbar) + 1 - correction``.

    Entropies are the mean of the slice and its ``theta + pi`` mirror (the
    entropy is invariant under ``X -> -X``); errors are their differences
    combined with the sampling error.
    """
    spec = spec or BinSpec()
    tol = default_phase_tolerance(dataset) if tolerance is None else tolerance
    if dataset.block_at(theta + np.pi / 2, tol) is None:
        raise KeyError(f"conjugate phase {normalize_phase(theta + np.pi / 2):.6f} is missing")
    S = lambda h: shannon_entropy(h).S  # noqa: E731
    sq, eq = _mirror_estimate(S, *_slice_pair(dataset, theta, spec, tol), shannon_stderr)
    sp, ep = _mirror_estimate(S, *_slice_pair(dataset, theta + np.pi / 2, spec, tol), shannon_stderr)
    if eq is None or ep is None:
        raise MirrorUnavailable("entropy errors need the theta + pi slices")
    return CheckResult("shannon_pair", sq + sp, math.hypot(eq, ep), entropic_bound(hbar, correction))


def shannon_pair_from_histograms(hq: Histogram, hp: Histogram, hbar: float, correction: float = 0.0) -> CheckResult:
    """Pair check for two given slices, without data errors (analytic input)."""
    lhs = shannon_entropy(hq).S + shannon_entropy(hp).S
    return CheckResult("shannon_pair", lhs, 0.0, entropic_bound(hbar, correction))


def periodic_trapezoid_weights(phases) -> np.ndarray:
    """Weights of the trapezoid rule for a periodic integrand on [0, 2 pi)."""
    t = np.sort(np.asarray([normalize_phase(p) for p in phases]))
    order = np.argsort([normalize_phase(p) for p in phases])
    gaps = np.diff(np.append(t, t[0] + TWO_PI))
    w_sorted = 0.5 * (gaps + np.roll(gaps, 1))
    weights = np.empty_like(w_sorted)
    weights[order] = w_sorted
    return weights


def shannon_phase_averaged(dataset: QuadratureDataset, hbar: float,
                           correction: float = DEFAULT_BINNING_CORRECTION, spec: BinSpec | None = None,
                           tolerance: float | None = None) -> CheckResult:
    """``2 int_0^pi S(theta) dtheta / pi >= ln(pi hbar) + 1 - correction``.

    With ``S(theta + pi) = S(theta)`` the left side is ``(1/pi)`` times the
    integral over the full circle, evaluated by the periodic trapezoid rule
    over every available phase.  The error combines the mean
    ``|S(theta) - S(theta + pi)|`` over resolvable mirror pairs with the
    sampling error of the weighted sum.
    """
    spec = spec or BinSpec()
    if len(dataset.blocks) < 3:
        raise ValueError("phase-averaged entropy needs at least 3 phases")
    tol = default_phase_tolerance(dataset) if tolerance is None else tolerance
    phases = [b.theta for b in dataset.blocks]
    hists = [build_histogram(b.samples, spec, b.theta) for b in dataset.blocks]
    entropies = np.array([shannon_entropy(h).S for h in hists])
    covered = {normalize_phase(p) < np.pi for p in phases}
    if len(covered) == 2:
        weights = periodic_trapezoid_weights(phases) / np.pi
    else:
        # one half-circle only: close it with S(theta_0 + pi) = S(theta_0)
        t = np.array([normalize_phase(p) % np.pi for p in phases])
        order = np.argsort(t)
        gaps = np.diff(np.append(t[order], t[order][0] + np.pi))
        w_sorted = 0.5 * (gaps + np.roll(gaps, 1))
        weights = np.empty_like(w_sorted)
        weights[order] = 2 * w_sorted / np.pi
    lhs = float(np.sum(weights * entropies))
    stat = math.sqrt(float(np.sum((weights * np.array([shannon_stderr(h) for h in hists])) ** 2)))
    diffs = []
    for block, S in zip(dataset.blocks, entropies):
        if normalize_phase(block.theta) >= np.pi:
            continue
        mirror = dataset.block_at(block.theta + np.pi, tol)
        if mirror is not None:
            diffs.append(abs(S - shannon_entropy(build_histogram(mirror.samples, spec)).S))
    err = math.hypot(float(np.mean(diffs)) if diffs else 0.0, stat)
    return CheckResult("shannon_phase_averaged", lhs, err, entropic_bound(hbar, correction))


def renyi_integral(h: Histogram, order: float) -> float:
    """``sum b h^order`` over non-empty bins."""
    d = h.densities[h.densities > 0]
    return float(h.spec.width * np.sum(d**order))


def renyi_log_stderr(h: Histogram, order: float) -> float:
    """Sampling error of ``ln sum b h^order``, treating the sum as the mean of ``h(X)^(order-1)``."""
    if h.total is None:
        return 0.0
    d = h.densities[h.densities > 0]
    w = h.spec.width * d
    f = d ** (order - 1.0)
    mean = float(np.sum(w * f))
    var = float(np.sum(w * f**2)) - mean**2
    return math.sqrt(max(var, 0.0) / h.total) / mean


def renyi_lhs_stderr(hq: Histogram, hp: Histogram, r: float) -> float:
    return math.hypot((1 + r) / r * renyi_log_stderr(hq, 1 / (1 + r)),
                      (1 - r) / r * renyi_log_stderr(hp, 1 / (1 - r)))


def renyi_lhs(hq: Histogram, hp: Histogram, r: float) -> float:
    """``(1+r)/r ln int w_q^(1/(1+r)) - (1-r)/r ln int w_p^(1/(1-r))``."""
    return ((1 + r) / r * math.log(renyi_integral(hq, 1 / (1 + r)))
            - (1 - r) / r * math.log(renyi_integral(hp, 1 / (1 - r))))


def renyi_rhs(r: float, hbar: float) -> float:
    """``ln(pi hbar) + [(1+r) ln(1+r) - (1-r) ln(1-r)] / (2r)``."""
    return math.log(math.pi * hbar) + ((1 + r) * math.log1p(r) - (1 - r) * math.log1p(-r)) / (2 * r)


def _check_r(r):
    if not -1.0 < r < 1.0:
        raise ValueError("r must lie strictly inside (-1, 1)")
    if r == 0.0:
        raise ValueError("r = 0 is the Shannon limit; use shannon_pair_check")


@dataclass(frozen=True)
class RenyiPoint:
    r: float
    lhs: float
    rhs: float
    err: float

    @property
    def beta(self) -> float:
        return 1.0 / (1.0 - self.r)

    @property
    def gamma(self) -> float:
        return 1.0 / (1.0 + self.r)


@dataclass(frozen=True)
class RenyiCurve:
    theta: float
    points: tuple

    def at(self, r: float) -> RenyiPoint:
        for p in self.points:
            if math.isclose(p.r, r, abs_tol=1e-12):
                return p
        raise KeyError(r)

    def columns(self):
        return ([p.r for p in self.points], [p.lhs for p in self.points],
                [p.rhs for p in self.points], [p.err for p in self.points])

    def to_json(self) -> dict:
        return {"theta": self.theta,
                "points": [{"r": p.r, "lhs": p.lhs, "rhs": p.rhs, "err": p.err} for p in self.points]}


DEFAULT_RENYI_GRID = tuple(np.round(np.concatenate([np.arange(-0.9, 0, 0.1), np.arange(0.1, 0.95, 0.1)]), 10))


def renyi_from_histograms(hq: Histogram, hp: Histogram, r_values, hbar: float,
                          mirrors: tuple[Histogram, Histogram] | None = None,
                          correction: float = 0.0) -> RenyiCurve:
    """Curve from two slices; ``mirrors`` are the ``theta + pi`` and ``theta + 3pi/2`` slices.

    ``correction`` lowers the bound by the same bin-width allowance as the
    Shannon bound, which keeps the ``r -> 0`` limit consistent with it.
    """
    points = []
    for r in r_values:
        r = float(r)
        _check_r(r)
        a = renyi_lhs(hq, hp, r)
        if mirrors is None:
            value, err = a, 0.0
        else:
            b = renyi_lhs(mirrors[0], mirrors[1], r)
            stat = 0.5 * math.hypot(renyi_lhs_stderr(hq, hp, r), renyi_lhs_stderr(*mirrors, r))
            value, err = 0.5 * (a + b), math.hypot(a - b, stat)
        points.append(RenyiPoint(r, value, renyi_rhs(r, hbar) - correction, err))
    return RenyiCurve(hq.theta, tuple(points))


def renyi_check(dataset: QuadratureDataset, theta_base: float = 0.0, r_grid=DEFAULT_RENYI_GRID,
                hbar: float | None = None, spec: BinSpec | None = None,
                tolerance: float | None = None,
                correction: float = DEFAULT_BINNING_CORRECTION) -> RenyiCurve:
    """Renyi uncertainty curve for the slices at ``theta_base`` and ``theta_base + pi/2``."""
    spec = spec or BinSpec()
    hbar = dataset.hbar if hbar is None else hbar
    for r in r_grid:
        _check_r(float(r))
    tol = default_phase_tolerance(dataset) if tolerance is None else tolerance
    if dataset.block_at(theta_base + np.pi / 2, tol) is None:
        raise KeyError(f"conjugate phase {normalize_phase(theta_base + np.pi / 2):.6f} is missing")
    hq, mq = _slice_pair(dataset, theta_base, spec, tol)
    hp, mp = _slice_pair(dataset, theta_base + np.pi / 2, spec, tol)
    mirrors = (mq, mp) if mq is not None and mp is not None else None
    return renyi_from_histograms(hq, hp, r_grid, hbar, mirrors, correction)


def renyi_asymmetry(curve: RenyiCurve, r: float) -> tuple[float, float]:
    """``lhs(r) - lhs(-r)`` with its combined error."""
    a, b = curve.at(r), curve.at(-r)
    return a.lhs - b.lhs, math.hypot(a.err, b.err)


_SEVERITY = {Verdict.VIOLATED: 0, Verdict.SATURATED: 1, Verdict.SATISFIED: 2}


def renyi_summary_check(curve: RenyiCurve) -> CheckResult:
    """The least favourable point of a curve, as a single check."""
    checks = [CheckResult(f"renyi(r={p.r:g})", p.lhs, p.err, p.rhs) for p in curve.points]
    return min(checks, key=lambda c: (_SEVERITY[c.verdict], c.margin))
