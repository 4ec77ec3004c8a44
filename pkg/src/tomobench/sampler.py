"""Synthetic quadrature data with injectable systematic errors, and vacuum calibration."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .states import DEFAULT_HBAR, TWO_PI, StateSpec, normalize_phase, tomogram_pdf

DEFAULT_SAMPLES_PER_PHASE = 5321
DEFAULT_PHASE_COUNT = 20
CDF_POINTS = 4096
CDF_HALF_WIDTH = 8.0  # in standard deviations


@dataclass(frozen=True)
class NoiseModel:
    """Systematic errors added to ideal draws.

    ``imbalance_shift`` is added to every sample; ``phase_errors`` holds one
    offset per phase (radians) added to the nominal LO phase, or is empty;
    ``drift_amplitude`` is the peak deviation of a linear ramp running from
    ``-A`` to ``+A`` across each phase block.
    """

    imbalance_shift: float = 0.0
    phase_errors: tuple = ()
    drift_amplitude: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "phase_errors", tuple(float(v) for v in self.phase_errors))
        values = [self.imbalance_shift, self.drift_amplitude, *self.phase_errors]
        if not np.all(np.isfinite(values)):
            raise ValueError("noise parameters must be finite")

    def phase_error(self, index: int) -> float:
        if not self.phase_errors:
            return 0.0
        return self.phase_errors[index]

    def to_record(self) -> dict:
        return {
            "imbalance_shift": float(self.imbalance_shift),
            "phase_errors": list(self.phase_errors),
            "drift_amplitude": float(self.drift_amplitude),
        }

    @classmethod
    def from_record(cls, record: dict | None) -> "NoiseModel":
        record = record or {}
        return cls(
            record.get("imbalance_shift", 0.0),
            tuple(record.get("phase_errors", ())),
            record.get("drift_amplitude", 0.0),
        )


def equispaced_phases(count: int = DEFAULT_PHASE_COUNT) -> np.ndarray:
    """``count`` phases evenly spread over [0, 2 pi)."""
    if count < 1:
        raise ValueError("need at least one phase")
    return np.arange(count) * (TWO_PI / count)


@dataclass(frozen=True)
class SimulationPlan:
    state: StateSpec
    phases: tuple = field(default_factory=lambda: tuple(equispaced_phases()))
    samples_per_phase: int = DEFAULT_SAMPLES_PER_PHASE
    seed: int = 0
    noise: NoiseModel = NoiseModel()

    def __post_init__(self):
        phases = tuple(float(normalize_phase(t)) for t in self.phases)
        object.__setattr__(self, "phases", phases)
        if self.samples_per_phase < 1:
            raise ValueError("samples_per_phase must be >= 1")
        if len(set(phases)) != len(phases):
            raise ValueError("phases must be distinct")
        if self.noise.phase_errors and len(self.noise.phase_errors) != len(phases):
            raise ValueError("need exactly one phase error per phase")


@dataclass(frozen=True)
class Calibration:
    """Affine map ``x -> (x + offset) * scale``."""

    offset: float = 0.0
    scale: float = 1.0

    def apply(self, x):
        return (np.asarray(x, dtype=float) + self.offset) * self.scale

    def to_record(self) -> dict:
        return {"offset": float(self.offset), "scale": float(self.scale)}


@dataclass
class PhaseBlock:
    theta: float
    samples: np.ndarray


@dataclass
class QuadratureDataset:
    """Calibrated samples grouped by nominal LO phase."""

    blocks: list
    hbar: float = DEFAULT_HBAR
    state: StateSpec | None = None
    seed: int | None = None
    noise: NoiseModel = field(default_factory=NoiseModel)
    calibration: Calibration = field(default_factory=Calibration)
    samples_per_phase: int | None = None

    def __post_init__(self):
        for block in self.blocks:
            block.samples = np.asarray(block.samples, dtype=float)
            if block.samples.size == 0:
                raise ValueError(f"phase {block.theta} has no samples")
            if not np.all(np.isfinite(block.samples)):
                raise ValueError(f"phase {block.theta} contains non-finite samples")

    @property
    def phases(self) -> np.ndarray:
        return np.array([b.theta for b in self.blocks])

    @property
    def total(self) -> int:
        return int(sum(b.samples.size for b in self.blocks))

    def block_at(self, theta: float, tol: float = 1e-6) -> PhaseBlock | None:
        """Block whose phase matches ``theta`` modulo 2 pi, or None."""
        target = normalize_phase(theta)
        for block in self.blocks:
            d = abs(normalize_phase(block.theta) - target)
            if min(d, TWO_PI - d) <= tol:
                return block
        return None

    def pooled(self) -> np.ndarray:
        return np.concatenate([b.samples for b in self.blocks])


def phase_stream(seed: int, index: int) -> np.random.Generator:
    """Independent counter-based stream for phase ``index`` of a run."""
    seq = np.random.SeedSequence(entropy=int(seed) & (2**64 - 1), spawn_key=(int(index),))
    return np.random.Generator(np.random.Philox(seq))


def _inverse_cdf_table(state: StateSpec, theta: float):
    a = state.detected_amplitude
    mean = np.sqrt(2 * state.hbar) * (a.real * np.cos(theta) + a.imag * np.sin(theta))
    # generous width: SPACS spread exceeds the coherent one by at most sqrt(3)
    sigma = np.sqrt(state.hbar / 2) * (np.sqrt(3.0) if state.kind.photon_added else 1.0)
    grid = np.linspace(mean - CDF_HALF_WIDTH * sigma, mean + CDF_HALF_WIDTH * sigma, CDF_POINTS)
    pdf = tomogram_pdf(state, grid, theta)
    steps = 0.5 * (pdf[1:] + pdf[:-1]) * np.diff(grid)
    cdf = np.concatenate([[0.0], np.cumsum(steps)])
    total = cdf[-1]
    if not (np.isfinite(total) and abs(total - 1.0) < 1e-3):
        raise ValueError(f"tomogram could not be tabulated (mass {total})")
    return grid, cdf / total


def sample_phase(state: StateSpec, theta: float, n: int, noise: NoiseModel | None = None,
                 stream: np.random.Generator | None = None, phase_error: float = 0.0) -> np.ndarray:
    """Draw ``n`` quadratures at LO phase ``theta`` by inverse-CDF sampling.

    The actual phase is ``theta + phase_error``; the noise model's imbalance
    shift and drift are added afterwards.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    noise = noise or NoiseModel()
    stream = stream if stream is not None else np.random.default_rng()
    grid, cdf = _inverse_cdf_table(state, theta + phase_error)
    x = np.interp(stream.random(n), cdf, grid)
    x += noise.imbalance_shift
    if noise.drift_amplitude:
        x += noise.drift_amplitude * np.linspace(-1.0, 1.0, n)
    return x


def simulate_dataset(plan: SimulationPlan) -> QuadratureDataset:
    blocks = []
    for j, theta in enumerate(plan.phases):
        x = sample_phase(plan.state, theta, plan.samples_per_phase, plan.noise,
                         phase_stream(plan.seed, j), plan.noise.phase_error(j))
        blocks.append(PhaseBlock(theta, x))
    return QuadratureDataset(
        blocks,
        hbar=plan.state.hbar,
        state=plan.state,
        seed=plan.seed,
        noise=plan.noise,
        samples_per_phase=plan.samples_per_phase,
    )


def calibrate(vacuum_samples, hbar: float = DEFAULT_HBAR) -> Calibration:
    """Affine correction that maps vacuum data to mean 0 and variance ``hbar/2``."""
    x = np.asarray(vacuum_samples, dtype=float)
    if x.size < 1000:
        raise ValueError("calibration needs at least 1000 vacuum samples")
    var = x.var()
    if not var > 0:
        raise ValueError("vacuum samples have zero variance")
    return Calibration(offset=-float(x.mean()), scale=float(np.sqrt(hbar / 2 / var)))


def apply_calibration(dataset: QuadratureDataset, calibration: Calibration) -> QuadratureDataset:
    blocks = [PhaseBlock(b.theta, calibration.apply(b.samples)) for b in dataset.blocks]
    return QuadratureDataset(blocks, dataset.hbar, dataset.state, dataset.seed, dataset.noise,
                             calibration, dataset.samples_per_phase)
