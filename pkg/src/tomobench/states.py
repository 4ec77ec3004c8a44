"""Closed-form tomograms, Wigner functions and purities of the supported states.

Two coordinate systems are used throughout the package:

* the calibrated quadrature ``X`` that appears in tomograms and datasets, with
  vacuum variance ``hbar / 2``;
* the dimensionless phase-space pair ``(q, p)`` in which the vacuum Wigner
  function is ``exp(-q**2 - p**2) / pi`` (vacuum variance 1/2).

They are related by the single constant ``X = sqrt(hbar) * u`` where ``u`` is
the dimensionless quadrature ``q cos(theta) + p sin(theta)``.  Densities
transform as ``w_X(X) = w_u(X / sqrt(hbar)) / sqrt(hbar)``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, replace

import numpy as np
from scipy import ndimage

TWO_PI = 2.0 * np.pi
DEFAULT_HBAR = 0.5


class StateKind(str, enum.Enum):
    COHERENT = "coherent"
    SPACS = "spacs"
    DETECTED_COHERENT = "detected-coherent"
    DETECTED_SPACS = "detected-spacs"

    @property
    def detected(self) -> bool:
        return self in (StateKind.DETECTED_COHERENT, StateKind.DETECTED_SPACS)

    @property
    def photon_added(self) -> bool:
        return self in (StateKind.SPACS, StateKind.DETECTED_SPACS)


class GridError(ValueError):
    """Raised when a phase-space grid cannot resolve a Wigner function."""


def normalize_phase(theta):
    """Map a phase (or array of phases) into [0, 2 pi)."""
    out = np.mod(np.asarray(theta, dtype=float), TWO_PI)
    out = np.where(out >= TWO_PI, 0.0, out)  # np.mod rounds tiny negatives up to 2 pi
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class StateSpec:
    """Analytic model of a coherent state or SPACS, optionally degraded by losses.

    ``alpha`` is the amplitude of the *prepared* state; for detected kinds the
    measured state is the prepared one sent through a loss channel of
    transmissivity ``eta``.
    """

    kind: StateKind
    alpha: complex = 0j
    eta: float = 1.0
    hbar: float = DEFAULT_HBAR

    def __post_init__(self):
        object.__setattr__(self, "kind", StateKind(self.kind))
        object.__setattr__(self, "alpha", complex(self.alpha))
        object.__setattr__(self, "eta", float(self.eta))
        object.__setattr__(self, "hbar", float(self.hbar))
        if not (np.isfinite(self.alpha.real) and np.isfinite(self.alpha.imag)):
            raise ValueError("alpha must be finite")
        if not 0.0 <= self.eta <= 1.0:
            raise ValueError(f"eta must lie in [0, 1], got {self.eta}")
        if not self.kind.detected and self.eta != 1.0:
            raise ValueError(f"{self.kind.value} states have eta = 1; use the detected kind")
        if not (self.hbar > 0 and np.isfinite(self.hbar)):
            raise ValueError("hbar must be positive")

    @classmethod
    def coherent(cls, alpha, hbar=DEFAULT_HBAR):
        return cls(StateKind.COHERENT, alpha, 1.0, hbar)

    @classmethod
    def spacs(cls, alpha, hbar=DEFAULT_HBAR):
        return cls(StateKind.SPACS, alpha, 1.0, hbar)

    @classmethod
    def detected_coherent(cls, alpha, eta, hbar=DEFAULT_HBAR):
        return cls(StateKind.DETECTED_COHERENT, alpha, eta, hbar)

    @classmethod
    def detected_spacs(cls, alpha, eta, hbar=DEFAULT_HBAR):
        return cls(StateKind.DETECTED_SPACS, alpha, eta, hbar)

    @property
    def detected_amplitude(self) -> complex:
        """Amplitude of the coherent component seen by an ideal detector."""
        return np.sqrt(self.eta) * self.alpha

    def ideal(self) -> "StateSpec":
        """The prepared state before losses."""
        kind = StateKind.SPACS if self.kind.photon_added else StateKind.COHERENT
        return StateSpec(kind, self.alpha, 1.0, self.hbar)

    def with_hbar(self, hbar) -> "StateSpec":
        return replace(self, hbar=hbar)

    def to_record(self) -> dict:
        return {
            "kind": self.kind.value,
            "alpha_re": float(self.alpha.real),
            "alpha_im": float(self.alpha.imag),
            "eta": float(self.eta),
            "hbar": float(self.hbar),
        }

    @classmethod
    def from_record(cls, record: dict, hbar=None) -> "StateSpec":
        h = record.get("hbar", hbar if hbar is not None else DEFAULT_HBAR)
        return cls(
            StateKind(record["kind"]),
            complex(record.get("alpha_re", 0.0), record.get("alpha_im", 0.0)),
            record.get("eta", 1.0),
            h,
        )


def _check_finite(x):
    x = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(x)):
        raise ValueError("quadrature values must be finite")
    return x


def dimensionless_pdf(state: StateSpec, u, theta):
    """Quadrature density in dimensionless units (vacuum variance 1/2)."""
    u = _check_finite(u)
    theta = np.asarray(theta, dtype=float)
    a = state.alpha
    c, s = np.cos(theta), np.sin(theta)
    along = a.real * c + a.imag * s  # projection of alpha on the measured axis
    across = a.real * s - a.imag * c
    eta = state.eta
    if not state.kind.photon_added:
        return np.exp(-((u - np.sqrt(2 * eta) * along) ** 2)) / np.sqrt(np.pi)
    # marginal of the detected SPACS Wigner function along the rotated axis
    gauss = np.exp(-((u - np.sqrt(2 * eta) * along) ** 2))
    bracket = 1 - eta + (np.sqrt(2 * eta) * u - (2 * eta - 1) * along) ** 2 + across**2
    return bracket * gauss / (np.sqrt(np.pi) * (1 + abs(a) ** 2))


def tomogram_pdf(state: StateSpec, x, theta):
    """Tomogram ``w(X, theta)`` of ``state`` in calibrated quadrature units.

    Vectorised over ``x`` and ``theta`` (numpy broadcasting).  Non-finite
    ``x`` raises ``ValueError``.
    """
    x = _check_finite(x)
    root = np.sqrt(state.hbar)
    return dimensionless_pdf(state, x / root, theta) / root


def tomogram_cdf(state: StateSpec, x, theta):
    """Cumulative distribution of the tomogram in closed form."""
    from scipy.special import erf

    x = _check_finite(x)
    theta = np.asarray(theta, dtype=float)
    u = x / np.sqrt(state.hbar)
    a = state.alpha
    along = a.real * np.cos(theta) + a.imag * np.sin(theta)
    across = a.real * np.sin(theta) - a.imag * np.cos(theta)
    eta = state.eta
    m = np.sqrt(2 * eta) * along
    t = u - m
    base = 0.5 * (1 + erf(t))
    if not state.kind.photon_added:
        return base
    gauss = np.exp(-(t**2))
    # bracket = A + (k t + c)^2 with t = u - m
    k = np.sqrt(2 * eta)
    c = k * m - (2 * eta - 1) * along
    A = 1 - eta + across**2
    # int_{-inf}^{t} (A + c^2 + 2 k c s + k^2 s^2) e^{-s^2} ds / sqrt(pi)
    i0 = base
    i1 = -gauss / (2 * np.sqrt(np.pi))
    i2 = 0.5 * i0 - t * gauss / (2 * np.sqrt(np.pi))
    return ((A + c**2) * i0 + 2 * k * c * i1 + k**2 * i2) / (1 + abs(a) ** 2)


def wigner(state: StateSpec, q, p):
    """Wigner function in dimensionless coordinates ``(q, p)``."""
    q = np.asarray(q, dtype=float)
    p = np.asarray(p, dtype=float)
    a = state.alpha
    eta = state.eta
    k = np.sqrt(2 * eta)
    gauss = np.exp(-((q - k * a.real) ** 2) - (p - k * a.imag) ** 2)
    if not state.kind.photon_added:
        return gauss / np.pi
    bracket = 1 - 2 * eta + (k * q - (2 * eta - 1) * a.real) ** 2 + (k * p - (2 * eta - 1) * a.imag) ** 2
    return bracket * gauss / (np.pi * (1 + abs(a) ** 2))


def detected_purity(alpha, eta) -> float:
    """Purity of a SPACS after losses: ``1 - 2 eta (1 - eta) / (1 + |alpha|^2)^2``."""
    eta = float(eta)
    if not 0.0 <= eta <= 1.0:
        raise ValueError(f"eta must lie in [0, 1], got {eta}")
    return 1.0 - 2.0 * eta * (1.0 - eta) / (1.0 + abs(complex(alpha)) ** 2) ** 2


def state_purity(state: StateSpec) -> float:
    if state.kind.photon_added:
        return detected_purity(state.alpha, state.eta)
    return 1.0


@dataclass(frozen=True)
class PhaseSpaceGrid:
    """Uniform square grid in dimensionless ``(q, p)``."""

    half_width: float = 6.0
    points: int = 401

    @property
    def axis(self) -> np.ndarray:
        return np.linspace(-self.half_width, self.half_width, self.points)

    @property
    def step(self) -> float:
        return 2 * self.half_width / (self.points - 1)

    def mesh(self):
        return np.meshgrid(self.axis, self.axis, indexing="ij")


def wigner_on_grid(state: StateSpec, grid: PhaseSpaceGrid | None = None):
    grid = grid or PhaseSpaceGrid()
    q, p = grid.mesh()
    return wigner(state, q, p)


def convolve_wigner(state: StateSpec, eta: float, grid: PhaseSpaceGrid | None = None,
                    truncation: float = 5.0) -> np.ndarray:
    """Numerically apply a loss channel of transmissivity ``eta`` to ``state``.

    Brute-force quadrature of the Gaussian smoothing integral.  Slow and only
    meant as an independent check of the closed-form detected states.  Returns
    the values on ``grid.mesh()`` (``ij`` indexing).
    """
    grid = grid or PhaseSpaceGrid()
    if not 0.0 < eta < 1.0:
        raise ValueError("eta must lie strictly inside (0, 1)")
    h = grid.step
    s, t = grid.mesh()
    root = np.sqrt(eta)
    # substitute s = sqrt(eta) q' so that the remaining integral is a plain convolution
    scaled = wigner(state, s / root, t / root) / eta
    sigma = np.sqrt((1 - eta) / 2)
    half = int(np.ceil(truncation * sigma / h))
    offsets = np.arange(-half, half + 1) * h
    kernel = np.exp(-(offsets**2) / (1 - eta))
    kernel /= kernel.sum()
    out = ndimage.convolve1d(scaled, kernel, axis=0, mode="constant")
    out = ndimage.convolve1d(out, kernel, axis=1, mode="constant")
    norm = out.sum() * h * h
    if abs(norm - 1.0) > 1e-3:
        raise GridError(f"grid does not resolve the state: normalization {norm:.6f}")
    return out


def wigner_purity(values: np.ndarray, step: float) -> float:
    """``2 pi * integral of W^2`` for gridded dimensionless Wigner values."""
    return float(2 * np.pi * np.sum(values**2) * step * step)


def wigner_overlap(a: np.ndarray, b: np.ndarray, step: float) -> float:
    """``2 pi * integral of W_a W_b``, i.e. ``Tr(rho_a rho_b)``."""
    return float(2 * np.pi * np.sum(a * b) * step * step)


def fock1_wigner(q, p):
    return wigner(StateSpec.spacs(0.0), q, p)
