"""Measurement model, noise, and estimation-error metrics.

The observation model is

    y_i = |a_i^H x|^2 + n_i,    i = 1..M,

where x is an unknown complex N-vector and the a_i are known measurement
vectors (columns of A). Because the measurements are invariant to a global
phase rotation of x, every error metric here first aligns the estimate to
the reference signal over that rotation.

The rank-1 matrices a_i a_i^H are never formed; everything is expressed
through the scalars a_i^H x (O(N) per measurement instead of O(N^2)).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from ._rng import stream

# Reported in place of 10*log10(0) so error reports stay finite.
MSE_FLOOR_DB = -320.0

ENSEMBLE_KINDS = ("gaussian", "masked_fourier", "custom")


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.array(a, copy=True)
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class ComplexSignal:
    """A complex N-vector: the unknown signal or an estimate of it."""

    values: np.ndarray  # complex128, shape (N,)

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.complex128)
        if v.ndim != 1 or v.size < 1:
            raise ValueError("signal must be a nonempty 1-D vector")
        if not np.all(np.isfinite(v.view(np.float64))):
            raise ValueError("signal entries must be finite")
        object.__setattr__(self, "values", _readonly(v))

    @property
    def n(self) -> int:
        return self.values.size

    @property
    def amplitudes(self) -> np.ndarray:
        return np.abs(self.values)

    @property
    def phases(self) -> np.ndarray:
        return np.angle(self.values)

    def norm(self) -> float:
        return float(np.linalg.norm(self.values))


@dataclass(frozen=True)
class MeasurementEnsemble:
    """Known N x M measurement matrix A; column i is the vector a_i."""

    columns: np.ndarray  # complex128, shape (N, M)
    kind: str = "custom"
    seed: int = 0

    def __post_init__(self):
        a = np.asarray(self.columns, dtype=np.complex128)
        if a.ndim != 2 or a.shape[0] < 1 or a.shape[1] < 1:
            raise ValueError("measurement matrix must be 2-D and nonempty")
        if not np.all(np.isfinite(a.view(np.float64))):
            raise ValueError("measurement matrix entries must be finite")
        if self.kind not in ENSEMBLE_KINDS:
            raise ValueError(f"kind must be one of {ENSEMBLE_KINDS}")
        if self.kind == "masked_fourier" and a.shape[1] % a.shape[0] != 0:
            raise ValueError("masked_fourier requires M to be a multiple of N")
        object.__setattr__(self, "columns", _readonly(a))
        object.__setattr__(self, "seed", int(self.seed))

    @property
    def n(self) -> int:
        return self.columns.shape[0]

    @property
    def m(self) -> int:
        return self.columns.shape[1]

    def conj_inner(self, x: np.ndarray) -> np.ndarray:
        """The M scalars a_i^H x."""
        return self.columns.conj().T @ x


@dataclass(frozen=True)
class RetrievalInstance:
    """One phase-retrieval problem: ensemble, data vector, noise level, and
    optionally the ground-truth signal for error reporting."""

    ensemble: MeasurementEnsemble
    y: np.ndarray  # float64, shape (M,), squared-magnitude units
    sigma_n: float
    truth: Optional[ComplexSignal] = None

    def __post_init__(self):
        y = np.asarray(self.y, dtype=np.float64)
        if y.shape != (self.ensemble.m,):
            raise ValueError("y must have one entry per measurement vector")
        if not np.all(np.isfinite(y)):
            raise ValueError("y entries must be finite")
        if self.sigma_n < 0:
            raise ValueError("sigma_n must be nonnegative")
        if self.truth is not None and self.truth.n != self.ensemble.n:
            raise ValueError("truth length must match ensemble dimension")
        object.__setattr__(self, "y", _readonly(y))
        object.__setattr__(self, "sigma_n", float(self.sigma_n))

    @property
    def n(self) -> int:
        return self.ensemble.n

    @property
    def m(self) -> int:
        return self.ensemble.m


@dataclass(frozen=True)
class ErrorReport:
    """Estimation errors in dB, computed after global-phase alignment.

    A trial is an outage when the signal MSE exceeds 0 dB; benchmark
    averages exclude such trials.
    """

    mse_signal_db: float
    mse_amplitude_db: float
    mse_phase_db: float
    aligned_phase: float  # rotation applied to the estimate, radians
    is_outage: bool = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "is_outage", bool(self.mse_signal_db > 0.0))


def measure(ensemble: MeasurementEnsemble, x: ComplexSignal) -> np.ndarray:
    """Noise-free squared-magnitude measurements y_i = |a_i^H x|^2."""
    if ensemble.n != x.n:
        raise ValueError(
            f"dimension mismatch: ensemble N={ensemble.n}, signal N={x.n}"
        )
    proj = ensemble.conj_inner(x.values)
    return np.abs(proj) ** 2


def add_noise(y: np.ndarray, sigma_n: float, seed: int) -> np.ndarray:
    """Add white Gaussian noise with standard deviation sigma_n.

    Deterministic for a given seed; sigma_n = 0 returns the input unchanged.
    """
    if sigma_n < 0:
        raise ValueError("sigma_n must be nonnegative")
    y = np.asarray(y, dtype=np.float64)
    if sigma_n == 0.0:
        return y.copy()
    rng = stream(seed)
    return y + sigma_n * rng.standard_normal(y.shape)


def sigma_from_snr(
    ensemble: MeasurementEnsemble, x: ComplexSignal, snr_linear: float
) -> float:
    """Noise standard deviation matching a target linear SNR.

    SNR is defined against the squared measurements:
    SNR = sum_i |a_i^H x|^4 / (M sigma_n^2).
    """
    if snr_linear <= 0:
        raise ValueError("snr_linear must be positive")
    clean = measure(ensemble, x)
    power = float(np.sum(clean**2))
    if power == 0.0:
        raise ValueError("SNR undefined for a zero signal")
    return float(np.sqrt(power / (ensemble.m * snr_linear)))


def snr_from_sigma(
    ensemble: MeasurementEnsemble, x: ComplexSignal, sigma_n: float
) -> float:
    """Inverse of sigma_from_snr: the linear SNR implied by sigma_n."""
    if sigma_n <= 0:
        raise ValueError("sigma_n must be positive")
    clean = measure(ensemble, x)
    return float(np.sum(clean**2) / (ensemble.m * sigma_n**2))


def align_global_phase(
    estimate: ComplexSignal, truth: ComplexSignal
) -> tuple[ComplexSignal, float]:
    """Rotate the estimate by the phase that best matches the truth.

    Returns (e^{j phi} * estimate, phi) with phi minimizing
    ||e^{j phi} estimate - truth||_2. The minimizer is
    phi = angle(estimate^H truth).
    """
    if estimate.n != truth.n:
        raise ValueError("estimate and truth must have equal length")
    if truth.norm() == 0.0:
        raise ValueError("cannot align against a zero truth vector")
    overlap = np.vdot(estimate.values, truth.values)  # estimate^H truth
    if overlap == 0:
        phi = 0.0
    else:
        phi = float(np.angle(overlap))
    rotated = ComplexSignal(np.exp(1j * phi) * estimate.values)
    return rotated, phi


def wrap_angles(angles: np.ndarray) -> np.ndarray:
    """Map angles into (-pi, pi]."""
    wrapped = np.remainder(angles + np.pi, 2 * np.pi) - np.pi
    # remainder maps odd multiples of pi to -pi; fold them back to +pi
    wrapped = np.where(wrapped == -np.pi, np.pi, wrapped)
    return wrapped


def _db_or_floor(squared_error: float) -> float:
    if squared_error <= 0.0:
        return MSE_FLOOR_DB
    return max(10.0 * np.log10(squared_error), MSE_FLOOR_DB)


def error_report(estimate: ComplexSignal, truth: ComplexSignal) -> ErrorReport:
    """Signal / amplitude / phase MSE in dB after global-phase alignment.

    Signal MSE is 10 log10 ||xhat - x||^2; amplitude uses the moduli,
    phase uses per-entry differences wrapped into (-pi, pi].
    """
    aligned, phi = align_global_phase(estimate, truth)
    diff = aligned.values - truth.values
    amp_diff = aligned.amplitudes - truth.amplitudes
    phase_diff = wrap_angles(aligned.phases - truth.phases)
    return ErrorReport(
        mse_signal_db=_db_or_floor(float(np.sum(np.abs(diff) ** 2))),
        mse_amplitude_db=_db_or_floor(float(np.sum(amp_diff**2))),
        mse_phase_db=_db_or_floor(float(np.sum(phase_diff**2))),
        aligned_phase=phi,
    )
