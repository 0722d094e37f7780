"""Seeded measurement ensembles, harmonic test signals, and the
overcomplete Vandermonde dictionary used for sparse spectrum estimation.

Conventions
-----------
* Vandermonde vectors are indexed from 1: v(w) = [e^{jw}, ..., e^{jNw}]^T,
  so every column of a dictionary has norm sqrt(N).
* The DFT matrix is unnormalized, F[m, n] = e^{-j 2 pi m n / N} with
  0-based row/column indices. Normalization only rescales measurements and
  noise jointly; the convention is recorded in the ensemble metadata via
  its kind.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._rng import stream
from .core import ComplexSignal, MeasurementEnsemble, _readonly

# Magnitudes and probabilities of the random diagonal mask factors: the
# phase factor is uniform over {1, -1, -j, j}; the modulus is sqrt(2)/2
# with probability 0.8 and sqrt(3) with probability 0.2.
MASK_PHASES = np.array([1.0, -1.0, -1.0j, 1.0j])
MASK_MODULI = np.array([np.sqrt(2.0) / 2.0, np.sqrt(3.0)])
MASK_MODULUS_PROBS = np.array([0.8, 0.2])


@dataclass(frozen=True)
class HarmonicModel:
    """Signal made of L complex sinusoids: x_n = sum_l gamma_l e^{j n w_l}."""

    frequencies: np.ndarray  # radians/sample, each in (-pi, pi], distinct
    amplitudes: np.ndarray  # complex weights gamma_l
    n: int  # signal length N

    def __post_init__(self):
        w = np.asarray(self.frequencies, dtype=np.float64)
        g = np.asarray(self.amplitudes, dtype=np.complex128)
        if w.ndim != 1 or w.size < 1:
            raise ValueError("need at least one frequency")
        if g.shape != w.shape:
            raise ValueError("one amplitude per frequency required")
        if np.unique(w).size != w.size:
            raise ValueError("frequencies must be pairwise distinct")
        if np.any(w <= -np.pi) or np.any(w > np.pi):
            raise ValueError("frequencies must lie in (-pi, pi]")
        if self.n < 1:
            raise ValueError("signal length must be positive")
        object.__setattr__(self, "frequencies", _readonly(w))
        object.__setattr__(self, "amplitudes", _readonly(g))

    @property
    def order(self) -> int:
        return self.frequencies.size


@dataclass(frozen=True)
class Dictionary:
    """N x P Vandermonde basis on a frequency grid.

    The normal regime is overcomplete (P > N); square dictionaries are
    permitted so the sparse solvers can be cross-checked against their
    dense counterparts via an invertible change of coordinates.
    """

    grid: np.ndarray  # float64, shape (P,)
    matrix: np.ndarray  # complex128, shape (N, P), column p = v(grid[p])

    def __post_init__(self):
        grid = np.asarray(self.grid, dtype=np.float64)
        mat = np.asarray(self.matrix, dtype=np.complex128)
        if grid.ndim != 1 or mat.ndim != 2 or mat.shape[1] != grid.size:
            raise ValueError("matrix must have one column per grid point")
        if mat.shape[1] < mat.shape[0]:
            raise ValueError("dictionary needs at least N columns")
        object.__setattr__(self, "grid", _readonly(grid))
        object.__setattr__(self, "matrix", _readonly(mat))

    @property
    def n(self) -> int:
        return self.matrix.shape[0]

    @property
    def p(self) -> int:
        return self.matrix.shape[1]


def vandermonde_vector(omega: float, n: int) -> np.ndarray:
    """v(w) = [e^{jw}, ..., e^{jnw}]^T (1-based index convention)."""
    return np.exp(1j * omega * np.arange(1, n + 1))


def gaussian_ensemble(n: int, m: int, seed: int) -> MeasurementEnsemble:
    """Measurement vectors with i.i.d. standard-normal real and imaginary
    parts, so E|a_i[k]|^2 = 2."""
    if n < 1 or m < 1:
        raise ValueError("n and m must be positive")
    rng = stream(seed)
    a = rng.standard_normal((n, m)) + 1j * rng.standard_normal((n, m))
    return MeasurementEnsemble(columns=a, kind="gaussian", seed=seed)


def random_masks(n: int, k: int, seed: int) -> np.ndarray:
    """K random diagonal masks, entries b1*b2 (phase times modulus)."""
    rng = stream(seed)
    phases = MASK_PHASES[rng.integers(0, 4, size=(k, n))]
    moduli = MASK_MODULI[
        (rng.random(size=(k, n)) < MASK_MODULUS_PROBS[1]).astype(int)
    ]
    return phases * moduli


def dft_matrix(n: int) -> np.ndarray:
    """Unnormalized DFT matrix F[m, l] = e^{-j 2 pi m l / n}, 0-based."""
    idx = np.arange(n)
    return np.exp(-2j * np.pi * np.outer(idx, idx) / n)


def masked_fourier_ensemble(
    n: int, k: int, seed: int, masks: np.ndarray | None = None
) -> MeasurementEnsemble:
    """Coded-diffraction measurements: A^H = [F D_1; ...; F D_K].

    D_k is diagonal with i.i.d. entries b1*b2 as in `random_masks`. Passing
    `masks` (shape (K, N)) overrides the random draw; this exists for tests
    and diagnostics (e.g. all-ones masks reduce A^H to the plain DFT).
    """
    if n < 1 or k < 1:
        raise ValueError("n and k must be positive")
    if masks is None:
        masks = random_masks(n, k, seed)
    masks = np.asarray(masks, dtype=np.complex128)
    if masks.shape != (k, n):
        raise ValueError(f"masks must have shape ({k}, {n})")
    f = dft_matrix(n)
    # Stack F D_k blocks; columns of A are the conjugated rows of A^H.
    a_h = np.vstack([f * masks[i][np.newaxis, :] for i in range(k)])
    return MeasurementEnsemble(
        columns=a_h.conj().T, kind="masked_fourier", seed=seed
    )


def harmonic_signal(model: HarmonicModel) -> ComplexSignal:
    """Superposition of Vandermonde vectors x = sum_l gamma_l v(w_l)."""
    v = np.stack(
        [vandermonde_vector(w, model.n) for w in model.frequencies], axis=1
    )
    return ComplexSignal(v @ model.amplitudes)


def build_dictionary(n: int, p: int, band: tuple[float, float]) -> Dictionary:
    """Uniform P-point Vandermonde dictionary over [lo, hi] inclusive."""
    lo, hi = band
    if not lo < hi:
        raise ValueError("band must satisfy lo < hi")
    if p <= n:
        raise ValueError("dictionary must be overcomplete (P > N)")
    grid = np.linspace(lo, hi, p)
    mat = np.exp(1j * np.outer(np.arange(1, n + 1), grid))
    return Dictionary(grid=grid, matrix=mat)


def project_dictionary(
    ensemble: MeasurementEnsemble, dictionary: Dictionary
) -> np.ndarray:
    """Measurement vectors in dictionary coordinates: column i is
    b_i = V^H a_i, so that |b_i^H xt|^2 = |a_i^H (V xt)|^2."""
    if ensemble.n != dictionary.n:
        raise ValueError(
            f"dimension mismatch: ensemble N={ensemble.n}, "
            f"dictionary N={dictionary.n}"
        )
    return dictionary.matrix.conj().T @ ensemble.columns
