"""Fisher information matrices and Cramer-Rao bounds for the
squared-magnitude measurement model y_i = |a_i^H x|^2 + n_i with white
Gaussian noise.

Four parametrizations are supported:

* ``complex_reim`` - [Re x; Im x], a 2N x 2N FIM. Always singular with
  rank deficit one; the direction [-Im x; Re x] (the tangent of a global
  phase rotation) spans the null space.
* ``real`` - x known to be real, N x N FIM, always nonsingular.
* ``amp_phase`` - [b; theta] with x_k = b_k e^{j theta_k}. Rank deficit
  one with null direction [0_N; 1_N]; phase/amplitude bounds come from
  generalized Schur complements.
* ``harmonic`` - x = sum_l gamma_l v(w_l); parameters ordered
  (w_1..w_L, Re gamma, Im gamma), 3L x 3L FIM, rank deficit one.

All FIMs share the structure F = (4 / sigma_n^2) G G^T for a real matrix
G whose i-th column stacks the half-derivatives of |a_i^H x|^2. Bounds
use the eigendecomposition-based pseudo-inverse: for a singular FIM this
is a valid (if slightly optimistic) lower bound on the MSE of unbiased
estimators. The sigma_n scaling is applied as an exact scalar factor, so
CRB(c * sigma) == c^2 * CRB(sigma) bitwise.

Each matrix-form FIM has an independently coded companion that follows
the per-element likelihood-derivative sums instead (``*_blockwise`` /
``*_elementwise``); the two paths are cross-checked in the test suite.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .core import ComplexSignal, MeasurementEnsemble
from .measurements import HarmonicModel, harmonic_signal, vandermonde_vector

# Relative eigenvalue threshold below which a FIM direction is treated as
# null when forming the pseudo-inverse.
DEFAULT_RANK_TOL = 1e-10

PARAMETRIZATIONS = ("complex_reim", "real", "amp_phase", "harmonic")


@dataclass(frozen=True)
class FimResult:
    """A Fisher information matrix with rank diagnostics and its
    pseudo-inverse-based Cramer-Rao bound."""

    parametrization: str
    fim: np.ndarray  # real symmetric, (d, d)
    crb: np.ndarray  # pseudo-inverse of fim
    rank: int
    null_basis: np.ndarray  # (d, d - rank), orthonormal null directions
    eigenvalues: np.ndarray  # eigenvalues of fim, ascending
    sigma_n: float
    # amp_phase only: Schur-complement bounds on amplitude and phase and
    # whether the inner block inverse had to fall back to a pseudo-inverse.
    crb_amplitude: Optional[np.ndarray] = None
    crb_phase: Optional[np.ndarray] = None
    schur_used_pinv: bool = False

    def __post_init__(self):
        if self.parametrization not in PARAMETRIZATIONS:
            raise ValueError(f"unknown parametrization {self.parametrization}")
        eig = self.eigenvalues
        scale = float(np.max(np.abs(eig), initial=0.0))
        if eig.size and float(np.min(eig)) < -1e-10 * max(scale, 1.0):
            raise ValueError("FIM must be positive semidefinite")

    @property
    def dim(self) -> int:
        return self.fim.shape[0]

    def crb_trace_db(self) -> float:
        return float(10.0 * np.log10(np.trace(self.crb)))


def _pinv_eig(
    mat: np.ndarray, rank_tol: float
) -> tuple[np.ndarray, int, np.ndarray, np.ndarray]:
    """Shared eigendecomposition core: (pinv, rank, null_basis, eigvals)."""
    eigvals, eigvecs = np.linalg.eigh((mat + mat.T) / 2.0)
    cutoff = rank_tol * float(np.max(np.abs(eigvals), initial=0.0))
    keep = eigvals > cutoff
    inv_vals = np.where(keep, 1.0 / np.where(keep, eigvals, 1.0), 0.0)
    pinv = (eigvecs * inv_vals) @ eigvecs.T
    pinv = (pinv + pinv.T) / 2.0
    null_basis = eigvecs[:, ~keep]
    return pinv, int(np.count_nonzero(keep)), null_basis, eigvals


def pseudo_inverse_psd(
    fim: np.ndarray, rank_tol: float = DEFAULT_RANK_TOL
) -> tuple[np.ndarray, int, np.ndarray]:
    """Eigendecomposition-based pseudo-inverse of a symmetric PSD matrix.

    Eigenvalues below rank_tol * lambda_max are treated as exact zeros;
    returns (pinv, rank, null_basis) where null_basis spans the dropped
    eigenspace.
    """
    fim = np.asarray(fim, dtype=np.float64)
    if fim.ndim != 2 or fim.shape[0] != fim.shape[1]:
        raise ValueError("FIM must be square")
    scale = float(np.max(np.abs(fim), initial=0.0))
    if not np.allclose(fim, fim.T, atol=1e-12 * max(scale, 1.0), rtol=0.0):
        raise ValueError("FIM must be symmetric")
    pinv, rank, null_basis, _ = _pinv_eig(fim, rank_tol)
    return pinv, rank, null_basis


def _result_from_g(
    g: np.ndarray,
    sigma_n: float,
    parametrization: str,
    rank_tol: float,
    **extra,
) -> FimResult:
    """Assemble a FimResult from the derivative matrix G.

    The eigendecomposition is done on G G^T once; the noise scaling
    4/sigma^2 enters as an exact scalar so bounds scale exactly with
    sigma^2.
    """
    if sigma_n <= 0:
        raise ValueError("sigma_n must be positive")
    base = g @ g.T
    base = (base + base.T) / 2.0
    pinv_base, rank, null_basis, eigvals = _pinv_eig(base, rank_tol)
    factor = 4.0 / sigma_n**2
    # eigh of a PSD Gram matrix can dip slightly negative; the FimResult
    # validator tolerates that at the 1e-10 relative level.
    return FimResult(
        parametrization=parametrization,
        fim=factor * base,
        crb=pinv_base / factor,
        rank=rank,
        null_basis=null_basis,
        eigenvalues=factor * eigvals,
        sigma_n=float(sigma_n),
        **extra,
    )


def _scaled_projections(
    ensemble: MeasurementEnsemble, x: np.ndarray
) -> np.ndarray:
    """The N x M matrix A diag(A^H x) whose real/imaginary parts generate
    every FIM here; entry (k, i) is a_i[k] * (a_i^H x)."""
    return ensemble.columns * ensemble.conj_inner(x)[np.newaxis, :]


def fim_complex(
    ensemble: MeasurementEnsemble,
    x: ComplexSignal,
    sigma_n: float,
    rank_tol: float = DEFAULT_RANK_TOL,
) -> FimResult:
    """FIM for the [Re x; Im x] parametrization: (4/sigma^2) Gc Gc^T with
    Gc = [Re{A diag(A^H x)}; Im{A diag(A^H x)}]."""
    if ensemble.n != x.n:
        raise ValueError("dimension mismatch between ensemble and signal")
    if x.norm() == 0.0:
        raise ValueError("FIM undefined for the zero signal")
    t = _scaled_projections(ensemble, x.values)
    g = np.vstack([t.real, t.imag])
    return _result_from_g(g, sigma_n, "complex_reim", rank_tol)


def fim_real(
    ensemble: MeasurementEnsemble,
    x,
    sigma_n: float,
    rank_tol: float = DEFAULT_RANK_TOL,
) -> FimResult:
    """FIM for real-valued x: (4/sigma^2) Gr Gr^T with
    Gr = Re{A diag(A^H x)}. Nonsingular for generic full-row-rank A."""
    if isinstance(x, ComplexSignal):
        if np.any(x.values.imag != 0.0):
            raise ValueError("fim_real requires a real-valued signal")
        xv = x.values.real.astype(np.float64)
    else:
        xv = np.asarray(x, dtype=np.float64)
    if xv.shape != (ensemble.n,):
        raise ValueError("dimension mismatch between ensemble and signal")
    if not np.any(xv):
        raise ValueError("FIM undefined for the zero signal")
    t = _scaled_projections(ensemble, xv.astype(np.complex128))
    result = _result_from_g(t.real, sigma_n, "real", rank_tol)
    if result.rank < ensemble.n:
        raise np.linalg.LinAlgError(
            "real-parametrization FIM is singular "
            f"(rank {result.rank} < {ensemble.n})"
        )
    return result


def fim_amp_phase(
    ensemble: MeasurementEnsemble,
    x: ComplexSignal,
    sigma_n: float,
    rank_tol: float = DEFAULT_RANK_TOL,
) -> FimResult:
    """FIM for the amplitude/phase parametrization [b; theta].

    G stacks Re{diag(e^{-j theta}) A diag(A^H x)} over
    Im{diag(conj(x)) A diag(A^H x)}. Every coordinate must have nonzero
    amplitude, otherwise its phase parameter is undefined.

    Besides the full bound, the result carries the amplitude and phase
    bounds obtained from generalized Schur complements:
    CRB_theta = (F_tt - F_tb F_bb^{-1} F_bt)^+ and symmetrically for the
    amplitude block. A pseudo-inverse replaces the inner inverse when the
    block is numerically singular (flagged in the result).
    """
    if ensemble.n != x.n:
        raise ValueError("dimension mismatch between ensemble and signal")
    amp = x.amplitudes
    if np.any(amp == 0.0):
        raise ValueError("amp_phase parametrization requires |x_k| > 0")
    t = _scaled_projections(ensemble, x.values)
    phase_factor = np.exp(-1j * x.phases)
    g = np.vstack(
        [
            (phase_factor[:, np.newaxis] * t).real,
            (x.values.conj()[:, np.newaxis] * t).imag,
        ]
    )
    n = x.n
    base = g @ g.T
    base = (base + base.T) / 2.0
    factor = 4.0 / sigma_n**2
    crb_amp, _, used_pinv_b = _schur_bound(
        base[:n, :n], base[:n, n:], base[n:, n:], rank_tol
    )
    crb_phase, _, used_pinv_t = _schur_bound(
        base[n:, n:], base[n:, :n], base[:n, :n], rank_tol
    )
    return _result_from_g(
        g,
        sigma_n,
        "amp_phase",
        rank_tol,
        crb_amplitude=crb_amp / factor,
        crb_phase=crb_phase / factor,
        schur_used_pinv=used_pinv_b or used_pinv_t,
    )


def _schur_bound(
    own: np.ndarray, cross: np.ndarray, other: np.ndarray, rank_tol: float
) -> tuple[np.ndarray, np.ndarray, bool]:
    """Pseudo-inverse of the generalized Schur complement
    own - cross other^{-1} cross^T, falling back to other^+ when the
    inner block is numerically singular."""
    used_pinv = False
    eigvals = np.linalg.eigvalsh(other)
    if float(eigvals[0]) <= rank_tol * max(float(eigvals[-1]), 0.0):
        inner, _, _ = pseudo_inverse_psd(other, rank_tol)
        used_pinv = True
        reduced = cross @ inner @ cross.T
    else:
        reduced = cross @ np.linalg.solve(other, cross.T)
    schur = own - reduced
    bound, rank, _ = pseudo_inverse_psd((schur + schur.T) / 2.0, rank_tol)
    return bound, rank, used_pinv


def fim_amp_phase_blockwise(
    ensemble: MeasurementEnsemble, x: ComplexSignal, sigma_n: float
) -> np.ndarray:
    """Independent path for the amp/phase FIM via per-element sums.

    Builds each sub-block entry as (1/sigma^2) sum_i of products of the
    cost-derivative scalars, forming A_i = a_i a_i^H explicitly. Used to
    cross-check the stacked-G product in fim_amp_phase.
    """
    if sigma_n <= 0:
        raise ValueError("sigma_n must be positive")
    n, m = ensemble.n, ensemble.m
    theta = x.phases
    deriv_b = np.zeros((m, n))
    deriv_t = np.zeros((m, n))
    for i in range(m):
        a_i = ensemble.columns[:, i]
        rank1 = np.outer(a_i, a_i.conj())
        rx = rank1 @ x.values
        deriv_b[i] = 2.0 * (np.exp(-1j * theta) * rx).real
        deriv_t[i] = 2.0 * (-1j * x.values.conj() * rx).real
    f_bb = deriv_b.T @ deriv_b
    f_tt = deriv_t.T @ deriv_t
    f_bt = deriv_b.T @ deriv_t
    top = np.hstack([f_bb, f_bt])
    bottom = np.hstack([f_bt.T, f_tt])
    return np.vstack([top, bottom]) / sigma_n**2


def _harmonic_derivative_matrix(model: HarmonicModel) -> np.ndarray:
    """Columns gamma_l * dv/dw_l with dv/dw = [j e^{jw}, ..., jN e^{jNw}]."""
    cols = []
    for w, gamma in zip(model.frequencies, model.amplitudes):
        v = vandermonde_vector(w, model.n)
        cols.append(gamma * 1j * np.arange(1, model.n + 1) * v)
    return np.stack(cols, axis=1)


def fim_harmonic(
    ensemble: MeasurementEnsemble,
    model: HarmonicModel,
    sigma_n: float,
    rank_tol: float = DEFAULT_RANK_TOL,
) -> FimResult:
    """FIM for a sum of L harmonics, parameters (w; Re gamma; Im gamma).

    Gv column i stacks Re{X^H A_i x}, Re{V^H A_i x}, Im{V^H A_i x} where
    V collects the Vandermonde vectors and X their gamma-weighted
    frequency derivatives. Rank deficit is one (global phase again).
    """
    if ensemble.n != model.n:
        raise ValueError("dimension mismatch between ensemble and model")
    x = harmonic_signal(model)
    t = _scaled_projections(ensemble, x.values)  # column i = A_i x
    v = np.stack(
        [vandermonde_vector(w, model.n) for w in model.frequencies], axis=1
    )
    xd = _harmonic_derivative_matrix(model)
    g = np.vstack(
        [
            (xd.conj().T @ t).real,
            (v.conj().T @ t).real,
            (v.conj().T @ t).imag,
        ]
    )
    return _result_from_g(g, sigma_n, "harmonic", rank_tol)


def fim_harmonic_elementwise(
    ensemble: MeasurementEnsemble, model: HarmonicModel, sigma_n: float
) -> np.ndarray:
    """Independent path for the harmonic FIM via per-element sums over
    measurements, mirroring the closed-form block entries."""
    if sigma_n <= 0:
        raise ValueError("sigma_n must be positive")
    ll, m = model.order, ensemble.m
    x = harmonic_signal(model).values
    v = np.stack(
        [vandermonde_vector(w, model.n) for w in model.frequencies], axis=1
    )
    xd = _harmonic_derivative_matrix(model)
    # Per-measurement derivative scalars: u (frequencies), r/q (Re/Im
    # parts of the amplitudes).
    u = np.zeros((m, ll))
    r = np.zeros((m, ll))
    q = np.zeros((m, ll))
    for i in range(m):
        a_i = ensemble.columns[:, i]
        rx = np.outer(a_i, a_i.conj()) @ x
        u[i] = (xd.conj().T @ rx).real
        r[i] = (v.conj().T @ rx).real
        q[i] = (v.conj().T @ rx).imag
    fim = np.zeros((3 * ll, 3 * ll))
    blocks = (u, r, q)
    for bi, left in enumerate(blocks):
        for bj, right in enumerate(blocks):
            fim[
                bi * ll : (bi + 1) * ll, bj * ll : (bj + 1) * ll
            ] = left.T @ right
    return 4.0 / sigma_n**2 * fim


@dataclass(frozen=True)
class MonotonicityReport:
    """Result of checking that the bound shrinks as measurements accrue."""

    m_values: np.ndarray
    crb_traces: np.ndarray  # trace of the amp/phase CRB at each M
    min_gap_eigenvalues: np.ndarray  # min eig of CRB(M_k) - CRB(M_{k+1})
    rank1_residuals: np.ndarray  # nan when the pair is not consecutive
    psd_ok: bool
    update_ok: bool


def crb_monotonicity_check(
    ensemble: MeasurementEnsemble,
    x: ComplexSignal,
    sigma_n: float,
    m_values,
    parametrization: str = "amp_phase",
    psd_tol: float = 1e-9,
    update_tol: float = 1e-12,
) -> MonotonicityReport:
    """Verify CRB(A[:, :M+1]) <= CRB(A[:, :M]) along a growing prefix of
    the ensemble, plus the rank-1 FIM update identity
    F(M+1) = F(M) + (4/sigma^2) g g^T for consecutive M.

    The update identity holds for every M. The PSD ordering of
    pseudo-inverse bounds additionally requires the FIM rank to have
    saturated: rank grows with M up to the parametrization's ceiling
    (2N - 1 for amp_phase / complex_reim, N for real), and while it is
    still growing the bound gains newly identifiable directions, so
    CRB(M) - CRB(M+1) acquires negative eigenvalues by construction. For
    the real parametrization the rank ceiling is reached at M = N
    already, so the ordering holds along the entire admissible range.
    """
    m_values = np.asarray(m_values, dtype=int)
    if np.any(np.diff(m_values) <= 0):
        raise ValueError("m_values must be strictly increasing")
    if m_values[0] < ensemble.n:
        raise ValueError("each M must be at least N")
    if m_values[-1] > ensemble.m:
        raise ValueError("ensemble has too few columns")

    def sub_ensemble(m):
        return MeasurementEnsemble(
            ensemble.columns[:, :m], kind="custom", seed=ensemble.seed
        )

    if parametrization == "amp_phase":
        fim_of = lambda e: fim_amp_phase(e, x, sigma_n)
    elif parametrization == "complex_reim":
        fim_of = lambda e: fim_complex(e, x, sigma_n)
    elif parametrization == "real":
        fim_of = lambda e: fim_real(e, x, sigma_n)
    else:
        raise ValueError(f"unsupported parametrization {parametrization}")

    results = [fim_of(sub_ensemble(m)) for m in m_values]
    traces = np.array([float(np.trace(r.crb)) for r in results])
    gaps = np.full(len(m_values) - 1, np.nan)
    residuals = np.full(len(m_values) - 1, np.nan)
    for k in range(len(m_values) - 1):
        diff = results[k].crb - results[k + 1].crb
        gaps[k] = float(np.linalg.eigvalsh((diff + diff.T) / 2.0)[0])
        if m_values[k + 1] == m_values[k] + 1:
            # Rebuild both sides of the rank-1 update from scratch.
            i = m_values[k]  # 0-based index of the appended column
            a_new = ensemble.columns[:, i]
            col = a_new * np.vdot(a_new, x.values)  # A_{M+1} x
            if parametrization == "amp_phase":
                g_new = np.concatenate(
                    [
                        (np.exp(-1j * x.phases) * col).real,
                        (x.values.conj() * col).imag,
                    ]
                )
            elif parametrization == "complex_reim":
                g_new = np.concatenate([col.real, col.imag])
            else:
                g_new = col.real
            update = results[k].fim + 4.0 / sigma_n**2 * np.outer(
                g_new, g_new
            )
            scale = max(1.0, float(np.max(np.abs(results[k + 1].fim))))
            residuals[k] = float(
                np.max(np.abs(update - results[k + 1].fim)) / scale
            )
    psd_ok = bool(np.all(gaps >= -psd_tol))
    checked = residuals[~np.isnan(residuals)]
    update_ok = bool(np.all(checked <= update_tol)) if checked.size else True
    return MonotonicityReport(
        m_values=m_values,
        crb_traces=traces,
        min_gap_eigenvalues=gaps,
        rank1_residuals=residuals,
        psd_ok=psd_ok,
        update_ok=update_ok,
    )
