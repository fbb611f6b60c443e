"""Correlation matrices, path loss and the composite per-mode gains."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ._validation import check_hermitian, check_positive_int, check_positive_real
from .errors import DomainError
from .phase import PhaseShiftProfile, PhaseVector, amplitude

__all__ = [
    "SystemDims",
    "CorrelationSet",
    "EnsembleDims",
    "GainVector",
    "irs_correlation",
    "ula_correlation",
    "path_loss",
    "element_aperture",
    "eigen_spectrum",
    "matrix_sqrt_psd",
    "case_spectra",
    "assemble_gains",
    "spread_gains",
    "JITTER_GAP",
    "JITTER_STEP",
]

# relative gap below which gains are spread apart, and the per-rank spread
JITTER_GAP = 1e-6
JITTER_STEP = 1e-6
_PSD_TOL = 1e-10


@dataclass(frozen=True)
class SystemDims:
    """Antenna counts and IRS grid size."""

    M: int
    K: int
    N_H: int
    N_V: int

    def __post_init__(self):
        for name in ("M", "K", "N_H", "N_V"):
            object.__setattr__(self, name, check_positive_int(getattr(self, name), name))

    @property
    def N(self) -> int:
        return self.N_H * self.N_V

    @classmethod
    def from_total(cls, M: int, K: int, N: int) -> "SystemDims":
        """Choose the most nearly square grid with ``N_H >= N_V``."""
        N = check_positive_int(N, "N")
        n_v = max(d for d in range(1, math.isqrt(N) + 1) if N % d == 0)
        return cls(M=M, K=K, N_H=N // n_v, N_V=n_v)


def _check_correlation(mat, name, n=None):
    mat = check_hermitian(mat, name)
    if n is not None and mat.shape[0] != n:
        raise DomainError(f"{name} must be {n}x{n}, got {mat.shape}")
    if not np.allclose(np.diag(mat).real, 1.0, rtol=0, atol=1e-10):
        raise DomainError(f"{name} must have unit diagonal")
    w = np.linalg.eigvalsh(mat)
    if w[0] < -_PSD_TOL:
        raise DomainError(f"{name} is not positive semidefinite (min eigenvalue {w[0]:.3g})")
    out = np.array(mat, copy=True)
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class CorrelationSet:
    """Kronecker correlation matrices of both hops.

    Attributes
    ----------
    R1 : ndarray (N, N)
        IRS-side receive correlation of the transmitter-IRS hop.
    T1 : ndarray (M, M)
        Transmit correlation.
    R2 : ndarray (K, K)
        Receive correlation.
    T2 : ndarray (N, N)
        IRS-side transmit correlation of the IRS-receiver hop.
    """

    R1: np.ndarray
    T1: np.ndarray
    R2: np.ndarray
    T2: np.ndarray

    def __post_init__(self):
        r1 = _check_correlation(self.R1, "R1")
        n = r1.shape[0]
        object.__setattr__(self, "R1", r1)
        object.__setattr__(self, "T2", _check_correlation(self.T2, "T2", n))
        object.__setattr__(self, "T1", _check_correlation(self.T1, "T1"))
        object.__setattr__(self, "R2", _check_correlation(self.R2, "R2"))

    @property
    def N(self) -> int:
        return self.R1.shape[0]

    @property
    def M(self) -> int:
        return self.T1.shape[0]

    @property
    def K(self) -> int:
        return self.R2.shape[0]


@dataclass(frozen=True)
class EnsembleDims:
    """Dimensions ``(a, q, p)`` of the product ensemble ``X diag(gamma)^{1/2} Z``.

    ``X`` is ``a x q``, ``Z`` is ``q x p`` and ``s = min(a, q)`` eigenvalues
    of the resulting Gram matrix are nonzero.
    """

    a: int
    q: int
    p: int

    def __post_init__(self):
        for name in ("a", "q", "p"):
            object.__setattr__(self, name, check_positive_int(getattr(self, name), name))
        if self.p < self.q:
            raise DomainError(f"p must be >= q, got p={self.p}, q={self.q}")

    @property
    def s(self) -> int:
        return min(self.a, self.q)

    @classmethod
    def case1(cls, M: int, K: int, N: int) -> "EnsembleDims":
        """Identity receive correlation: ``q = min(M,N)``, ``p = max(M,N)``, ``a = K``."""
        return cls(a=K, q=min(M, N), p=max(M, N))

    @classmethod
    def case2(cls, M: int, K: int, N: int) -> "EnsembleDims":
        """Identity transmit correlation: ``q = min(K,N)``, ``p = max(K,N)``, ``a = M``."""
        return cls(a=M, q=min(K, N), p=max(K, N))

    @classmethod
    def for_case(cls, case: int, M: int, K: int, N: int) -> "EnsembleDims":
        if case == 1:
            return cls.case1(M, K, N)
        if case == 2:
            return cls.case2(M, K, N)
        raise DomainError(f"case must be 1 or 2, got {case!r}")


@dataclass(frozen=True)
class GainVector:
    """Composite gains with the bookkeeping needed for phase derivatives.

    Attributes
    ----------
    gammas : ndarray (q,)
        Gains after jitter; strictly positive.
    base : ndarray (q,)
        Phase-independent factor ``beta * p_i * prod(eigenvalues)``.
    alphas : ndarray (q,)
        Amplitudes ``alpha(phi_i)``.
    jitter : ndarray (q,)
        Multiplicative spread factors (all one when no jitter was needed).
    """

    gammas: np.ndarray
    base: np.ndarray
    alphas: np.ndarray
    jitter: np.ndarray

    def __post_init__(self):
        for name in ("gammas", "base", "alphas", "jitter"):
            arr = np.atleast_1d(np.asarray(getattr(self, name), dtype=float)).copy()
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        if not np.all(np.isfinite(self.gammas)) or np.any(self.gammas <= 0):
            raise DomainError("gains must be finite and strictly positive")

    @property
    def q(self) -> int:
        return self.gammas.size

    @property
    def jittered(self) -> bool:
        return bool(np.any(self.jitter != 1.0))

    @classmethod
    def from_values(cls, gammas) -> "GainVector":
        """Wrap raw gains that carry no phase dependence."""
        g = np.atleast_1d(np.asarray(gammas, dtype=float))
        one = np.ones_like(g)
        return cls(gammas=g, base=g, alphas=one, jitter=one)


def irs_correlation(N_H: int, N_V: int, d_H: float, d_V: float, wavelength: float) -> np.ndarray:
    """Spatial correlation of a planar IRS in isotropic scattering.

    Entry ``(m, n)`` is ``sinc(2 * |u_m - u_n| / wavelength)`` with
    ``sinc(x) = sin(pi x)/(pi x)``; element ``k`` sits at column
    ``k mod N_H`` and row ``k // N_H`` of the grid.

    Parameters
    ----------
    N_H, N_V : int
        Elements per row and per column.
    d_H, d_V : float
        Element spacing in meters.
    wavelength : float
        Carrier wavelength in meters.

    Returns
    -------
    ndarray, shape (N_H*N_V, N_H*N_V)
    """
    N_H = check_positive_int(N_H, "N_H")
    N_V = check_positive_int(N_V, "N_V")
    d_H = check_positive_real(d_H, "d_H")
    d_V = check_positive_real(d_V, "d_V")
    wavelength = check_positive_real(wavelength, "wavelength")
    k = np.arange(N_H * N_V)
    pos = np.stack([(k % N_H) * d_H, (k // N_H) * d_V], axis=1)
    dist = np.linalg.norm(pos[:, None, :] - pos[None, :, :], axis=-1)
    return np.sinc(2.0 * dist / wavelength)


def ula_correlation(n: int, rho: float) -> np.ndarray:
    """Exponential correlation ``rho**|i-j|`` of a uniform linear array."""
    n = check_positive_int(n, "n")
    rho = float(rho)
    if not 0.0 <= rho < 1.0:
        raise DomainError(f"rho must lie in [0, 1), got {rho}")
    idx = np.arange(n)
    return rho ** np.abs(idx[:, None] - idx[None, :]).astype(float)


def path_loss(C_dB: float, nu: float, d: float) -> float:
    """Linear distance-dependent path loss ``10**(-C_dB/10) * d**(-nu)``."""
    d = check_positive_real(d, "d")
    return 10.0 ** (-float(C_dB) / 10.0) * d ** (-float(nu))


def element_aperture(d_H: float, d_V: float, wavelength: float) -> float:
    """Element area in units of squared wavelength, ``d_H d_V / wavelength**2``."""
    return check_positive_real(d_H, "d_H") * check_positive_real(d_V, "d_V") / check_positive_real(
        wavelength, "wavelength"
    ) ** 2


def eigen_spectrum(matrix) -> np.ndarray:
    """Descending eigenvalues of a Hermitian PSD matrix.

    Tiny negative eigenvalues from rounding are clipped to zero; anything
    below ``-1e-10`` times the largest magnitude is rejected.
    """
    mat = check_hermitian(matrix, "matrix")
    w = np.linalg.eigvalsh(mat)[::-1]
    scale = max(1.0, float(np.max(np.abs(w)))) if w.size else 1.0
    if w.size and w[-1] < -_PSD_TOL * scale:
        raise DomainError(f"matrix is not positive semidefinite (min eigenvalue {w[-1]:.3g})")
    return np.clip(w, 0.0, None)


def matrix_sqrt_psd(matrix) -> np.ndarray:
    """Hermitian square root via eigendecomposition, clamping rounding noise."""
    mat = check_hermitian(matrix, "matrix")
    w, v = np.linalg.eigh(mat)
    if w.size and w[0] < -_PSD_TOL:
        raise DomainError(f"matrix is not positive semidefinite (min eigenvalue {w[0]:.3g})")
    return (v * np.sqrt(np.clip(w, 0.0, None))) @ v.conj().T


def case_spectra(case: int, correlations: CorrelationSet) -> list[np.ndarray]:
    """Descending spectra of the matrices whose eigenvalues enter the gains.

    Case 1 takes ``R2 = I`` and multiplies the ``T1``, ``R1`` and ``T2``
    spectra; case 2 takes ``T1 = I`` and multiplies ``R1``, ``R2``, ``T2``.
    """
    if case == 1:
        mats = (correlations.T1, correlations.R1, correlations.T2)
    elif case == 2:
        mats = (correlations.R1, correlations.R2, correlations.T2)
    else:
        raise DomainError(f"case must be 1 or 2, got {case!r}")
    return [eigen_spectrum(m) for m in mats]


def spread_gains(values) -> np.ndarray:
    """Multiplicative spread factors that separate nearly equal gains.

    When the smallest relative gap between any two values is below
    ``JITTER_GAP`` the ``i``-th smallest value (one-based) is scaled by
    ``1 + i * JITTER_STEP``.  Scaling grows with rank, so gaps only widen.
    Returns all ones when no spreading is needed.
    """
    values = np.asarray(values, dtype=float)
    factors = np.ones_like(values)
    if values.size < 2:
        return factors
    srt = np.sort(values)
    gaps = np.diff(srt) / srt[1:]
    if np.min(gaps) >= JITTER_GAP:
        return factors
    ranks = np.empty(values.size, dtype=int)
    ranks[np.argsort(values, kind="stable")] = np.arange(1, values.size + 1)
    return 1.0 + ranks * JITTER_STEP


def assemble_gains(
    dims: EnsembleDims,
    spectra: Sequence[np.ndarray],
    profile: PhaseShiftProfile,
    phases,
    power=None,
    beta_product: float = 1.0,
) -> GainVector:
    """Composite gains ``beta * p_i * alpha(phi_i)**2 * prod_j lambda_{j,i}``.

    Each spectrum is sorted descending and its ``i``-th entry pairs with
    phase ``i`` (dominant modes together).  Nearly equal gains are spread
    by :func:`spread_gains`, recorded in ``GainVector.jitter``.

    Parameters
    ----------
    dims : EnsembleDims
    spectra : sequence of array_like
        Eigenvalues of each participating correlation matrix; each must
        have at least ``dims.q`` entries.
    profile : PhaseShiftProfile
    phases : PhaseVector or array_like, length ``dims.q``
    power : array_like, optional
        Per-stream powers, default all ones.
    beta_product : float
        Overall large-scale gain.

    Returns
    -------
    GainVector
    """
    q = dims.q
    phases = phases if isinstance(phases, PhaseVector) else PhaseVector(phases)
    if len(phases) != q:
        raise DomainError(f"expected {q} phases, got {len(phases)}")
    power = np.ones(q) if power is None else np.asarray(power, dtype=float).reshape(-1)
    if power.size != q:
        raise DomainError(f"expected {q} powers, got {power.size}")
    beta_product = check_positive_real(beta_product, "beta_product")
    base = beta_product * power
    for spectrum in spectra:
        spectrum = np.sort(np.asarray(spectrum, dtype=float).reshape(-1))[::-1]
        if spectrum.size < q:
            raise DomainError(f"each spectrum needs at least {q} eigenvalues, got {spectrum.size}")
        base = base * spectrum[:q]
    alphas = np.asarray(amplitude(phases.phases, profile), dtype=float).reshape(-1)
    raw = base * alphas**2
    if not np.all(np.isfinite(raw)) or np.any(raw <= 0):
        raise DomainError("all composite gains must be strictly positive")
    jitter = spread_gains(raw)
    return GainVector(gammas=raw * jitter, base=base, alphas=alphas, jitter=jitter)
