"""Monte-Carlo oracle for eigenvalue statistics and ergodic capacity.

Trials are grouped into fixed-size blocks.  Block ``b`` draws from its
own stream seeded by ``SeedSequence(seed, spawn_key=(b,))``, so results
depend only on ``(seed, trials)`` and never on how blocks are scheduled
across threads.  The thread count defaults to the ``IRSEC_THREADS``
environment variable (1 when unset).
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable

import numpy as np

from ._validation import check_positive_int, check_positive_real
from .channel import CorrelationSet, EnsembleDims, GainVector, matrix_sqrt_psd
from .errors import DomainError
from .phase import PhaseShiftProfile, PhaseVector, amplitude

__all__ = [
    "McEstimate",
    "complex_gaussian",
    "block_stream",
    "thread_count",
    "sample_effective_eigenvalues",
    "mc_effective_eigenvalues",
    "mc_capacity_effective",
    "mc_capacity_full",
    "mc_capacity_rayleigh",
    "empirical_pdf",
    "ks_statistic",
    "BLOCK_SIZE",
    "THREADS_ENV",
]

BLOCK_SIZE = 4096
THREADS_ENV = "IRSEC_THREADS"
_Z99 = 2.576
_LN2 = math.log(2.0)


@dataclass(frozen=True)
class McEstimate:
    """Sample mean with a 99% normal-approximation half width."""

    mean: float
    half_width_99: float
    trials: int
    seed: int

    @classmethod
    def from_samples(cls, samples: np.ndarray, seed: int) -> "McEstimate":
        samples = np.asarray(samples, dtype=float)
        if samples.size < 2:
            raise DomainError("at least two trials are required")
        mean = float(np.mean(samples))
        hw = _Z99 * float(np.std(samples, ddof=1)) / math.sqrt(samples.size)
        return cls(mean=mean, half_width_99=hw, trials=int(samples.size), seed=int(seed))

    def contains(self, value: float) -> bool:
        return abs(value - self.mean) <= self.half_width_99


def thread_count(threads: int | None = None) -> int:
    if threads is not None:
        return check_positive_int(threads, "threads")
    raw = os.environ.get(THREADS_ENV, "1")
    try:
        return max(1, int(raw))
    except ValueError:
        raise DomainError(f"{THREADS_ENV} must be a positive integer, got {raw!r}") from None


def _check_seed(seed) -> int:
    if isinstance(seed, bool) or not isinstance(seed, (int, np.integer)) or not 0 <= seed < 2**64:
        raise DomainError(f"seed must be an unsigned 64-bit integer, got {seed!r}")
    return int(seed)


def block_stream(seed: int, block: int) -> np.random.Generator:
    """Independent generator for trial block ``block`` of run ``seed``."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(block,))))


def complex_gaussian(rng: np.random.Generator, shape) -> np.ndarray:
    """Standard circular complex Gaussian entries, ``E|x|^2 = 1``."""
    re = rng.standard_normal(shape)
    im = rng.standard_normal(shape)
    return (re + 1j * im) / math.sqrt(2.0)


def _run_blocks(kernel: Callable[[np.random.Generator, int], np.ndarray], trials: int, seed: int,
                threads: int | None) -> np.ndarray:
    n_blocks = -(-trials // BLOCK_SIZE)
    sizes = [min(BLOCK_SIZE, trials - b * BLOCK_SIZE) for b in range(n_blocks)]

    def run(b):
        return kernel(block_stream(seed, b), sizes[b])

    workers = min(thread_count(threads), n_blocks)
    if workers <= 1:
        parts = [run(b) for b in range(n_blocks)]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(run, range(n_blocks)))
    return np.concatenate(parts)


def _gram_eigenvalues(h: np.ndarray) -> np.ndarray:
    """Descending eigenvalues of ``H H^H`` for a batch, using the smaller Gram."""
    if h.shape[-2] <= h.shape[-1]:
        gram = h @ np.conj(np.swapaxes(h, -1, -2))
    else:
        gram = np.conj(np.swapaxes(h, -1, -2)) @ h
    ev = np.linalg.eigvalsh(gram)[..., ::-1]
    return np.clip(ev, 0.0, None)


def _effective_batch(dims: EnsembleDims, gammas: np.ndarray, rng, size: int, model: str) -> np.ndarray:
    a, q, p, s = dims.a, dims.q, dims.p, dims.s
    if model == "product":
        x = complex_gaussian(rng, (size, a, q))
        z = complex_gaussian(rng, (size, q, p))
        h = (x * np.sqrt(gammas)[None, None, :]) @ z
        return _gram_eigenvalues(h)[:, :s]
    if model == "diagonal":
        inner = complex_gaussian(rng, (size, p, q))
        w = np.linalg.svd(inner, compute_uv=False) ** 2  # descending
        order = np.argsort(gammas)[::-1]
        diag = np.empty((size, q))
        diag[:, order] = np.sqrt(gammas[order][None, :] * w)
        x = complex_gaussian(rng, (size, a, q))
        return _gram_eigenvalues(x * diag[:, None, :])[:, :s]
    raise DomainError(f"unknown effective model {model!r}")


def _gammas(gains) -> np.ndarray:
    g = gains.gammas if isinstance(gains, GainVector) else np.atleast_1d(np.asarray(gains, dtype=float))
    if np.any(~(g > 0)):
        raise DomainError("gains must be positive")
    return g


def sample_effective_eigenvalues(
    dims: EnsembleDims,
    gains,
    stream: np.random.Generator,
    size: int | None = None,
    model: str = "product",
) -> np.ndarray:
    """Nonzero eigenvalues of one (or ``size``) draws of the effective channel.

    Parameters
    ----------
    dims : EnsembleDims
    gains : GainVector or array_like, length q
    stream : numpy.random.Generator
    size : int, optional
        Number of independent draws; ``None`` returns a single draw.
    model : {"product", "diagonal"}
        ``"product"`` draws ``H = X diag(gamma)^{1/2} Z`` with ``X`` of
        shape ``a x q`` and ``Z`` of shape ``q x p``.  ``"diagonal"``
        replaces the inner Gaussian by its sorted squared singular values
        paired with the sorted gains, ``H = X diag(gamma_i w_i)^{1/2}``;
        it is kept to measure how far that reduction is from the product
        ensemble.

    Returns
    -------
    ndarray, shape ``(s,)`` or ``(size, s)``
        Descending eigenvalues of ``H H^H``.
    """
    g = _gammas(gains)
    if g.size != dims.q:
        raise DomainError(f"expected {dims.q} gains, got {g.size}")
    n = 1 if size is None else check_positive_int(size, "size")
    ev = _effective_batch(dims, g, stream, n, model)
    return ev[0] if size is None else ev


def _rate_samples(ev: np.ndarray, c: float) -> np.ndarray:
    return np.sum(np.log1p(c * ev), axis=-1) / _LN2


def mc_capacity_effective(
    dims: EnsembleDims,
    gains,
    snr: float,
    M: int,
    trials: int,
    seed: int,
    threads: int | None = None,
    model: str = "product",
) -> McEstimate:
    """Monte-Carlo ergodic capacity of the effective channel.

    Each trial contributes ``sum_i log2(1 + snr/M * lam_i)`` over the
    nonzero eigenvalues of one draw.
    """
    g = _gammas(gains)
    if g.size != dims.q:
        raise DomainError(f"expected {dims.q} gains, got {g.size}")
    snr = check_positive_real(snr, "snr")
    M = check_positive_int(M, "M")
    trials = check_positive_int(trials, "trials", minimum=100)
    seed = _check_seed(seed)
    c = snr / M

    def kernel(rng, n):
        return _rate_samples(_effective_batch(dims, g, rng, n, model), c)

    return McEstimate.from_samples(_run_blocks(kernel, trials, seed, threads), seed)


def mc_effective_eigenvalues(dims: EnsembleDims, gains, trials: int, seed: int,
                             threads: int | None = None, model: str = "product") -> np.ndarray:
    """All eigenvalues of ``trials`` draws, flattened (``trials * s`` values)."""
    g = _gammas(gains)
    trials = check_positive_int(trials, "trials")
    seed = _check_seed(seed)

    def kernel(rng, n):
        return _effective_batch(dims, g, rng, n, model)

    return _run_blocks(kernel, trials, seed, threads).ravel()


def mc_capacity_full(
    correlations: CorrelationSet,
    profile: PhaseShiftProfile,
    phases,
    snr: float,
    M: int,
    beta_product: float,
    trials: int,
    seed: int,
    threads: int | None = None,
) -> McEstimate:
    """Monte-Carlo ergodic capacity of the full cascaded correlated channel.

    Per trial: ``H1 = R1^{1/2} X1 T1^{1/2}`` (N x M),
    ``H2 = R2^{1/2} X2 T2^{1/2}`` (K x N), ``G = H2 diag(alpha e^{j phi}) H1``
    and ``log2 det(I + snr * beta / M * G G^H)``.
    """
    phases = phases if isinstance(phases, PhaseVector) else PhaseVector(phases)
    N, Mc, K = correlations.N, correlations.M, correlations.K
    M = check_positive_int(M, "M")
    if Mc != M:
        raise DomainError(f"T1 is {Mc}x{Mc} but M={M}")
    if len(phases) != N:
        raise DomainError(f"expected {N} phases, got {len(phases)}")
    snr = check_positive_real(snr, "snr")
    beta_product = check_positive_real(beta_product, "beta_product")
    trials = check_positive_int(trials, "trials", minimum=2)
    seed = _check_seed(seed)
    r1 = matrix_sqrt_psd(correlations.R1)
    t1 = matrix_sqrt_psd(correlations.T1)
    r2 = matrix_sqrt_psd(correlations.R2)
    t2 = matrix_sqrt_psd(correlations.T2)
    theta = np.asarray(amplitude(phases.phases, profile)).reshape(-1) * np.exp(1j * phases.phases)
    # fold the reflection into the IRS-side factor of the second hop
    t2_theta = t2 * theta[None, :]
    c = snr * beta_product / M

    def kernel(rng, n):
        x1 = complex_gaussian(rng, (n, N, M))
        x2 = complex_gaussian(rng, (n, K, N))
        h1 = r1 @ x1 @ t1
        h2 = r2 @ x2 @ t2_theta
        return _rate_samples(_gram_eigenvalues(h2 @ h1), c)

    return McEstimate.from_samples(_run_blocks(kernel, trials, seed, threads), seed)


def mc_capacity_rayleigh(M: int, K: int, snr: float, trials: int, seed: int,
                         threads: int | None = None) -> McEstimate:
    """Ergodic capacity of an uncorrelated ``K x M`` Rayleigh link."""
    M = check_positive_int(M, "M")
    K = check_positive_int(K, "K")
    c = check_positive_real(snr, "snr") / M
    seed = _check_seed(seed)

    def kernel(rng, n):
        return _rate_samples(_gram_eigenvalues(complex_gaussian(rng, (n, K, M))), c)

    return McEstimate.from_samples(_run_blocks(kernel, check_positive_int(trials, "trials", 2), seed, threads),
                                   seed)


def empirical_pdf(samples, bins: int):
    """Density-normalized histogram.

    Returns
    -------
    edges : ndarray, shape (bins + 1,)
    density : ndarray, shape (bins,)
        Satisfies ``sum(density * diff(edges)) == 1`` up to rounding.
    """
    samples = np.asarray(samples, dtype=float).ravel()
    bins = check_positive_int(bins, "bins")
    if samples.size == 0:
        raise DomainError("samples must be non-empty")
    if samples.size < 10 * bins:
        raise DomainError(f"need at least {10 * bins} samples for {bins} bins, got {samples.size}")
    density, edges = np.histogram(samples, bins=bins, density=True)
    return edges, density


def ks_statistic(samples, cdf: Callable[[np.ndarray], np.ndarray]) -> float:
    """Two-sided Kolmogorov-Smirnov distance between samples and a CDF."""
    x = np.sort(np.asarray(samples, dtype=float).ravel())
    n = x.size
    if n == 0:
        raise DomainError("samples must be non-empty")
    f = np.asarray(cdf(x), dtype=float)
    upper = np.arange(1, n + 1) / n - f
    lower = f - np.arange(0, n) / n
    return float(max(np.max(upper), np.max(lower)))
