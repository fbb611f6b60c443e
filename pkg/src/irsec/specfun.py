"""Special functions and signed log-domain arithmetic.

Densities of products of Gaussian matrices involve Gamma functions,
Bessel functions of large order and alternating sums whose terms span
hundreds of orders of magnitude.  Everything here works with natural
logarithms of magnitudes plus an explicit sign so that nothing overflows
before the final exponentiation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable

import numpy as np
from scipy import special

from ._validation import check_positive_int
from .errors import DomainError

__all__ = [
    "SignedLog",
    "CofactorTable",
    "log_gamma",
    "log_bessel_k",
    "log_bessel_k_table",
    "log_bessel_k_complex",
    "signed_logsumexp",
    "signed_logsumexp_arrays",
    "gamma_cofactors",
]


@dataclass(frozen=True)
class SignedLog:
    """Real number stored as ``sign * exp(log_mag)``.

    Attributes
    ----------
    sign : int
        One of -1, 0, +1.
    log_mag : float
        Natural log of the magnitude, ``-inf`` exactly when ``sign == 0``.
    """

    sign: int
    log_mag: float

    def __post_init__(self):
        if self.sign not in (-1, 0, 1):
            raise DomainError(f"sign must be -1, 0 or +1, got {self.sign!r}")
        if (self.sign == 0) != (self.log_mag == -math.inf):
            raise DomainError("sign is 0 exactly when log_mag is -inf")
        if math.isnan(self.log_mag) or self.log_mag == math.inf:
            raise DomainError(f"log_mag must be finite or -inf, got {self.log_mag!r}")

    @classmethod
    def zero(cls) -> "SignedLog":
        return cls(0, -math.inf)

    @classmethod
    def from_real(cls, x: float) -> "SignedLog":
        x = float(x)
        if not math.isfinite(x):
            raise DomainError(f"cannot represent non-finite value {x!r}")
        if x == 0.0:
            return cls.zero()
        return cls(1 if x > 0 else -1, math.log(abs(x)))

    @classmethod
    def from_int(cls, n: int) -> "SignedLog":
        """Exact integer of any size (``math.log`` accepts big ints)."""
        if n == 0:
            return cls.zero()
        return cls(1 if n > 0 else -1, math.log(abs(n)))

    def to_real(self) -> float:
        if self.sign == 0:
            return 0.0
        return self.sign * math.exp(self.log_mag)

    def __neg__(self) -> "SignedLog":
        return SignedLog(-self.sign, self.log_mag)

    def __mul__(self, other: "SignedLog") -> "SignedLog":
        if self.sign == 0 or other.sign == 0:
            return SignedLog.zero()
        return SignedLog(self.sign * other.sign, self.log_mag + other.log_mag)


def signed_logsumexp(terms: Iterable[SignedLog]) -> SignedLog:
    """Sum signed log-domain numbers.

    The shifted terms are added with ``math.fsum`` so the result is the
    correctly rounded sum of the shifted values; the sign is exact unless
    the true sum is below roughly 1e-16 of the largest term.

    Examples
    --------
    >>> signed_logsumexp([SignedLog(1, math.log(3)), SignedLog(-1, 0.0)])
    SignedLog(sign=1, log_mag=0.693...)
    """
    terms = [t for t in terms if t.sign != 0]
    if not terms:
        return SignedLog.zero()
    m = max(t.log_mag for t in terms)
    total = math.fsum(t.sign * math.exp(t.log_mag - m) for t in terms)
    if total == 0.0:
        return SignedLog.zero()
    return SignedLog(1 if total > 0 else -1, m + math.log(abs(total)))


def signed_logsumexp_arrays(signs, logs, axis=0):
    """Vectorized signed log-sum-exp along one axis.

    Parameters
    ----------
    signs, logs : array_like
        Broadcast-compatible arrays; entries with ``sign == 0`` or
        ``log == -inf`` are ignored.
    axis : int
        Axis to reduce.

    Returns
    -------
    sign : ndarray of float
        -1, 0 or +1.
    log_mag : ndarray
        Log magnitude, ``-inf`` where the sum is zero.
    """
    signs, logs = np.broadcast_arrays(np.asarray(signs, float), np.asarray(logs, float))
    live = (signs != 0) & np.isfinite(logs)
    safe = np.where(live, logs, -np.inf)
    m = np.max(safe, axis=axis, keepdims=True)
    m = np.where(np.isfinite(m), m, 0.0)
    with np.errstate(under="ignore"):
        shifted = np.where(live, signs * np.exp(safe - m), 0.0)
    total = np.sum(shifted, axis=axis)
    m = np.squeeze(m, axis=axis)
    with np.errstate(divide="ignore"):
        log_mag = np.where(total != 0, m + np.log(np.abs(total)), -np.inf)
    return np.sign(total), log_mag


def log_gamma(x):
    """Natural log of the Gamma function for positive arguments.

    Parameters
    ----------
    x : float or array_like
        Strictly positive, finite.

    Returns
    -------
    float or ndarray
    """
    arr = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(arr)) or np.any(arr <= 0):
        raise DomainError("log_gamma requires finite positive arguments")
    out = special.gammaln(arr)
    return float(out) if out.ndim == 0 else out


def _check_bessel_args(order, x):
    order = check_positive_int(order, "order", minimum=0)
    arr = np.asarray(x, dtype=float)
    if np.any(~(arr > 0)) or np.any(~np.isfinite(arr)):
        raise DomainError("log_bessel_k requires finite x > 0")
    return order, arr


def log_bessel_k_table(max_order: int, x):
    """ln K_n(x) for every order n = 0..max_order.

    Uses the ratio form of the upward recurrence,
    ``K_{n+1}/K_n = K_{n-1}/K_n + 2n/x``, carried in logs so neither large
    orders nor large arguments overflow.  Upward recurrence is the
    dominant direction for K and therefore stable.

    Parameters
    ----------
    max_order : int
        Highest order required.
    x : array_like
        Positive arguments.

    Returns
    -------
    ndarray, shape ``(max_order + 1,) + x.shape``
    """
    max_order, arr = _check_bessel_args(max_order, x)
    out = np.empty((max_order + 1,) + arr.shape)
    log_x = np.log(arr)
    out[0] = np.log(special.k0e(arr)) - arr
    if max_order == 0:
        return out
    log_ratio = np.log(special.k1e(arr)) - np.log(special.k0e(arr))
    out[1] = out[0] + log_ratio
    for n in range(1, max_order):
        log_ratio = np.logaddexp(-log_ratio, math.log(2 * n) - log_x)
        out[n + 1] = out[n] + log_ratio
    return out


def log_bessel_k(order: int, x):
    """Natural log of the modified Bessel function of the second kind.

    Parameters
    ----------
    order : int
        Nonnegative integer order.
    x : float or array_like
        Positive argument; scaled internally, so ``x`` up to 1e4 and orders
        in the hundreds stay finite.

    Returns
    -------
    float or ndarray
        ``ln K_order(x)``.

    Examples
    --------
    >>> round(log_bessel_k(0, 2.0), 7)
    -2.1724882
    """
    order, arr = _check_bessel_args(order, x)
    out = log_bessel_k_table(order, arr)[order]
    return float(out) if out.ndim == 0 else out


def log_bessel_k_complex(order: int, z):
    """Principal-branch ln K_order(z) for complex ``z`` with Re z > 0.

    Evaluated directly where the scaled value is representable, otherwise
    by the upward recurrence from orders 0 and 1.  Only ``exp`` of the
    result is meaningful; the imaginary part is not reduced to a fixed
    branch.
    """
    order = check_positive_int(order, "order", minimum=0)
    z = np.asarray(z, dtype=complex)
    with np.errstate(all="ignore"):
        direct = special.kve(order, z)
        out = np.log(direct) - z
    bad = ~np.isfinite(out) | (direct == 0)
    if np.any(bad):
        zb = z[bad]
        k0 = special.kve(0, zb)
        rec = np.log(k0) - zb
        if order > 0:
            ratio = special.kve(1, zb) / k0
            rec = rec + np.log(ratio)
            for n in range(1, order):
                ratio = 1.0 / ratio + 2.0 * n / zb
                rec = rec + np.log(ratio)
        out[bad] = rec
    return out


@dataclass(frozen=True)
class CofactorTable:
    """Signed cofactors of the Gamma moment matrix ``[Γ(p-q+m+n-1)]``.

    Attributes
    ----------
    q, p : int
        Matrix order and the larger inner dimension.
    signs : ndarray of int, shape (q, q)
        Sign of cofactor ``(l, k)`` (zero-based indices).
    logs : ndarray, shape (q, q)
        Log magnitude of cofactor ``(l, k)``.
    det : SignedLog
        Determinant of the Gamma matrix.
    """

    q: int
    p: int
    signs: np.ndarray
    logs: np.ndarray
    det: SignedLog

    def entry(self, l: int, k: int) -> SignedLog:
        """Cofactor with one-based indices ``(l, k)``."""
        s = int(self.signs[l - 1, k - 1])
        return SignedLog(s, float(self.logs[l - 1, k - 1]) if s else -math.inf)

    def matrix_entry(self, m: int, n: int) -> SignedLog:
        """Gamma matrix element with one-based indices."""
        return SignedLog(1, float(special.gammaln(self.p - self.q + m + n - 1)))


def _bareiss_det(rows):
    """Exact determinant of an integer matrix (fraction-free elimination)."""
    a = [list(r) for r in rows]
    n = len(a)
    if n == 0:
        return 1
    sign = 1
    prev = 1
    for k in range(n - 1):
        if a[k][k] == 0:
            swap = next((i for i in range(k + 1, n) if a[i][k] != 0), None)
            if swap is None:
                return 0
            a[k], a[swap] = a[swap], a[k]
            sign = -sign
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                a[i][j] = (a[i][j] * a[k][k] - a[i][k] * a[k][j]) // prev
        prev = a[k][k]
    return sign * a[n - 1][n - 1]


@lru_cache(maxsize=128)
def _cofactors_exact(q: int, p: int):
    g = [[math.factorial(p - q + m + n) for n in range(q)] for m in range(q)]
    det = _bareiss_det(g)
    cof = []
    for l in range(q):
        row = []
        for k in range(q):
            # cofactor (l, k): delete row l and column k
            minor = [r[:k] + r[k + 1:] for i, r in enumerate(g) if i != l]
            row.append((-1) ** (l + k) * _bareiss_det(minor))
        cof.append(row)
    return det, cof


def gamma_cofactors(q: int, p: int) -> CofactorTable:
    """All signed cofactors of the ``q x q`` matrix ``[Γ(p-q+m+n-1)]``.

    Entries are integers for integer ``p, q``; minors are evaluated exactly
    with fraction-free elimination on Python integers and only then mapped
    to log magnitude, so the table is exact to the last rounding.

    Parameters
    ----------
    q : int
        Matrix order, ``q >= 1``.
    p : int
        ``p >= q``.

    Returns
    -------
    CofactorTable
    """
    q = check_positive_int(q, "q")
    p = check_positive_int(p, "p")
    if p < q:
        raise DomainError(f"gamma_cofactors requires p >= q, got p={p}, q={q}")
    det, cof = _cofactors_exact(q, p)
    signs = np.zeros((q, q), dtype=int)
    logs = np.full((q, q), -np.inf)
    for l in range(q):
        for k in range(q):
            c = cof[l][k]
            if c:
                signs[l, k] = 1 if c > 0 else -1
                logs[l, k] = math.log(abs(c))
    signs.setflags(write=False)
    logs.setflags(write=False)
    return CofactorTable(q=q, p=p, signs=signs, logs=logs, det=SignedLog.from_int(det))
