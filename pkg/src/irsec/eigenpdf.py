"""Eigenvalue densities of the product ensemble ``X diag(gamma)^{1/2} Z``.

``X`` is ``a x q`` and ``Z`` is ``q x p``, both with iid standard complex
Gaussian entries.  The ``s = min(a, q)`` nonzero eigenvalues of
``H H^H`` have unordered marginal density

    f(lam) = (2/s) sum_l h(gamma_l) P_l(lam) / omega'(gamma_l)

with ``omega(u) = prod_i (u - gamma_i)``,
``h(u) = u**beta * K_nu(2 sqrt(lam/u))``, ``nu = |p - a|``,
``beta = (p - a)/2 - (p - q + 1)`` and

    P_l(lam) = sum_{k=q-s+1}^{q} c_k(lam) (-1)**(q-k) e_{q-k}(gamma without l),
    c_k(lam) = lam**((a+p-2q+2k-2)/2) / (Gamma(a-q+k) Gamma(p-q+k)),

where ``e_j`` are elementary symmetric polynomials.  The sum over ``l``
is a sum of residues of ``h(z) Q(z) / omega(z)``.  Gains that are well
separated on a log scale use the residues directly; groups of close
gains are handled together by a trapezoidal contour integral on a
circle around the group in ``log z``, which stays accurate as gains
coalesce.

The derivative with respect to one gain follows from the same residue
picture: ``df/dgamma_n = (2/s) P_n(lam) T_n(lam)`` where ``T_n`` is the
sum of residues of ``h(z) / (omega(z) (z - gamma_n))``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy import special
from scipy.interpolate import CubicHermiteSpline

from .channel import EnsembleDims, GainVector
from .errors import DegeneracyError, DomainError
from .phase import PhaseShiftProfile, PhaseVector, amplitude, amplitude_derivative
from .quadrature import adaptive_gk, panel_rule
from .specfun import (
    CofactorTable,
    SignedLog,
    gamma_cofactors,
    log_bessel_k_complex,
    log_bessel_k_table,
    signed_logsumexp_arrays,
)

__all__ = [
    "MarginalEigenPDF",
    "joint_pdf_log",
    "build_marginal",
    "marginal_density",
    "marginal_density_dgamma",
    "marginal_density_dphi",
    "marginal_cdf",
    "equal_gain_density",
    "gain_phase_sensitivity",
    "support_bound",
    "DEGENERACY_TOL",
]

DEGENERACY_TOL = 1e-9

# gains closer than this in log scale are integrated as one group
_CLUSTER_GAP = 0.3
# outer radius cap in log-gain space; must stay below pi
_OUTER_CAP = 2.5
_MAX_RATE = 0.75


def _log_const(q: int, p: int) -> float:
    i = np.arange(1, q + 1)
    return -float(np.sum(special.gammaln(q - i + 1) + special.gammaln(p - i + 1)))


def _elementary_symmetric(values) -> np.ndarray:
    """``e_0..e_n`` of the given values by the product recurrence."""
    e = np.zeros(len(values) + 1)
    e[0] = 1.0
    for v in values:
        e[1:] = e[1:] + v * e[:-1]
    return e


def _complex_lse(a, axis):
    re = np.where(np.isfinite(a.real), a.real, -np.inf)
    m = np.max(re, axis=axis, keepdims=True)
    m = np.where(np.isfinite(m), m, 0.0)
    with np.errstate(under="ignore", invalid="ignore"):
        s = np.sum(np.where(np.isfinite(a.real), np.exp(a - m), 0.0), axis=axis, keepdims=True)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = m + np.log(s)
    return np.squeeze(out, axis=axis)


def _real_part_signed(a, axis):
    """Sign and log magnitude of ``Re(sum(exp(a)))`` along ``axis``."""
    re = np.where(np.isfinite(a.real), a.real, -np.inf)
    m = np.max(re, axis=axis, keepdims=True)
    m = np.where(np.isfinite(m), m, 0.0)
    with np.errstate(under="ignore", invalid="ignore"):
        terms = np.where(np.isfinite(a.real), np.exp(a - m), 0.0)
    total = np.sum(terms, axis=axis).real
    m = np.squeeze(m, axis=axis)
    with np.errstate(divide="ignore"):
        return np.sign(total), np.where(total != 0, m + np.log(np.abs(total)), -np.inf)


@dataclass(frozen=True)
class _Contour:
    members: np.ndarray      # indices of gains enclosed
    z: np.ndarray            # complex nodes
    log_dz: np.ndarray       # log of (dz / 2 pi i) trapezoid weights
    log_omega: np.ndarray    # log omega(z)
    log_coef: np.ndarray     # (n_nodes, n_k): log of (-1)^{q-k} E_{q-k}(z)


def _group_gains(log_g, gap):
    order = np.argsort(log_g, kind="stable")
    groups, current = [], [order[0]]
    for prev, nxt in zip(order[:-1], order[1:]):
        if log_g[nxt] - log_g[prev] < gap:
            current.append(nxt)
        else:
            groups.append(current)
            current = [nxt]
    groups.append(current)
    return [np.array(g) for g in groups]


def _contour_geometry(log_g, members):
    lg = log_g[members]
    lo, hi = lg.min(), lg.max()
    centre = 0.5 * (lo + hi)
    rho = 0.5 * (hi - lo)
    others = np.setdiff1d(np.arange(log_g.size), members)
    outer = _OUTER_CAP
    if others.size:
        outer = min(outer, float(np.min(np.abs(log_g[others] - centre))))
    radius = math.sqrt(max(rho, 0.01 * outer) * outer)
    rate = max(rho / radius, radius / outer)
    return centre, radius, rate


def _split_group(log_g, members):
    lg = log_g[members]
    order = np.argsort(lg)
    cut = int(np.argmax(np.diff(lg[order]))) + 1
    return members[order[:cut]], members[order[cut:]]


class MarginalEigenPDF:
    """Unordered marginal eigenvalue density for given dimensions and gains.

    Build with :func:`build_marginal`.  Instances are immutable and may be
    evaluated concurrently.

    Attributes
    ----------
    dims : EnsembleDims
    gains : GainVector
    log_K : float
        Log of the Wishart normalization ``1/prod Gamma(q-i+1) Gamma(p-i+1)``.
    log_vandermonde : SignedLog
        ``prod_{i<j} (gamma_j - gamma_i)`` in the stored gain order.
    """

    def __init__(self, dims: EnsembleDims, gains: GainVector):
        if gains.q != dims.q:
            raise DomainError(f"expected {dims.q} gains, got {gains.q}")
        self.dims = dims
        self.gains = gains
        a, q, p, s = dims.a, dims.q, dims.p, dims.s
        gam = gains.gammas
        self.log_K = _log_const(q, p)
        diffs = (gam[None, :] - gam[:, None])[np.triu_indices(q, 1)]
        if q == 1:
            self.log_vandermonde = SignedLog(1, 0.0)
        else:
            self.log_vandermonde = SignedLog(
                int(np.prod(np.sign(diffs))), float(np.sum(np.log(np.abs(diffs))))
            )

        # work in units of the geometric-mean gain
        self._scale = float(np.exp(np.mean(np.log(gam))))
        g = gam / self._scale
        self._g = g
        self._nu = abs(p - a)
        self._beta = 0.5 * (p - a) - (p - q + 1)
        ks = np.arange(q - s + 1, q + 1)
        self._ks = ks
        self._c_pow = 0.5 * (a + p - 2 * q + 2 * ks - 2)
        self._c_log = -special.gammaln(a - q + ks) - special.gammaln(p - q + ks)
        self._k_sign = (-1.0) ** (q - ks)

        # e_{q-k}(g without l) for every l
        e_minus = np.empty((q, ks.size))
        for l in range(q):
            e = _elementary_symmetric(np.delete(g, l))
            e_minus[l] = e[q - ks]
        with np.errstate(divide="ignore"):
            self._log_e_minus = np.log(e_minus)

        log_g = np.log(g)
        groups = _group_gains(log_g, _CLUSTER_GAP)
        singles, contours = [], []
        while groups:
            grp = groups.pop()
            if grp.size == 1:
                singles.append(int(grp[0]))
                continue
            centre, radius, rate = _contour_geometry(log_g, grp)
            if rate > _MAX_RATE:
                groups.extend(_split_group(log_g, grp))
                continue
            contours.append(self._make_contour(g, grp, centre, radius, rate))
        self._singles = np.array(sorted(singles), dtype=int)
        self._contours = contours

        sg = self._singles
        if sg.size:
            diff = g[sg][:, None] - g[None, :]
            diff[np.arange(sg.size), sg] = 1.0
            self._wprime_sign = np.prod(np.sign(diff), axis=1)
            self._wprime_log = np.sum(np.log(np.abs(diff)), axis=1)
            inv = 1.0 / diff
            inv[np.arange(sg.size), sg] = 0.0
            self._inv_gap_sum = inv.sum(axis=1)
            # 1/(g_l - g_n) for every n != l, used by the derivative
            with np.errstate(divide="ignore"):
                self._log_gap = np.log(np.abs(diff))
            self._gap_sign = np.sign(diff)

    def _make_contour(self, g, members, centre, radius, rate):
        q = g.size
        n = int(math.ceil(-40.0 / math.log(rate) / 8.0) * 8)
        n = min(max(n, 16), 1024)
        theta = 2.0 * np.pi * np.arange(n) / n
        w = centre + radius * np.exp(1j * theta)
        z = np.exp(w)
        log_dz = math.log(radius) + 1j * theta + w - math.log(n)
        others = np.setdiff1d(np.arange(q), members)
        log_omega = np.sum(np.log(z[:, None] - g[None, :]), axis=1)

        # E_j(z): polynomial in z equal to e_j(g without l) at every member l
        c = members.size
        wc = np.poly(g[members])[::-1].real  # coefficients of omega_C, ascending
        qc = np.zeros((n, c + 1), dtype=complex)  # qc[:, r] for r = 1..c
        for r in range(1, c + 1):
            acc = np.zeros(n, dtype=complex)
            for j in range(c, r - 1, -1):
                acc = acc * z + wc[j]
            qc[:, r] = acc
        e_out = _elementary_symmetric(g[others])
        big_e = np.zeros((n, q), dtype=complex)
        for j in range(q):
            for m in range(max(0, j - others.size), min(c - 1, j) + 1):
                big_e[:, j] += e_out[j - m] * (-1.0) ** m * qc[:, c - m]
        coef = big_e[:, q - self._ks] * self._k_sign[None, :]
        with np.errstate(divide="ignore"):
            log_coef = np.log(coef.astype(complex))
        return _Contour(members=members, z=z, log_dz=log_dz, log_omega=log_omega, log_coef=log_coef)

    # ------------------------------------------------------------------
    @cached_property
    def cofactors(self) -> CofactorTable:
        return gamma_cofactors(self.dims.q, self.dims.p)

    @property
    def scale(self) -> float:
        return self._scale

    def mean(self) -> float:
        """Mean of the unordered eigenvalue, ``a p sum(gamma) / s``."""
        d = self.dims
        return d.a * d.p * float(np.sum(self.gains.gammas)) / d.s

    def _log_c(self, log_x):
        return self._c_pow[None, :] * log_x[:, None] + self._c_log[None, :]

    def _log_p(self, log_c):
        """Sign and log of P_l for every l, shape (L, q)."""
        terms = log_c[:, None, :] + self._log_e_minus[None, :, :]
        return signed_logsumexp_arrays(self._k_sign[None, None, :], terms, axis=2)

    def _bessel_real(self, x, u, extra_order=False):
        arg = 2.0 * np.sqrt(x[:, None] / u[None, :])
        table = log_bessel_k_table(self._nu + int(extra_order), arg)
        return arg, table

    def _log_h_complex(self, log_x, contour):
        w = np.log(contour.z)
        arg = 2.0 * np.exp(0.5 * (log_x[:, None] - w[None, :]))
        return self._beta * w[None, :] + log_bessel_k_complex(self._nu, arg)

    def _kernels(self, x, derivative=False):
        """Quantities shared by the density and its gain derivative."""
        log_x = np.log(x)
        log_c = self._log_c(log_x)
        kern = {"x": x, "log_x": log_x, "log_c": log_c, "p": self._log_p(log_c)}
        sg = self._singles
        if sg.size:
            kern["arg"], kern["table"] = self._bessel_real(x, self._g[sg], extra_order=derivative)
        kern["log_h_contour"] = [self._log_h_complex(log_x, ct) for ct in self._contours]
        return kern

    def _density_scaled(self, x, kern=None):
        """Sign and log of the density in scaled units for ``x = lam/scale``."""
        kern = kern or self._kernels(x)
        log_c = kern["log_c"]
        sign_parts, log_parts = [], []
        sg = self._singles
        if sg.size:
            p_sign, p_log = kern["p"]
            table = kern["table"]
            log_h = self._beta * np.log(self._g[sg])[None, :] + table[self._nu]
            sign_parts.append(p_sign[:, sg] * self._wprime_sign[None, :])
            log_parts.append(p_log[:, sg] + log_h - self._wprime_log[None, :])
        for ct, log_h_ct in zip(self._contours, kern["log_h_contour"]):
            log_q = _complex_lse(log_c[:, None, :] + ct.log_coef[None, :, :], axis=2)
            integrand = (log_h_ct + log_q
                         - ct.log_omega[None, :] + ct.log_dz[None, :])
            s_c, l_c = _real_part_signed(integrand, axis=1)
            sign_parts.append(s_c[:, None])
            log_parts.append(l_c[:, None])
        sign, log = signed_logsumexp_arrays(
            np.concatenate(sign_parts, axis=1), np.concatenate(log_parts, axis=1), axis=1
        )
        return sign, log + math.log(2.0 / self.dims.s)

    def _dgamma_scaled(self, x, kern=None):
        """Sign and log of df/dgamma_n in scaled units, shape (L, q)."""
        kern = kern or self._kernels(x, derivative=True)
        p_sign, p_log = kern["p"]
        sign_parts, log_parts = [], []
        sg = self._singles
        if sg.size:
            arg, table = kern["arg"], kern["table"]
            log_u = np.log(self._g[sg])[None, :]
            log_h = self._beta * log_u + table[self._nu]
            # residues at simple poles: h(g_l) / (omega'(g_l) (g_l - g_n))
            lh = log_h - self._wprime_log[None, :]
            sh = np.broadcast_to(self._wprime_sign[None, :], lh.shape)
            simple_log = lh[:, :, None] - self._log_gap[None, :, :]
            simple_sign = sh[:, :, None] * self._gap_sign[None, :, :]
            # double pole at n = l: (h'(g_l) - h(g_l) sum_i 1/(g_l - g_i)) / omega'(g_l)
            coef = self._beta - 0.5 * self._nu
            dterms_sign = np.stack([
                np.full(lh.shape, np.sign(coef)),
                np.ones(lh.shape),
                np.broadcast_to(-np.sign(self._inv_gap_sum)[None, :], lh.shape),
            ])
            with np.errstate(divide="ignore"):
                dterms_log = np.stack([
                    (self._beta - 1) * log_u + table[self._nu] + math.log(abs(coef)) if coef else
                    np.full(lh.shape, -np.inf),
                    (self._beta - 1) * log_u + np.log(0.5 * arg) + table[self._nu + 1],
                    log_h + np.log(np.abs(self._inv_gap_sum))[None, :],
                ])
            d_sign, d_log = signed_logsumexp_arrays(dterms_sign, dterms_log, axis=0)
            d_sign = d_sign * self._wprime_sign[None, :]
            d_log = d_log - self._wprime_log[None, :]
            idx = np.arange(sg.size)
            simple_sign = simple_sign.copy()
            simple_log = simple_log.copy()
            simple_sign[:, idx, sg] = d_sign
            simple_log[:, idx, sg] = d_log
            sign_parts.append(simple_sign)
            log_parts.append(simple_log)
        for ct, log_h_ct in zip(self._contours, kern["log_h_contour"]):
            base = log_h_ct - ct.log_omega[None, :] + ct.log_dz[None, :]
            m = np.max(base.real, axis=1, keepdims=True)
            vals = np.exp(base - m) @ (1.0 / (ct.z[:, None] - self._g[None, :]))
            re = vals.real
            with np.errstate(divide="ignore"):
                sign_parts.append(np.sign(re)[:, None, :])
                log_parts.append((m + np.log(np.abs(re)))[:, None, :])
        t_sign, t_log = signed_logsumexp_arrays(
            np.concatenate(sign_parts, axis=1), np.concatenate(log_parts, axis=1), axis=1
        )
        return t_sign * p_sign, t_log + p_log + math.log(2.0 / self.dims.s)

    # ------------------------------------------------------------------
    def density(self, lam) -> np.ndarray:
        """Density values; tiny negative rounding is clipped to zero."""
        lam = _check_lambda(lam)
        flat = lam.reshape(-1)
        sign, log = self._density_scaled(flat / self._scale)
        with np.errstate(under="ignore"):
            out = np.where(sign > 0, np.exp(log - math.log(self._scale)), 0.0)
        return out.reshape(lam.shape)

    def density_signed(self, lam) -> np.ndarray:
        """Density values without clipping, for diagnostics."""
        lam = _check_lambda(lam)
        sign, log = self._density_scaled(lam.reshape(-1) / self._scale)
        with np.errstate(under="ignore"):
            return (sign * np.exp(log - math.log(self._scale))).reshape(lam.shape)

    def dgamma(self, lam) -> np.ndarray:
        """Gradient of the density in every gain, shape ``lam.shape + (q,)``."""
        lam = _check_lambda(lam)
        sign, log = self._dgamma_scaled(lam.reshape(-1) / self._scale)
        with np.errstate(under="ignore"):
            out = sign * np.exp(log - 2.0 * math.log(self._scale))
        return out.reshape(lam.shape + (self.dims.q,))

    def density_and_dgamma(self, lam):
        """Unclipped density and its gain gradient from shared kernels."""
        lam = _check_lambda(lam)
        x = lam.reshape(-1) / self._scale
        kern = self._kernels(x, derivative=True)
        sign, log = self._density_scaled(x, kern)
        d_sign, d_log = self._dgamma_scaled(x, kern)
        with np.errstate(under="ignore"):
            dens = sign * np.exp(log - math.log(self._scale))
            grad = d_sign * np.exp(d_log - 2.0 * math.log(self._scale))
        return dens.reshape(lam.shape), grad.reshape(lam.shape + (self.dims.q,))


def _check_lambda(lam):
    lam = np.asarray(lam, dtype=float)
    if np.any(~(lam > 0)) or np.any(~np.isfinite(lam)):
        raise DomainError("eigenvalue arguments must be finite and > 0")
    return lam


def _as_gains(gains) -> GainVector:
    return gains if isinstance(gains, GainVector) else GainVector.from_values(gains)


def joint_pdf_log(c, gains, p: int) -> float:
    """Log joint density of the ordered eigenvalues ``c`` of ``diag(gamma) W``.

    ``W`` is a ``q x q`` complex Wishart matrix with ``p`` degrees of
    freedom and ``c_i = gamma_i w_i``; the density is supported where the
    underlying Wishart eigenvalues ``c_i / gamma_i`` are increasing.

    Parameters
    ----------
    c : array_like, length q
        Positive values with ``c_i / gamma_i`` strictly increasing.
    gains : GainVector or array_like
    p : int
        Degrees of freedom, ``p >= q``.

    Returns
    -------
    float
    """
    g = _as_gains(gains).gammas
    c = np.atleast_1d(np.asarray(c, dtype=float))
    q = g.size
    if c.size != q:
        raise DomainError(f"expected {q} eigenvalues, got {c.size}")
    if p < q:
        raise DomainError(f"p must be >= q, got p={p}, q={q}")
    if np.any(~(c > 0)) or not np.all(np.isfinite(c)):
        raise DomainError("eigenvalues must be finite and positive")
    w = c / g
    if np.any(np.diff(w) <= 0):
        raise DomainError("eigenvalues must satisfy c_1/g_1 < ... < c_q/g_q")
    out = _log_const(q, p)
    out += float(np.sum((p - q) * np.log(c) - w - (p - q + 1) * np.log(g)))
    if q > 1:
        d = (w[None, :] - w[:, None])[np.triu_indices(q, 1)]
        out += 2.0 * float(np.sum(np.log(d)))
    return out


def build_marginal(dims: EnsembleDims, gains) -> MarginalEigenPDF:
    """Precompute the marginal density for ``dims`` and ``gains``.

    Raises
    ------
    DegeneracyError
        When two gains agree within relative ``1e-9``; spread them first
        (see :func:`irsec.channel.spread_gains`).
    """
    gains = _as_gains(gains)
    if gains.q != dims.q:
        raise DomainError(f"expected {dims.q} gains, got {gains.q}")
    srt = np.sort(gains.gammas)
    if srt.size > 1 and np.min(np.diff(srt) / srt[1:]) <= DEGENERACY_TOL:
        raise DegeneracyError("gains coincide within relative 1e-9")
    return MarginalEigenPDF(dims, gains)


def marginal_density(pdf: MarginalEigenPDF, lam):
    """Evaluate the marginal density at ``lam`` (scalar or array)."""
    out = pdf.density(lam)
    return float(out) if out.ndim == 0 else out


def marginal_density_dgamma(pdf: MarginalEigenPDF, lam, n: int):
    """Partial derivative of the density in gain ``n`` (one-based)."""
    if not 1 <= n <= pdf.dims.q:
        raise DomainError(f"gain index must lie in 1..{pdf.dims.q}, got {n}")
    out = pdf.dgamma(lam)[..., n - 1]
    return float(out) if np.ndim(out) == 0 else out


def gain_phase_sensitivity(gains: GainVector, profile: PhaseShiftProfile, phases) -> np.ndarray:
    """``d gamma_i / d phi_i`` for every mode."""
    phases = phases if isinstance(phases, PhaseVector) else PhaseVector(phases)
    if profile.ideal:
        return np.zeros(gains.q)
    alpha = np.asarray(amplitude(phases.phases, profile)).reshape(-1)
    dalpha = np.asarray(amplitude_derivative(phases.phases, profile)).reshape(-1)
    return gains.gammas * 2.0 * dalpha / alpha


def marginal_density_dphi(pdf: MarginalEigenPDF, lam, n: int, profile: PhaseShiftProfile, phases):
    """Partial derivative of the density in phase ``n`` (one-based)."""
    if not 1 <= n <= pdf.dims.q:
        raise DomainError(f"phase index must lie in 1..{pdf.dims.q}, got {n}")
    sens = gain_phase_sensitivity(pdf.gains, profile, phases)[n - 1]
    lam_arr = _check_lambda(lam)
    if sens == 0.0:
        out = np.zeros(lam_arr.shape)
    else:
        out = sens * pdf.dgamma(lam_arr)[..., n - 1]
    return float(out) if out.ndim == 0 else out


def support_bound(pdf: MarginalEigenPDF, rel: float = 1e-18) -> float:
    """Upper end of the square-root support beyond which the tail is negligible.

    Solves the Bessel tail ``exp(-2u / sqrt(gamma_max)) = rel`` in
    ``u = sqrt(lam)``, padded by the polynomial prefactor.
    """
    d = pdf.dims
    g_max = float(np.max(pdf.gains.gammas))
    u_mean = math.sqrt(pdf.mean())
    u = 0.5 * math.sqrt(g_max) * (-math.log(rel))
    # the prefactor lam^{(a+p)/2} delays the decay by a few multiples of the mean
    u += 0.5 * math.sqrt(g_max) * (d.a + d.p) * math.log(max(u / math.sqrt(g_max), 2.0))
    return max(u, 4.0 * u_mean)


class _CdfTable:
    def __init__(self, pdf: MarginalEigenPDF, tol: float):
        top = support_bound(pdf)

        def integrand(u):
            out = np.zeros_like(u)
            pos = u > 0
            out[pos] = 2.0 * u[pos] * pdf.density_signed(u[pos] ** 2)
            return out

        res = adaptive_gk(integrand, 0.0, top, tol, initial_panels=64)
        # split every adaptive panel into 16 so the knots resolve the CDF shape
        fine = np.linspace(0.0, 1.0, 17)
        lo, hi = res.panels[:, 0], res.panels[:, 1]
        sub = lo[:, None] + (hi - lo)[:, None] * fine[None, :]
        sub_edges = np.stack([sub[:, :-1].ravel(), sub[:, 1:].ravel()], axis=1)
        rule = panel_rule(sub_edges)
        vals = (integrand(rule.nodes) * rule.weights).reshape(-1, 15).sum(axis=1)
        knots_u = np.concatenate([[0.0], sub_edges[:, 1]])
        cum = np.concatenate([[0.0], np.cumsum(vals)])
        self.total = float(cum[-1])
        self.knots_u = knots_u
        self.cum = np.clip(np.maximum.accumulate(cum), 0.0, None)
        # the slope of the CDF in u is the integrand itself, known exactly
        slopes = np.clip(integrand(knots_u), 0.0, None)
        self._interp = CubicHermiteSpline(knots_u, self.cum, slopes, extrapolate=False)
        self.top = top

    def __call__(self, lam):
        u = np.sqrt(np.asarray(lam, dtype=float))
        out = np.clip(self._interp(np.clip(u, 0.0, self.top)), 0.0, self.cum[-1])
        return np.where(u >= self.top, self.cum[-1], out)


def marginal_cdf(pdf: MarginalEigenPDF, lam, tol: float = 1e-10):
    """Cumulative distribution of the unordered eigenvalue.

    Integrates the density on an adaptive panel set in ``u = sqrt(lam)``
    and interpolates the cumulative sums between panel knots with a cubic
    Hermite spline whose slopes are the exact density.
    """
    key = ("_cdf_table", tol)
    table = pdf.__dict__.get(key)
    if table is None:
        table = _CdfTable(pdf, tol)
        pdf.__dict__[key] = table
    out = table(lam)
    return float(out) if np.ndim(out) == 0 else out


def equal_gain_density(dims: EnsembleDims, gamma: float, lam):
    """Marginal density when every gain equals ``gamma``.

    Closed form as a double sum of Bessel terms weighted by the cofactors
    of the Gamma moment matrix; independent of the residue evaluation and
    used to cross-check it in the confluent limit.
    """
    a, q, p, s = dims.a, dims.q, dims.p, dims.s
    gamma = float(gamma)
    if not gamma > 0:
        raise DomainError("gamma must be positive")
    lam = _check_lambda(lam)
    flat = lam.reshape(-1)
    cof = gamma_cofactors(q, p)
    log_k = _log_const(q, p)
    x = flat / gamma
    arg = 2.0 * np.sqrt(x)
    max_order = max(abs(p - a + l - 1) for l in range(1, q + 1))
    table = log_bessel_k_table(max_order, arg)
    signs, logs = [], []
    for k in range(q - s + 1, q + 1):
        for l in range(1, q + 1):
            entry = cof.entry(l, k)
            if entry.sign == 0:
                continue
            order = abs(p - a + l - 1)
            # lam**e * gamma**(q-a-k-(p-a+l-1)/2) written in x = lam/gamma
            e = 0.5 * (a + p - 2 * q + 2 * k + l - 3)
            g_pow = e + q - a - k - 0.5 * (p - a + l - 1)
            logs.append(e * np.log(x) + g_pow * math.log(gamma) + table[order]
                        + entry.log_mag - float(special.gammaln(a - q + k)))
            signs.append(np.full(flat.shape, float(entry.sign)))
    sign, log = signed_logsumexp_arrays(np.stack(signs), np.stack(logs), axis=0)
    out = sign * np.exp(log + log_k + math.log(2.0 / s))
    out = out.reshape(lam.shape)
    return float(out) if out.ndim == 0 else out
