"""Phase-dependent reflection amplitude of a practical IRS element."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError

__all__ = [
    "PhaseShiftProfile",
    "PhaseVector",
    "wrap_phase",
    "amplitude",
    "amplitude_derivative",
    "optimal_phase",
]


def wrap_phase(phi):
    """Map angles to ``[-pi, pi)`` via the argument of ``exp(j phi)``."""
    arr = np.arctan2(np.sin(phi), np.cos(phi))
    # atan2 returns (-pi, pi]; fold the closed end onto -pi
    arr = np.where(arr >= np.pi, arr - 2 * np.pi, arr)
    return float(arr) if np.ndim(arr) == 0 else arr


@dataclass(frozen=True)
class PhaseShiftProfile:
    """Amplitude law ``(1-kappa_min) * ((sin(phi - vartheta) + 1)/2)**xi + kappa_min``.

    Attributes
    ----------
    kappa_min : float
        Minimum amplitude, in ``[0, 1]``.
    xi : float
        Steepness of the transition, ``>= 0``.
    vartheta : float
        Horizontal offset in radians, ``>= 0``.
    """

    kappa_min: float = 0.8
    xi: float = 1.6
    vartheta: float = 0.43 * math.pi

    def __post_init__(self):
        for name in ("kappa_min", "xi", "vartheta"):
            v = getattr(self, name)
            if isinstance(v, bool) or not isinstance(v, (int, float, np.floating, np.integer)):
                raise DomainError(f"{name} must be real, got {v!r}")
            if not math.isfinite(v):
                raise DomainError(f"{name} must be finite, got {v!r}")
            object.__setattr__(self, name, float(v))
        if not 0.0 <= self.kappa_min <= 1.0:
            raise DomainError(f"kappa_min must lie in [0, 1], got {self.kappa_min}")
        if self.xi < 0:
            raise DomainError(f"xi must be >= 0, got {self.xi}")
        if self.vartheta < 0:
            raise DomainError(f"vartheta must be >= 0, got {self.vartheta}")

    @property
    def ideal(self) -> bool:
        """True when the amplitude is identically one."""
        return self.kappa_min == 1.0 or self.xi == 0.0

    @classmethod
    def ideal_profile(cls) -> "PhaseShiftProfile":
        return cls(kappa_min=1.0, xi=0.0, vartheta=0.0)


@dataclass(frozen=True)
class PhaseVector:
    """IRS phase shifts, wrapped to ``[-pi, pi)`` on construction."""

    phases: np.ndarray = field()

    def __post_init__(self):
        arr = np.atleast_1d(np.asarray(self.phases, dtype=float))
        if arr.ndim != 1 or arr.size == 0:
            raise DomainError("phases must be a non-empty 1-D array")
        if not np.all(np.isfinite(arr)):
            raise DomainError("phases must be finite")
        arr = np.asarray(wrap_phase(arr), dtype=float).reshape(-1)
        arr.setflags(write=False)
        object.__setattr__(self, "phases", arr)

    def __len__(self) -> int:
        return self.phases.size

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.phases, dtype=dtype)


def _sine_stage(phi, profile):
    return (np.sin(np.asarray(phi, dtype=float) - profile.vartheta) + 1.0) / 2.0


def amplitude(phi, profile: PhaseShiftProfile):
    """Reflection amplitude at phase ``phi``; values in ``[kappa_min, 1]``.

    Examples
    --------
    >>> p = PhaseShiftProfile()
    >>> amplitude(p.vartheta + math.pi / 2, p)
    1.0
    """
    if profile.ideal:
        out = np.ones_like(np.asarray(phi, dtype=float))
    else:
        base = np.clip(_sine_stage(phi, profile), 0.0, 1.0)
        out = (1.0 - profile.kappa_min) * base**profile.xi + profile.kappa_min
        out = np.clip(out, profile.kappa_min, 1.0)
    return float(out) if out.ndim == 0 else out


def amplitude_derivative(phi, profile: PhaseShiftProfile):
    """Derivative of :func:`amplitude` with respect to the phase.

    Returns exactly zero for the ideal profile, and zero at the trough
    ``phi = vartheta - pi/2`` where ``xi < 1`` makes the power term
    singular.
    """
    phi = np.asarray(phi, dtype=float)
    if profile.ideal:
        out = np.zeros_like(phi)
        return float(out) if out.ndim == 0 else out
    base = np.clip(_sine_stage(phi, profile), 0.0, 1.0)
    xi = profile.xi
    with np.errstate(divide="ignore", invalid="ignore"):
        power = np.where(base > 0, base ** (xi - 1.0), 0.0 if xi >= 1 else np.inf)
        out = 0.5 * (1.0 - profile.kappa_min) * xi * np.cos(phi - profile.vartheta) * power
    out = np.where(np.isfinite(out), out, 0.0)
    return float(out) if out.ndim == 0 else out


def optimal_phase(profile: PhaseShiftProfile) -> float:
    """Phase of unit amplitude, ``vartheta + pi/2`` wrapped."""
    return wrap_phase(profile.vartheta + math.pi / 2)
