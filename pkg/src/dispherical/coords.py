"""Cylindrical and modified prolate spheroidal coordinates for two foci.

The foci sit on the z axis at ``z = -a/2`` (lower, source 1) and
``z = +a/2`` (upper, source 2).  With ``r1``/``r2`` the distances to the
lower/upper focus,

    xi  = (r1 + r2) / a      (ellipsoidal, xi >= 1)
    eta = (r1 - r2) / a      (hyperboloidal, -1 <= eta <= 1)

and the inverse is ``rho = (a/2) sqrt((xi^2 - 1)(1 - eta^2))``,
``z = a xi eta / 2``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np

from .errors import DomainError

__all__ = [
    "PhysicalParams",
    "CylPoint",
    "ProlatePoint",
    "FocalDistances",
    "WaveVector",
    "wrap_azimuth",
    "focal_distances",
    "prolate_to_cyl",
    "cyl_to_prolate",
    "wave_vector_components",
    "xi_eta_from_rho_z",
    "rho_z_from_xi_eta",
]


def wrap_azimuth(phi: float) -> float:
    """Reduce an angle to ``(-pi, pi]``."""
    w = math.remainder(phi, 2.0 * math.pi)
    if w <= -math.pi:
        w += 2.0 * math.pi
    return w


@dataclass(frozen=True)
class PhysicalParams:
    """Mass, action unit, source separation and wavenumber.

    Defaults are the worked example ``m = hbar = a = 1``, ``k = 15.2``.
    """

    m: float = 1.0
    hbar: float = 1.0
    a: float = 1.0
    k: float = 15.2

    def __post_init__(self):
        for name in ("m", "hbar", "a", "k"):
            v = getattr(self, name)
            if not (isinstance(v, (int, float)) and math.isfinite(v) and v > 0):
                raise DomainError(f"{name} must be a finite positive number, got {v!r}")

    @property
    def E(self) -> float:
        """Energy ``hbar^2 k^2 / (2 m)``."""
        return self.hbar**2 * self.k**2 / (2.0 * self.m)

    @property
    def ka(self) -> float:
        return self.k * self.a

    @property
    def h(self) -> float:
        """Planck's constant ``2 pi hbar``."""
        return 2.0 * math.pi * self.hbar


@dataclass(frozen=True)
class CylPoint:
    rho: float
    z: float
    phi: float = 0.0

    def __post_init__(self):
        if not self.rho >= 0.0:
            raise DomainError(f"rho must be >= 0, got {self.rho!r}")
        object.__setattr__(self, "phi", wrap_azimuth(self.phi))


@dataclass(frozen=True)
class ProlatePoint:
    """Point ``(xi, eta, phi)`` on the meridian sheet ``sigma``.

    ``sigma = -1`` stands for the half plane at azimuth ``phi + pi``; it
    lets a curve that crosses the axis stay in a single data structure
    (signed cylindrical radius ``sigma * rho``).
    """

    xi: float
    eta: float
    phi: float = 0.0
    sigma: int = 1

    def __post_init__(self):
        if not self.xi >= 1.0:
            raise DomainError(f"xi must be >= 1, got {self.xi!r}")
        if not -1.0 <= self.eta <= 1.0:
            raise DomainError(f"eta must lie in [-1, 1], got {self.eta!r}")
        if self.sigma not in (1, -1):
            raise DomainError(f"sigma must be +1 or -1, got {self.sigma!r}")
        object.__setattr__(self, "phi", wrap_azimuth(self.phi))


Point = Union[CylPoint, ProlatePoint]


@dataclass(frozen=True)
class FocalDistances:
    r1: float
    r2: float


@dataclass(frozen=True)
class WaveVector:
    k_z: float
    k_rho: float
    theta: float


def xi_eta_from_rho_z(rho, z, a):
    """Array version of :func:`cyl_to_prolate` (rho may be signed)."""
    rho = np.asarray(rho, dtype=float)
    z = np.asarray(z, dtype=float)
    r1 = np.hypot(rho, z + 0.5 * a)
    r2 = np.hypot(rho, z - 0.5 * a)
    xi = np.maximum((r1 + r2) / a, 1.0)
    eta = np.clip((r1 - r2) / a, -1.0, 1.0)
    return xi, eta


def rho_z_from_xi_eta(xi, eta, a, sigma=1):
    """Array version of :func:`prolate_to_cyl`; returns signed rho."""
    xi = np.asarray(xi, dtype=float)
    eta = np.asarray(eta, dtype=float)
    s = np.sqrt(np.maximum((xi * xi - 1.0) * (1.0 - eta * eta), 0.0))
    return sigma * 0.5 * a * s, 0.5 * a * xi * eta


def focal_distances(p: Point, a: float) -> FocalDistances:
    """Distances from ``p`` to the lower (``r1``) and upper (``r2``) focus."""
    if not a > 0:
        raise DomainError(f"a must be positive, got {a!r}")
    if isinstance(p, ProlatePoint):
        return FocalDistances(0.5 * a * (p.xi + p.eta), 0.5 * a * (p.xi - p.eta))
    if isinstance(p, CylPoint):
        return FocalDistances(math.hypot(p.rho, p.z + 0.5 * a), math.hypot(p.rho, p.z - 0.5 * a))
    raise TypeError(f"expected CylPoint or ProlatePoint, got {type(p).__name__}")


def prolate_to_cyl(p: ProlatePoint, a: float) -> CylPoint:
    if not a > 0:
        raise DomainError(f"a must be positive, got {a!r}")
    rho = 0.5 * a * math.sqrt(max((p.xi * p.xi - 1.0) * (1.0 - p.eta * p.eta), 0.0))
    phi = p.phi if p.sigma == 1 else p.phi + math.pi
    return CylPoint(rho, 0.5 * a * p.xi * p.eta, phi)


def cyl_to_prolate(p: CylPoint, a: float) -> ProlatePoint:
    """Map a cylindrical point onto the ``sigma = +1`` sheet.

    Defined at the foci too (``xi = 1, eta = +-1``) although the inverse
    Jacobian is singular there.
    """
    d = focal_distances(p, a)
    xi = max((d.r1 + d.r2) / a, 1.0)
    eta = min(max((d.r1 - d.r2) / a, -1.0), 1.0)
    return ProlatePoint(xi, eta, p.phi, 1)


def wave_vector_components(k: float, eta_a: float) -> WaveVector:
    """Split ``k`` into the axial part ``k eta_a`` and the outgoing transverse part."""
    if not k > 0:
        raise DomainError(f"k must be positive, got {k!r}")
    if not -1.0 <= eta_a <= 1.0:
        raise DomainError(f"|eta_a| must not exceed 1, got {eta_a!r}")
    k_z = k * eta_a
    k_rho = k * math.sqrt(max(1.0 - eta_a * eta_a, 0.0))
    return WaveVector(k_z, k_rho, math.acos(eta_a))
