"""Spherical components, the dispherical wave and their syntheses."""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .coords import CylPoint, PhysicalParams, ProlatePoint, cyl_to_prolate, focal_distances, rho_z_from_xi_eta
from .errors import DomainError, SingularityError

__all__ = [
    "FieldSample",
    "EntangledSum",
    "ErasureFields",
    "source_index",
    "psi_point_source",
    "psi_dispherical",
    "dispherical_amplitude_closed_form",
    "synthesize_entangled",
    "erasure_fields",
    "psi_dispherical_grid",
    "sample_grid",
    "GRID_COLUMNS",
]

SQRT2 = math.sqrt(2.0)


def _principal(z: complex) -> float:
    if z == 0:
        return 0.0
    ph = math.atan2(z.imag, z.real)
    return math.pi if ph == -math.pi else ph


@dataclass(frozen=True)
class FieldSample:
    """A complex field value together with its polar form."""

    re: float
    im: float
    amplitude: float
    phase_principal: float
    at: ProlatePoint | None = None
    source: str = "d"

    @classmethod
    def from_complex(cls, value: complex, at=None, source="d") -> "FieldSample":
        value = complex(value)
        return cls(value.real, value.imag, abs(value), _principal(value), at, source)

    @property
    def value(self) -> complex:
        return complex(self.re, self.im)


@dataclass(frozen=True)
class EntangledSum:
    X: float
    Y: float
    amplitude: float
    phase: float

    @property
    def value(self) -> complex:
        return self.amplitude * cmath.exp(1j * self.phase)


@dataclass(frozen=True)
class ErasureFields:
    psi_Y: FieldSample
    psi_L: FieldSample
    combined: FieldSample
    hemisphere: str


def source_index(source) -> int:
    """Normalise ``1``/``"lower"`` and ``2``/``"upper"``."""
    if source in (1, "1", "lower"):
        return 1
    if source in (2, "2", "upper"):
        return 2
    raise DomainError(f"source must be 1/'lower' or 2/'upper', got {source!r}")


def _as_prolate(p, a) -> ProlatePoint:
    if isinstance(p, ProlatePoint):
        return p
    if isinstance(p, CylPoint):
        return cyl_to_prolate(p, a)
    raise TypeError(f"expected CylPoint or ProlatePoint, got {type(p).__name__}")


def _component(r: float, k: float) -> complex:
    return cmath.exp(1j * k * r) / r


def psi_point_source(p, source, params: PhysicalParams) -> FieldSample:
    """Outgoing spherical wave ``exp(i k r_i) / r_i`` of one source."""
    i = source_index(source)
    d = focal_distances(p, params.a)
    r = d.r1 if i == 1 else d.r2
    if r == 0.0:
        raise SingularityError(f"psi_{i} diverges at its own source")
    return FieldSample.from_complex(_component(r, params.k), _as_prolate(p, params.a), "lower" if i == 1 else "upper")


def psi_dispherical(p, params: PhysicalParams) -> FieldSample:
    """``psi_1 + psi_2``; never zero away from the foci."""
    d = focal_distances(p, params.a)
    if d.r1 == 0.0 or d.r2 == 0.0:
        raise SingularityError("the dispherical wave diverges at a focus")
    v = _component(d.r1, params.k) + _component(d.r2, params.k)
    return FieldSample.from_complex(v, _as_prolate(p, params.a), "d")


def dispherical_amplitude_closed_form(p, params: PhysicalParams) -> float:
    """Amplitude from the interference form ``[r1^-2 + r2^-2 + 2 cos(k(r1-r2))/(r1 r2)]^(1/2)``."""
    d = focal_distances(p, params.a)
    if d.r1 == 0.0 or d.r2 == 0.0:
        raise SingularityError("the dispherical wave diverges at a focus")
    s = d.r1**-2 + d.r2**-2 + 2.0 * math.cos(params.k * (d.r1 - d.r2)) / (d.r1 * d.r2)
    return math.sqrt(max(s, 0.0))


def synthesize_entangled(components: Sequence[FieldSample] | Iterable[complex]) -> EntangledSum:
    """Sum ``N`` components into Cartesian parts ``X``, ``Y`` and polar form.

    The phase is the four-quadrant angle of ``(X, Y)``; an exactly vanishing
    sum gets phase 0.
    """
    comps = list(components)
    if not comps:
        raise DomainError("cannot synthesise an empty list of components")
    X = 0.0
    Y = 0.0
    for c in comps:
        if isinstance(c, FieldSample):
            X += c.re
            Y += c.im
        else:
            c = complex(c)
            X += c.real
            Y += c.imag
    return EntangledSum(X, Y, math.hypot(X, Y), _principal(complex(X, Y)))


def erasure_fields(p, params: PhysicalParams) -> ErasureFields:
    """Anti-correlated Young field plus the half-silvered-mirror field.

    The mirror field takes the ``+`` sign for ``eta <= 0`` and ``-`` above;
    their sum is ``sqrt(2) psi_1`` below the mirror and ``-sqrt(2) psi_2``
    above it.
    """
    d = focal_distances(p, params.a)
    if d.r1 == 0.0 or d.r2 == 0.0:
        raise SingularityError("the erasure fields diverge at a focus")
    at = _as_prolate(p, params.a)
    p1 = _component(d.r1, params.k)
    p2 = _component(d.r2, params.k)
    lower = at.eta <= 0.0
    psi_y = (p1 - p2) / SQRT2
    psi_l = (p1 + p2) / SQRT2 if lower else -(p1 + p2) / SQRT2
    return ErasureFields(
        FieldSample.from_complex(psi_y, at, "Y"),
        FieldSample.from_complex(psi_l, at, "L"),
        FieldSample.from_complex(psi_y + psi_l, at, "Y+L"),
        "lower" if lower else "upper",
    )


def psi_dispherical_grid(xi, eta, params: PhysicalParams):
    """Vectorised ``psi_1 + psi_2`` over prolate arrays (foci give inf/nan)."""
    xi = np.asarray(xi, dtype=float)
    eta = np.asarray(eta, dtype=float)
    r1 = 0.5 * params.a * (xi + eta)
    r2 = 0.5 * params.a * (xi - eta)
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.exp(1j * params.k * r1) / r1 + np.exp(1j * params.k * r2) / r2


GRID_COLUMNS = ("xi", "eta", "rho", "z", "re", "im", "amplitude", "phase_principal")


def sample_grid(xi_values, eta_values, params: PhysicalParams):
    """Rows ``(xi, eta, rho, z, re, im, amplitude, phase_principal)`` of the dispherical wave.

    Focus nodes are skipped.  Rows are ordered by ``xi`` then ``eta``.
    """
    rows = []
    for xi in xi_values:
        for eta in eta_values:
            p = ProlatePoint(float(xi), float(eta))
            try:
                s = psi_dispherical(p, params)
            except SingularityError:
                continue
            rho, z = rho_z_from_xi_eta(p.xi, p.eta, params.a)
            rows.append((p.xi, p.eta, float(rho), float(z), s.re, s.im, s.amplitude, s.phase_principal))
    return rows
