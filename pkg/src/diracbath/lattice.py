"""Bath models as k -> 2x2 Bloch Hamiltonians and their cone geometry.

Two bipartite models are supported:

* ``AnisotropicHoneycomb`` -- honeycomb lattice with nearest-neighbour scale
  ``J1`` (one bond per cell weakened/strengthened by ``beta1``) and
  next-nearest scale ``J2`` (one direction scaled by ``beta2``).  The Bloch
  Hamiltonian is chiral (``hz = 0``); ``J2`` enters only the diagonal shift.
* ``Mizoguchi`` -- square-bipartite model hosting perfect type-III cones,
  with diagonal entries ``a(k) +- d(k)`` and off-diagonal ``a(k)`` where
  ``d = 2 J1 (cos k1 + cos k2)`` and ``a = 2 J2 (cos k1 - cos k2)``.

All operations take ``(k1, k2)`` in reciprocal-primitive coordinates,
``k_i in [-pi, pi)``; conversion to Cartesian is a plotting helper only.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError

ANISOTROPIC = "AnisotropicHoneycomb"
MIZOGUCHI = "Mizoguchi"
VARIANTS = (ANISOTROPIC, MIZOGUCHI)

# real-space primitive vectors (NN distance = 1): c_{1/2} = 3/2 ex +- sqrt3/2 ey
CELL_VECTORS = np.array([[1.5, math.sqrt(3) / 2], [1.5, -math.sqrt(3) / 2]])


@dataclass(frozen=True)
class LatticeModel:
    """Parametric bath description generating 2x2 Bloch Hamiltonians."""

    variant: str = ANISOTROPIC
    J1: float = 1.0
    J2: float = 0.0
    beta1: float = 1.0
    beta2: float = 1.0

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise DomainError(f"unknown variant {self.variant!r}")
        if not (self.J1 > 0):
            raise DomainError("J1 must be positive")
        if self.variant == MIZOGUCHI and (self.beta1 != 1.0 or self.beta2 != 1.0):
            raise DomainError("Mizoguchi ignores beta1/beta2; they must be unity")


@dataclass(frozen=True)
class BlochSample:
    """Pauli components, band energies and mixing angles at one k point."""

    hI: float
    hx: float
    hy: float
    hz: float
    omega_l: float
    omega_u: float
    theta: float
    phi: float


@dataclass(frozen=True)
class ConeParameters:
    """Linear expansion data around the Dirac touchings."""

    v1: float
    v2: float
    v01: float
    v02: float
    vtilde: float
    ED: float
    dirac_points: list = field(default_factory=list)


def pauli_components(model, k1, k2):
    """Vectorized (hI, hx, hy, hz) for arrays of k-coordinates."""
    k1 = np.asarray(k1, dtype=float)
    k2 = np.asarray(k2, dtype=float)
    if model.variant == ANISOTROPIC:
        hI = -2.0 * model.J2 * (
            np.cos(k1) + np.cos(k2) + model.beta2 * np.cos(k1 - k2)
        )
        hx = -model.J1 * (model.beta1 + np.cos(k1) + np.cos(k2))
        hy = -model.J1 * (np.sin(k1) + np.sin(k2))
        hz = np.zeros_like(hx)
    else:
        d = 2.0 * model.J1 * (np.cos(k1) + np.cos(k2))
        a = 2.0 * model.J2 * (np.cos(k1) - np.cos(k2))
        hI, hx, hy, hz = a, a, np.zeros_like(a), d
    return hI, hx, hy, hz


def band_omega(model, k1, k2):
    """|h|(k): half the band splitting, omega_{u/l} = hI +- omega."""
    _, hx, hy, hz = pauli_components(model, k1, k2)
    return np.sqrt(hx * hx + hy * hy + hz * hz)


def mixing_angles(model, k1, k2):
    """(theta, phi) arrays; theta = pi/2 and phi = 0 fixed at touchings."""
    _, hx, hy, hz = pauli_components(model, k1, k2)
    omega = np.sqrt(hx * hx + hy * hy + hz * hz)
    safe = np.where(omega > 0.0, omega, 1.0)
    if model.variant == ANISOTROPIC:
        theta = np.full_like(omega, math.pi / 2)  # hz = 0 identically
    else:
        theta = np.arccos(np.clip(np.where(omega > 0.0, hz / safe, 0.0), -1.0, 1.0))
    phi = np.arctan2(hy, hx)
    phi = np.where((hx == 0.0) & (hy == 0.0), 0.0, phi)
    return theta, phi


def bloch_eval(model, k):
    """Evaluate the Bloch Hamiltonian at one k point.

    Returns the Pauli components, band energies
    ``omega_{u/l} = hI +- sqrt(hx^2 + hy^2 + hz^2)`` and the mixing angles
    ``cos(theta) = hz/omega``, ``tan(phi) = hy/hx`` (``phi = 0`` where
    ``hx = hy = 0``).  Total function: every finite k is accepted.
    """
    k1, k2 = float(k[0]), float(k[1])
    hI, hx, hy, hz = (float(v) for v in pauli_components(model, k1, k2))
    omega = math.sqrt(hx * hx + hy * hy + hz * hz)
    theta, phi = mixing_angles(model, k1, k2)
    return BlochSample(
        hI=hI, hx=hx, hy=hy, hz=hz,
        omega_l=hI - omega, omega_u=hI + omega,
        theta=float(theta), phi=float(phi),
    )


def _wrap_equal(p, q, tol=1e-12):
    """Equality of k points modulo 2*pi per component."""
    d = np.mod(np.asarray(p) - np.asarray(q) + math.pi, 2 * math.pi) - math.pi
    return np.all(np.abs(d) < tol)


def dirac_points(model):
    """Analytic band-touching points, deduplicated under 2*pi periodicity.

    AnisotropicHoneycomb: ``K/K' = (+-alpha, -+alpha)`` with
    ``alpha = arccos(-beta1/2)``; empty for ``beta1 > 2``; the two points
    merge into one inequivalent point at ``beta1 = 2``.  Mizoguchi: the four
    points ``(+-pi/2, +-pi/2)``.
    """
    if model.variant == MIZOGUCHI:
        h = math.pi / 2
        return [(h, h), (h, -h), (-h, h), (-h, -h)]
    if model.beta1 > 2.0:
        return []
    alpha = math.acos(-model.beta1 / 2.0)
    pts = [(alpha, -alpha), (-alpha, alpha)]
    out = []
    for p in pts:
        if not any(_wrap_equal(p, q) for q in out):
            out.append(p)
    return out


def cone_parameters(model):
    """Velocities, tilt and shifted Dirac energy of the honeycomb cones.

    ``v2 = J1 sqrt(2 - beta1^2/2)``, ``v1 = J1 beta1 / sqrt(2)``,
    ``v01 = 0``, ``v02 = 2 (J2/J1) v2 (beta1 beta2 - 1)``,
    ``vtilde = (2 J2/J1) |beta1 beta2 - 1|`` and
    ``ED = J2 [2 beta2 + beta1 (2 - beta1 beta2)]``.

    Raises DomainError for ``beta1 > 2`` (no cone) and for the Mizoguchi
    variant (no published expansion).
    """
    if model.variant == MIZOGUCHI:
        raise DomainError("cone expansion not available for the Mizoguchi model")
    if model.beta1 > 2.0:
        raise DomainError("no Dirac cone for beta1 > 2")
    J1, J2, b1, b2 = model.J1, model.J2, model.beta1, model.beta2
    v2 = J1 * math.sqrt(2.0 - b1 * b1 / 2.0)
    v1 = J1 * b1 / math.sqrt(2.0)
    v02 = 2.0 * (J2 / J1) * v2 * (b1 * b2 - 1.0)
    vtilde = (2.0 * J2 / J1) * abs(b1 * b2 - 1.0)
    ED = J2 * (2.0 * b2 + b1 * (2.0 - b1 * b2))
    return ConeParameters(
        v1=v1, v2=v2, v01=0.0, v02=v02, vtilde=vtilde, ED=ED,
        dirac_points=dirac_points(model),
    )


def to_cartesian(k1, k2):
    """Map (k1, k2) to (kx, ky) via d_{1/2} = ex/3 +- ey/sqrt(3)."""
    k1 = np.asarray(k1, dtype=float)
    k2 = np.asarray(k2, dtype=float)
    return (k1 + k2) / 3.0, (k1 - k2) / math.sqrt(3)


def site_position(n1, n2):
    """Cartesian position of unit cell (n1, n2), NN distance = 1."""
    n1 = np.asarray(n1, dtype=float)
    n2 = np.asarray(n2, dtype=float)
    x = n1 * CELL_VECTORS[0, 0] + n2 * CELL_VECTORS[1, 0]
    y = n1 * CELL_VECTORS[0, 1] + n2 * CELL_VECTORS[1, 1]
    return x, y
