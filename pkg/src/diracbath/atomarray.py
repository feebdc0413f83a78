"""Subwavelength honeycomb dipole arrays: Green-dyadic Bloch sums and bands.

Energies are reported as (omega_k - omega_a)/Gamma_a and lengths in units
of lambda_a, so the only geometric inputs are the lattice scale d and the
anisotropy beta = d_intra/d_inter.  Lattice sums are direct real-space
sums over coordination shells (max-norm rings in cell indices) with a
shell-doubling convergence oracle; they stabilize outside the light cone.
"""

from __future__ import annotations

import enum
import functools
import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .errors import AmbiguousError, ConvergenceError, DomainError, SingularError


@dataclass(frozen=True)
class ArrayModel:
    """Honeycomb dipole lattice: scale d (units of lambda_a) and anisotropy.

    Primitive vectors ``c_{1/2} = d sqrt(3)/2 (sqrt(3) ex +- ey)`` stay
    fixed; the basis offset ``d_bas = -d_intra ex`` is solved from
    ``beta = d_intra / d_inter``.
    """

    d: float = 0.15
    beta: float = 1.0
    lambda_a: float = 1.0
    Gamma_a: float = 1.0

    def __post_init__(self):
        if self.d <= 0 or self.beta <= 0 or self.lambda_a <= 0 or self.Gamma_a <= 0:
            raise DomainError("d, beta, lambda_a, Gamma_a must be positive")

    @property
    def k0(self):
        return 2.0 * math.pi / self.lambda_a

    @property
    def cell_vectors(self):
        d = self.d * self.lambda_a
        return (np.array([1.5 * d, math.sqrt(3) / 2 * d, 0.0]),
                np.array([1.5 * d, -math.sqrt(3) / 2 * d, 0.0]))

    @property
    def d_intra(self):
        """Intracell NN distance solving beta = d_intra/d_inter."""
        d = self.d * self.lambda_a
        b2 = self.beta ** 2
        if abs(self.beta - 1.0) < 1e-14:
            return d
        # beta^2 [(3d/2 - x)^2 + 3d^2/4] = x^2
        A = 1.0 - b2
        B = 3.0 * b2 * d
        C = -3.0 * b2 * d * d
        return (-B + math.sqrt(B * B - 4.0 * A * C)) / (2.0 * A)

    @property
    def d_inter(self):
        return self.d_intra / self.beta

    @property
    def basis_vector(self):
        return np.array([-self.d_intra, 0.0, 0.0])

    @property
    def reciprocal_vectors(self):
        d = self.d * self.lambda_a
        b1 = (2.0 * math.pi / (3.0 * d)) * np.array([1.0, math.sqrt(3)])
        b2 = (2.0 * math.pi / (3.0 * d)) * np.array([1.0, -math.sqrt(3)])
        return b1, b2

    def special_points(self):
        b1, b2 = self.reciprocal_vectors
        return {
            "G": np.zeros(2),
            "M": 0.5 * (b1 + b2),
            "K": (b1 + 2.0 * b2) / 3.0,
            "K'": (2.0 * b1 + b2) / 3.0,
        }


@dataclass(frozen=True)
class ArrayBandPoint:
    """Eigen-data of the 6x6 Bloch matrix at one k point."""

    k: tuple
    omegas: np.ndarray            # (6,) Re eigenvalues, units of Gamma_a
    gammas: np.ndarray            # (6,) decay rates -2 Im, units of Gamma_a
    polarization_weights: np.ndarray   # (6, 2): [z content, in-plane content]
    eigenvectors: np.ndarray = field(repr=False, default=None)


def green_dyadic(r, k0: float) -> np.ndarray:
    """Closed-form free-space dyadic G0(r): far, intermediate and near field."""
    r = np.asarray(r, dtype=float)
    rn = float(np.linalg.norm(r))
    if rn == 0.0:
        raise SingularError("green_dyadic at r = 0")
    return _green_stack(r[None, :], k0)[0]


def _green_stack(R, k0):
    """Vectorized G0 over an (n, 3) stack of displacement vectors."""
    rn = np.linalg.norm(R, axis=-1)
    kr = k0 * rn
    env = np.exp(1j * kr) / (4.0 * math.pi * rn)
    a = 1.0 + 1j / kr - 1.0 / kr ** 2
    b = -1.0 - 3j / kr + 3.0 / kr ** 2
    rh = R / rn[..., None]
    outer = rh[..., :, None] * rh[..., None, :]
    return env[..., None, None] * (a[..., None, None] * np.eye(3) + b[..., None, None] * outer)


@functools.lru_cache(maxsize=8)
def _dyadic_table(d, beta, lambda_a, Gamma_a, shells):
    """Precomputed k-independent dyadics over the shell cutoff.

    Returns (rxy, g9_intra, g9_12, g9_21): in-plane lattice vectors and the
    flattened 3x3 dyadic stacks for the intra-sublattice sum (origin
    excluded) and the two basis-offset sums.
    """
    model = ArrayModel(d=d, beta=beta, lambda_a=lambda_a, Gamma_a=Gamma_a)
    c1, c2 = model.cell_vectors
    n = np.arange(-shells, shells + 1)
    N1, N2 = np.meshgrid(n, n, indexing="ij")
    R = (N1[..., None] * c1 + N2[..., None] * c2).reshape(-1, 3)
    origin = (np.abs(R[:, 0]) < 1e-15) & (np.abs(R[:, 1]) < 1e-15)
    k0 = model.k0
    g_intra = np.zeros((R.shape[0], 3, 3), dtype=np.complex128)
    g_intra[~origin] = _green_stack(R[~origin], k0)
    g_12 = _green_stack(R + model.basis_vector, k0)
    g_21 = _green_stack(R - model.basis_vector, k0)
    rxy = np.ascontiguousarray(R[:, :2])
    return (rxy,
            np.ascontiguousarray(g_intra.reshape(-1, 9)),
            np.ascontiguousarray(g_12.reshape(-1, 9)),
            np.ascontiguousarray(g_21.reshape(-1, 9)))


def bloch_matrix(model: ArrayModel, k, cutoff_shells: int = 60,
                 certify: bool = False, tol: float = 1e-2) -> np.ndarray:
    """Assemble the 6x6 Bloch matrix M_k at in-plane Bloch vector k.

    Diagonal blocks carry (omega_a - i Gamma_a/2) with omega_a = 0 as the
    energy reference; off-diagonal blocks are phase-weighted Green sums over
    lattice vectors within `cutoff_shells` coordination shells, the same-site
    term excluded from the intra-sublattice sum.

    With ``certify=True`` the shell count is doubled and a ConvergenceError
    is raised if any eigenvalue moves by more than `tol` (in Gamma_a;
    meaningful outside the light cone).
    """
    if cutoff_shells < 8:
        raise DomainError("cutoff_shells must be >= 8")
    M = _assemble(model, float(k[0]), float(k[1]), int(cutoff_shells))
    if certify:
        M2 = _assemble(model, float(k[0]), float(k[1]), 2 * int(cutoff_shells))
        w1 = np.sort(np.linalg.eigvals(M).real)
        w2 = np.sort(np.linalg.eigvals(M2).real)
        shift = float(np.max(np.abs(w1 - w2)))
        if shift > tol * model.Gamma_a:
            raise ConvergenceError(
                f"eigenvalues moved {shift:.3e} on doubling {cutoff_shells} shells")
    return M


def _assemble(model, kx, ky, shells):
    rxy, g9i, g912, g921 = _dyadic_table(
        model.d, model.beta, model.lambda_a, model.Gamma_a, shells)
    pref = -3.0 * math.pi * model.Gamma_a / model.k0
    Gi = _kernels.dipole_phase_sum(rxy, g9i, kx, ky).reshape(3, 3)
    G12 = _kernels.dipole_phase_sum(rxy, g912, kx, ky).reshape(3, 3)
    G21 = _kernels.dipole_phase_sum(rxy, g921, kx, ky).reshape(3, 3)
    M = np.zeros((6, 6), dtype=np.complex128)
    M[:3, :3] = pref * Gi
    M[3:, 3:] = pref * Gi
    M[:3, 3:] = pref * G12
    M[3:, :3] = pref * G21
    M -= 0.5j * model.Gamma_a * np.eye(6)
    return M


def _eig_sorted(M):
    vals, vecs = np.linalg.eig(M)
    order = np.argsort(vals.real)
    return vals[order], vecs[:, order]


def array_band_structure(model: ArrayModel, path, cutoff_shells: int = 60,
                         certify_every: int = 0) -> list:
    """Eigendecomposition along a k path with continuity-sorted bands.

    Bands are matched between consecutive points by maximal eigenvector
    overlap, falling back to energy order when the best overlap is below
    0.5.  ``certify_every > 0`` runs the shell-doubling oracle on every
    that-many-th point.
    """
    points = []
    prev_vecs = None
    for i, k in enumerate(path):
        # the doubling oracle is meaningful only outside the light cone
        certify = (certify_every > 0 and i % certify_every == 0
                   and float(np.hypot(k[0], k[1])) > model.k0)
        M = bloch_matrix(model, k, cutoff_shells, certify=certify)
        vals, vecs = _eig_sorted(M)
        if prev_vecs is not None:
            overlap = np.abs(prev_vecs.conj().T @ vecs)  # (prev, new)
            perm = np.full(6, -1)
            used = set()
            ok = True
            for _ in range(6):
                p, q = np.unravel_index(np.argmax(overlap), overlap.shape)
                if overlap[p, q] < 0.5:
                    ok = False
                    break
                perm[p] = q
                used.add(q)
                overlap[p, :] = -1.0
                overlap[:, q] = -1.0
            if ok and -1 not in perm:
                vals = vals[perm]
                vecs = vecs[:, perm]
        prev_vecs = vecs
        zw = (np.abs(vecs[2]) ** 2 + np.abs(vecs[5]) ** 2) / np.sum(np.abs(vecs) ** 2, axis=0)
        points.append(ArrayBandPoint(
            k=(float(k[0]), float(k[1])),
            omegas=vals.real.copy(),
            gammas=(-2.0 * vals.imag).copy(),
            polarization_weights=np.column_stack([zw, 1.0 - zw]),
            eigenvectors=vecs,
        ))
    return points


def high_symmetry_path(model: ArrayModel, spec: str = "G K M G",
                       per_segment: int = 40):
    """k path through named special points; returns (points, labels)."""
    names = spec.split()
    special = model.special_points()
    for nm in names:
        if nm not in special:
            raise DomainError(f"unknown special point {nm!r}")
    pts, labels = [], []
    for a, b in zip(names[:-1], names[1:]):
        p, q = special[a], special[b]
        seg = [p + (q - p) * t for t in np.linspace(0, 1, per_segment, endpoint=False)]
        labels.append((len(pts), a))
        pts.extend(seg)
    labels.append((len(pts), names[-1]))
    pts.append(special[names[-1]])
    return np.asarray(pts), labels


class CrossingKind(enum.Enum):
    DIRAC_I = "DiracI"
    SEMI_DIRAC = "SemiDirac"
    TILTED = "Tilted"
    NONE = "None"


@dataclass(frozen=True)
class CrossingReport:
    kind: CrossingKind
    exponents: tuple
    tilt_ratio: float
    gap_at_kstar: float


def classify_crossing(pair_fn, k_star, direction1, direction2, window,
                      n_samples: int = 6, gap_tol: float | None = None,
                      exponent_tol: float = 0.2,
                      tilt_threshold: float = 0.1) -> CrossingReport:
    """Classify a band degeneracy by splitting exponents and tilt.

    ``pair_fn(k) -> (e_lo, e_hi)`` samples the two candidate bands.  The
    splitting is fitted to a power law along the two orthogonal directions
    over ``|dk| in [window/8, window]``; points whose splitting is not well
    above the residual gap at k* are discarded.  DiracI: exponents (1, 1)
    with mean-band slope below `tilt_threshold` of the cone slope;
    SemiDirac: (1, 2); Tilted: (1, 1) with larger tilt.  AmbiguousError
    when exponents land outside all tolerance bands.
    """
    k_star = np.asarray(k_star, dtype=float)
    dirs = [np.asarray(direction1, float), np.asarray(direction2, float)]
    dirs = [v / np.linalg.norm(v) for v in dirs]
    lo, hi = pair_fn(k_star)
    gap0 = abs(hi - lo)
    steps = np.geomspace(window / 8.0, window, n_samples)

    exponents, cone_slopes, tilt_slopes = [], [], []
    for v in dirs:
        splits, means_p, means_m = [], [], []
        for s in steps:
            lp, hp = pair_fn(k_star + s * v)
            lm, hm = pair_fn(k_star - s * v)
            splits.append(0.5 * ((hp - lp) + (hm - lm)))
            means_p.append(0.5 * (hp + lp))
            means_m.append(0.5 * (hm + lm))
        splits = np.asarray(splits)
        good = splits > max(5.0 * gap0, 1e-14)
        if np.count_nonzero(good) < 3:
            exponents.append(math.nan)
            cone_slopes.append(0.0)
            tilt_slopes.append(0.0)
            continue
        expnt = np.polyfit(np.log(steps[good]), np.log(splits[good]), 1)[0]
        exponents.append(float(expnt))
        cone_slopes.append(float(np.polyfit(steps[good], splits[good] / 2.0, 1)[0]))
        odd = 0.5 * (np.asarray(means_p) - np.asarray(means_m))
        tilt_slopes.append(float(np.polyfit(steps[good], odd[good], 1)[0]))

    if gap_tol is None:
        ref = max(abs(cone_slopes[0]) * window, abs(cone_slopes[1]) * window, 1e-30)
        gap_tol = 0.2 * ref
    if gap0 > gap_tol:
        return CrossingReport(CrossingKind.NONE, tuple(exponents), 0.0, gap0)

    def near(x, target):
        return not math.isnan(x) and abs(x - target) <= exponent_tol

    e1, e2 = exponents
    linear_dirs = [i for i, e in enumerate(exponents) if near(e, 1.0)]
    tilt_ratio = 0.0
    for i in linear_dirs:
        if cone_slopes[i] > 0:
            tilt_ratio = max(tilt_ratio, abs(tilt_slopes[i]) / cone_slopes[i])

    if near(e1, 1.0) and near(e2, 1.0):
        kind = CrossingKind.TILTED if tilt_ratio >= tilt_threshold else CrossingKind.DIRAC_I
    elif (near(e1, 1.0) and near(e2, 2.0)) or (near(e1, 2.0) and near(e2, 1.0)):
        kind = CrossingKind.SEMI_DIRAC
    else:
        raise AmbiguousError(
            f"exponents {exponents} outside all tolerance bands (+-{exponent_tol})")
    return CrossingReport(kind, (e1, e2), tilt_ratio, gap0)


def lattice_band_pair(model):
    """Adapter: tight-binding model bands as a pair_fn for classify_crossing."""
    from .lattice import pauli_components

    def pair(k):
        hI, hx, hy, hz = pauli_components(model, k[0], k[1])
        w = math.sqrt(float(hx) ** 2 + float(hy) ** 2 + float(hz) ** 2)
        return float(hI) - w, float(hI) + w

    return pair
