"""Brillouin-zone reductions: DOS, self-energy, bound states, tail fits.

Grid convention: ``k_i = 2 pi n / N_i`` (FFT ordering, equivalent to a
uniform sampling of ``[-pi, pi)``).  With this choice the band touchings
land exactly on the grid for the commensurate sizes (``N_i`` divisible by 3
at ``beta1 = 1``, even ``N_i`` at ``beta1 = 2``); those measure-zero points
carry the extended zero mode and are excluded from spectral sums, mirroring
the vanishing overlap seen on commensurate lattices.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .errors import DomainError, InsufficientDataError, NoRootError, PoleError
from .lattice import ANISOTROPIC, LatticeModel, mixing_angles, pauli_components

ZERO_TOL_FACTOR = 1e-12  # omega below this (times J1) counts as a touching
POLE_GUARD = 1e-3        # touching modes are dropped when |z - hI| < this * J1


class BandGrid:
    """Band energies, shift and mixing angles on an N1 x N2 periodic k-grid.

    ``N = N1 * N2`` is the number of unit cells; the paper-scale "N = 500^2"
    maps to ``N1 = N2 = 500``.
    """

    def __init__(self, model: LatticeModel, N1: int, N2: int):
        if N1 < 1 or N2 < 1:
            raise DomainError("grid sizes must be positive")
        self.model = model
        self.N1, self.N2 = int(N1), int(N2)
        self.k1 = 2.0 * math.pi * np.arange(self.N1) / self.N1
        self.k2 = 2.0 * math.pi * np.arange(self.N2) / self.N2
        K1, K2 = np.meshgrid(self.k1, self.k2, indexing="ij")
        hI, hx, hy, hz = pauli_components(model, K1, K2)
        self.hI = hI
        self.omega = np.sqrt(hx * hx + hy * hy + hz * hz)
        self.omega_u = hI + self.omega
        self.omega_l = hI - self.omega
        self.theta, self.phi = mixing_angles(model, K1, K2)
        self.hz = hz
        # exact band touchings that landed on the grid
        self.zero_mask = self.omega < ZERO_TOL_FACTOR * model.J1
        self.n_zero_modes = int(np.count_nonzero(self.zero_mask))

    @property
    def n_cells(self):
        return self.N1 * self.N2

    def __repr__(self):
        return (f"BandGrid({self.model.variant}, {self.N1}x{self.N2}, "
                f"{self.n_zero_modes} touchings on grid)")


@dataclass(frozen=True)
class DOSHistogram:
    """Per-unit-cell density of states, sum(counts) * dE = 2 (two bands)."""

    edges: np.ndarray
    counts: np.ndarray

    @property
    def centers(self):
        return 0.5 * (self.edges[1:] + self.edges[:-1])

    @property
    def bin_width(self):
        return float(self.edges[1] - self.edges[0])


@dataclass(frozen=True)
class BoundState:
    """(Quasi-)bound state of one emitter: energy, amplitude maps, overlap."""

    E_BS: float
    sublattice: str
    C_a: np.ndarray
    C_b: np.ndarray
    R0: float
    emitter_amplitude: float

    def diagonal_cut(self, n_max, component="b"):
        """|C| along the localization diagonal p = (n, n), n = 1..n_max-1."""
        C = self.C_b if component == "b" else self.C_a
        n = np.arange(1, n_max)
        return n, np.abs(C[n % C.shape[0], n % C.shape[1]])


@dataclass(frozen=True)
class PowerLawFit:
    amplitude: float
    gamma_f: float
    fit_window: tuple
    residual: float


def density_of_states(grid: BandGrid, n_bins: int = 400) -> DOSHistogram:
    """Histogram D(E) = (1/N) sum_{k,p} delta(E - omega_p(k)), binned."""
    if n_bins < 2:
        raise DomainError("n_bins must be >= 2")
    energies = np.concatenate([grid.omega_l.ravel(), grid.omega_u.ravel()])
    lo, hi = float(energies.min()), float(energies.max())
    if hi <= lo:
        hi = lo + 1.0  # flat spectrum corner case
    hist, edges = np.histogram(energies, bins=n_bins, range=(lo, hi))
    width = edges[1] - edges[0]
    counts = hist / (grid.n_cells * width)
    return DOSHistogram(edges=edges, counts=counts)


def dos_at(grid: BandGrid, energy: float, n_bins: int = 400) -> float:
    """Gaussian-smoothed pointwise DOS, bandwidth 2 bins, truncated at 3 sigma.

    The truncation keeps the estimate exactly zero deep inside a band gap.
    """
    hist = density_of_states(grid, n_bins)
    sigma = 2.0 * hist.bin_width
    x = hist.centers - energy
    mask = np.abs(x) <= 3.0 * sigma
    if not np.any(mask):
        return 0.0
    w = np.exp(-0.5 * (x[mask] / sigma) ** 2)
    norm = np.sum(w) * hist.bin_width
    return float(np.sum(w * hist.counts[mask]) * hist.bin_width / norm)


def _dropped(grid: BandGrid, x):
    """Touching modes where z (or E) sits on their energy: the 0/0 points.

    Away from their energy the on-grid touchings are legitimate modes and
    stay in every sum (the dense-resolvent oracle includes them); at the
    touching energy they carry the spurious extended-mode pole and are
    excluded, reproducing the vanishing self-energy / overlap there.
    """
    return grid.zero_mask & (np.abs(x) < POLE_GUARD * grid.model.J1)


def _self_energy_terms(grid: BandGrid, z: complex, sublattice: str):
    """Summand (z - hI +- hz) / ((z - hI)^2 - omega^2) over kept modes."""
    if sublattice not in ("A", "B"):
        raise DomainError("sublattice must be 'A' or 'B'")
    keep = ~_dropped(grid, z - grid.hI)
    x = z - grid.hI[keep]
    num = x + grid.hz[keep] if sublattice == "A" else x - grid.hz[keep]
    den = x * x - grid.omega[keep] ** 2
    return num, den


def self_energy(grid: BandGrid, z: complex, g: float, sublattice: str = "A") -> complex:
    """Emitter self-energy Sigma_e(z) = (g^2/N) sum_k (z - hI)/((z-hI)^2 - omega^2).

    For baths with ``hz != 0`` the sublattice-resolved numerator
    ``z - hI +- hz`` is used; both reduce to the chiral formula when
    ``hz = 0``.  Exact touchings on the grid are excluded (extended modes).
    Raises PoleError when a kept denominator vanishes within 1e-14 J1^2.
    """
    num, den = _self_energy_terms(grid, complex(z), sublattice)
    if den.size and np.min(np.abs(den)) < 1e-14 * grid.model.J1 ** 2:
        raise PoleError(f"z = {z} lies on a grid eigenvalue")
    return complex(g * g * np.sum(num / den) / grid.n_cells)


def band_intervals(grid: BandGrid):
    """(l_min, l_max, u_min, u_max) over non-touching modes."""
    keep = ~grid.zero_mask
    return (float(grid.omega_l[keep].min()), float(grid.omega_l[keep].max()),
            float(grid.omega_u[keep].min()), float(grid.omega_u[keep].max()))


def bound_state_energy(grid: BandGrid, delta: float, g: float) -> float:
    """Root of E = delta + Sigma_e(E) on the real axis in certified gaps.

    Gap intervals come from the band-resolved min/max over the grid: below
    the lower band, between the bands (when they do not overlap), and above
    the upper band.  Raises NoRootError when no sign change is bracketed.
    """
    l_min, l_max, u_min, u_max = band_intervals(grid)
    J1 = grid.model.J1
    pad = 1e-9 * J1
    span = 20.0 * (abs(u_max) + abs(l_min) + abs(delta) + g + J1)

    def f(E):
        return E - delta - self_energy(grid, E, g).real

    intervals = [(l_min - span, l_min - pad), (u_max + pad, u_max + span)]
    if l_max < u_min:  # mid gap; for a touching spectrum this collapses to ~0
        intervals.insert(0, (l_max + pad, u_min - pad))
    roots = []
    for lo, hi in intervals:
        if hi <= lo:
            continue
        flo, fhi = f(lo), f(hi)
        if flo == 0.0:
            roots.append(lo)
        elif fhi == 0.0:
            roots.append(hi)
        elif flo * fhi < 0:
            roots.append(float(brentq(f, lo, hi, xtol=1e-14, rtol=8.9e-16)))
    if not roots:
        raise NoRootError(
            f"no bound-state root for delta={delta}, g={g} in the certified gaps")
    return min(roots, key=lambda e: abs(e - delta))


def _wavefunction_maps(grid: BandGrid, E: float, sublattice: str, eta: float):
    """Unnormalized k-space maps for C_a and C_b (emitter-integrated out).

    Denominators are regularized as ``(E + i eta - hI)^2 - omega^2``;
    numerators stay real so same-sublattice amplitudes vanish identically in
    the chiral zero-energy case.  0/0 points (touchings where ``E = hI``)
    are dropped.

    Gauge: the opposite-sublattice numerator is ``hx + i hy`` for an
    A-coupled emitter and ``hx - i hy`` for a B-coupled one, the choice that
    makes the state an exact eigenvector of the real-space Hamiltonian
    (checked by the dense residual test) and gives G^{AB}(r) = G^{BA}(-r)*.
    """
    x = E - grid.hI
    den = (x + 1j * eta) ** 2 - grid.omega ** 2
    drop = _dropped(grid, x)
    den = np.where(drop, 1.0, den)
    _, hx, hy, hz = pauli_components(
        grid.model,
        *np.meshgrid(grid.k1, grid.k2, indexing="ij"),
    )
    if sublattice == "A":
        same = (x + hz) / den
        opp = (hx + 1j * hy) / den
    else:
        same = (x - hz) / den
        opp = (hx - 1j * hy) / den
    same = np.where(drop, 0.0, same)
    opp = np.where(drop, 0.0, opp)
    return same, opp


def residue_overlap(grid: BandGrid, E: float, g: float) -> float:
    """Pole residue R0 = 1/(1 - dSigma/dE) at a real E outside kept modes.

    Equals ``1/(1 + (g^2/N) sum_k 1/omega^2)`` in the chiral zero-energy
    case.  On-grid touchings at E (the extended zero mode) are excluded
    from the derivative sum, consistently with the spectral sums.
    """
    x = E - grid.hI
    keep = ~_dropped(grid, x)
    xk = x[keep]
    om = grid.omega[keep]
    cu = np.cos(grid.theta[keep] / 2.0) ** 2
    s = np.sum(cu / (xk - om) ** 2 + (1.0 - cu) / (xk + om) ** 2)
    return float(1.0 / (1.0 + g * g * s / grid.n_cells))


def bound_state_wavefunction(grid: BandGrid, E_BS: float, sublattice: str = "A",
                             g: float = 0.1, eta: float | None = None) -> BoundState:
    """Real-space bound-state amplitudes via inverse FFT of the k-sums.

    ``eta`` defaults to 1e-8 J1; pass a larger broadening when analysing
    quasi-bound tails on grids where near-degenerate soft modes sit close
    to ``E_BS`` (see the tail-fit tests).
    """
    if sublattice not in ("A", "B"):
        raise DomainError("sublattice must be 'A' or 'B'")
    if eta is None:
        eta = 1e-8 * grid.model.J1
    same_k, opp_k = _wavefunction_maps(grid, E_BS, sublattice, eta)
    same_p = np.fft.ifft2(same_k)
    opp_p = np.fft.ifft2(opp_k)
    if sublattice == "A":
        Ca, Cb = same_p, opp_p
    else:
        Ca, Cb = opp_p, same_p
    R0 = residue_overlap(grid, E_BS, g)
    if R0 > 0.0:
        emitter = math.sqrt(R0)
        Ca = g * emitter * Ca
        Cb = g * emitter * Cb
    else:
        emitter = 0.0
    total = emitter ** 2 + float(np.sum(np.abs(Ca) ** 2 + np.abs(Cb) ** 2))
    scale = 1.0 / math.sqrt(total) if total > 0 else 1.0
    return BoundState(
        E_BS=float(E_BS), sublattice=sublattice,
        C_a=Ca * scale, C_b=Cb * scale,
        R0=R0, emitter_amplitude=emitter * scale,
    )


def quasi_bound_logsum(grid: BandGrid) -> float:
    """g(N) = (J1^2/N) sum_k 1/omega(k)^2, exact touchings excluded."""
    keep = ~grid.zero_mask
    return float(grid.model.J1 ** 2 *
                 np.sum(1.0 / grid.omega[keep] ** 2) / grid.n_cells)


def quasi_bound_overlap(grid: BandGrid, g: float) -> float:
    """R0(N) = 1/(1 + (g/J1)^2 g(N)) for the chiral zero-energy state.

    Defined for the chiral-symmetric, untilted bath (``J2 = 0``,
    AnisotropicHoneycomb).  Exact touchings are dropped from g(N); on
    commensurate semi-Dirac grids the soft quasi-zero modes still make
    g(N) grow linearly with N, so R0 collapses much faster there than the
    logarithmic decay seen away from the critical anisotropy.
    """
    m = grid.model
    if m.variant != ANISOTROPIC or m.J2 != 0.0:
        raise DomainError("overlap formula requires the chiral J2 = 0 bath")
    gN = quasi_bound_logsum(grid)
    return float(1.0 / (1.0 + (g / m.J1) ** 2 * gN))


def fit_power_law(samples, window) -> PowerLawFit:
    """Least-squares log-log line through (n, value) pairs in the window.

    ``gamma_f`` is minus the slope; ``residual`` is the RMS of the log-log
    deviations.  Raises InsufficientDataError for fewer than 8 positive
    samples inside the window.
    """
    n_min, n_max = window
    pts = [(n, v) for n, v in samples if n_min <= n <= n_max and v > 0]
    if len(pts) < 8:
        raise InsufficientDataError(
            f"{len(pts)} usable samples in window {window}; need >= 8")
    ln_n = np.log([p[0] for p in pts])
    ln_v = np.log([p[1] for p in pts])
    slope, intercept = np.polyfit(ln_n, ln_v, 1)
    resid = ln_v - (slope * ln_n + intercept)
    return PowerLawFit(
        amplitude=float(np.exp(intercept)),
        gamma_f=float(-slope),
        fit_window=(n_min, n_max),
        residual=float(np.sqrt(np.mean(resid ** 2))),
    )
