"""Shared oracles: dense real-space Hamiltonians built independently of the
Bloch-space code, used for brute-force cross-checks."""

import numpy as np
import pytest

from diracbath.lattice import ANISOTROPIC, MIZOGUCHI, LatticeModel


def site_index(sub, n1, n2, N1, N2):
    return sub * N1 * N2 + (n1 % N1) * N2 + (n2 % N2)


def dense_bath_hamiltonian(model: LatticeModel, N1: int, N2: int) -> np.ndarray:
    """Real-space 2N x 2N bath Hamiltonian with periodic boundaries.

    Hopping table transcribed from the bond structure, not from the Bloch
    functions, so it is an independent oracle.  A couples to B in the same
    cell and at cell offsets -e1, -e2 (matching h_y = -J1(sin k1 + sin k2)).
    """
    N = N1 * N2
    H = np.zeros((2 * N, 2 * N), dtype=complex)

    def add(i, j, t):
        H[i, j] += t
        H[j, i] += np.conj(t)

    for n1 in range(N1):
        for n2 in range(N2):
            a = site_index(0, n1, n2, N1, N2)
            if model.variant == ANISOTROPIC:
                J1, J2 = model.J1, model.J2
                b1, b2 = model.beta1, model.beta2
                add(a, site_index(1, n1, n2, N1, N2), -b1 * J1)
                add(a, site_index(1, n1 - 1, n2, N1, N2), -J1)
                add(a, site_index(1, n1, n2 - 1, N1, N2), -J1)
                if J2 != 0.0:
                    for sub in (0, 1):
                        o = site_index(sub, n1, n2, N1, N2)
                        add(o, site_index(sub, n1 + 1, n2, N1, N2), -J2)
                        add(o, site_index(sub, n1, n2 + 1, N1, N2), -J2)
                        add(o, site_index(sub, n1 + 1, n2 - 1, N1, N2), -b2 * J2)
            else:
                J1, J2 = model.J1, model.J2
                b = site_index(1, n1, n2, N1, N2)
                # d(k) = 2 J1 (cos k1 + cos k2) on the diagonal, sign +- per sublattice
                add(a, site_index(0, n1 + 1, n2, N1, N2), J1 + J2)
                add(a, site_index(0, n1, n2 + 1, N1, N2), J1 - J2)
                add(b, site_index(1, n1 + 1, n2, N1, N2), J2 - J1)
                add(b, site_index(1, n1, n2 + 1, N1, N2), -(J1 + J2))
                # a(k) = 2 J2 (cos k1 - cos k2) off-diagonal
                add(a, site_index(1, n1 + 1, n2, N1, N2), J2)
                add(a, site_index(1, n1 - 1, n2, N1, N2), J2)
                add(a, site_index(1, n1, n2 + 1, N1, N2), -J2)
                add(a, site_index(1, n1, n2 - 1, N1, N2), -J2)
    return H


def dense_full_hamiltonian(model, N1, N2, positions, delta, g):
    """Bath + emitters in the single-excitation sector.

    Basis: [emitters..., a sites..., b sites...].
    """
    HB = dense_bath_hamiltonian(model, N1, N2)
    n_e = len(positions)
    dim = n_e + HB.shape[0]
    H = np.zeros((dim, dim), dtype=complex)
    H[n_e:, n_e:] = HB
    for j, (n1, n2, sub) in enumerate(positions):
        H[j, j] = delta
        s = 0 if sub == "A" else 1
        idx = n_e + site_index(s, n1, n2, N1, N2)
        H[j, idx] += g
        H[idx, j] += g
    return H


@pytest.fixture(scope="session")
def iso_model():
    return LatticeModel(variant=ANISOTROPIC, J1=1.0)


@pytest.fixture(scope="session")
def mizoguchi_model():
    return LatticeModel(variant=MIZOGUCHI, J1=1.0, J2=0.3)
