import math

import numpy as np
import pytest
from scipy.linalg import expm

from diracbath import _kernels
from diracbath.dynamics import (EmitterConfig, _couplings, _mode_arrays,
                                effective_coupling, evolve,
                                lattice_geometry_maps, markovian_rate,
                                radiation_snapshot)
from diracbath.errors import DomainError, MissingSnapshotError, StepSizeError
from diracbath.lattice import LatticeModel
from diracbath.spectral import BandGrid, fit_power_law, self_energy

from conftest import dense_full_hamiltonian


@pytest.fixture(scope="module")
def small_grid():
    return BandGrid(LatticeModel(), 16, 16)


class TestEvolveBasics:
    def test_decoupled_emitter(self, small_grid):
        e = EmitterConfig(positions=((0, 0, "A"),), delta=0.3, g=0.0)
        rec = evolve(small_grid, e, 20.0)
        assert np.allclose(rec.populations(), 1.0, atol=1e-12)

    def test_norm_conservation(self, small_grid):
        e = EmitterConfig(positions=((0, 0, "A"),), delta=0.0, g=0.3)
        rec = evolve(small_grid, e, 30.0)
        assert rec.norm_drift < 1e-8

    def test_dt_rule_enforced(self, small_grid):
        e = EmitterConfig(positions=((0, 0, "A"),), delta=0.0, g=0.1)
        with pytest.raises(StepSizeError):
            evolve(small_grid, e, 5.0, dt=1.0)

    def test_sublattice_exchange_symmetry(self, small_grid):
        recs = []
        for sub in ("A", "B"):
            e = EmitterConfig(positions=((0, 0, sub),), delta=0.0, g=0.2)
            recs.append(evolve(small_grid, e, 25.0))
        pa = np.abs(recs[0].C_e[:, 0])
        pb = np.abs(recs[1].C_e[:, 0])
        assert np.max(np.abs(pa - pb)) < 1e-8

    def test_validation(self):
        with pytest.raises(DomainError):
            EmitterConfig(positions=((0, 0, "C"),), g=0.1)
        with pytest.raises(DomainError):
            EmitterConfig(positions=((0, 0, "A"),), g=-0.1)


class TestDenseEquivalence:
    def test_kspace_vs_matrix_exponential_8x8(self):
        """Criterion 9 oracle: every amplitude within 1e-6 of expm."""
        model = LatticeModel(beta1=1.4)
        N1 = N2 = 8
        grid = BandGrid(model, N1, N2)
        positions = [(0, 0, "A"), (2, 1, "B")]
        delta, g, t = 0.2, 0.35, 5.0
        e = EmitterConfig(positions=tuple(positions), delta=delta, g=g)
        from diracbath.dynamics import max_time_step
        rec = evolve(grid, e, t, dt=max_time_step(grid, e) / 2,
                     snapshot_times=[t])

        H = dense_full_hamiltonian(model, N1, N2, positions, delta, g)
        psi0 = np.zeros(H.shape[0], dtype=complex)
        psi0[0] = 1.0
        psi = expm(-1j * H * t) @ psi0

        assert rec.C_e[-1, 0] == pytest.approx(psi[0], abs=1e-6)
        assert rec.C_e[-1, 1] == pytest.approx(psi[1], abs=1e-6)
        _, Ca, Cb = rec.snapshots[0]
        n_e = len(positions)
        assert np.max(np.abs(Ca.ravel() - psi[n_e:n_e + N1 * N2])) < 1e-6
        assert np.max(np.abs(Cb.ravel() - psi[n_e + N1 * N2:])) < 1e-6

    def test_time_reversal(self, small_grid):
        e = EmitterConfig(positions=((0, 0, "A"),), delta=0.1, g=0.25)
        omega = _mode_arrays(small_grid)
        coup = _couplings(small_grid, e)
        delta = np.array([e.delta])
        ce0 = np.array([1.0 + 0j])
        bath0 = np.zeros(omega.shape[0], dtype=complex)
        dt, n = 0.01, 800
        _, ce1, _, bath1, _ = _kernels.rk4_evolve(
            omega, coup, delta, ce0, bath0, dt, n, n, np.array([], dtype=np.int64))
        _, ce2, _, bath2, _ = _kernels.rk4_evolve(
            -omega, -coup, -delta, ce1[-1], bath1, dt, n, n,
            np.array([], dtype=np.int64))
        assert abs(ce2[-1, 0] - 1.0) < 1e-6
        assert np.max(np.abs(bath2)) < 1e-6


class TestMarkovianRate:
    def test_zero_in_gap(self):
        grid = BandGrid(LatticeModel(beta1=2.5), 128, 128)
        assert markovian_rate(grid, 0.0, 0.1) == 0.0

    def test_resolvent_identity(self):
        # Gamma(delta) vs -2 Im Sigma(delta + i eta), eta = 1e-3
        grid = BandGrid(LatticeModel(beta1=1.5), 1024, 1024)
        delta, g = 0.8, 0.1
        gamma = markovian_rate(grid, delta, g)
        sig = self_energy(grid, complex(delta, 1e-3), g)
        assert gamma == pytest.approx(-2.0 * sig.imag, rel=0.05)


class TestRadiation:
    def test_snapshot_roundtrip_and_missing(self, small_grid):
        e = EmitterConfig(positions=((0, 0, "A"),), delta=0.0, g=0.3)
        rec = evolve(small_grid, e, 10.0, snapshot_times=[5.0, 10.0])
        Ia, Ib = radiation_snapshot(rec, rec.snapshots[0][0])
        bath_pop = Ia.sum() + Ib.sum()
        emitter_pop = abs(rec.C_e[np.searchsorted(rec.times, 5.0), 0]) ** 2
        assert bath_pop + emitter_pop == pytest.approx(1.0, abs=1e-4)
        with pytest.raises(MissingSnapshotError):
            radiation_snapshot(rec, 3.33)

    def test_geometry_maps(self, small_grid):
        P1, P2, X, Y, R = lattice_geometry_maps(small_grid)
        assert P1[0, 0] == 0 and R[0, 0] == 0
        # p = (1, 1) sits two cells along x: |r| = 3 = sqrt(3) * sqrt(3)
        assert R[1, 1] == pytest.approx(math.sqrt(3), rel=1e-12)


class TestEffectiveCoupling:
    def test_same_sublattice_vanishes_at_dirac(self):
        grid = BandGrid(LatticeModel(), 200, 200)
        for sep in ((1, 0), (3, -2), (7, 7)):
            G = effective_coupling(grid, 0.0, 0.1, sep, ("A", "A"))
            assert abs(G) < 1e-12

    def test_reciprocity_ab_ba(self):
        grid = BandGrid(LatticeModel(beta1=1.2), 64, 64)
        sep = (3, 1)
        gab = effective_coupling(grid, 0.0, 0.1, sep, ("A", "B"))
        gba = effective_coupling(grid, 0.0, 0.1, (-sep[0], -sep[1]), ("B", "A"))
        assert gab == pytest.approx(np.conj(gba), abs=1e-12)

    def test_inverse_r_envelope(self):
        grid = BandGrid(LatticeModel(), 500, 500)
        samples = []
        for n in range(4, 32):
            G = effective_coupling(grid, 0.0, 0.1, (n, n), ("A", "B"), eta=3e-4)
            samples.append((n, abs(G)))
        fit = fit_power_law(samples, (5, 30))
        assert fit.gamma_f == pytest.approx(1.0, abs=0.1)

    def test_rejects_resonant_energy(self):
        grid = BandGrid(LatticeModel(), 128, 128)
        with pytest.raises(DomainError):
            effective_coupling(grid, 1.0, 0.1, (2, 2), ("A", "B"))

    def test_two_emitter_beat_ratio(self):
        """Exchange-rate ratio for separations r and 2r matches the coupling
        ratio from the bound-state formula; on a large lattice the formula
        ratio itself approaches 2 (doubling the distance halves G)."""
        grid = BandGrid(LatticeModel(), 64, 64)
        rates = {}
        for n in (6, 12):
            e = EmitterConfig(positions=((0, 0, "A"), (n, n, "B")),
                              delta=0.0, g=0.3)
            rec = evolve(grid, e, 400.0)
            p2 = np.abs(rec.C_e[:, 1])
            sel = rec.times > 120.0
            rates[n] = np.polyfit(rec.times[sel], p2[sel], 1)[0]
        ratio = rates[6] / rates[12]
        g6 = abs(effective_coupling(grid, 0.0, 0.3, (6, 6), ("A", "B"), eta=3e-4))
        g12 = abs(effective_coupling(grid, 0.0, 0.3, (12, 12), ("A", "B"), eta=3e-4))
        assert ratio == pytest.approx(g6 / g12, rel=0.15)

        big = BandGrid(LatticeModel(), 500, 500)
        G6 = abs(effective_coupling(big, 0.0, 0.3, (6, 6), ("A", "B"), eta=3e-4))
        G12 = abs(effective_coupling(big, 0.0, 0.3, (12, 12), ("A", "B"), eta=3e-4))
        assert G6 / G12 == pytest.approx(2.0, rel=0.10)
