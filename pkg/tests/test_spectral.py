import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from diracbath.errors import (DomainError, InsufficientDataError, NoRootError,
                              PoleError)
from diracbath.lattice import LatticeModel, cone_parameters
from diracbath.spectral import (BandGrid, bound_state_energy,
                                bound_state_wavefunction, density_of_states,
                                dos_at, fit_power_law, quasi_bound_logsum,
                                quasi_bound_overlap, residue_overlap,
                                self_energy)

from conftest import dense_bath_hamiltonian, dense_full_hamiltonian, site_index


@pytest.fixture(scope="module")
def iso_grid():
    return BandGrid(LatticeModel(), 128, 128)


class TestBandGrid:
    def test_matches_bloch_eval_spotwise(self, iso_grid):
        from diracbath.lattice import bloch_eval
        for i, j in [(0, 0), (5, 17), (100, 42)]:
            s = bloch_eval(iso_grid.model, (iso_grid.k1[i], iso_grid.k2[j]))
            assert iso_grid.omega_u[i, j] == pytest.approx(s.omega_u, abs=1e-13)
            assert iso_grid.omega_l[i, j] == pytest.approx(s.omega_l, abs=1e-13)
            assert iso_grid.phi[i, j] == pytest.approx(s.phi, abs=1e-13)

    def test_commensuration_counting(self):
        # K on-grid iff 3 | N at beta1 = 1; merged point on-grid iff 2 | N
        assert BandGrid(LatticeModel(), 12, 12).n_zero_modes == 2
        assert BandGrid(LatticeModel(), 13, 13).n_zero_modes == 0
        assert BandGrid(LatticeModel(beta1=2.0), 10, 10).n_zero_modes == 1
        assert BandGrid(LatticeModel(beta1=2.0), 11, 11).n_zero_modes == 0


class TestDOS:
    def test_normalization_exact(self, iso_grid):
        hist = density_of_states(iso_grid, 173)
        total = float(np.sum(hist.counts) * hist.bin_width)
        assert total == pytest.approx(2.0, abs=1e-12)

    def test_counts_nonnegative(self, iso_grid):
        assert np.all(density_of_states(iso_grid, 50).counts >= 0)

    def test_gap_empty_bins(self):
        grid = BandGrid(LatticeModel(beta1=2.1), 256, 256)
        hist = density_of_states(grid, 400)
        inside = np.abs(hist.centers) + 0.5 * hist.bin_width < 0.1
        assert np.count_nonzero(inside) > 0
        assert np.all(hist.counts[inside] == 0.0)

    def test_linear_slope_near_dirac(self):
        # per-state slope 1/(2 pi v1 v2); the histogram is per cell (x2)
        grid = BandGrid(LatticeModel(), 512, 512)
        hist = density_of_states(grid, 400)
        cp = cone_parameters(grid.model)
        sel = (np.abs(hist.centers) < 0.3) & (np.abs(hist.centers) > 0.03)
        slope = np.polyfit(np.abs(hist.centers[sel]), hist.counts[sel], 1)[0]
        assert slope / 2.0 == pytest.approx(1.0 / (2 * math.pi * cp.v1 * cp.v2),
                                            rel=0.10)

    def test_sqrt_scaling_at_semi_dirac(self):
        grid = BandGrid(LatticeModel(beta1=2.0), 512, 512)
        hist = density_of_states(grid, 400)
        sel = (hist.centers > 0.02) & (hist.centers < 0.3)
        p = np.polyfit(np.log(hist.centers[sel]), np.log(hist.counts[sel]), 1)[0]
        assert p == pytest.approx(0.5, abs=0.1)

    def test_smoothed_dos_is_zero_deep_in_gap(self):
        grid = BandGrid(LatticeModel(beta1=2.5), 128, 128)
        assert dos_at(grid, 0.0) == 0.0


class TestSelfEnergy:
    def test_zero_coupling(self, iso_grid):
        assert self_energy(iso_grid, 0.5 + 1e-3j, 0.0) == 0

    def test_vanishes_at_dirac_energy(self, iso_grid):
        for b1 in (1.0, 1.6, 2.0):
            grid = BandGrid(LatticeModel(beta1=b1), 128, 128)
            s = self_energy(grid, 1e-6j, 0.1)
            assert abs(s) < 1e-3 * 0.1 ** 2

    def test_large_z_sum_rule(self, iso_grid):
        z = 100.0 + 0.0j
        s = self_energy(iso_grid, z, 0.3)
        assert s == pytest.approx(0.3 ** 2 / z, rel=0.01)

    def test_sublattice_independence_chiral(self, iso_grid):
        z = 0.7 + 0.05j
        a = self_energy(iso_grid, z, 0.2, "A")
        b = self_energy(iso_grid, z, 0.2, "B")
        assert a == pytest.approx(b, abs=1e-12)

    def test_negative_imaginary_part(self, iso_grid):
        for e in np.linspace(-3.5, 3.5, 23):
            s = self_energy(iso_grid, complex(e, 1e-3), 0.1)
            assert s.imag <= 1e-15

    def test_pole_error_on_eigenvalue(self, iso_grid):
        z = complex(iso_grid.omega_u[3, 7], 0.0)
        with pytest.raises(PoleError):
            self_energy(iso_grid, z, 0.1)

    @pytest.mark.parametrize("variant_kwargs,sub", [
        (dict(beta1=1.3, J2=0.08, beta2=2.0), "A"),
        (dict(beta1=1.3, J2=0.08, beta2=2.0), "B"),
        (dict(variant="Mizoguchi", J2=0.3), "A"),
        (dict(variant="Mizoguchi", J2=0.3), "B"),
    ])
    def test_brute_force_resolvent_12x12(self, variant_kwargs, sub):
        model = LatticeModel(**variant_kwargs)
        N1 = N2 = 12
        grid = BandGrid(model, N1, N2)
        HB = dense_bath_hamiltonian(model, N1, N2)
        g = 0.17
        for z in (0.4 + 0.2j, -1.1 + 0.05j, 2.0 + 1.0j):
            R = np.linalg.inv(z * np.eye(HB.shape[0]) - HB)
            idx = site_index(0 if sub == "A" else 1, 0, 0, N1, N2)
            exact = g * g * R[idx, idx]
            assert self_energy(grid, z, g, sub) == pytest.approx(exact, abs=1e-10)


@settings(max_examples=25, deadline=None)
@given(re=st.floats(-4.0, 4.0), im=st.floats(1e-4, 1.0))
def test_self_energy_hermiticity(re, im):
    grid = BandGrid(LatticeModel(beta1=1.4), 64, 64)
    z = complex(re, im)
    a = self_energy(grid, z, 0.2)
    b = self_energy(grid, np.conj(z), 0.2)
    assert a == pytest.approx(np.conj(b), abs=1e-12)


class TestBoundStateEnergy:
    def test_trivial_zero_energy_root(self):
        for b1 in (1.0, 1.6, 2.0, 2.1):
            grid = BandGrid(LatticeModel(beta1=b1), 96, 96)
            e = bound_state_energy(grid, 0.0, 0.2)
            assert abs(e) < 1e-8

    def test_weak_coupling_returns_detuning(self):
        grid = BandGrid(LatticeModel(beta1=2.1), 96, 96)
        e = bound_state_energy(grid, 0.03, 1e-4)
        assert e == pytest.approx(0.03, abs=1e-6)

    def test_matches_dense_midgap_eigenvalue_24x24(self):
        model = LatticeModel(beta1=2.1)
        N1 = N2 = 24
        grid = BandGrid(model, N1, N2)
        for delta in (0.0, 0.03):
            e = bound_state_energy(grid, delta, 0.1)
            H = dense_full_hamiltonian(model, N1, N2, [(0, 0, "A")], delta, 0.1)
            evals = np.linalg.eigvalsh(H)
            mid = evals[np.argmin(np.abs(evals - delta))]
            assert e == pytest.approx(mid, abs=1e-8)

    def test_above_band_root_with_strong_coupling(self):
        grid = BandGrid(LatticeModel(), 64, 64)
        e = bound_state_energy(grid, 3.5, 0.5)
        assert e > grid.omega_u.max()

    def test_no_root_error(self):
        grid = BandGrid(LatticeModel(beta1=1.3), 63, 63)
        with pytest.raises(NoRootError):
            bound_state_energy(grid, 0.5, 1e-8)  # mid-band, no gap root


class TestBoundStateWavefunction:
    def test_same_sublattice_vanishes(self):
        grid = BandGrid(LatticeModel(beta1=1.0), 200, 200)
        bs = bound_state_wavefunction(grid, 0.0, "A", 0.1)
        assert np.max(np.abs(bs.C_a)) < 1e-10
        bsb = bound_state_wavefunction(grid, 0.0, "B", 0.1)
        assert np.max(np.abs(bsb.C_b)) < 1e-10

    def test_normalization(self):
        grid = BandGrid(LatticeModel(beta1=1.3), 100, 100)
        bs = bound_state_wavefunction(grid, 0.0, "A", 0.25)
        total = bs.emitter_amplitude ** 2 + np.sum(
            np.abs(bs.C_a) ** 2 + np.abs(bs.C_b) ** 2)
        assert total == pytest.approx(1.0, abs=1e-12)

    def test_inverse_r_tail(self):
        grid = BandGrid(LatticeModel(beta1=1.0), 500, 500)
        bs = bound_state_wavefunction(grid, 0.0, "A", 0.1, eta=3e-4)
        n, v = bs.diagonal_cut(250)
        fit = fit_power_law(list(zip(n, v)), (5, 30))
        assert fit.gamma_f == pytest.approx(1.0, abs=0.1)

    def test_eigenvector_residual_24x24(self):
        model = LatticeModel(beta1=2.1)
        N1 = N2 = 24
        grid = BandGrid(model, N1, N2)
        g = 0.1
        for delta in (0.0, 0.02):
            e_bs = bound_state_energy(grid, delta, g)
            bs = bound_state_wavefunction(grid, e_bs, "A", g, eta=0.0)
            H = dense_full_hamiltonian(model, N1, N2, [(0, 0, "A")], delta, g)
            psi = np.zeros(H.shape[0], dtype=complex)
            psi[0] = bs.emitter_amplitude
            psi[1:1 + N1 * N2] = bs.C_a.ravel()
            psi[1 + N1 * N2:] = bs.C_b.ravel()
            assert np.linalg.norm(psi) == pytest.approx(1.0, abs=1e-10)
            assert np.linalg.norm(H @ psi - e_bs * psi) < 1e-8

    def test_r0_reported(self):
        grid = BandGrid(LatticeModel(), 100, 100)
        bs = bound_state_wavefunction(grid, 0.0, "A", 0.1)
        assert bs.R0 == pytest.approx(quasi_bound_overlap(grid, 0.1), abs=1e-12)


class TestOverlap:
    def test_weak_coupling_limit(self):
        grid = BandGrid(LatticeModel(), 100, 100)
        assert quasi_bound_overlap(grid, 1e-8) == pytest.approx(1.0, abs=1e-10)

    def test_semi_dirac_overlap_collapses_linearly(self):
        # soft quasi-zero modes make g(N) grow ~ N at beta1 = 2, so
        # 1/R0 - 1 quadruples when the lattice doubles (vs log growth below 2)
        r = {Nl: quasi_bound_overlap(BandGrid(LatticeModel(beta1=2.0), Nl, Nl), 0.1)
             for Nl in (120, 240)}
        growth = (1 / r[240] - 1) / (1 / r[120] - 1)
        assert growth == pytest.approx(4.0, rel=0.3)
        r13 = quasi_bound_overlap(BandGrid(LatticeModel(beta1=1.3), 120, 120), 0.1)
        assert r[240] < r13

    def test_logsum_reference_value(self):
        # frozen from an independent evaluation of (1/N) sum 1/omega^2
        grid = BandGrid(LatticeModel(), 100, 100)
        assert quasi_bound_logsum(grid) == pytest.approx(1.8934, abs=2e-4)

    def test_rejects_tilted(self):
        grid = BandGrid(LatticeModel(J2=0.1, beta2=3.0), 32, 32)
        with pytest.raises(DomainError):
            quasi_bound_overlap(grid, 0.1)

    def test_residue_matches_formula_at_zero(self):
        grid = BandGrid(LatticeModel(beta1=1.3), 101, 101)
        r = residue_overlap(grid, 0.0, 0.2)
        gN = quasi_bound_logsum(grid)
        assert r == pytest.approx(1.0 / (1.0 + 0.04 * gN), abs=1e-12)


class TestFitPowerLaw:
    def test_exact_inverse(self):
        samples = [(n, 1.0 / n) for n in range(1, 60)]
        fit = fit_power_law(samples, (1, 59))
        assert fit.gamma_f == pytest.approx(1.0, abs=1e-12)
        assert fit.residual < 1e-13

    def test_exact_half_power_with_amplitude(self):
        samples = [(n, 3.0 / math.sqrt(n)) for n in range(1, 40)]
        fit = fit_power_law(samples, (1, 39))
        assert fit.gamma_f == pytest.approx(0.5, abs=1e-12)
        assert fit.amplitude == pytest.approx(3.0, rel=1e-12)

    def test_insufficient_data(self):
        with pytest.raises(InsufficientDataError):
            fit_power_law([(n, 1.0 / n) for n in range(1, 6)], (1, 10))
