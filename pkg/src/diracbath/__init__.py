"""Emitters coupled to anisotropic, semi-Dirac and tilted Dirac photonic lattices.

Subpackages
-----------
lattice
    Bath models as k -> 2x2 Bloch Hamiltonians and cone geometry.
spectral
    DOS, self-energies, bound states and tail fits on periodic k-grids.
dynamics
    Single-excitation time evolution, radiation patterns, effective couplings.
atomarray
    Subwavelength dipole arrays: Green-dyadic Bloch sums and band structure.
cli
    JSON-config command-line front end producing CSV tables.

The hot kernels (RK4 evolution, dipole lattice sums) run through a compiled
extension when it is built, with a pure-NumPy fallback selected at import;
``diracbath.kernel_backend()`` reports which one is active.
"""

from . import _kernels
from .lattice import (BlochSample, ConeParameters, LatticeModel, bloch_eval,
                      cone_parameters, dirac_points)
from .spectral import (BandGrid, BoundState, DOSHistogram, PowerLawFit,
                       bound_state_energy, bound_state_wavefunction,
                       density_of_states, fit_power_law, quasi_bound_overlap,
                       self_energy)
from .dynamics import (EmitterConfig, EvolutionRecord, effective_coupling,
                       evolve, markovian_rate, radiation_snapshot)
from .atomarray import (ArrayBandPoint, ArrayModel, array_band_structure,
                        bloch_matrix, classify_crossing, green_dyadic)

__version__ = "0.1.0"


def kernel_backend() -> str:
    """Name of the active kernel backend: 'compiled' or 'python'."""
    return _kernels.BACKEND
