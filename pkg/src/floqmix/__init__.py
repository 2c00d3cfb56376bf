"""Floquet-Bloch toolkit for laser-dressed crystals and x-ray wave mixing.

Computes harmonic charge/current-density amplitudes of a periodically
driven one-dimensional band-gap crystal, synthesizes subcycle-resolved
quasielastic x-ray scattering spectra, and reconstructs the density
Fourier data back from those spectra. A ramped real-time propagation
oracle provides an independent validation path.
"""

from .crystal import BlochSolution, CrystalModel, band_gap, brillouin_grid, solve_bloch
from .errors import (ConfigurationError, ConvergenceError, FloqmixError,
                     NumericalError, ResonanceError)
from .floquet import (DriveField, FloquetArchive, FloquetSolution,
                      converge_floquet, solve_floquet, solve_floquet_grid)
from .observables import (FourierDecomposition, ScalarField, VectorField,
                          current_amplitude, density_amplitude, dipole_moment,
                          fourier_decomposition, real_amplitudes)
from .spectrum import (PlusMinusDecomposition, SpectrumResult, XrayPulse,
                       decompose_pm_G, envelope, quasielastic_spectrum,
                       spectrum_pair)
from .reconstruct import (ReconstructionReport, recover_moduli, recover_phases,
                          round_trip_report)
from .tdse import (PropagationConfig, PropagationResult,
                   extract_harmonic_amplitudes, propagate, propagate_grid)

__version__ = "0.1.0"

__all__ = [
    "BlochSolution", "CrystalModel", "band_gap", "brillouin_grid",
    "solve_bloch",
    "ConfigurationError", "ConvergenceError", "FloqmixError",
    "NumericalError", "ResonanceError",
    "DriveField", "FloquetArchive", "FloquetSolution", "converge_floquet",
    "solve_floquet", "solve_floquet_grid",
    "FourierDecomposition", "ScalarField", "VectorField",
    "current_amplitude", "density_amplitude", "dipole_moment",
    "fourier_decomposition", "real_amplitudes",
    "PlusMinusDecomposition", "SpectrumResult", "XrayPulse",
    "decompose_pm_G", "envelope", "quasielastic_spectrum", "spectrum_pair",
    "ReconstructionReport", "recover_moduli", "recover_phases",
    "round_trip_report",
    "PropagationConfig", "PropagationResult", "extract_harmonic_amplitudes",
    "propagate", "propagate_grid",
    "__version__",
]
