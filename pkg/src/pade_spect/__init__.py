"""Partially solvable Pade-rational anharmonic oscillators.

Spectra by two independent numerical routes (banded secular determinants and
coordinate-space shooting) and Rayleigh-Schrodinger perturbation expansions
around nonzero solvable couplings with triangular unperturbed propagators.
"""

from .banded import (
    BandedMatrix,
    QuasiHamiltonian,
    banded_lu_det,
    build_quasi_hamiltonian,
    build_rho,
    derivative_matrices,
    solve_triangular,
)
from .basis import BasisParams, alpha, beta_off, eps, power_band, x2_band
from .potential import (
    CouplingPath,
    PadePotential,
    PartialFractionForm,
    load_potential_config,
)
from .solvable import (
    ExactSolution,
    quasi_energy,
    reduce_t2_q2,
    secular_polynomial_t1,
    solution_from_potential,
    solve_general,
    solve_t1,
)

__version__ = "0.1.0"

__all__ = [
    "BandedMatrix",
    "QuasiHamiltonian",
    "BasisParams",
    "PadePotential",
    "CouplingPath",
    "PartialFractionForm",
    "ExactSolution",
    "alpha",
    "beta_off",
    "eps",
    "power_band",
    "x2_band",
    "banded_lu_det",
    "build_quasi_hamiltonian",
    "build_rho",
    "derivative_matrices",
    "solve_triangular",
    "quasi_energy",
    "secular_polynomial_t1",
    "solve_t1",
    "solve_general",
    "solution_from_potential",
    "reduce_t2_q2",
    "load_potential_config",
    "__version__",
]
