"""Magic parameters and flat bands of the scalar and chiral moire models."""

__version__ = "0.1.0"

from .errors import (ContourThroughZero, EigenSolverError, FlatMagicError, LatticeMismatch,
                     NearSingular, NonInteger, SingularShift)
from .lattice import GAMMA, GAMMA_STAR, LAMBDA, LAMBDA_STAR, LatticeKind, LatticeSpec, ModeIndex
from .potential import TrigPolynomial, bm_potential_U, bm_V, load_potential, save_potential
from .magic import MagicCandidate, Model, find_magics, real_magic_spacings
from .multiplicity import INFINITE, MultiplicityResult, protected_multiplicity_scalar
from .bands import band_sweep, flat_band_check, one_k_equivalence
from .traces import trace_power_eig, trace_power_lattice

__all__ = [
    "__version__", "ContourThroughZero", "EigenSolverError", "FlatMagicError", "LatticeMismatch",
    "NearSingular", "NonInteger", "SingularShift", "GAMMA", "GAMMA_STAR", "LAMBDA", "LAMBDA_STAR",
    "LatticeKind", "LatticeSpec", "ModeIndex", "TrigPolynomial", "bm_potential_U", "bm_V",
    "load_potential", "save_potential", "MagicCandidate", "Model", "find_magics",
    "real_magic_spacings", "INFINITE", "MultiplicityResult",
    "protected_multiplicity_scalar", "band_sweep", "flat_band_check", "one_k_equivalence",
    "trace_power_eig", "trace_power_lattice",
]
